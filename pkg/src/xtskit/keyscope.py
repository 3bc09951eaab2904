"""Key-scope policies: bound the number of blocks any single XTS key encrypts.

A scope policy maps each sector number to a key index so that no key's
total block count exceeds a limit L.  Three policies:

- ``single``: one key for the whole device (the scope is unbounded by
  construction; the auditor reports when it exceeds L).
- ``linear``: consecutive runs of floor(L / J) sectors share a key, so
  key boundaries never split a sector.  Growing a device appends keys;
  existing sectors keep theirs.
- ``rotating``: sector N uses key N mod m.  The maximum device size
  must be declared up front, and ceil(S_max / m) * J <= L must hold;
  within that bound the device can grow or shrink freely without
  remapping any existing sector.

The default limit is L = 2^44 blocks, the permissive end of the range
modern disk-encryption guidance allows (2^36 to 2^44 blocks per key);
deployments wanting more margin pass a smaller limit.
"""

from __future__ import annotations

import json
import math
import os
import secrets
from dataclasses import dataclass
from typing import Any

from .ciphers import CIPHER_KEY_HEX_LEN, make_cipher
from .xts import Geometry, XtsKey

#: permitted blocks-per-key range (inclusive) in current disk-encryption guidance
SCOPE_LIMIT_MIN_LOG2 = 36
SCOPE_LIMIT_MAX_LOG2 = 44

DEFAULT_LIMIT_BLOCKS = 1 << SCOPE_LIMIT_MAX_LOG2

POLICY_KINDS = ("single", "linear", "rotating")


class PolicyError(ValueError):
    """A scope policy is malformed or unusable for the given geometry."""


class PlanInfeasibleError(PolicyError):
    """The declared policy cannot satisfy its block limit; names the bound."""


@dataclass(frozen=True)
class ScopePolicy:
    """Sector-to-key mapping rule plus its block limit.

    ``key_count`` and ``max_sectors`` apply to the rotating kind only:
    rotating cycles through key_count keys and is valid only for
    devices no larger than max_sectors sectors.
    """

    kind: str
    limit_blocks: int = DEFAULT_LIMIT_BLOCKS
    key_count: int | None = None
    max_sectors: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise PolicyError(f"unknown policy kind {self.kind!r}; choose from {POLICY_KINDS}")
        if self.limit_blocks < 1:
            raise PolicyError("block limit must be >= 1")
        if self.kind == "rotating":
            if self.key_count is None or self.key_count < 1:
                raise PolicyError("rotating policy needs key_count >= 1")
            if self.max_sectors is None or self.max_sectors < 1:
                raise PolicyError(
                    "rotating policy must declare max_sectors (the maximal device size) up front"
                )
        elif self.key_count is not None or self.max_sectors is not None:
            raise PolicyError("key_count/max_sectors only apply to the rotating kind")

    @classmethod
    def single(cls, limit_blocks: int = DEFAULT_LIMIT_BLOCKS) -> "ScopePolicy":
        return cls("single", limit_blocks)

    @classmethod
    def linear(cls, limit_blocks: int = DEFAULT_LIMIT_BLOCKS) -> "ScopePolicy":
        return cls("linear", limit_blocks)

    @classmethod
    def rotating(
        cls, key_count: int, max_sectors: int, limit_blocks: int = DEFAULT_LIMIT_BLOCKS
    ) -> "ScopePolicy":
        return cls("rotating", limit_blocks, key_count, max_sectors)


def sectors_per_key(policy: ScopePolicy, geometry: Geometry, block_bytes: int = 16) -> int:
    """Scope width of the linear policy, quantized to whole sectors."""
    if policy.kind != "linear":
        raise PolicyError("sectors_per_key is defined for the linear policy")
    j = geometry.blocks_per_sector(block_bytes)
    spk = policy.limit_blocks // j
    if spk == 0:
        raise PolicyError(
            f"linear policy infeasible: one sector holds {j} blocks, more than the "
            f"limit of {policy.limit_blocks} blocks per key"
        )
    return spk


def key_index(policy: ScopePolicy, n: int, geometry: Geometry, block_bytes: int = 16) -> int:
    """Key index for sector N under the policy.  Requires N < sector_count."""
    if not 0 <= n < geometry.sector_count:
        raise ValueError(f"sector {n} outside device of {geometry.sector_count} sectors")
    if policy.kind == "single":
        return 0
    if policy.kind == "rotating":
        return n % policy.key_count  # type: ignore[operator]
    return n // sectors_per_key(policy, geometry, block_bytes)


@dataclass(frozen=True)
class ScopePlan:
    """Key-count and worst-case-scope summary for a (geometry, policy) pair."""

    policy: ScopePolicy
    geometry: Geometry
    block_bytes: int
    keys_needed: int
    max_sectors_per_key: int
    max_blocks_per_key: int
    resize_note: str

    def as_dict(self) -> dict[str, Any]:
        return {
            "policy": policy_to_json(self.policy),
            "sectors": self.geometry.sector_count,
            "sector_size_bytes": self.geometry.sector_size_bytes,
            "blocks_per_sector": self.geometry.blocks_per_sector(self.block_bytes),
            "keys_needed": self.keys_needed,
            "max_sectors_per_key": self.max_sectors_per_key,
            "max_blocks_per_key": self.max_blocks_per_key,
            "limit_blocks": self.policy.limit_blocks,
            "resize": self.resize_note,
        }


def plan_scopes(geometry: Geometry, policy: ScopePolicy, block_bytes: int = 16) -> ScopePlan:
    """How many keys the policy needs and the largest scope any key gets."""
    j = geometry.blocks_per_sector(block_bytes)
    s = geometry.sector_count
    if policy.kind == "single":
        keys_needed = 1
        max_spk = s
        note = "any new size is allowed; the single scope grows with the device"
    elif policy.kind == "linear":
        spk = sectors_per_key(policy, geometry, block_bytes)
        keys_needed = max(1, math.ceil(s / spk)) if s else 1
        max_spk = min(spk, s) if s else 0
        note = (
            f"growing appends keys in runs of {spk} sectors; existing sectors keep their keys"
        )
    else:
        m: int = policy.key_count  # type: ignore[assignment]
        s_max: int = policy.max_sectors  # type: ignore[assignment]
        worst_declared = math.ceil(s_max / m) * j
        if worst_declared > policy.limit_blocks:
            raise PlanInfeasibleError(
                f"rotating plan violates ceil(S_max/m)*J <= L: "
                f"ceil({s_max}/{m})*{j} = {worst_declared} > {policy.limit_blocks}"
            )
        if s > s_max:
            raise PlanInfeasibleError(
                f"device has {s} sectors but the rotating policy declared "
                f"max_sectors = {s_max}"
            )
        keys_needed = m
        max_spk = math.ceil(s / m) if s else 0
        note = (
            f"resizable up to the declared max of {s_max} sectors; "
            f"existing sectors never remap"
        )
    return ScopePlan(policy, geometry, block_bytes, keys_needed, max_spk, max_spk * j, note)


@dataclass(frozen=True)
class ResizeVerdict:
    allowed: bool
    reason: str
    keys_added: int = 0
    keys_removed: int = 0

    def as_dict(self) -> dict[str, Any]:
        return {
            "allowed": self.allowed,
            "reason": self.reason,
            "keys_added": self.keys_added,
            "keys_removed": self.keys_removed,
        }


def validate_resize(plan: ScopePlan, old: Geometry, new: Geometry) -> ResizeVerdict:
    """Can the device move from ``old`` to ``new`` under the plan's policy?

    Sector-size changes are unsupported (they would remap every block).
    Surviving sectors always keep their key under every policy.
    """
    if old.sector_size_bytes != new.sector_size_bytes:
        raise PolicyError("sector-size changes are unsupported; re-encrypt the device instead")
    policy = plan.policy
    if policy.kind == "rotating":
        s_max: int = policy.max_sectors  # type: ignore[assignment]
        if new.sector_count > s_max:
            j = new.blocks_per_sector(plan.block_bytes)
            worst = math.ceil(new.sector_count / policy.key_count) * j  # type: ignore[operator]
            return ResizeVerdict(
                False,
                f"new size {new.sector_count} exceeds the declared max of {s_max} sectors; "
                f"ceil(S/m)*J <= L would become ceil({new.sector_count}/{policy.key_count})"
                f"*{j} = {worst} vs L = {policy.limit_blocks}",
            )
        return ResizeVerdict(True, "within the declared maximum; no existing sector remaps")
    if policy.kind == "linear":
        old_keys = plan_scopes(old, policy, plan.block_bytes).keys_needed
        new_keys = plan_scopes(new, policy, plan.block_bytes).keys_needed
        return ResizeVerdict(
            True,
            "surviving sectors keep their keys; key list changes at the tail only",
            keys_added=max(0, new_keys - old_keys),
            keys_removed=max(0, old_keys - new_keys),
        )
    j = new.blocks_per_sector(plan.block_bytes)
    total = new.sector_count * j
    note = "single key covers any size"
    if total > policy.limit_blocks:
        note += (
            f"; note the new scope of {total} blocks exceeds the {policy.limit_blocks}-block "
            f"limit (the audit will flag this)"
        )
    return ResizeVerdict(True, note)


@dataclass(frozen=True)
class Keyring:
    """A scope policy plus the ordered XTS key pairs it indexes into.

    Key material is held as lowercase hex and only turned into cipher
    objects by bind(), which fixes the cipher family.
    """

    policy: ScopePolicy
    key_pairs: tuple[tuple[str, str], ...]

    @property
    def key_count(self) -> int:
        return len(self.key_pairs)

    def bind(self, cipher_name: str) -> "BoundKeyring":
        return BoundKeyring(self, cipher_name)


class BoundKeyring:
    """Keyring attached to a concrete cipher family; a SectorKeySource."""

    def __init__(self, keyring: Keyring, cipher_name: str) -> None:
        if not keyring.key_pairs:
            raise PolicyError("keyring holds no keys")
        self.keyring = keyring
        self.cipher_name = cipher_name
        self._keys = tuple(
            XtsKey(make_cipher(cipher_name, k), make_cipher(cipher_name, kt))
            for k, kt in keyring.key_pairs
        )

    @property
    def block_bytes(self) -> int:
        return self._keys[0].block_bytes

    @property
    def keys(self) -> tuple[XtsKey, ...]:
        return self._keys

    def key_for_sector(self, n: int, geometry: Geometry) -> XtsKey:
        idx = key_index(self.keyring.policy, n, geometry, self.block_bytes)
        if idx >= len(self._keys):
            raise PolicyError(
                f"policy maps sector {n} to key {idx} but the keyring holds only "
                f"{len(self._keys)} keys; it cannot cover this device"
            )
        return self._keys[idx]


def policy_to_json(policy: ScopePolicy) -> dict[str, Any]:
    limit_log2 = policy.limit_blocks.bit_length() - 1
    if 1 << limit_log2 != policy.limit_blocks:
        raise PolicyError("keyring files store the limit as log2; use a power-of-two limit")
    obj: dict[str, Any] = {"kind": policy.kind, "limit_log2": limit_log2}
    if policy.kind == "rotating":
        obj["key_count"] = policy.key_count
        obj["max_sectors"] = policy.max_sectors
    return obj


def policy_from_json(obj: dict[str, Any]) -> ScopePolicy:
    kind = obj.get("kind")
    if not isinstance(kind, str):
        raise PolicyError("policy object needs a 'kind' string")
    limit = 1 << int(obj.get("limit_log2", SCOPE_LIMIT_MAX_LOG2))
    if kind == "rotating":
        return ScopePolicy(kind, limit, int(obj["key_count"]), int(obj["max_sectors"]))
    return ScopePolicy(kind, limit)


def keyring_to_json(keyring: Keyring) -> dict[str, Any]:
    return {
        "policy": policy_to_json(keyring.policy),
        "keys": [{"k": k, "kt": kt} for k, kt in keyring.key_pairs],
    }


def keyring_from_json(obj: dict[str, Any]) -> Keyring:
    try:
        policy = policy_from_json(obj["policy"])
        pairs = tuple((str(e["k"]), str(e["kt"])) for e in obj["keys"])
    except (KeyError, TypeError) as exc:
        raise PolicyError(f"malformed keyring document: missing {exc}") from None
    return Keyring(policy, pairs)


def load_keyring(path: str | os.PathLike[str]) -> Keyring:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PolicyError(f"keyring file is not valid JSON: {exc}") from None
    return keyring_from_json(obj)


def save_keyring(keyring: Keyring, path: str | os.PathLike[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(keyring_to_json(keyring), fh, indent=2)
        fh.write("\n")


def generate_keyring(policy: ScopePolicy, key_count: int, cipher_name: str) -> Keyring:
    """Fresh random keyring with key_count distinct (K, K_T) pairs."""
    hex_len = CIPHER_KEY_HEX_LEN[cipher_name]
    pairs = tuple(
        (secrets.token_hex(hex_len // 2), secrets.token_hex(hex_len // 2))
        for _ in range(key_count)
    )
    return Keyring(policy, pairs)
