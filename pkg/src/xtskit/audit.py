"""Risk estimates and compliance rules for XTS deployments.

Two kinds of output: a RiskReport with birthday-bound collision
estimates, and a deterministic list of findings checked against a
selectable compliance profile.

The collision estimate for a scope of B n-bit blocks is B^2 / 2^n,
reported in log2 form to stay meaningful near 2^-128.  (A constant
factor sometimes attached to this bound is dropped; it only matters
when the block cipher itself is distinguishable from random.)

Rules enforced, by profile:

- ieee-2018, ieee-2025, fips-140-3: a data unit may hold at most 2^20
  blocks (error).
- ieee-2025: a single key's scope may hold at most 2^44 blocks (error
  above); scopes above 2^36 get an advisory note, since the permitted
  range is 2^36 to 2^44 and stricter deployments cap at the low end.
  An optional threshold turns scopes above it into warnings.
- fips-140-3: the data and tweak keys must differ (error; one chosen
  ciphertext decryption recovers the tweak when they are equal).  The
  IEEE profiles report the same condition as a warning, since IEEE
  1619 never mandated distinct keys.

Findings never raise; identical inputs yield identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from .keyscope import Keyring
from .xts import MAX_BLOCKS_PER_SECTOR, Geometry

PROFILES = ("ieee-2018", "ieee-2025", "fips-140-3", "all")

#: severity names in increasing order
SEVERITIES = ("info", "warning", "error")

_SCOPE_ERROR_LOG2 = 44
_SCOPE_NOTE_LOG2 = 36


def collision_probability_log2(blocks: int, width_bits: int = 128) -> float:
    """log2 of the collision estimate blocks^2 / 2^width.

    A scope of one block (or none) cannot collide; that is reported as
    negative infinity.
    """
    if blocks < 0:
        raise ValueError("block count must be >= 0")
    if blocks <= 1:
        return float("-inf")
    return 2.0 * math.log2(blocks) - width_bits


def format_log2(value: float) -> str:
    """Human form of a log2 probability: '2^-56' or 'none' for -inf."""
    if value == float("-inf"):
        return "none"
    if value == int(value):
        return f"2^{int(value)}"
    return f"2^{value:.1f}"


@dataclass(frozen=True)
class Finding:
    """One compliance observation, tied to the standard it derives from."""

    rule: str
    severity: str
    message: str
    citation: str

    def as_dict(self) -> dict[str, str]:
        return {
            "rule": self.rule,
            "severity": self.severity,
            "message": self.message,
            "citation": self.citation,
        }


@dataclass(frozen=True)
class RiskReport:
    """Collision-risk summary for the whole device and the worst key scope."""

    total_blocks: int
    blocks_per_key_worst: int
    device_collision_log2: float
    per_key_collision_log2: float

    def as_dict(self) -> dict[str, Any]:
        def jsonable(v: float) -> float | None:
            return None if v == float("-inf") else v

        return {
            "total_blocks": self.total_blocks,
            "blocks_per_key_worst": self.blocks_per_key_worst,
            "device_collision_log2": jsonable(self.device_collision_log2),
            "per_key_collision_log2": jsonable(self.per_key_collision_log2),
        }


@dataclass(frozen=True)
class AuditReport:
    findings: tuple[Finding, ...]
    risk: RiskReport

    @property
    def has_errors(self) -> bool:
        return any(f.severity == "error" for f in self.findings)

    def as_dict(self) -> dict[str, Any]:
        return {
            "findings": [f.as_dict() for f in self.findings],
            "risk": self.risk.as_dict(),
        }


def _worst_blocks_per_key(geometry: Geometry, keyring: Keyring, block_bytes: int) -> int:
    """Largest block count any single key covers under the keyring's policy.

    Never raises: an infeasible rotating declaration or an over-tight
    linear limit still yields the arithmetic worst case so the findings
    can describe it.
    """
    j = geometry.blocks_per_sector(block_bytes)
    s = geometry.sector_count
    policy = keyring.policy
    if policy.kind == "single":
        return s * j
    if policy.kind == "rotating":
        return math.ceil(s / policy.key_count) * j  # type: ignore[operator]
    spk = max(1, policy.limit_blocks // j)
    return min(spk, s) * j


_DATA_UNIT_CITES = {
    "ieee-2018": 'IEEE 1619-2018: "the number of 128-bit blocks within the data unit shall not exceed 2^20"',
    "ieee-2025": 'IEEE 1619-2025: "the number of 128-bit blocks within the data unit shall not exceed 2^20"',
    "fips-140-3": "NIST SP 800-38E: data unit limited to 2^20 blocks",
}

_SCOPE_CITE = "IEEE 1619-2025: key scope limited to 2^36 to 2^44 blocks"
_KEY_EQUAL_CITE = "FIPS 140-3 Annex C.I: XTS key halves must be distinct"


def audit_config(
    geometry: Geometry,
    keyring: Keyring,
    profile: str = "ieee-2025",
    block_bytes: int = 16,
    scope_warn_log2: int = _SCOPE_ERROR_LOG2,
) -> AuditReport:
    """Check a device layout and keyring against a compliance profile.

    scope_warn_log2 tightens the ieee-2025 scope rule: scopes above
    2^scope_warn_log2 blocks draw a warning even though only 2^44 is a
    hard error.  The default leaves the full permitted range silent
    apart from the advisory note.
    """
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {PROFILES}")
    active = ("ieee-2018", "ieee-2025", "fips-140-3") if profile == "all" else (profile,)

    j = geometry.blocks_per_sector(block_bytes)
    total_blocks = geometry.sector_count * j
    worst = _worst_blocks_per_key(geometry, keyring, block_bytes)
    width_bits = block_bytes * 8

    findings: list[Finding] = []

    if j > MAX_BLOCKS_PER_SECTOR:
        cite_profile = next(p for p in _DATA_UNIT_CITES if p in active)
        findings.append(
            Finding(
                "data-unit-limit",
                "error",
                f"sector holds {j} (2^{math.log2(j):.1f}) blocks; "
                f"the data-unit limit is 2^20",
                _DATA_UNIT_CITES[cite_profile],
            )
        )

    if "ieee-2025" in active:
        if worst > 1 << _SCOPE_ERROR_LOG2:
            findings.append(
                Finding(
                    "scope-limit",
                    "error",
                    f"worst-case key scope is {worst} blocks "
                    f"({format_log2(math.log2(worst))}), above the 2^44 maximum",
                    _SCOPE_CITE,
                )
            )
        elif worst > 1 << scope_warn_log2:
            findings.append(
                Finding(
                    "scope-limit",
                    "warning",
                    f"worst-case key scope is {worst} blocks "
                    f"({format_log2(math.log2(worst))}), above the configured "
                    f"2^{scope_warn_log2} threshold",
                    _SCOPE_CITE,
                )
            )
        elif worst > 1 << _SCOPE_NOTE_LOG2:
            findings.append(
                Finding(
                    "scope-note",
                    "info",
                    f"worst-case key scope is {worst} blocks "
                    f"({format_log2(math.log2(worst))}): inside the permitted "
                    f"2^36..2^44 range, but stricter deployments cap scopes at 2^36",
                    _SCOPE_CITE,
                )
            )

    equal_pairs = [i for i, (k, kt) in enumerate(keyring.key_pairs) if k == kt]
    if equal_pairs:
        severity = "error" if "fips-140-3" in active else "warning"
        findings.append(
            Finding(
                "tweak-key-equal",
                severity,
                f"key pair(s) {equal_pairs} use K = K_T; one chosen-ciphertext "
                f"decryption then reveals the tweak and enables forgery",
                _KEY_EQUAL_CITE,
            )
        )

    device_log2 = collision_probability_log2(total_blocks, width_bits)
    per_key_log2 = collision_probability_log2(worst, width_bits)
    findings.append(
        Finding(
            "risk-summary",
            "info",
            f"device: {total_blocks} blocks, collision estimate "
            f"{format_log2(device_log2)}; worst key scope: {worst} blocks, "
            f"estimate {format_log2(per_key_log2)}",
            "IEEE 1619-2025 key-scope limits; estimate (S*J)^2 / 2^n",
        )
    )

    risk = RiskReport(total_blocks, worst, device_log2, per_key_log2)
    return AuditReport(tuple(findings), risk)
