"""Executable demonstrations of two XTS weaknesses, at desk scale.

1. Birthday-collision forgery: an adversary holding (plaintext,
   ciphertext, tweak) triples looks for two positions with equal
   P XOR T.  On a real 128-bit cipher that needs ~2^64 blocks; the toy
   16-bit cipher brings the same statistics down to a few thousand
   blocks, so the full attack (collision search, one chosen-plaintext
   overwrite, forged ciphertext verified by decryption) runs in
   milliseconds.

2. Tweak recovery under a shared key: when K = K_T and block indexing
   starts at j = 0, decrypting an all-zero ciphertext block at
   position (N, 0) hands back encode(N) XOR E_K(encode(N)) — the
   sector's tweak offset by a public value.  One more such query at a
   chosen sector number yields any needed cipher output, turning tweak
   recovery into arbitrary single-block forgery.  With distinct keys
   the recovered value is wrong, which is exactly the defense.

The oracle device is in-memory with hidden keys; adversary queries are
counted and transcribed, harness helpers (fill, truth checks) are not.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .ciphers import AesCipher, ToyCipher
from .gf import alpha_pow, field_spec_for_block
from .xts import MAX_BLOCKS_PER_SECTOR, XtsKey, decode_sector_number, encode_sector_number

Position = tuple[int, int]


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b, strict=True))


@dataclass(frozen=True)
class Triple:
    """One observed position: plaintext, ciphertext, and tweak at (N, j)."""

    sector: int
    block: int
    plaintext: bytes
    ciphertext: bytes
    tweak: bytes

    @property
    def position(self) -> Position:
        return (self.sector, self.block)

    @property
    def masked_input(self) -> bytes:
        """P XOR T: the value actually fed to the block cipher."""
        return _xor(self.plaintext, self.tweak)


class AttackDevice:
    """An XTS device as a query oracle with hidden keys.

    Adversary surface: encrypt_at (overwrite a plaintext block through
    the device, observing the new ciphertext) and decrypt_at (chosen
    ciphertext at a chosen position).  Both count queries and append to
    the transcript.

    Harness surface (fill_random, triples, harness_*) models what an
    experiment controller knows; it is never counted.

    sector_count None means the device accepts any sector number that
    fits a cipher block — useful because forged auxiliary queries can
    land anywhere in the 2^128 address space.
    """

    def __init__(
        self, key: XtsKey, blocks_per_sector: int, sector_count: int | None = None
    ) -> None:
        if not 1 <= blocks_per_sector <= MAX_BLOCKS_PER_SECTOR:
            raise ValueError("blocks_per_sector must be in 1..2^20")
        self._key = key
        self.block_bytes = key.block_bytes
        self.blocks_per_sector = blocks_per_sector
        self.sector_count = sector_count
        self._spec = field_spec_for_block(self.block_bytes)
        self._tweak_base: dict[int, bytes] = {}
        self._plain: dict[int, bytearray] = {}
        self._cipher: dict[int, bytearray] = {}
        self.encrypt_queries = 0
        self.decrypt_queries = 0
        self.transcript: list[dict[str, Any]] = []

    # -- shared internals ------------------------------------------------

    def addressable(self, n: int) -> bool:
        if n < 0:
            return False
        if self.sector_count is not None:
            return n < self.sector_count
        return n < 1 << (8 * self.block_bytes)

    def _check_position(self, n: int, j: int) -> None:
        if not self.addressable(n):
            raise ValueError(f"sector {n} outside the device address space")
        if not 0 <= j < self.blocks_per_sector:
            raise ValueError(f"block {j} outside sector of {self.blocks_per_sector} blocks")

    def _tweak(self, n: int, j: int) -> bytes:
        t0 = self._tweak_base.get(n)
        if t0 is None:
            t0 = self._key.tweak_cipher.encrypt_block(
                encode_sector_number(n, self.block_bytes)
            )
            self._tweak_base[n] = t0
        return alpha_pow(t0, j, self._spec)

    def _enc(self, n: int, j: int, p: bytes) -> bytes:
        t = self._tweak(n, j)
        return _xor(self._key.data_cipher.encrypt_block(_xor(p, t)), t)

    def _dec(self, n: int, j: int, c: bytes) -> bytes:
        t = self._tweak(n, j)
        return _xor(self._key.data_cipher.decrypt_block(_xor(c, t)), t)

    def _slot(self, n: int, j: int) -> slice:
        return slice(j * self.block_bytes, (j + 1) * self.block_bytes)

    # -- adversary surface (counted) ---------------------------------------

    def encrypt_at(self, n: int, j: int, plaintext: bytes) -> bytes:
        """Overwrite plaintext block (n, j); returns the new ciphertext."""
        self._check_position(n, j)
        if len(plaintext) != self.block_bytes:
            raise ValueError("plaintext block has the wrong width")
        c = self._enc(n, j, plaintext)
        if n in self._plain:
            self._plain[n][self._slot(n, j)] = plaintext
            self._cipher[n][self._slot(n, j)] = c
        self.encrypt_queries += 1
        self.transcript.append(
            {"op": "encrypt", "sector": n, "block": j, "input": plaintext.hex(), "output": c.hex()}
        )
        return c

    def decrypt_at(self, n: int, j: int, ciphertext: bytes) -> bytes:
        """Decrypt a chosen ciphertext block at position (n, j); stateless."""
        self._check_position(n, j)
        if len(ciphertext) != self.block_bytes:
            raise ValueError("ciphertext block has the wrong width")
        p = self._dec(n, j, ciphertext)
        self.decrypt_queries += 1
        self.transcript.append(
            {"op": "decrypt", "sector": n, "block": j, "input": ciphertext.hex(), "output": p.hex()}
        )
        return p

    # -- harness surface (not counted) --------------------------------------

    def fill_random(self, rng: random.Random, sectors: Iterable[int] | None = None) -> None:
        """Write seeded random plaintext to the given (or all) sectors."""
        if sectors is None:
            if self.sector_count is None:
                raise ValueError("an unbounded device needs an explicit sector list")
            sectors = range(self.sector_count)
        ss = self.block_bytes * self.blocks_per_sector
        for n in sectors:
            plain = bytearray(rng.randbytes(ss))
            cipher = bytearray(ss)
            for j in range(self.blocks_per_sector):
                sl = self._slot(n, j)
                cipher[sl] = self._enc(n, j, bytes(plain[sl]))
            self._plain[n] = plain
            self._cipher[n] = cipher

    def triples(self) -> list[Triple]:
        """Every filled position as (P, C, T), in sector-then-block order."""
        out: list[Triple] = []
        for n in sorted(self._plain):
            plain, cipher = self._plain[n], self._cipher[n]
            for j in range(self.blocks_per_sector):
                sl = self._slot(n, j)
                out.append(Triple(n, j, bytes(plain[sl]), bytes(cipher[sl]), self._tweak(n, j)))
        return out

    def harness_true_tweak(self, n: int, j: int) -> bytes:
        return self._tweak(n, j)

    def harness_decrypt(self, n: int, j: int, ciphertext: bytes) -> bytes:
        """Uncounted decryption used to verify forgeries."""
        return self._dec(n, j, ciphertext)

    def harness_plaintext_at(self, n: int, j: int) -> bytes:
        return bytes(self._plain[n][self._slot(n, j)])

    def harness_ciphertext_at(self, n: int, j: int) -> bytes:
        return bytes(self._cipher[n][self._slot(n, j)])


def find_collision(triples: Sequence[Triple]) -> tuple[Position, Position] | None:
    """First pair of distinct positions with equal P XOR T, in scan order."""
    seen: dict[bytes, Position] = {}
    for t in triples:
        key = t.masked_input
        if key in seen and seen[key] != t.position:
            return (seen[key], t.position)
        seen.setdefault(key, t.position)
    return None


def count_colliding_pairs(triples: Sequence[Triple]) -> int:
    """Number of unordered position pairs sharing a P XOR T value."""
    counts = Counter(t.masked_input for t in triples)
    return sum(k * (k - 1) // 2 for k in counts.values())


def expected_colliding_pairs(positions: int, width_bits: int) -> float:
    """Birthday estimate q(q-1) / 2^(n+1) for q uniform n-bit values."""
    return positions * (positions - 1) / 2 ** (width_bits + 1)


@dataclass(frozen=True)
class ForgeResult:
    """Outcome of a forgery attempt, verified by harness decryption."""

    status: str  # "success" | "failure" | "out-of-address-space"
    position: Position
    target: bytes
    forged_ciphertext: bytes | None
    decrypted: bytes | None
    encrypt_queries: int
    decrypt_queries: int

    def as_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "sector": self.position[0],
            "block": self.position[1],
            "target": self.target.hex(),
            "forged_ciphertext": None
            if self.forged_ciphertext is None
            else self.forged_ciphertext.hex(),
            "decrypted": None if self.decrypted is None else self.decrypted.hex(),
            "encrypt_queries": self.encrypt_queries,
            "decrypt_queries": self.decrypt_queries,
        }


def forge_via_collision(
    device: AttackDevice,
    collision: tuple[Position, Position],
    triples: Sequence[Triple],
    target_plaintext: bytes,
) -> ForgeResult:
    """Turn a P XOR T collision into a chosen-plaintext forgery.

    With colliding positions (N,j) and (N',j'), overwriting (N,j) with
    P* = target XOR T' XOR T and reading the fresh ciphertext C* gives
    C' = C* XOR T XOR T', which decrypts to the chosen target at
    (N',j').  The hidden key is never touched; one encryption query.
    """
    index = {t.position: t for t in triples}
    pos_a, pos_b = collision
    a, b = index[pos_a], index[pos_b]
    if a.masked_input != b.masked_input:
        raise ValueError(f"positions {pos_a} and {pos_b} do not collide on P XOR T")
    enc0, dec0 = device.encrypt_queries, device.decrypt_queries
    p_star = _xor(_xor(target_plaintext, b.tweak), a.tweak)
    c_star = device.encrypt_at(a.sector, a.block, p_star)
    forged = _xor(_xor(c_star, a.tweak), b.tweak)
    decrypted = device.harness_decrypt(b.sector, b.block, forged)
    return ForgeResult(
        "success" if decrypted == target_plaintext else "failure",
        pos_b,
        target_plaintext,
        forged,
        decrypted,
        device.encrypt_queries - enc0,
        device.decrypt_queries - dec0,
    )


def recover_tweak_shared_key(device: AttackDevice, n: int) -> bytes:
    """Recover T_{N,0} with one decryption query, assuming K = K_T.

    Decrypting all-zero ciphertext at (N, 0) returns
    D_K(T_{N,0}) XOR T_{N,0} = encode(N) XOR E_K(encode(N)) when the
    tweak key equals the data key, so XORing the public encode(N) back
    out leaves the tweak.  On a K != K_T device the returned value is
    simply wrong, which verification exposes.
    """
    zero = bytes(device.block_bytes)
    response = device.decrypt_at(n, 0, zero)
    return _xor(response, encode_sector_number(n, device.block_bytes))


def forge_via_recovered_tweak(
    device: AttackDevice,
    n: int,
    j: int,
    target_plaintext: bytes,
    recovered_t0: bytes | None = None,
) -> ForgeResult:
    """Forge ciphertext at (N, j) decrypting to the target, K = K_T device.

    Recovers T_{N,0} first (skipped when recovered_t0 is supplied),
    then needs E_K(target XOR T_{N,j}).  Reading that value costs one
    further zero-ciphertext decryption at the sector number that
    encodes target XOR T_{N,j} — possible only when that value is a
    valid sector address, hence the out-of-address-space status.  At
    most two decryption queries total.
    """
    if len(target_plaintext) != device.block_bytes:
        raise ValueError("target block has the wrong width")
    enc0, dec0 = device.encrypt_queries, device.decrypt_queries
    t0 = recovered_t0 if recovered_t0 is not None else recover_tweak_shared_key(device, n)
    tweak = alpha_pow(t0, j, field_spec_for_block(device.block_bytes))
    masked = _xor(target_plaintext, tweak)
    if masked == encode_sector_number(n, device.block_bytes):
        # the first query already revealed E_K of this very value
        ek_masked = t0
    else:
        aux = decode_sector_number(masked)
        if not device.addressable(aux):
            return ForgeResult(
                "out-of-address-space",
                (n, j),
                target_plaintext,
                None,
                None,
                device.encrypt_queries - enc0,
                device.decrypt_queries - dec0,
            )
        response = device.decrypt_at(aux, 0, bytes(device.block_bytes))
        ek_masked = _xor(response, masked)
    forged = _xor(ek_masked, tweak)
    decrypted = device.harness_decrypt(n, j, forged)
    return ForgeResult(
        "success" if decrypted == target_plaintext else "failure",
        (n, j),
        target_plaintext,
        forged,
        decrypted,
        device.encrypt_queries - enc0,
        device.decrypt_queries - dec0,
    )


def run_collision_demo(
    width_bits: int = 16,
    sectors: int = 256,
    blocks_per_sector: int = 16,
    seed: int = 0,
    target_hex: str | None = None,
) -> dict[str, Any]:
    """Fill a toy device, hunt the birthday collision, forge, verify."""
    rng = random.Random(seed)
    key = XtsKey(
        ToyCipher(rng.getrandbits(64), width_bits),
        ToyCipher(rng.getrandbits(64), width_bits),
    )
    device = AttackDevice(key, blocks_per_sector, sectors)
    device.fill_random(rng)
    triples = device.triples()
    q = len(triples)
    result: dict[str, Any] = {
        "attack": "collision",
        "width_bits": width_bits,
        "sectors": sectors,
        "blocks_per_sector": blocks_per_sector,
        "seed": seed,
        "positions": q,
        "expected_colliding_pairs": expected_colliding_pairs(q, width_bits),
        "observed_colliding_pairs": count_colliding_pairs(triples),
    }
    collision = find_collision(triples)
    if collision is None:
        result["collision"] = None
        result["verdict"] = "failure"
        result["note"] = "no P XOR T collision in this sample; rerun with another seed"
        result["transcript"] = device.transcript
        return result
    result["collision"] = {"first": list(collision[0]), "second": list(collision[1])}
    target = (
        bytes.fromhex(target_hex) if target_hex else rng.randbytes(device.block_bytes)
    )
    forge = forge_via_collision(device, collision, triples, target)
    result.update(forge.as_dict())
    result["verdict"] = forge.status
    result["transcript"] = device.transcript
    return result


def run_tweak_recovery_demo(
    sector: int = 3,
    block: int = 2,
    seed: int = 0,
    target_hex: str | None = None,
    distinct_keys: bool = False,
) -> dict[str, Any]:
    """Recover a tweak through the decryption oracle and forge one block.

    distinct_keys=True is the negative control: the same two queries
    run against a K != K_T device and verification fails, showing that
    key separation blocks the attack.
    """
    rng = random.Random(seed)
    k = rng.randbytes(16)
    kt = rng.randbytes(16) if distinct_keys else k
    key = XtsKey(AesCipher(k), AesCipher(kt))
    device = AttackDevice(key, max(4, block + 1), None)
    device.fill_random(rng, [sector])

    recovered = recover_tweak_shared_key(device, sector)
    true_tweak = device.harness_true_tweak(sector, 0)
    target = bytes.fromhex(target_hex) if target_hex else rng.randbytes(16)
    forge = forge_via_recovered_tweak(device, sector, block, target, recovered_t0=recovered)

    result: dict[str, Any] = {
        "attack": "tweak-recovery",
        "seed": seed,
        "distinct_keys": distinct_keys,
        "recovered_tweak": recovered.hex(),
        "true_tweak": true_tweak.hex(),
        "tweak_recovered": recovered == true_tweak,
    }
    result.update(forge.as_dict())
    result["encrypt_queries"] = device.encrypt_queries
    result["decrypt_queries"] = device.decrypt_queries
    result["verdict"] = forge.status
    result["transcript"] = device.transcript
    return result
