"""Sector-level XTS encryption: C_{N,j} = E_K(P_{N,j} XOR T_{N,j}) XOR T_{N,j}.

The tweak for block j of sector N is T_{N,j} = E_{K_T}(encode(N)) * alpha^j
in GF(2^n), with block indexing starting at j = 0.  Two independent keys
are used: K for the data permutation and K_T for the sector-number
encryption.  Sectors are whole multiples of the block size; there is no
ciphertext stealing and no padding.

Sector numbers are encoded into a cipher block big-endian: for a
16-byte block the 64-bit value occupies the last 8 bytes most
significant byte first, so N = 1 prints as 0x0000...0001.

Device processing is sector-parallel with byte-identical output
regardless of worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import BinaryIO, Callable, Protocol

from .ciphers import BlockCipher, make_cipher
from .gf import field_spec_for_block, mul_alpha

# Hard cap on blocks per sector (2^20).  Both IEEE 1619 and the FIPS
# approval of XTS forbid larger data units, so it is a precondition
# here, not merely an audit finding.
MAX_BLOCKS_PER_SECTOR = 1 << 20


@dataclass(frozen=True)
class Geometry:
    """Device shape: sector size in bytes and total sector count S."""

    sector_size_bytes: int
    sector_count: int

    def __post_init__(self) -> None:
        if self.sector_size_bytes <= 0:
            raise ValueError("sector size must be positive")
        if self.sector_count < 0:
            raise ValueError("sector count must be >= 0")

    def blocks_per_sector(self, block_bytes: int) -> int:
        """J for a given cipher block size; sector must divide evenly."""
        if self.sector_size_bytes % block_bytes:
            raise ValueError(
                f"sector size {self.sector_size_bytes} is not a multiple of the "
                f"{block_bytes}-byte cipher block"
            )
        return self.sector_size_bytes // block_bytes

    @property
    def total_bytes(self) -> int:
        return self.sector_size_bytes * self.sector_count


@dataclass(frozen=True)
class XtsKey:
    """The XTS key pair: data key K and tweak key K_T, same cipher family."""

    data_cipher: BlockCipher
    tweak_cipher: BlockCipher

    def __post_init__(self) -> None:
        if self.data_cipher.name != self.tweak_cipher.name:
            raise ValueError(
                f"data and tweak keys must use the same cipher, got "
                f"{self.data_cipher.name} and {self.tweak_cipher.name}"
            )

    @classmethod
    def from_hex(cls, cipher_name: str, data_key_hex: str, tweak_key_hex: str) -> "XtsKey":
        return cls(make_cipher(cipher_name, data_key_hex), make_cipher(cipher_name, tweak_key_hex))

    @property
    def block_bytes(self) -> int:
        return self.data_cipher.block_bytes

    @property
    def keys_equal(self) -> bool:
        """True when K = K_T — representable, but a security defect."""
        return self.data_cipher.key_bytes == self.tweak_cipher.key_bytes


def encode_sector_number(n: int, block_bytes: int = 16) -> bytes:
    """Sector number as a cipher block, value big-endian in the low-address tail."""
    if n < 0:
        raise ValueError("sector number must be >= 0")
    try:
        return n.to_bytes(block_bytes, "big")
    except OverflowError:
        raise ValueError(
            f"sector number {n} does not fit in a {block_bytes}-byte block"
        ) from None


def decode_sector_number(block: bytes) -> int:
    """Inverse of encode_sector_number."""
    return int.from_bytes(block, "big")


def tweak_schedule(tweak_cipher: BlockCipher, n: int, block_count: int) -> list[bytes]:
    """[T_{N,0}, ..., T_{N,J-1}]: encrypted sector number, then alpha steps."""
    if block_count < 1:
        raise ValueError("block count must be >= 1")
    spec = field_spec_for_block(tweak_cipher.block_bytes)
    tweak = tweak_cipher.encrypt_block(encode_sector_number(n, tweak_cipher.block_bytes))
    out = [tweak]
    for _ in range(block_count - 1):
        tweak = mul_alpha(tweak, spec)
        out.append(tweak)
    return out


def _tweak_stream(key: XtsKey, n: int, block_count: int) -> bytes:
    """Concatenated tweak schedule, computed with in-int chaining."""
    bb = key.block_bytes
    spec = field_spec_for_block(bb)
    top = 1 << spec.width_bits
    t = int.from_bytes(key.tweak_cipher.encrypt_block(encode_sector_number(n, bb)), "little")
    parts = bytearray()
    for _ in range(block_count):
        parts += t.to_bytes(bb, "little")
        t <<= 1
        if t & top:
            t = (t ^ top) ^ spec.reduction
    return bytes(parts)


def _check_sector(key: XtsKey, data: bytes) -> int:
    bb = key.block_bytes
    if not data or len(data) % bb:
        raise ValueError(
            f"sector length {len(data)} is not a positive multiple of the "
            f"{bb}-byte cipher block (no ciphertext stealing)"
        )
    block_count = len(data) // bb
    if block_count > MAX_BLOCKS_PER_SECTOR:
        raise ValueError(
            f"sector holds {block_count} blocks, exceeding the 2^20 data-unit limit"
        )
    return block_count


def encrypt_sector(key: XtsKey, n: int, plaintext: bytes) -> bytes:
    """XTS-encrypt one sector at number N."""
    block_count = _check_sector(key, plaintext)
    tweaks = _tweak_stream(key, n, block_count)
    size = len(plaintext)
    masked = (int.from_bytes(plaintext, "little") ^ int.from_bytes(tweaks, "little")).to_bytes(
        size, "little"
    )
    mid = key.data_cipher.encrypt_blocks(masked)
    return (int.from_bytes(mid, "little") ^ int.from_bytes(tweaks, "little")).to_bytes(
        size, "little"
    )


def decrypt_sector(key: XtsKey, n: int, ciphertext: bytes) -> bytes:
    """Exact inverse of encrypt_sector."""
    block_count = _check_sector(key, ciphertext)
    tweaks = _tweak_stream(key, n, block_count)
    size = len(ciphertext)
    masked = (int.from_bytes(ciphertext, "little") ^ int.from_bytes(tweaks, "little")).to_bytes(
        size, "little"
    )
    mid = key.data_cipher.decrypt_blocks(masked)
    return (int.from_bytes(mid, "little") ^ int.from_bytes(tweaks, "little")).to_bytes(
        size, "little"
    )


class SectorKeySource(Protocol):
    """Anything that can name the XTS key pair for a sector (see keyscope)."""

    def key_for_sector(self, n: int, geometry: Geometry) -> XtsKey: ...


#: sectors handed to the worker pool per scheduling round
_BATCH_SECTORS = 256


def process_device(
    infile: BinaryIO,
    outfile: BinaryIO,
    geometry: Geometry,
    keys: SectorKeySource,
    direction: str,
    jobs: int = 1,
) -> int:
    """Stream a whole device image sector by sector; returns bytes written.

    The input must be exactly geometry.total_bytes long.  Output is
    deterministic: sector N of the output depends only on sector N of
    the input and the key the policy assigns to N, so any worker count
    produces identical bytes.
    """
    if direction not in ("encrypt", "decrypt"):
        raise ValueError(f"direction must be 'encrypt' or 'decrypt', got {direction!r}")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    op: Callable[[XtsKey, int, bytes], bytes] = (
        encrypt_sector if direction == "encrypt" else decrypt_sector
    )
    ss = geometry.sector_size_bytes
    total = geometry.sector_count
    if total:
        # fail fast on misaligned geometry before touching the image
        geometry.blocks_per_sector(keys.key_for_sector(0, geometry).block_bytes)

    def worker(item: tuple[int, bytes]) -> bytes:
        n, data = item
        return op(keys.key_for_sector(n, geometry), n, data)

    next_n = 0

    def read_batch() -> list[tuple[int, bytes]]:
        nonlocal next_n
        batch: list[tuple[int, bytes]] = []
        while len(batch) < _BATCH_SECTORS and next_n < total:
            chunk = infile.read(ss)
            if len(chunk) != ss:
                raise ValueError(
                    f"image truncated: sector {next_n} is {len(chunk)} bytes, expected {ss}"
                )
            batch.append((next_n, chunk))
            next_n += 1
        return batch

    written = 0
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        batch = read_batch()
        while batch:
            outputs = map(worker, batch) if jobs == 1 else ex.map(worker, batch)
            for out in outputs:
                outfile.write(out)
                written += len(out)
            batch = read_batch()

    if infile.read(1):
        raise ValueError(f"image longer than geometry ({total} sectors of {ss} bytes)")
    return written


def derive_geometry(image_bytes: int, sector_size_bytes: int) -> Geometry:
    """Geometry for a raw image file; the size must be a whole number of sectors."""
    if image_bytes % sector_size_bytes:
        raise ValueError(
            f"image size {image_bytes} is not a multiple of the sector size {sector_size_bytes}"
        )
    return Geometry(sector_size_bytes, image_bytes // sector_size_bytes)


def process_image(
    in_path: str | os.PathLike[str],
    out_path: str | os.PathLike[str],
    sector_size_bytes: int,
    keys: SectorKeySource,
    direction: str,
    jobs: int = 1,
) -> Geometry:
    """process_device over file paths; sector count is derived from file size."""
    geometry = derive_geometry(os.path.getsize(in_path), sector_size_bytes)
    with open(in_path, "rb") as infile, open(out_path, "wb") as outfile:
        process_device(infile, outfile, geometry, keys, direction, jobs=jobs)
    return geometry
