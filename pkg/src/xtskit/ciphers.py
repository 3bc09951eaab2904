"""Block-cipher abstraction: keyed n-bit permutations with both directions.

Provides AES-128/AES-256 (backed by the ``cryptography`` package's ECB
primitive, used strictly one block at a time or on whole multiples of
the block size) and a small-block toy Feistel cipher whose width is low
enough that birthday-bound effects appear at desk scale.

All ciphers are immutable after construction; encrypt/decrypt are pure
functions of (key, block) and safe to call from multiple threads.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes


class BlockCipher(ABC):
    """A keyed bijection on fixed-width blocks with an exact inverse."""

    #: block width in bytes
    block_bytes: int
    #: stable identifier, e.g. "aes128" or "toy16"
    name: str
    #: raw key material (seed bytes for the toy cipher)
    key_bytes: bytes

    @property
    def block_width_bits(self) -> int:
        return self.block_bytes * 8

    def _check_block(self, block: bytes) -> None:
        if len(block) != self.block_bytes:
            raise ValueError(
                f"{self.name} operates on {self.block_bytes}-byte blocks, got {len(block)}"
            )

    @abstractmethod
    def encrypt_block(self, block: bytes) -> bytes:
        """E_K applied to one block."""

    @abstractmethod
    def decrypt_block(self, block: bytes) -> bytes:
        """The exact inverse of encrypt_block."""

    def encrypt_blocks(self, data: bytes) -> bytes:
        """E_K applied independently to each block of a concatenation."""
        if len(data) % self.block_bytes:
            raise ValueError("data length must be a multiple of the block size")
        bb = self.block_bytes
        return b"".join(self.encrypt_block(data[i : i + bb]) for i in range(0, len(data), bb))

    def decrypt_blocks(self, data: bytes) -> bytes:
        if len(data) % self.block_bytes:
            raise ValueError("data length must be a multiple of the block size")
        bb = self.block_bytes
        return b"".join(self.decrypt_block(data[i : i + bb]) for i in range(0, len(data), bb))


class AesCipher(BlockCipher):
    """AES-128 or AES-256 in raw block (ECB) form.

    A fresh cipher context is created per call, so instances carry no
    mutable state and can be shared across worker threads.
    """

    block_bytes = 16

    def __init__(self, key: bytes) -> None:
        if len(key) not in (16, 32):
            raise ValueError(f"AES key must be 16 or 32 bytes, got {len(key)}")
        self.key_bytes = bytes(key)
        self.name = "aes128" if len(key) == 16 else "aes256"
        self._cipher = Cipher(algorithms.AES(self.key_bytes), modes.ECB())

    def encrypt_block(self, block: bytes) -> bytes:
        self._check_block(block)
        enc = self._cipher.encryptor()
        return enc.update(block) + enc.finalize()

    def decrypt_block(self, block: bytes) -> bytes:
        self._check_block(block)
        dec = self._cipher.decryptor()
        return dec.update(block) + dec.finalize()

    def encrypt_blocks(self, data: bytes) -> bytes:
        if len(data) % 16:
            raise ValueError("data length must be a multiple of the block size")
        enc = self._cipher.encryptor()
        return enc.update(data) + enc.finalize()

    def decrypt_blocks(self, data: bytes) -> bytes:
        if len(data) % 16:
            raise ValueError("data length must be a multiple of the block size")
        dec = self._cipher.decryptor()
        return dec.update(data) + dec.finalize()


_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix64(x: int) -> int:
    """64-bit xorshift-multiply finalizer (shifts 30/27/31)."""
    x &= _MASK64
    x ^= x >> 30
    x = (x * _MIX1) & _MASK64
    x ^= x >> 27
    x = (x * _MIX2) & _MASK64
    x ^= x >> 31
    return x


class ToyCipher(BlockCipher):
    """4-round balanced Feistel network on 16/24/32-bit blocks.

    Blocks map to integers big-endian; the high half is the Feistel
    left branch.  Round r transforms (L, R) -> (R, L XOR F(R, k_r))
    with no swap after the last round.  Round keys are k_r =
    mix64(seed + r*GOLDEN) and F(half, k) is the top half-width bits of
    mix64(half XOR (k truncated to the half width)).

    Every parameter is pinned so that attack transcripts reproduce
    exactly for a given seed.  Strength is irrelevant here: only
    bijectivity and random-looking behavior matter for the
    birthday-statistics demos.
    """

    ROUNDS = 4

    def __init__(self, seed: int, width_bits: int) -> None:
        if width_bits not in (16, 24, 32):
            raise ValueError(f"toy cipher width must be 16, 24, or 32 bits, got {width_bits}")
        if not 0 <= seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.block_bytes = width_bits // 8
        self.name = f"toy{width_bits}"
        self.seed = seed
        self.key_bytes = seed.to_bytes(8, "big")
        self._half_bits = width_bits // 2
        self._half_mask = (1 << self._half_bits) - 1
        self._round_keys = tuple(_mix64(seed + r * _GOLDEN) for r in range(self.ROUNDS))

    def _round_f(self, half: int, round_key: int) -> int:
        return _mix64(half ^ (round_key & self._half_mask)) >> (64 - self._half_bits)

    def encrypt_block(self, block: bytes) -> bytes:
        self._check_block(block)
        x = int.from_bytes(block, "big")
        left, right = x >> self._half_bits, x & self._half_mask
        for key in self._round_keys:
            left, right = right, left ^ self._round_f(right, key)
        return ((left << self._half_bits) | right).to_bytes(self.block_bytes, "big")

    def decrypt_block(self, block: bytes) -> bytes:
        self._check_block(block)
        x = int.from_bytes(block, "big")
        left, right = x >> self._half_bits, x & self._half_mask
        for key in reversed(self._round_keys):
            left, right = right ^ self._round_f(left, key), left
        return ((left << self._half_bits) | right).to_bytes(self.block_bytes, "big")


#: accepted cipher names -> required key-hex length
CIPHER_KEY_HEX_LEN = {
    "aes128": 32,
    "aes256": 64,
    "toy16": 16,
    "toy24": 16,
    "toy32": 16,
}


def make_cipher(name: str, key_hex: str) -> BlockCipher:
    """Build a cipher from its name and a lowercase-hex key string.

    AES keys are 32 or 64 hex chars of key material; toy keys are
    16 hex chars encoding the 64-bit seed big-endian.
    """
    try:
        want = CIPHER_KEY_HEX_LEN[name]
    except KeyError:
        raise ValueError(f"unknown cipher {name!r}; choose from {sorted(CIPHER_KEY_HEX_LEN)}") from None
    if len(key_hex) != want:
        raise ValueError(f"{name} needs a {want}-hex-char key, got {len(key_hex)} chars")
    try:
        key = bytes.fromhex(key_hex)
    except ValueError:
        raise ValueError(f"key for {name} is not valid hex") from None
    if name.startswith("aes"):
        return AesCipher(key)
    return ToyCipher(int.from_bytes(key, "big"), int(name[3:]))
