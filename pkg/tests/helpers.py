"""Shared test utilities: independent oracles the library code never touches."""

from __future__ import annotations

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from xtskit.gf import field_spec_for_block, mul
from xtskit.xts import XtsKey, encode_sector_number


def xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b, strict=True))


def library_xts_sector(k: bytes, kt: bytes, n: int, data: bytes, encrypt: bool) -> bytes:
    """Reference sector transform from the cryptography package's XTS mode.

    Completely independent of this repository's arithmetic: key halves
    are concatenated and the sector number becomes the big-endian
    16-byte tweak, which is how that implementation addresses sectors.
    """
    c = Cipher(algorithms.AES(k + kt), modes.XTS(n.to_bytes(16, "big")))
    ctx = c.encryptor() if encrypt else c.decryptor()
    return ctx.update(data) + ctx.finalize()


def formula_sector(key: XtsKey, n: int, data: bytes, encrypt: bool) -> bytes:
    """Block-by-block evaluation of the defining equation.

    Tweaks are built with the school-book field multiply (alpha raised
    by repeated mul), not the production shift-reduce path, so this
    disagrees with the fast implementation whenever either side is wrong.
    """
    bb = key.block_bytes
    spec = field_spec_for_block(bb)
    alpha = (2).to_bytes(bb, "little")
    tweak = key.tweak_cipher.encrypt_block(encode_sector_number(n, bb))
    out = bytearray()
    for j in range(len(data) // bb):
        block = data[j * bb : (j + 1) * bb]
        if encrypt:
            out += xor(key.data_cipher.encrypt_block(xor(block, tweak)), tweak)
        else:
            out += xor(key.data_cipher.decrypt_block(xor(block, tweak)), tweak)
        tweak = mul(tweak, alpha, spec)
    return bytes(out)
