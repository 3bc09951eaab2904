"""Binary-field arithmetic on n-bit blocks for XTS tweak generation.

A block of n/8 bytes is read as an element of GF(2^n): bit i of the
polynomial (the coefficient of x^i) lives at byte index i // 8, bit
position i % 8.  Byte 0 therefore carries the low-order coefficients,
which means a block maps to a Python int via little-endian conversion
and the hex form printed by ``bytes.hex()`` (byte 0 first) matches the
convention used by disk-encryption test vectors.

The field is F_2[x] / (x^n + reduction), where ``reduction`` is the
low-degree remainder polynomial encoded as an n-bit constant.  For the
standard 128-bit field the reduction is x^7 + x^2 + x + 1, i.e. the
byte value 0x87 in byte 0.

Multiplying by alpha (the element x) is a 1-bit left shift with carry
propagating from byte 0 toward the last byte; when the shifted-out top
bit was set, the reduction constant is XORed back into the low bytes.
"""

from __future__ import annotations

from dataclasses import dataclass


class UnsupportedWidthError(ValueError):
    """Raised when an operation cannot handle the requested field width."""


@dataclass(frozen=True)
class FieldSpec:
    """Width and reduction polynomial of a GF(2^n) instance.

    ``reduction`` encodes the remainder polynomial of the modulus
    x^n + reduction as an n-bit integer (little-endian byte layout,
    same as field elements).
    """

    width_bits: int
    reduction: int

    def __post_init__(self) -> None:
        if self.width_bits <= 0 or self.width_bits % 8 != 0:
            raise ValueError(f"field width must be a positive multiple of 8, got {self.width_bits}")
        if not 0 < self.reduction < (1 << self.width_bits):
            raise ValueError("reduction constant must be a nonzero n-bit value")

    @property
    def width_bytes(self) -> int:
        return self.width_bits // 8

    @property
    def modulus(self) -> int:
        """The full modulus x^n + reduction as a bit-vector integer."""
        return (1 << self.width_bits) | self.reduction


# Standard XTS field: F_2[x] / (x^128 + x^7 + x^2 + x + 1).
GF128 = FieldSpec(128, 0x87)

# Toy widths for desk-scale demos.  The 16-bit modulus is
# x^16 + x^5 + x^3 + x + 1; the 24/32-bit ones are the irreducible
# polynomials with the smallest reduction constant (verified by the
# exhaustive factor search in verify_irreducible, see tests).
GF16 = FieldSpec(16, 0x2B)
GF24 = FieldSpec(24, 0x1B)
GF32 = FieldSpec(32, 0x8D)

_SPEC_BY_BYTES = {2: GF16, 3: GF24, 4: GF32, 16: GF128}


def field_spec_for_block(block_bytes: int) -> FieldSpec:
    """Default field for a given cipher block size."""
    try:
        return _SPEC_BY_BYTES[block_bytes]
    except KeyError:
        raise UnsupportedWidthError(f"no field defined for {block_bytes}-byte blocks") from None


def _check_len(block: bytes, spec: FieldSpec) -> None:
    if len(block) != spec.width_bytes:
        raise ValueError(
            f"field element must be {spec.width_bytes} bytes for width {spec.width_bits}, "
            f"got {len(block)}"
        )


def mul_alpha(block: bytes, spec: FieldSpec = GF128) -> bytes:
    """Multiply a field element by alpha: left shift with overflow reduction."""
    _check_len(block, spec)
    x = int.from_bytes(block, "little") << 1
    if x >> spec.width_bits:
        x = (x ^ (1 << spec.width_bits)) ^ spec.reduction
    return x.to_bytes(spec.width_bytes, "little")


def alpha_pow(block: bytes, exponent: int, spec: FieldSpec = GF128) -> bytes:
    """Multiply a field element by alpha^exponent (iterated shift-reduce)."""
    if exponent < 0:
        raise ValueError("exponent must be >= 0")
    _check_len(block, spec)
    x = int.from_bytes(block, "little")
    top = 1 << spec.width_bits
    for _ in range(exponent):
        x <<= 1
        if x & top:
            x = (x ^ top) ^ spec.reduction
    return x.to_bytes(spec.width_bytes, "little")


def mul(a: bytes, b: bytes, spec: FieldSpec = GF128) -> bytes:
    """School-book field multiplication; the slow, simple oracle.

    Carry-less multiply into a double-width polynomial first, then long
    division by the modulus.  Deliberately kept free of the shift-reduce
    shortcut so it can serve as an independent check on mul_alpha and
    alpha_pow.
    """
    _check_len(a, spec)
    _check_len(b, spec)
    x = int.from_bytes(a, "little")
    y = int.from_bytes(b, "little")
    product = 0
    shift = 0
    while x:
        if x & 1:
            product ^= y << shift
        x >>= 1
        shift += 1
    modulus = spec.modulus
    n = spec.width_bits
    while product.bit_length() > n:
        product ^= modulus << (product.bit_length() - 1 - n)
    return product.to_bytes(spec.width_bytes, "little")


def one(spec: FieldSpec = GF128) -> bytes:
    """The multiplicative identity (the polynomial 1)."""
    return (1).to_bytes(spec.width_bytes, "little")


def alpha(spec: FieldSpec = GF128) -> bytes:
    """The element x."""
    return (2).to_bytes(spec.width_bytes, "little")


def _poly_rem(a: int, b: int) -> int:
    """Remainder of polynomial division a mod b over F_2."""
    while a and a.bit_length() >= b.bit_length():
        a ^= b << (a.bit_length() - b.bit_length())
    return a


# Trial-division factor search is only feasible at toy widths.  The
# 128-bit modulus is the one fixed by the XTS standard and is known
# irreducible; no other large width is accepted.
_BRUTE_FORCE_MAX_BITS = 32


def verify_irreducible(spec: FieldSpec) -> bool:
    """True iff x^n + reduction has no nontrivial factor.

    Checked by trial division by every polynomial of degree 1..n/2 for
    widths up to 32 bits.  The standard 128-bit modulus is accepted as
    known-irreducible; any other width above the brute-force bound is
    refused.
    """
    if spec.width_bits > _BRUTE_FORCE_MAX_BITS:
        if spec == GF128:
            return True
        raise UnsupportedWidthError(
            f"irreducibility check by factor search is not feasible at width {spec.width_bits}"
        )
    modulus = spec.modulus
    for degree in range(1, spec.width_bits // 2 + 1):
        lead = 1 << degree
        for low in range(lead):
            if _poly_rem(modulus, lead | low) == 0:
                return False
    return True


def smallest_irreducible_reduction(width_bits: int) -> int:
    """Smallest reduction constant making x^n + reduction irreducible.

    Used to justify the toy-width defaults; candidates are scanned in
    ascending order (only odd constants, since an irreducible modulus
    needs a nonzero constant term).
    """
    for reduction in range(1, 1 << width_bits, 2):
        if verify_irreducible(FieldSpec(width_bits, reduction)):
            return reduction
    raise ValueError(f"no irreducible modulus of width {width_bits}")
