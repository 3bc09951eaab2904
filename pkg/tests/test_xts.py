"""Sector transform: worked-example conformance, an independent library
oracle, round-trips, and device-level processing."""

import io
import random

import pytest

from helpers import formula_sector, library_xts_sector, xor
from xtskit.ciphers import ToyCipher
from xtskit.gf import alpha_pow
from xtskit.keyscope import Keyring, PolicyError, ScopePolicy
from xtskit.xts import (
    Geometry,
    MAX_BLOCKS_PER_SECTOR,
    XtsKey,
    decode_sector_number,
    decrypt_sector,
    derive_geometry,
    encode_sector_number,
    encrypt_sector,
    process_device,
    process_image,
    tweak_schedule,
)

WORKED = {
    "k": "11" * 16,
    "kt": "22" * 16,
    "n": 1,
    "p": bytes([0x44] * 16) + bytes([0x88] * 16),
    "tweak0": "6752ca5febca0f3fc8dc9dfc2a916295",
    "tweak1": "49a494bfd6951f7e90b93bf95522c52a",
    "c": bytes.fromhex("74a24eb9b1b6ac5e3f95ca359b8d1585")
    + bytes.fromhex("65093d6dfc46548f0a9b57d5d76dc64e"),
}


def worked_key() -> XtsKey:
    return XtsKey.from_hex("aes128", WORKED["k"], WORKED["kt"])


def test_encode_sector_number_layout():
    assert encode_sector_number(1, 16) == bytes(15) + b"\x01"
    assert encode_sector_number(0, 16) == bytes(16)
    assert encode_sector_number(0x0123, 16).hex() == "00" * 14 + "0123"
    assert decode_sector_number(encode_sector_number(77, 16)) == 77
    assert encode_sector_number(300, 2) == b"\x01\x2c"


def test_encode_sector_number_bounds():
    with pytest.raises(ValueError):
        encode_sector_number(-1, 16)
    with pytest.raises(ValueError):
        encode_sector_number(1 << 16, 2)


def test_tweak_schedule_worked_example():
    schedule = tweak_schedule(worked_key().tweak_cipher, WORKED["n"], 2)
    assert [t.hex() for t in schedule] == [WORKED["tweak0"], WORKED["tweak1"]]


def test_tweak_schedule_length_and_chain():
    rng = random.Random(0xD0)
    key = XtsKey.from_hex("aes128", rng.randbytes(16).hex(), rng.randbytes(16).hex())
    schedule = tweak_schedule(key.tweak_cipher, 12345, 21)
    assert len(schedule) == 21
    assert schedule[20] == alpha_pow(schedule[0], 20)
    with pytest.raises(ValueError):
        tweak_schedule(key.tweak_cipher, 0, 0)


def test_encrypt_sector_worked_example():
    assert encrypt_sector(worked_key(), WORKED["n"], WORKED["p"]) == WORKED["c"]


def test_decrypt_sector_worked_example():
    assert decrypt_sector(worked_key(), WORKED["n"], WORKED["c"]) == WORKED["p"]


def test_sector_matches_independent_library():
    rng = random.Random(0xD1)
    for size in (32, 512):
        for _ in range(20):
            k, kt = rng.randbytes(16), rng.randbytes(16)
            n = rng.getrandbits(64)
            p = rng.randbytes(size)
            key = XtsKey.from_hex("aes128", k.hex(), kt.hex())
            assert encrypt_sector(key, n, p) == library_xts_sector(k, kt, n, p, True)
            c = rng.randbytes(size)
            assert decrypt_sector(key, n, c) == library_xts_sector(k, kt, n, c, False)


def test_sector_matches_formula_evaluation_toy():
    rng = random.Random(0xD2)
    key = XtsKey(ToyCipher(7, 16), ToyCipher(8, 16))
    for _ in range(50):
        n = rng.randrange(0, 1 << 16)
        p = rng.randbytes(8)  # J = 4 blocks of 2 bytes
        assert encrypt_sector(key, n, p) == formula_sector(key, n, p, True)
        assert decrypt_sector(key, n, p) == formula_sector(key, n, p, False)


def test_sector_matches_formula_evaluation_aes():
    rng = random.Random(0xD3)
    key = XtsKey.from_hex("aes256", rng.randbytes(32).hex(), rng.randbytes(32).hex())
    p = rng.randbytes(512)
    n = rng.getrandbits(40)
    assert encrypt_sector(key, n, p) == formula_sector(key, n, p, True)


def test_roundtrip_across_sizes_and_ciphers():
    rng = random.Random(0xD4)
    for cipher_name, key_hex_len in (("aes128", 32), ("aes256", 64)):
        for size in (32, 512, 4096):
            for _ in range(10):
                key = XtsKey.from_hex(
                    cipher_name,
                    rng.randbytes(key_hex_len // 2).hex(),
                    rng.randbytes(key_hex_len // 2).hex(),
                )
                n = rng.getrandbits(64)
                p = rng.randbytes(size)
                assert decrypt_sector(key, n, encrypt_sector(key, n, p)) == p


def test_zero_sector_roundtrips():
    rng = random.Random(0xD5)
    key = XtsKey.from_hex("aes128", rng.randbytes(16).hex(), rng.randbytes(16).hex())
    p = bytes(32)
    assert decrypt_sector(key, 9, encrypt_sector(key, 9, p)) == p


def test_identical_blocks_encrypt_distinctly_across_positions():
    # 2^10 copies of one plaintext block spread over (N, j) positions
    rng = random.Random(0xD6)
    key = XtsKey.from_hex("aes128", rng.randbytes(16).hex(), rng.randbytes(16).hex())
    block = rng.randbytes(16)
    seen = set()
    for n in range(4):
        c = encrypt_sector(key, n, block * 256)
        for j in range(256):
            seen.add(c[j * 16 : (j + 1) * 16])
    assert len(seen) == 1024


def test_sector_length_contract():
    key = worked_key()
    with pytest.raises(ValueError):
        encrypt_sector(key, 0, b"")
    with pytest.raises(ValueError):
        encrypt_sector(key, 0, bytes(33))
    with pytest.raises(ValueError):
        decrypt_sector(key, 0, bytes(15))


def test_blocks_per_sector_hard_limit():
    key = worked_key()
    oversized = bytes(16 * (MAX_BLOCKS_PER_SECTOR + 1))
    with pytest.raises(ValueError, match="2\\^20"):
        encrypt_sector(key, 0, oversized)
    # exactly at the limit is legal
    geometry = Geometry(16 * MAX_BLOCKS_PER_SECTOR, 1)
    assert geometry.blocks_per_sector(16) == MAX_BLOCKS_PER_SECTOR


def test_geometry_validation():
    with pytest.raises(ValueError):
        Geometry(0, 4)
    with pytest.raises(ValueError):
        Geometry(512, -1)
    with pytest.raises(ValueError):
        Geometry(24, 4).blocks_per_sector(16)
    assert Geometry(4096, 8).total_bytes == 32768


def test_xts_key_family_mismatch():
    with pytest.raises(ValueError):
        XtsKey(ToyCipher(1, 16), ToyCipher(1, 24))


def test_keys_equal_flag():
    assert XtsKey.from_hex("aes128", "11" * 16, "11" * 16).keys_equal
    assert not worked_key().keys_equal


def single_keyring(k: str, kt: str) -> Keyring:
    return Keyring(ScopePolicy.single(), ((k, kt),))


def test_process_device_is_concatenation_of_sectors():
    rng = random.Random(0xD7)
    k, kt = rng.randbytes(16).hex(), rng.randbytes(16).hex()
    bound = single_keyring(k, kt).bind("aes128")
    data = rng.randbytes(64)
    out = io.BytesIO()
    geometry = Geometry(32, 2)
    process_device(io.BytesIO(data), out, geometry, bound, "encrypt")
    key = XtsKey.from_hex("aes128", k, kt)
    expected = encrypt_sector(key, 0, data[:32]) + encrypt_sector(key, 1, data[32:])
    assert out.getvalue() == expected


def test_process_device_embeds_worked_example_at_sector_one():
    rng = random.Random(0xD8)
    image = rng.randbytes(32) + WORKED["p"]
    out = io.BytesIO()
    bound = single_keyring(WORKED["k"], WORKED["kt"]).bind("aes128")
    process_device(io.BytesIO(image), out, Geometry(32, 2), bound, "encrypt")
    assert out.getvalue()[32:] == WORKED["c"]


def test_process_device_parallel_equals_sequential():
    rng = random.Random(0xD9)
    image = rng.randbytes(64 * 512)
    bound = single_keyring(rng.randbytes(16).hex(), rng.randbytes(16).hex()).bind("aes128")
    geometry = Geometry(512, 64)
    seq, par = io.BytesIO(), io.BytesIO()
    process_device(io.BytesIO(image), seq, geometry, bound, "encrypt", jobs=1)
    process_device(io.BytesIO(image), par, geometry, bound, "encrypt", jobs=8)
    assert seq.getvalue() == par.getvalue()


def test_process_device_roundtrip_multi_key_linear():
    rng = random.Random(0xDA)
    # 16 blocks per key => 4 sectors per key at 512-byte sectors
    policy = ScopePolicy.linear(limit_blocks=128)
    keyring = Keyring(
        policy,
        tuple((rng.randbytes(16).hex(), rng.randbytes(16).hex()) for _ in range(3)),
    )
    bound = keyring.bind("aes128")
    geometry = Geometry(512, 10)
    image = rng.randbytes(512 * 10)
    enc, dec = io.BytesIO(), io.BytesIO()
    process_device(io.BytesIO(image), enc, geometry, bound, "encrypt")
    process_device(io.BytesIO(enc.getvalue()), dec, geometry, bound, "decrypt")
    assert dec.getvalue() == image
    # sectors in different scopes use different keys: same plaintext,
    # different ciphertext beyond tweak variation is hard to assert
    # directly, so check scope boundaries via the key source instead
    assert bound.key_for_sector(0, geometry) is bound.key_for_sector(3, geometry)
    assert bound.key_for_sector(0, geometry) is not bound.key_for_sector(4, geometry)


def test_process_device_sector_independence():
    rng = random.Random(0xDB)
    bound = single_keyring(rng.randbytes(16).hex(), rng.randbytes(16).hex()).bind("aes128")
    geometry = Geometry(64, 4)
    image = bytearray(rng.randbytes(256))
    base = io.BytesIO()
    process_device(io.BytesIO(bytes(image)), base, geometry, bound, "encrypt")
    image[70] ^= 0xFF  # mutate sector 1
    changed = io.BytesIO()
    process_device(io.BytesIO(bytes(image)), changed, geometry, bound, "encrypt")
    a, b = base.getvalue(), changed.getvalue()
    assert a[64:128] != b[64:128]
    assert a[:64] == b[:64] and a[128:] == b[128:]


def test_process_device_size_mismatches():
    rng = random.Random(0xDC)
    bound = single_keyring(rng.randbytes(16).hex(), rng.randbytes(16).hex()).bind("aes128")
    with pytest.raises(ValueError, match="truncated"):
        process_device(io.BytesIO(bytes(48)), io.BytesIO(), Geometry(32, 2), bound, "encrypt")
    with pytest.raises(ValueError, match="longer"):
        process_device(io.BytesIO(bytes(96)), io.BytesIO(), Geometry(32, 2), bound, "encrypt")


def test_process_device_argument_validation():
    rng = random.Random(0xDD)
    bound = single_keyring(rng.randbytes(16).hex(), rng.randbytes(16).hex()).bind("aes128")
    with pytest.raises(ValueError):
        process_device(io.BytesIO(), io.BytesIO(), Geometry(32, 0), bound, "sideways")
    with pytest.raises(ValueError):
        process_device(io.BytesIO(), io.BytesIO(), Geometry(32, 0), bound, "encrypt", jobs=0)


def test_process_device_insufficient_keyring():
    rng = random.Random(0xDE)
    keyring = Keyring(
        ScopePolicy.linear(limit_blocks=2),    # one 32-byte sector per key
        ((rng.randbytes(16).hex(), rng.randbytes(16).hex()),),
    )
    bound = keyring.bind("aes128")
    with pytest.raises(PolicyError, match="cannot cover"):
        process_device(io.BytesIO(bytes(64)), io.BytesIO(), Geometry(32, 2), bound, "encrypt")


def test_process_image_and_derive_geometry(tmp_path):
    rng = random.Random(0xDF)
    src = tmp_path / "plain.img"
    enc = tmp_path / "cipher.img"
    back = tmp_path / "back.img"
    src.write_bytes(rng.randbytes(4096 * 4))
    bound = single_keyring(rng.randbytes(16).hex(), rng.randbytes(16).hex()).bind("aes128")
    geometry = process_image(src, enc, 4096, bound, "encrypt", jobs=2)
    assert geometry == Geometry(4096, 4)
    process_image(enc, back, 4096, bound, "decrypt")
    assert back.read_bytes() == src.read_bytes()
    with pytest.raises(ValueError, match="multiple"):
        derive_geometry(100, 64)
