"""Scope policies: index arithmetic, plan feasibility, resize verdicts,
and the keyring file format."""

import json
import math
import random

import pytest

from xtskit.keyscope import (
    Keyring,
    PlanInfeasibleError,
    PolicyError,
    ScopePolicy,
    generate_keyring,
    key_index,
    keyring_from_json,
    keyring_to_json,
    load_keyring,
    plan_scopes,
    policy_from_json,
    save_keyring,
    sectors_per_key,
    validate_resize,
)
from xtskit.xts import Geometry

KIB4 = Geometry(4096, 1 << 28)  # 1 TiB at 4 KiB sectors, J = 2^8


def test_policy_validation():
    with pytest.raises(PolicyError):
        ScopePolicy("round-robin")
    with pytest.raises(PolicyError):
        ScopePolicy("single", 0)
    with pytest.raises(PolicyError):
        ScopePolicy("rotating", key_count=4)  # missing max_sectors
    with pytest.raises(PolicyError):
        ScopePolicy("rotating", key_count=0, max_sectors=8)
    with pytest.raises(PolicyError):
        ScopePolicy("linear", key_count=4)


def test_key_index_single_and_rotating():
    g = Geometry(512, 64)
    single = ScopePolicy.single()
    rotating = ScopePolicy.rotating(4, 64)
    assert all(key_index(single, n, g) == 0 for n in range(64))
    assert key_index(rotating, 10, g) == 2
    assert [key_index(rotating, n, g) for n in range(6)] == [0, 1, 2, 3, 0, 1]


def test_key_index_linear_boundaries():
    policy = ScopePolicy.linear(1 << 44)
    # floor(L / J) = 2^44 / 2^8 = 2^36 sectors per key
    g = Geometry(4096, 1 << 37)
    assert sectors_per_key(policy, g) == 1 << 36
    assert key_index(policy, (1 << 36) - 1, g) == 0
    assert key_index(policy, 1 << 36, g) == 1
    # independent check: scope of sector N is floor(N * J / L)
    for n in (0, 123456, (1 << 36) + 5):
        assert key_index(policy, n, g) == n * 256 // (1 << 44)


def test_key_index_requires_valid_sector():
    g = Geometry(512, 8)
    with pytest.raises(ValueError):
        key_index(ScopePolicy.single(), 8, g)
    with pytest.raises(ValueError):
        key_index(ScopePolicy.single(), -1, g)


def test_linear_infeasible_when_sector_exceeds_limit():
    policy = ScopePolicy.linear(limit_blocks=100)
    g = Geometry(4096, 4)  # 256 blocks per sector > 100
    with pytest.raises(PolicyError, match="one sector"):
        sectors_per_key(policy, g)
    with pytest.raises(PolicyError):
        key_index(policy, 0, g)


def test_plan_linear_terabyte_case():
    plan = plan_scopes(KIB4, ScopePolicy.linear(1 << 36))
    assert plan.keys_needed == 1
    assert plan.max_blocks_per_key == 1 << 36  # exactly at the limit
    assert plan.max_sectors_per_key == 1 << 28


def test_plan_linear_256_tib_case():
    g = Geometry(4096, 1 << 36)  # 256 TiB
    plan = plan_scopes(g, ScopePolicy.linear(1 << 44))
    assert plan.keys_needed == 1
    assert plan.max_blocks_per_key == 1 << 44


def test_plan_single_sector_needs_one_key():
    g = Geometry(4096, 1)
    assert plan_scopes(g, ScopePolicy.single()).keys_needed == 1
    assert plan_scopes(g, ScopePolicy.linear(1 << 36)).keys_needed == 1
    assert plan_scopes(g, ScopePolicy.rotating(1, 1)).keys_needed == 1


def test_plan_linear_multiple_keys():
    g = Geometry(512, 100)  # J = 32
    plan = plan_scopes(g, ScopePolicy.linear(limit_blocks=32 * 12))
    assert plan.max_sectors_per_key == 12
    assert plan.keys_needed == math.ceil(100 / 12)


def test_plan_rotating_feasible():
    policy = ScopePolicy.rotating(8, 1 << 12, limit_blocks=1 << 16)
    g = Geometry(512, 1 << 10)  # J = 32
    plan = plan_scopes(g, policy)
    assert plan.keys_needed == 8
    assert plan.max_blocks_per_key == math.ceil((1 << 10) / 8) * 32


def test_plan_rotating_infeasible_names_bound():
    policy = ScopePolicy.rotating(2, 1 << 12, limit_blocks=1 << 10)
    with pytest.raises(PlanInfeasibleError, match=r"ceil\(S_max/m\)\*J <= L"):
        plan_scopes(Geometry(512, 16), policy)


def test_plan_rotating_rejects_device_beyond_declared_max():
    policy = ScopePolicy.rotating(2, 16, limit_blocks=1 << 20)
    with pytest.raises(PlanInfeasibleError, match="max_sectors"):
        plan_scopes(Geometry(512, 32), policy)


def exhaustive_scope_sums(policy: ScopePolicy, g: Geometry, block_bytes: int = 16):
    j = g.blocks_per_sector(block_bytes)
    sums: dict[int, int] = {}
    for n in range(g.sector_count):
        idx = key_index(policy, n, g, block_bytes)
        sums[idx] = sums.get(idx, 0) + j
    return sums


def test_no_key_exceeds_limit_small_geometries():
    rng = random.Random(0xE0)
    for _ in range(10):
        ss = rng.choice([32, 512, 4096])
        j = ss // 16
        s = rng.randrange(1, 1 << 10)
        g = Geometry(ss, s)
        linear = ScopePolicy.linear(limit_blocks=j * rng.randrange(1, 50))
        for total in exhaustive_scope_sums(linear, g).values():
            assert total <= linear.limit_blocks
        m = rng.randrange(1, 9)
        s_max = s + rng.randrange(0, 64)
        rotating = ScopePolicy.rotating(m, s_max, limit_blocks=math.ceil(s_max / m) * j)
        for total in exhaustive_scope_sums(rotating, g).values():
            assert total <= rotating.limit_blocks


def test_linear_mapping_monotone_and_surjective():
    g = Geometry(512, 100)
    policy = ScopePolicy.linear(limit_blocks=32 * 7)
    plan = plan_scopes(g, policy)
    indices = [key_index(policy, n, g) for n in range(100)]
    assert indices == sorted(indices)
    assert set(indices) == set(range(plan.keys_needed))


def test_rotating_mapping_survives_growth():
    policy = ScopePolicy.rotating(4, 256, limit_blocks=1 << 20)
    small = Geometry(512, 64)
    large = Geometry(512, 200)
    for n in range(64):
        assert key_index(policy, n, small) == key_index(policy, n, large)


def test_validate_resize_rotating():
    policy = ScopePolicy.rotating(8, 128, limit_blocks=1 << 12)
    plan = plan_scopes(Geometry(512, 64), policy)
    ok = validate_resize(plan, Geometry(512, 64), Geometry(512, 128))
    assert ok.allowed
    bad = validate_resize(plan, Geometry(512, 64), Geometry(512, 129))
    assert not bad.allowed
    assert "ceil(S/m)*J <= L" in bad.reason


def test_validate_resize_linear_counts_key_changes():
    policy = ScopePolicy.linear(limit_blocks=32 * 10)  # 10 sectors per key
    plan = plan_scopes(Geometry(512, 30), policy)
    grown = validate_resize(plan, Geometry(512, 30), Geometry(512, 52))
    assert grown.allowed and grown.keys_added == 3 and grown.keys_removed == 0
    shrunk = validate_resize(plan, Geometry(512, 30), Geometry(512, 20))
    assert shrunk.allowed and shrunk.keys_removed == 1 and shrunk.keys_added == 0


def test_validate_resize_single_warns_past_limit():
    policy = ScopePolicy.single(limit_blocks=64)
    plan = plan_scopes(Geometry(512, 1), policy)
    verdict = validate_resize(plan, Geometry(512, 1), Geometry(512, 1000))
    assert verdict.allowed
    assert "exceeds" in verdict.reason


def test_validate_resize_rejects_sector_size_change():
    plan = plan_scopes(Geometry(512, 4), ScopePolicy.single())
    with pytest.raises(PolicyError, match="sector-size"):
        validate_resize(plan, Geometry(512, 4), Geometry(4096, 4))


def test_keyring_json_schema_roundtrip():
    keyring = Keyring(
        ScopePolicy.rotating(2, 64, limit_blocks=1 << 40),
        (("aa" * 16, "bb" * 16), ("cc" * 16, "dd" * 16)),
    )
    obj = keyring_to_json(keyring)
    assert obj == {
        "policy": {"kind": "rotating", "limit_log2": 40, "key_count": 2, "max_sectors": 64},
        "keys": [
            {"k": "aa" * 16, "kt": "bb" * 16},
            {"k": "cc" * 16, "kt": "dd" * 16},
        ],
    }
    assert keyring_from_json(json.loads(json.dumps(obj))) == keyring


def test_keyring_file_roundtrip(tmp_path):
    path = tmp_path / "ring.json"
    keyring = generate_keyring(ScopePolicy.linear(), 3, "aes128")
    save_keyring(keyring, path)
    assert load_keyring(path) == keyring


def test_policy_json_defaults_and_errors():
    assert policy_from_json({"kind": "single"}).limit_blocks == 1 << 44
    with pytest.raises(PolicyError):
        policy_from_json({"limit_log2": 40})
    with pytest.raises(PolicyError):
        keyring_from_json({"keys": []})
    with pytest.raises(PolicyError):
        keyring_from_json({"policy": {"kind": "single"}, "keys": [{"k": "aa"}]})


def test_non_power_of_two_limit_cannot_serialize():
    keyring = Keyring(ScopePolicy.single(limit_blocks=1000), (("aa" * 16, "bb" * 16),))
    with pytest.raises(PolicyError, match="log2"):
        keyring_to_json(keyring)


def test_load_keyring_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(PolicyError, match="JSON"):
        load_keyring(path)


def test_bound_keyring_lookup_and_coverage():
    rng = random.Random(0xE1)
    pairs = tuple((rng.randbytes(16).hex(), rng.randbytes(16).hex()) for _ in range(2))
    keyring = Keyring(ScopePolicy.rotating(2, 8, limit_blocks=1 << 20), pairs)
    bound = keyring.bind("aes128")
    g = Geometry(512, 8)
    assert bound.key_for_sector(0, g).data_cipher.key_bytes.hex() == pairs[0][0]
    assert bound.key_for_sector(3, g).tweak_cipher.key_bytes.hex() == pairs[1][1]
    short = Keyring(ScopePolicy.rotating(3, 9, limit_blocks=1 << 20), pairs)
    with pytest.raises(PolicyError, match="cannot cover"):
        short.bind("aes128").key_for_sector(2, Geometry(512, 9))


def test_bound_keyring_rejects_empty_ring():
    with pytest.raises(PolicyError, match="no keys"):
        Keyring(ScopePolicy.single(), ()).bind("aes128")


def test_generate_keyring_shapes():
    ring = generate_keyring(ScopePolicy.single(), 4, "aes256")
    assert ring.key_count == 4
    assert all(len(k) == 64 and len(kt) == 64 for k, kt in ring.key_pairs)
    assert all(k != kt for k, kt in ring.key_pairs)
