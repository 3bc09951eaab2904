"""Sector-based XTS encryption toolkit.

Core pieces: binary-field tweak arithmetic (gf), block ciphers
(ciphers), the XTS sector transform and device processing (xts),
key-scope policies (keyscope), compliance auditing (audit), attack
demonstrations (attacklab), and the command-line interface (cli).
"""

from .attacklab import (
    AttackDevice,
    ForgeResult,
    Triple,
    count_colliding_pairs,
    find_collision,
    forge_via_collision,
    forge_via_recovered_tweak,
    recover_tweak_shared_key,
    run_collision_demo,
    run_tweak_recovery_demo,
)
from .audit import (
    AuditReport,
    Finding,
    RiskReport,
    audit_config,
    collision_probability_log2,
)
from .ciphers import AesCipher, BlockCipher, ToyCipher, make_cipher
from .gf import (
    GF16,
    GF24,
    GF32,
    GF128,
    FieldSpec,
    alpha_pow,
    mul,
    mul_alpha,
    verify_irreducible,
)
from .keyscope import (
    Keyring,
    PlanInfeasibleError,
    PolicyError,
    ResizeVerdict,
    ScopePlan,
    ScopePolicy,
    generate_keyring,
    key_index,
    load_keyring,
    plan_scopes,
    save_keyring,
    validate_resize,
)
from .xts import (
    Geometry,
    MAX_BLOCKS_PER_SECTOR,
    XtsKey,
    decode_sector_number,
    decrypt_sector,
    encode_sector_number,
    encrypt_sector,
    process_device,
    process_image,
    tweak_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "AesCipher",
    "AttackDevice",
    "AuditReport",
    "BlockCipher",
    "FieldSpec",
    "Finding",
    "ForgeResult",
    "GF128",
    "GF16",
    "GF24",
    "GF32",
    "Geometry",
    "Keyring",
    "MAX_BLOCKS_PER_SECTOR",
    "PlanInfeasibleError",
    "PolicyError",
    "ResizeVerdict",
    "RiskReport",
    "ScopePlan",
    "ScopePolicy",
    "ToyCipher",
    "Triple",
    "XtsKey",
    "alpha_pow",
    "audit_config",
    "collision_probability_log2",
    "count_colliding_pairs",
    "decode_sector_number",
    "decrypt_sector",
    "encode_sector_number",
    "encrypt_sector",
    "find_collision",
    "forge_via_collision",
    "forge_via_recovered_tweak",
    "generate_keyring",
    "key_index",
    "load_keyring",
    "make_cipher",
    "mul",
    "mul_alpha",
    "plan_scopes",
    "process_device",
    "process_image",
    "recover_tweak_shared_key",
    "run_collision_demo",
    "run_tweak_recovery_demo",
    "save_keyring",
    "tweak_schedule",
    "validate_resize",
    "verify_irreducible",
]
