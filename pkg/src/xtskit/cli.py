"""Command-line front end: encrypt/decrypt raw images, audit, plan, demo.

Exit codes: 0 success or clean audit; 1 audit errors or a demo whose
verdict is not success; 2 usage or I/O errors; 3 internal contract
violations (the tool caught itself producing wrong values).

Sizes are given in bytes or with IEC suffixes (KiB, MiB, GiB, TiB).
SI suffixes are rejected: a "4 KB" sector is ambiguous and disk
geometry is strictly power-of-two.  Counts may be written as plain
integers or as powers of two like 2^28.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from typing import Any

from .attacklab import run_collision_demo, run_tweak_recovery_demo
from .audit import PROFILES, AuditReport, audit_config, format_log2
from .gf import GF128, mul_alpha
from .keyscope import (
    PolicyError,
    ScopePolicy,
    load_keyring,
    plan_scopes,
)
from .xts import (
    Geometry,
    XtsKey,
    derive_geometry,
    encode_sector_number,
    encrypt_sector,
    process_image,
)

_IEC_SHIFTS = {"b": 0, "kib": 10, "mib": 20, "gib": 30, "tib": 40}
_SI_SUFFIXES = {"kb", "mb", "gb", "tb", "pb", "k", "m", "g", "t"}


def parse_size(text: str) -> int:
    """Byte count: plain integer or IEC-suffixed (KiB/MiB/GiB/TiB)."""
    m = re.fullmatch(r"\s*(\d+)\s*([A-Za-z]*)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"unreadable size {text!r}")
    value, suffix = int(m.group(1)), m.group(2)
    if not suffix:
        return value
    if suffix.lower() in _SI_SUFFIXES:
        raise argparse.ArgumentTypeError(
            f"SI suffix {suffix!r} rejected: sizes here are strictly powers of two; "
            f"write IEC units instead (KiB = 2^10, MiB, GiB, TiB)"
        )
    shift = _IEC_SHIFTS.get(suffix.lower())
    if shift is None:
        raise argparse.ArgumentTypeError(
            f"unknown size suffix {suffix!r}; use bytes or KiB/MiB/GiB/TiB"
        )
    return value << shift


def parse_count(text: str) -> int:
    """Plain integer or a power of two written as 2^k."""
    m = re.fullmatch(r"\s*2\^(\d+)\s*", text)
    if m:
        return 1 << int(m.group(1))
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unreadable count {text!r}; use an integer or 2^k") from None


def _print_findings(report: AuditReport) -> None:
    for f in report.findings:
        print(f"{f.severity:<8} {f.rule:<16} {f.message}  [{f.citation}]")
    risk = report.risk
    print(
        f"risk     device {risk.total_blocks} blocks -> collision estimate "
        f"{format_log2(risk.device_collision_log2)}; worst key scope "
        f"{risk.blocks_per_key_worst} blocks -> {format_log2(risk.per_key_collision_log2)}"
    )


# ---------------------------------------------------------------------------
# encrypt / decrypt

def _cmd_process(args: argparse.Namespace, direction: str) -> int:
    keyring = load_keyring(args.keyring)
    if not keyring.key_pairs:
        print("error: keyring holds no keys", file=sys.stderr)
        return 2
    geometry = derive_geometry_for(args.image, args.sector_size)
    bound = keyring.bind(args.cipher)
    block_bytes = bound.block_bytes
    geometry.blocks_per_sector(block_bytes)

    report = audit_config(geometry, keyring, args.profile, block_bytes)
    _print_findings(report)
    if report.has_errors:
        if not args.force:
            print(
                f"{direction} aborted: the pre-flight audit found errors "
                f"(rerun with --force to proceed anyway)",
                file=sys.stderr,
            )
            return 1
        print("continuing despite audit errors (--force)")

    plan = plan_scopes(geometry, keyring.policy, block_bytes)
    if plan.keys_needed > keyring.key_count:
        print(
            f"error: policy needs {plan.keys_needed} keys for this geometry but the "
            f"keyring holds {keyring.key_count}",
            file=sys.stderr,
        )
        return 2

    process_image(args.image, args.out, args.sector_size, bound, direction, jobs=args.jobs)

    print(
        f"{direction}ed {geometry.sector_count} sectors of {geometry.sector_size_bytes} bytes "
        f"({geometry.total_bytes} bytes) with {args.cipher}"
    )
    print(
        f"policy {keyring.policy.kind}: {plan.keys_needed} of {keyring.key_count} keys used, "
        f"worst-case scope {plan.max_blocks_per_key} blocks "
        f"(limit {keyring.policy.limit_blocks})"
    )
    if args.show_keys:
        for i, (k, kt) in enumerate(keyring.key_pairs):
            print(f"key[{i}]: k={k} kt={kt}")
    return 0


def derive_geometry_for(image_path: str, sector_size: int) -> Geometry:
    return derive_geometry(os.path.getsize(image_path), sector_size)


def cmd_encrypt(args: argparse.Namespace) -> int:
    return _cmd_process(args, "encrypt")


def cmd_decrypt(args: argparse.Namespace) -> int:
    return _cmd_process(args, "decrypt")


# ---------------------------------------------------------------------------
# audit

def cmd_audit(args: argparse.Namespace) -> int:
    keyring = load_keyring(args.keyring)
    if not keyring.key_pairs:
        print("error: keyring holds no keys", file=sys.stderr)
        return 2
    geometry = Geometry(args.sector_size, args.sectors)
    report = audit_config(geometry, keyring, args.profile, scope_warn_log2=args.warn_log2)
    if args.json:
        print(json.dumps(report.as_dict(), indent=2))
    else:
        _print_findings(report)
    return 1 if report.has_errors else 0


# ---------------------------------------------------------------------------
# plan

def cmd_plan(args: argparse.Namespace) -> int:
    limit = 1 << args.limit_log2
    if args.policy == "rotating":
        if args.key_count is None:
            print("error: --key-count is required for the rotating policy", file=sys.stderr)
            return 2
        max_sectors = args.max_sectors if args.max_sectors is not None else args.sectors
        policy = ScopePolicy.rotating(args.key_count, max_sectors, limit)
    else:
        if args.key_count is not None or args.max_sectors is not None:
            print(
                "error: --key-count/--max-sectors only apply to the rotating policy",
                file=sys.stderr,
            )
            return 2
        policy = ScopePolicy(args.policy, limit)
    geometry = Geometry(args.sector_size, args.sectors)
    plan = plan_scopes(geometry, policy)
    if args.json:
        print(json.dumps(plan.as_dict(), indent=2))
    else:
        print(f"policy: {policy.kind}, limit 2^{args.limit_log2} blocks per key")
        print(
            f"geometry: {geometry.sector_count} sectors x {geometry.sector_size_bytes} bytes "
            f"({geometry.blocks_per_sector(16)} blocks per sector)"
        )
        print(f"keys needed: {plan.keys_needed}")
        print(
            f"worst-case scope: {plan.max_blocks_per_key} blocks "
            f"({plan.max_sectors_per_key} sectors)"
        )
        print(f"resize: {plan.resize_note}")
    return 0


# ---------------------------------------------------------------------------
# demo

def _print_transcript(result: dict[str, Any]) -> None:
    for entry in result.get("transcript", []):
        print(
            f"  {entry['op']:<7} (N={entry['sector']}, j={entry['block']}) "
            f"{entry['input']} -> {entry['output']}"
        )


def cmd_demo_collision(args: argparse.Namespace) -> int:
    result = run_collision_demo(
        width_bits=args.width,
        sectors=args.sectors,
        blocks_per_sector=args.blocks_per_sector,
        seed=args.seed,
        target_hex=args.target,
    )
    if args.json:
        print(json.dumps(result, indent=2))
    else:
        print(
            f"collision demo: toy-{result['width_bits']} cipher, "
            f"{result['positions']} positions "
            f"(S={result['sectors']}, J={result['blocks_per_sector']}), seed {result['seed']}"
        )
        print(
            f"colliding pairs: observed {result['observed_colliding_pairs']}, "
            f"birthday estimate {result['expected_colliding_pairs']:.1f}"
        )
        if result["collision"] is None:
            print("no collision found in this sample")
        else:
            first, second = result["collision"]["first"], result["collision"]["second"]
            print(
                f"collision: (N={first[0]}, j={first[1]}) and (N={second[0]}, j={second[1]}) "
                f"share P XOR T"
            )
            print(f"forgery target {result['target']} -> decrypted {result['decrypted']}")
            print(
                f"oracle queries: {result['encrypt_queries']} encrypt, "
                f"{result['decrypt_queries']} decrypt"
            )
            _print_transcript(result)
        print(f"verdict: {result['verdict']}")
    return 0 if result["verdict"] == "success" else 1


def cmd_demo_tweak_recovery(args: argparse.Namespace) -> int:
    if args.target is not None and len(args.target) != 32:
        print("error: --target must be 32 hex chars (one 16-byte block)", file=sys.stderr)
        return 2
    result = run_tweak_recovery_demo(
        sector=args.sector,
        block=args.block,
        seed=args.seed,
        target_hex=args.target,
        distinct_keys=args.distinct_keys,
    )
    if args.json:
        print(json.dumps(result, indent=2))
    else:
        kind = "K != K_T (negative control)" if result["distinct_keys"] else "K = K_T"
        print(f"tweak-recovery demo on a {kind} device, seed {result['seed']}")
        print(f"recovered tweak {result['recovered_tweak']}")
        print(f"true tweak      {result['true_tweak']}")
        print(f"tweak recovered: {result['tweak_recovered']}")
        print(f"forgery target {result['target']} at (N={result['sector']}, j={result['block']})")
        if result["decrypted"] is not None:
            print(f"forged block decrypts to {result['decrypted']}")
        print(
            f"oracle queries: {result['encrypt_queries']} encrypt, "
            f"{result['decrypt_queries']} decrypt"
        )
        _print_transcript(result)
        print(f"verdict: {result['verdict']}")
    return 0 if result["verdict"] == "success" else 1


# ---------------------------------------------------------------------------
# vector

# Known-answer values for the two-block worked example: data key 0x11*16,
# tweak key 0x22*16, sector N=1, plaintext 0x44*16 then 0x88*16.
VECTOR_EXPECTED = {
    "tweak0": "6752ca5febca0f3fc8dc9dfc2a916295",
    "tweak1": "49a494bfd6951f7e90b93bf95522c52a",
    "mid0": "13f084e65a7ca361f74957c9b11c7710",
    "mid1": "2cada9d22ad34bf19a226c2c824f0364",
    "cipher0": "74a24eb9b1b6ac5e3f95ca359b8d1585",
    "cipher1": "65093d6dfc46548f0a9b57d5d76dc64e",
}


def cmd_vector(args: argparse.Namespace) -> int:
    if args.cipher != "aes128":
        print("error: the worked example is defined for aes128 only", file=sys.stderr)
        return 2
    data_hex, tweak_hex = "11" * 16, "22" * 16
    n = 1
    p0, p1 = bytes([0x44] * 16), bytes([0x88] * 16)
    key = XtsKey.from_hex("aes128", data_hex, tweak_hex)

    def xor(a: bytes, b: bytes) -> bytes:
        return bytes(x ^ y for x, y in zip(a, b))

    t0 = key.tweak_cipher.encrypt_block(encode_sector_number(n, 16))
    t1 = mul_alpha(t0, GF128)
    mid0 = key.data_cipher.encrypt_block(xor(p0, t0))
    mid1 = key.data_cipher.encrypt_block(xor(p1, t1))
    c0, c1 = xor(mid0, t0), xor(mid1, t1)
    if c0 + c1 != encrypt_sector(key, n, p0 + p1):
        print("internal error: block-by-block formula disagrees with encrypt_sector", file=sys.stderr)
        return 3

    computed = {
        "tweak0": t0.hex(),
        "tweak1": t1.hex(),
        "mid0": mid0.hex(),
        "mid1": mid1.hex(),
        "cipher0": c0.hex(),
        "cipher1": c1.hex(),
    }
    labels = {
        "tweak0": "T_{N,0} = E_KT(N)      ",
        "tweak1": "T_{N,1} = T_{N,0}*alpha",
        "mid0": "E_K(P_0 XOR T_{N,0})   ",
        "mid1": "E_K(P_1 XOR T_{N,1})   ",
        "cipher0": "C_0                    ",
        "cipher1": "C_1                    ",
    }
    print(f"data key  {data_hex}")
    print(f"tweak key {tweak_hex}")
    print(f"sector    N = {n}")
    print(f"P_0       {p0.hex()}")
    print(f"P_1       {p1.hex()}")
    status = 0
    for name, value in computed.items():
        expected = VECTOR_EXPECTED[name]
        ok = value == expected
        print(f"{labels[name]} {value}  {'ok' if ok else 'MISMATCH (expected ' + expected + ')'}")
        if not ok:
            status = 3
    if status:
        print("internal error: computed values diverge from the known answers", file=sys.stderr)
    return status


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xtskit",
        description="Sector-level XTS toolkit: encrypt raw images, audit key scopes, "
        "plan key policies, and run desk-scale attack demos.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (("encrypt", cmd_encrypt), ("decrypt", cmd_decrypt)):
        p = sub.add_parser(name, help=f"{name} a raw image sector by sector")
        p.add_argument("--image", required=True, help="input raw image path")
        p.add_argument("--out", required=True, help="output image path")
        p.add_argument("--keyring", required=True, help="keyring JSON path")
        p.add_argument(
            "--sector-size", required=True, type=parse_size, help="sector size (e.g. 512 or 4KiB)"
        )
        p.add_argument(
            "--cipher", default="aes128", choices=["aes128", "aes256", "toy16"],
            help="block cipher family (default aes128)",
        )
        p.add_argument("--jobs", type=int, default=1, help="parallel sector workers (default 1)")
        p.add_argument(
            "--profile", default="ieee-2025", choices=list(PROFILES),
            help="compliance profile for the pre-flight audit (default ieee-2025)",
        )
        p.add_argument(
            "--force", action="store_true",
            help="proceed even if the pre-flight audit reports errors",
        )
        p.add_argument("--show-keys", action="store_true", help="print key material in the summary")
        p.set_defaults(func=fn)

    p = sub.add_parser("audit", help="check a device layout and keyring against a profile")
    p.add_argument("--sectors", required=True, type=parse_count, help="sector count (int or 2^k)")
    p.add_argument("--sector-size", required=True, type=parse_size)
    p.add_argument("--keyring", required=True)
    p.add_argument("--profile", default="ieee-2025", choices=list(PROFILES))
    p.add_argument(
        "--warn-log2", type=int, default=44,
        help="warn when a key scope exceeds 2^THIS blocks (default 44)",
    )
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("plan", help="size a key-scope policy for a geometry")
    p.add_argument("--sectors", required=True, type=parse_count)
    p.add_argument("--sector-size", required=True, type=parse_size)
    p.add_argument("--policy", required=True, choices=["single", "linear", "rotating"])
    p.add_argument("--limit-log2", type=int, default=44, help="blocks-per-key limit as log2")
    p.add_argument("--key-count", type=int, help="rotating: number of keys in the cycle")
    p.add_argument(
        "--max-sectors", type=parse_count,
        help="rotating: declared maximum device size (default: --sectors)",
    )
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_plan)

    demo = sub.add_parser("demo", help="run an attack demonstration")
    demo_sub = demo.add_subparsers(dest="demo_kind", required=True)

    p = demo_sub.add_parser("collision", help="birthday-collision forgery on a toy-width device")
    p.add_argument("--width", type=int, default=16, choices=[16, 24, 32], help="toy block width")
    p.add_argument("--sectors", type=parse_count, default=256)
    p.add_argument("--blocks-per-sector", type=parse_count, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", help="target plaintext block in hex (default: random)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_demo_collision)

    p = demo_sub.add_parser(
        "tweak-recovery", help="single-query tweak recovery and forgery when K = K_T"
    )
    p.add_argument("--sector", type=parse_count, default=3)
    p.add_argument("--block", type=int, default=2)
    p.add_argument("--target", help="target plaintext block in hex (default: random)")
    p.add_argument(
        "--distinct-keys", action="store_true",
        help="negative control: run against a K != K_T device (the attack must fail)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_demo_tweak_recovery)

    p = sub.add_parser("vector", help="recompute the two-block worked example and self-check")
    p.add_argument(
        "--cipher", default="aes128",
        help="cipher family; the worked example exists for aes128 only",
    )
    p.set_defaults(func=cmd_vector)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (OSError, PolicyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
