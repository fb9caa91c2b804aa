"""Command line surface: classify descriptors, measure invariants, run the
verification suite, sweep parameter grids, and compare reports.

Exit codes: 0 success, 2 input or validation error, 3 verification
mismatch.  All machine output is JSON (CSV available for sweep); the
default working precision can be overridden with --precision or the
ZPG_PRECISION environment variable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import identities
from .classifier import (
    DescriptorError,
    ExtensionDescriptor,
    case7_concrete,
    classify,
    concrete_invariants,
    descriptor_grid,
    validate_descriptor,
)
from .invariants import InvariantReport, StabilizationError, full_report
from .presentation import Presentation, default_precision
from .spaces import CaseId, torsion_generator_xi

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MISMATCH = 3

GRID_LIMITS = {"p": 5, "n": 3, "a_plus_m": 5}


def _emit(obj, out_path: str | None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path_or_inline: str):
    if path_or_inline.strip().startswith("{"):
        return json.loads(path_or_inline)
    with open(path_or_inline) as fh:
        return json.load(fh)


def _precision_override(args) -> int | None:
    if getattr(args, "precision", None):
        return args.precision
    env = os.environ.get("ZPG_PRECISION")
    return int(env) if env else None


def _measure(pres: Presentation, K1: int | None, torsion_gen=None) -> InvariantReport:
    if K1 is None:
        K1 = default_precision(pres)
    return full_report(pres, K1, K1 + 2, torsion_gen=torsion_gen)


# -- classify ------------------------------------------------------------


def cmd_classify(args) -> int:
    try:
        desc = ExtensionDescriptor.from_json(_load_json(args.desc))
        case, pres, meta = classify(desc)
    except (DescriptorError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    params = meta["params"]
    K1 = _precision_override(args) or params.default_precision()
    xi = None
    if case in (CaseId.Case1, CaseId.Case2, CaseId.Case3_2, CaseId.Case4, CaseId.Case5):
        from .group_ring import zero as gr_zero

        xi_base = torsion_generator_xi(params)
        xi = tuple(xi_base) + tuple(gr_zero(pres.ctx) for _ in range(pres.g - len(xi_base)))
    try:
        measured = _measure(pres, K1, torsion_gen=xi)
    except StabilizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    expected = meta["expected"]
    record = {
        "case": case.value,
        "descriptor": desc.to_json(),
        "presentation": pres.to_json(),
        "splitting": meta["splitting"],
        "expected": expected.to_json(),
        "measured": measured.to_json(),
        "match": expected.core() == measured.core(),
    }
    if not desc.residual_char_is_p:
        model = case7_concrete(desc)
        conc = concrete_invariants(model)
        record["concrete"] = {
            "delta": model.delta,
            "k_sigma": model.k_sigma,
            "torsion_exp": model.torsion_exp,
            "iterate_is_identity": model.iterate_is_identity(),
            "report": conc.to_json(),
            "matches_presentation": conc.core() == measured.core(),
        }
        record["match"] = record["match"] and record["concrete"]["matches_presentation"]
        record["match"] = record["match"] and record["concrete"]["iterate_is_identity"]
    _emit(record, args.out)
    return EXIT_OK if record["match"] else EXIT_MISMATCH


# -- invariants ------------------------------------------------------------


def cmd_invariants(args) -> int:
    try:
        pres = Presentation.from_json(_load_json(args.pres))
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        report = _measure(pres, _precision_override(args))
    except StabilizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    _emit(report.to_json(), args.out)
    return EXIT_OK


# -- verify ------------------------------------------------------------


def run_verify(only: str | None = None, suite=None) -> tuple[list[dict], bool]:
    checks = suite() if suite is not None else identities.default_suite()
    records = []
    ok = True
    for chk in checks:
        if only and chk.name != only:
            continue
        records.append(chk.to_json())
        ok = ok and chk.passed
    return records, ok


def cmd_verify(args) -> int:
    records, ok = run_verify(only=args.only)
    if not records:
        print(f"error: no checks named {args.only!r}", file=sys.stderr)
        return EXIT_INPUT
    failures = [r["name"] for r in records if not r["passed"]]
    summary = {
        "checks": records,
        "total": len(records),
        "passed": sum(1 for r in records if r["passed"]),
        "first_failure": failures[0] if failures else None,
    }
    _emit(summary, args.out)
    return EXIT_OK if ok else EXIT_MISMATCH


# -- sweep ------------------------------------------------------------


def _grid_bounds(args) -> dict:
    bounds = {"ps": (2, 3), "n_max": 2, "a_max": 3, "kappas": None, "d_values": (1,)}
    if args.grid:
        spec = _load_json(args.grid)
        if "p" in spec:
            bounds["ps"] = tuple(int(x) for x in spec["p"])
        if "n_max" in spec:
            bounds["n_max"] = int(spec["n_max"])
        if "a_max" in spec:
            bounds["a_max"] = int(spec["a_max"])
        if "kappa" in spec:
            bounds["kappas"] = tuple(int(x) for x in spec["kappa"])
        if "d" in spec:
            bounds["d_values"] = tuple(int(x) for x in spec["d"])
    if max(bounds["ps"]) > GRID_LIMITS["p"] or bounds["n_max"] > GRID_LIMITS["n"]:
        raise DescriptorError("grid outside desk-scale limits (p <= 5, n <= 3)")
    return bounds


def sweep_rows(bounds) -> list[dict]:
    rows = []
    for desc in descriptor_grid(**bounds):
        case, pres, meta = classify(desc)
        params = meta["params"]
        measured = _measure(pres, params.default_precision())
        expected = meta["expected"]
        rows.append(
            {
                "p": desc.p,
                "n": desc.n,
                "d": desc.d,
                "residual_char_is_p": desc.residual_char_is_p,
                "a": desc.a,
                "b": desc.b,
                "m": desc.m,
                "kappa": desc.kappa,
                "case": case.value,
                "torsion": f"{desc.p}^{measured.torsion_order_exp()}",
                "h0": f"{desc.p}^{measured.h0_exp}",
                "h1": f"{desc.p}^{measured.h1_exp}",
                "character": ",".join(str(m) for m in measured.character),
                "splitting": meta["splitting"],
                "match": expected.core() == measured.core(),
            }
        )
    return rows


def cmd_sweep(args) -> int:
    try:
        bounds = _grid_bounds(args)
    except (DescriptorError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rows = sweep_rows(bounds)
    mismatches = [r for r in rows if not r["match"]]
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()) if rows else [])
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        _emit({"rows": rows, "total": len(rows), "mismatches": len(mismatches)}, args.out)
    return EXIT_MISMATCH if mismatches else EXIT_OK


# -- compare ------------------------------------------------------------


def cmd_compare(args) -> int:
    try:
        r1 = InvariantReport.from_json(_load_json(args.report_a))
        r2 = InvariantReport.from_json(_load_json(args.report_b))
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    diff = {}
    for name, x, y in [
        ("zp_rank", r1.zp_rank, r2.zp_rank),
        ("torsion_divisors", list(r1.torsion_divisors), list(r2.torsion_divisors)),
        ("h0", r1.h0_exp, r2.h0_exp),
        ("h1", r1.h1_exp, r2.h1_exp),
        ("character", list(r1.character), list(r2.character)),
    ]:
        if x != y:
            diff[name] = {"a": x, "b": y}
    print(
        "note: invariant reports are a fingerprint, not a complete isomorphism test;"
        " an empty diff does not certify isomorphism",
        file=sys.stderr,
    )
    _emit({"identical": not diff, "diff": diff}, args.out)
    return EXIT_OK if not diff else EXIT_MISMATCH


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zpg",
        description="exact invariants and case classification for cyclic p-group modules",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="classify a descriptor and cross-check invariants")
    c.add_argument("--desc", required=True, help="descriptor JSON (path or inline)")
    c.add_argument("--precision", type=int, help="override the default working precision K1")
    c.add_argument("--out", help="write the record to a file")
    c.set_defaults(func=cmd_classify)

    i = sub.add_parser("invariants", help="measure a presentation")
    i.add_argument("--pres", required=True, help="presentation JSON (path or inline)")
    i.add_argument("--precision", type=int)
    i.add_argument("--out")
    i.set_defaults(func=cmd_invariants)

    v = sub.add_parser("verify", help="run the identity and invariant verification suite")
    v.add_argument("--only", help="run only checks with this name")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="classify a whole descriptor grid")
    s.add_argument("--grid", help="grid bounds JSON (path or inline)")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("compare", help="diff two invariant reports")
    m.add_argument("report_a")
    m.add_argument("report_b")
    m.add_argument("--out")
    m.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
