"""Command line interface: ``cocycle-lab {validate,solve,probe,verify,gen}``.

Exit codes: 0 valid/consistent, 1 validation failure or inconsistency,
2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .bundle import validate_action
from .groupoid import validate_groupoid
from .scenario import (ParamError, ParseError, ValidationError, dump_scenario, gen_scenario_doc,
                       load_scenario)
from .solvers import (NotACoboundary, boundedness_probe, solve_by_center, solve_least_squares,
                      solve_transfer_function)
from .verify import emit_csv, emit_report, run_verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _windows(args):
    if getattr(args, "windows", None):
        try:
            return [int(k) for k in args.windows.split(",") if k.strip()]
        except ValueError:
            raise SystemExit(f"error: bad --windows {args.windows!r}") from None
    if getattr(args, "window", None) is not None:
        return [args.window]
    return None


def _load(path, tol=None):
    sc = load_scenario(path)
    if tol is not None:
        sc.tol = tol
    return sc


def _vec_json(v):
    if v.dtype.kind == "c":
        return [[z.real, z.imag] for z in v.tolist()]
    return [float(z) for z in v]


def _write(data: bytes, out: str | None):
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())


def cmd_validate(args) -> int:
    sc = _load(args.scenario, args.tol)
    rep = validate_groupoid(sc.groupoid)
    rep.extend(validate_action(sc.groupoid, sc.bundle, sc.action, sc.tol))
    print(f"{sc.id}: {sc.groupoid.n_units} units, {sc.groupoid.n_arrows} arrows: {rep}")
    for k, v in sorted(rep.flags.items()):
        print(f"  flag {k} = {v}")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_solve(args) -> int:
    sc = _load(args.scenario, args.tol)
    methods = ["center", "lsq", "transfer"] if args.method == "all" else [args.method]
    results = {}
    ok = True
    for m in methods:
        if m == "transfer":
            if sc.system is None or not sc.system.is_single_cycle():
                results[m] = {"status": "not_applicable"}
                ok = ok and args.method == "all"
                continue
            try:
                gsec = solve_transfer_function(sc.system, sc.potential, sc.tol)
                results[m] = {"status": "solved", "section": [str(v) for v in gsec]}
            except NotACoboundary as exc:
                results[m] = {"status": "not_a_coboundary", "cycle_sum": str(exc.cycle_sum)}
                ok = False
            continue
        solver = solve_by_center if m == "center" else solve_least_squares
        kw = {"strict": False} if m == "center" else {}
        rep = solver(sc.groupoid, sc.action, sc.cocycle, sc.tol, **kw)
        results[m] = {"max_residual": rep.max_residual,
                      "section": [_vec_json(v) for v in rep.section.values],
                      "per_fiber_radii": {str(k): v for k, v in rep.per_fiber_radii.items()}}
        if rep.gauge_dim is not None:
            results[m]["gauge_dim"] = rep.gauge_dim
        ok = ok and rep.max_residual <= sc.solve_tol
    if args.format == "machine":
        data = json.dumps({"format_version": 1, "scenario": sc.id, "methods": results},
                          sort_keys=True, indent=2) + "\n"
    else:
        lines = [f"scenario {sc.id}"]
        for m, r in results.items():
            if "max_residual" in r:
                lines.append(f"  {m}: max residual {r['max_residual']:.3e}")
            else:
                lines.append(f"  {m}: {r['status']}" +
                             (f" (cycle sum {r['cycle_sum']})" if "cycle_sum" in r else ""))
        data = "\n".join(lines) + "\n"
    _write(data.encode(), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_probe(args) -> int:
    sc = _load(args.scenario, args.tol)
    if sc.system is None:
        print("probe needs a [transformation] scenario", file=sys.stderr)
        return EXIT_USAGE
    K_list = _windows(args) or list(sc.K_list)
    gc = boundedness_probe(sc.system, sc.potential, args.unit, K_list)
    if args.out:
        Path(args.out).write_bytes(emit_csv(gc))
    if args.format == "machine":
        print(json.dumps({"format_version": 1, "scenario": sc.id, "unit": args.unit,
                          "verdict": gc.verdict, "slope_estimate": gc.slope_estimate,
                          "sup_norm_by_window": gc.sup_norm_by_window}, sort_keys=True, indent=2))
    else:
        print(f"{sc.id} unit {args.unit}: {gc.verdict}, slope {gc.slope_estimate:.6g}")
        for k, s in gc.sup_norm_by_window:
            print(f"  K={k:>5}  sup={s:.10g}")
    return EXIT_OK


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("COCYCLE_LAB_THREADS", "")))
    except ValueError:
        return max(1, min(8, os.cpu_count() or 1))


def cmd_verify(args) -> int:
    K_list = _windows(args)

    def one(path):
        return run_verify(_load(path, args.tol), K_list)

    paths = args.scenario
    with ThreadPoolExecutor(max_workers=min(_threads(), len(paths))) as pool:
        reports = list(pool.map(one, paths))
    suffix = ".json" if args.format == "machine" else ".txt"
    for path, rep in zip(paths, reports):
        data = emit_report(rep, args.format)
        if args.out and len(paths) > 1:
            outdir = Path(args.out)
            outdir.mkdir(parents=True, exist_ok=True)
            (outdir / f"{rep.scenario}{suffix}").write_bytes(data)
            (outdir / f"{rep.scenario}.csv").write_bytes(emit_csv(rep.growth))
        elif args.out:
            Path(args.out).write_bytes(data)
            Path(args.out).with_suffix(".csv").write_bytes(emit_csv(rep.growth))
        else:
            sys.stdout.write(data.decode())
    return EXIT_OK if all(r.consistent for r in reports) else EXIT_FAIL


def cmd_gen(args) -> int:
    params = {k: v for k, v in {"units": args.units, "dim": args.dim, "isotropy": args.isotropy,
                                "field": args.field, "delta": args.delta,
                                "n_points": args.n_points, "mean": args.mean}.items()
              if v is not None}
    K_list = _windows(args)
    if K_list:
        params["K_list"] = K_list
    doc = gen_scenario_doc(args.seed, args.kind, params)
    _write(dump_scenario(doc).encode(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cocycle-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, multi=False):
        sp.add_argument("scenario", nargs="+" if multi else None)
        sp.add_argument("--tol", type=float, default=None, help="override the scenario tolerance")
        sp.add_argument("--format", choices=["text", "machine"], default="text")
        sp.add_argument("--out", default=None)

    sp = sub.add_parser("validate", help="check groupoid and action axioms")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("solve", help="solve the coboundary equation")
    common(sp)
    sp.add_argument("--method", choices=["center", "lsq", "transfer", "all"], default="all")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("probe", help="growth of sup |c_f| over windows (writes CSV to --out)")
    common(sp)
    sp.add_argument("--unit", type=int, default=0)
    sp.add_argument("--window", type=int, default=None)
    sp.add_argument("--windows", default=None, help="comma-separated K values")
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("verify", help="check the equivalences and emit a report")
    common(sp, multi=True)
    sp.add_argument("--window", type=int, default=None)
    sp.add_argument("--windows", default=None)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("gen", help="write a seeded scenario")
    sp.add_argument("--kind", choices=["minimal_groupoid", "transformation", "perturbed"],
                    default="minimal_groupoid")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--units", type=int)
    sp.add_argument("--dim", type=int)
    sp.add_argument("--isotropy", choices=["trivial", "Z/2", "Z/3", "Z/4"])
    sp.add_argument("--field", choices=["real", "complex"])
    sp.add_argument("--delta", type=float)
    sp.add_argument("--n-points", dest="n_points", type=int)
    sp.add_argument("--mean", default=None, help="cycle mean of the potential (e.g. 0, 1/3)")
    sp.add_argument("--window", type=int, default=None)
    sp.add_argument("--windows", default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
