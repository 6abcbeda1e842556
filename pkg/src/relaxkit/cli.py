"""Command line entry point: run, run-all, compare, predict, enumerate."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import automaton as ca
from . import continuum as co
from . import experiment as ex
from .errors import RelaxkitError


def _descriptor(ref):
    path = Path(ref)
    if path.exists():
        return ex.load_descriptor(path)
    for d in ex.shipped_descriptors():
        if d.experiment_id == ref:
            return d
    raise SystemExit(f"no descriptor file or shipped experiment named {ref!r}")


def _override(desc, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "samples", None) is not None:
        changes["samples"] = args.samples
    if not changes:
        return desc
    return ex.validate({**desc.as_dict(), **changes})


def cmd_run(args):
    desc = _override(_descriptor(args.descriptor), args)
    bundle = ex.run(desc, output=args.output, workers=args.workers, budget=args.budget)
    print(json.dumps({"experiment_id": desc.experiment_id, "provenance_hash": bundle.provenance_hash,
                      "files": [str(p) for p in bundle.paths], "summary": bundle.summary},
                     indent=2, default=str))
    if desc.task == "acceptance" and not bundle.summary.get("passed", False):
        return 1
    return 0


def cmd_run_all(args):
    descs = [d for d in ex.shipped_descriptors() if args.all or d.task == "acceptance"]
    if args.only:
        keep = set(args.only)
        descs = [d for d in descs if d.experiment_id in keep or str(d.criterion) in keep]
    failed = 0
    for d in descs:
        d = _override(d, args)
        bundle = ex.run(d, output=args.output, workers=args.workers, budget=args.budget)
        if d.task == "acceptance":
            ok = bundle.summary["passed"]
            failed += not ok
            print(f"[{'PASS' if ok else 'FAIL'}] {d.experiment_id}: {bundle.summary['summary']}", flush=True)
        else:
            print(f"[DONE] {d.experiment_id} ({bundle.wall_clock:.1f}s)", flush=True)
    return 1 if failed else 0


def cmd_compare(args):
    res = ex.load_series_dir(args.result)
    orc = ex.load_series_dir(args.oracle)
    tol = {"n_sigma": args.n_sigma, "min_pass_fraction": args.min_fraction,
           "interpolate": args.interpolate, "windows": [tuple(w) for w in args.window or []]}
    report = ex.compare(res, orc, tol)
    print(json.dumps(report.as_dict(), indent=2))
    return 0 if report.passed else 1


def cmd_predict(args):
    law = co.asymptotic_law(args.symmetry, args.impurity, args.regime)
    p = co.ContinuumParams(args.D, args.g, args.x, args.x0, args.xs, args.t)
    out = {"key": list(law.key), "observable": law.observable, "exponent": law.exponent,
           "formula": law.formula, "predicted": law.predict(p),
           "regime_variable": law.regime_name, "regime_value": law.regime(p)}
    if args.exact:
        out["kernel"] = law.exact(p)
    print(json.dumps(out, indent=2))
    return 0


def cmd_enumerate(args):
    spec = None
    if args.impurity:
        kind, _, sites = args.impurity.partition(":")
        spec = ca.ImpuritySpec(kind, tuple(int(s) for s in sites.split(",") if s))
    rep = ca.enumerate_krylov(ca.build_gate_set(args.model, args.L, spec), args.cap)
    print(json.dumps(dataclasses.asdict(rep), indent=2))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="relaxkit", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output", default=None, help="result root directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--budget", type=float, default=None, help="cap on t_max * L * samples")
        p.add_argument("--samples", type=int, default=None)

    p = sub.add_parser("run", help="run one descriptor (file path or shipped id)")
    p.add_argument("descriptor")
    common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("run-all", help="run every shipped acceptance descriptor")
    p.add_argument("--all", action="store_true", help="include the non-acceptance descriptors too")
    p.add_argument("--only", nargs="*", help="experiment ids or criterion numbers")
    common(p)
    p.set_defaults(fn=cmd_run_all)

    p = sub.add_parser("compare", help="z-score a result directory against an oracle directory")
    p.add_argument("result")
    p.add_argument("oracle")
    p.add_argument("--n-sigma", type=float, default=4.0)
    p.add_argument("--min-fraction", type=float, default=0.99)
    p.add_argument("--interpolate", action="store_true")
    p.add_argument("--window", type=float, nargs=2, action="append", metavar=("T_LO", "T_HI"))
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("predict", help="evaluate a catalogued asymptotic law")
    p.add_argument("symmetry", choices=["U1", "dipole"])
    p.add_argument("impurity")
    p.add_argument("regime")
    for name, default in (("--D", 1.0), ("--g", 0.0), ("--x", 0.0), ("--x0", 0.0), ("--xs", 0.0), ("--t", 1.0)):
        p.add_argument(name, type=float, default=default)
    p.add_argument("--exact", action="store_true", help="also evaluate the kernel")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("enumerate", help="count Krylov subspaces")
    p.add_argument("model", choices=list(ca.MODELS))
    p.add_argument("L", type=int)
    p.add_argument("--impurity", help="kind:site,site e.g. state_flip:6")
    p.add_argument("--cap", type=int, default=None)
    p.set_defaults(fn=cmd_enumerate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except RelaxkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
