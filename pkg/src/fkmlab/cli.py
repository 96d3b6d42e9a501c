"""Command-line entry point: build, verify, critical, scan.

Exit codes: 0 all checks pass, 1 a verification failed, 2 invalid
configuration, 3 numerical degeneracy beyond the retry budget.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .campaign import (DEFAULT_TOLS, FORMATS, RunConfig, count_report, critical_draws, human_by_config,
                       load_config, ordering_line, resolve_out_dir, run_campaign)
from .clifford import build_clifford_system, random_sphere_element, verify_clifford
from .errors import FkmError, InvalidArgument
from .fkm import FkmGeometry
from .morse import calibrate_mean_curvature_sign, dump_critical_points_csv, mean_curvature_profile
from .report import VerificationReport, reports_to_human, reports_to_json
from .varieties import make_rng

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DEGENERATE = 0, 1, 2, 3


def _tol_pair(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected CHECK=VALUE")
    key, value = text.split("=", 1)
    if key not in DEFAULT_TOLS:
        raise argparse.ArgumentTypeError(f"unknown check id {key!r}")
    try:
        return key, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tolerance {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fkmlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct a Clifford system and check its axioms")
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--dump-system", metavar="PATH")

    v = sub.add_parser("verify", help="run the verification suites")
    v.add_argument("--m", type=int)
    v.add_argument("--k", type=int)
    v.add_argument("--config", metavar="FILE", help="key = value file mirroring these flags")
    v.add_argument("--seed", type=int)
    v.add_argument("--samples", type=int)
    v.add_argument("--draws", type=int)
    v.add_argument("--levels", type=int)
    v.add_argument("--tol", type=_tol_pair, action="append", default=[], metavar="CHECK=VAL")
    v.add_argument("--out")
    v.add_argument("--format", choices=FORMATS)

    c = sub.add_parser("critical", help="enumerate and classify critical points")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--function", choices=("phi1", "phi3", "omega2"), required=True)
    c.add_argument("--draws", type=int, default=20)
    c.add_argument("--seed", type=int, default=RunConfig.seed)
    c.add_argument("--out")

    s = sub.add_parser("scan", help="mean-curvature profile h(t) of the level sets")
    s.add_argument("--function", choices=("phi2", "omega1"), required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--levels", type=int, default=50)
    s.add_argument("--seed", type=int, default=RunConfig.seed)
    s.add_argument("--out")
    return p


def _verify_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if (args.m is None) != (args.k is None):
        raise InvalidArgument("--m and --k go together")
    if args.m is not None:
        cfg.configs = [(args.m, args.k)]
    for name in ("seed", "samples", "draws", "levels"):
        if getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    if args.format:
        cfg.fmt = args.format
    cfg.tol_overrides.update(dict(args.tol))
    cfg.out_dir = resolve_out_dir(args.out, cfg.out_dir)
    cfg.validate()
    return cfg


def cmd_build(args) -> int:
    sys_ = build_clifford_system(args.m, args.k)
    rep = verify_clifford(sys_)
    geom = FkmGeometry(sys_)
    c = geom.config()
    print(f"(m,k)=({c['m']},{c['k']}) l={c['l']} n={c['n']} c0={c['c0']:.12g} "
          f"m_+={geom.m_plus} m_-={geom.m_minus}")
    print(reports_to_human([rep]), end="")
    if args.dump_system:
        Path(args.dump_system).write_text(sys_.to_json())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    cfg = _verify_config(args)
    status, result = run_campaign(cfg)
    for suite, reps in result.reports.items():
        print(human_by_config(reps, suite))
    for o in result.ordering:
        print(ordering_line(o))
    print(f"reports written to {cfg.out_dir}")
    if result.failures:
        print("failing checks: " + ", ".join(result.failures), file=sys.stderr)
    return status


def cmd_critical(args) -> int:
    geom = FkmGeometry.from_mk(args.m, args.k)
    cfg = RunConfig(configs=[(args.m, args.k)], seed=args.seed, draws=args.draws)
    cfg.validate()
    out = Path(resolve_out_dir(args.out))
    out.mkdir(parents=True, exist_ok=True)
    runs = critical_draws(geom, cfg, args.function)
    expected = 4 if args.function == "omega2" else 8
    count_rep = count_report(f"critical.{args.function}", geom, cfg, [r for _, r in runs], expected)
    rel = [p.closed_form_rel_error for _, pts in runs if isinstance(pts, list) for p in pts]
    hess_rep = VerificationReport.from_residuals(
        "hessian.closed_form", rel or [float("inf")], cfg.tol("hessian.closed_form"), geom.config(), cfg.seed,
        details={"closed_form_sign": sorted({p.closed_form_sign for _, pts in runs if isinstance(pts, list)
                                             for p in pts})})
    rows = [(d, p) for d, (_, pts) in enumerate(runs) if isinstance(pts, list) for p in pts]
    stem = f"critical_{args.function}_m{args.m}_k{args.k}"
    dump_critical_points_csv(out / f"{stem}.csv", rows)
    (out / f"{stem}.json").write_text(reports_to_json([count_rep, hess_rep], header=cfg.header(), run=cfg.describe()))
    print(reports_to_human([count_rep, hess_rep]), end="")
    return EXIT_OK if count_rep.passed and hess_rep.passed else EXIT_FAIL


def cmd_scan(args) -> int:
    geom = FkmGeometry.from_mk(args.m, args.k)
    if args.levels < 2:
        raise InvalidArgument("need at least two levels")
    sign = calibrate_mean_curvature_sign(make_rng(args.seed, "mean_curvature_sign"))
    rng = make_rng(args.seed, f"{args.m},{args.k}", "scan", args.function)
    P = random_sphere_element(geom.sys, rng)
    rows = mean_curvature_profile(geom, args.function, P, args.levels, rng, sign)
    out = Path(resolve_out_dir(args.out))
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"scan_{args.function}_m{args.m}_k{args.k}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "h_numeric", "h_closed", "difference"])
        for r in rows:
            w.writerow([f"{r['t']:.12e}", f"{r['h_numeric']:.12e}", f"{r['h_closed']:.12e}",
                        f"{r['h_numeric'] - r['h_closed']:.3e}"])
    print(f"{'t':>12}  {'h numeric':>14}  {'h closed':>14}")
    for r in rows:
        print(f"{r['t']:12.6f}  {r['h_numeric']:14.8f}  {r['h_closed']:14.8f}")
    print(f"sign={sign} a={json.dumps([round(float(v), 12) for v in P.a])} -> {path}")
    return EXIT_OK


COMMANDS = {"build": cmd_build, "verify": cmd_verify, "critical": cmd_critical, "scan": cmd_scan}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except InvalidArgument as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FkmError as exc:
        print(f"numerical degeneracy: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
