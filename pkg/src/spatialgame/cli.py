"""Command line interface.

    spatialgame validate --scenario scenarios/symmetric.yaml
    spatialgame solve    --scenario scenarios/symmetric.yaml --out out/symmetric
    spatialgame simulate --scenario scenarios/symmetric.yaml --out out/sim --T 60 --dt 0.01
    spatialgame sweep    --scenario scenarios/symmetric.yaml --parameter sigma --values 0.4 0.8 1.6 3.2
    spatialgame fragment --fine scenarios/quarters.yaml --coarse scenarios/halves.yaml

Exit status: 0 when every check passes, 1 on I/O or configuration errors,
2 when an invariant check fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path


from .cyclic import SingularSystemError
from .domain import DomainError
from .dynamics import SteadyStateError
from .elliptic import AlphaBoundError
from .equilibrium import AdmissibilityError
from .runs import run_fragment, run_simulate, run_solve, run_sweep
from .scenario import ScenarioError, load_scenario

log = logging.getLogger("spatialgame")

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2


def _add_common(p, scenario=True):
    if scenario:
        p.add_argument("--scenario", required=True, type=Path, help="scenario YAML file")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--grid-points", type=int, default=None, help="override grid.n_points")
    p.add_argument("--dt", type=float, default=None, help="time step")
    p.add_argument("--T", type=float, default=None, help="simulation horizon")
    p.add_argument("--series-terms", type=int, default=None, help="Fourier terms for cross-checks")
    p.add_argument("--check", dest="check", action="store_true", default=True,
                   help="run the invariant suite (default)")
    p.add_argument("--no-check", dest="check", action="store_false",
                   help="skip the invariant suite")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spatialgame", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file without solving")
    p.add_argument("--scenario", required=True, type=Path)
    p.add_argument("--grid-points", type=int, default=None)

    _add_common(sub.add_parser("solve", help="equilibria, welfare and steady state"))
    _add_common(sub.add_parser("simulate", help="solve, then integrate the pollution dynamics"))

    p = sub.add_parser("sweep", help="repeat the solve over values of one parameter")
    _add_common(p)
    p.add_argument("--parameter", required=True)
    p.add_argument("--values", required=True, nargs="+", type=float)

    p = sub.add_parser("fragment", help="compare pollution under a partition and its coarsening")
    _add_common(p, scenario=False)
    p.add_argument("--fine", required=True, type=Path)
    p.add_argument("--coarse", required=True, type=Path)
    return parser


def _apply_overrides(cfg, args):
    run = cfg.run
    if getattr(args, "dt", None) is not None:
        run = replace(run, dt=args.dt)
    if getattr(args, "T", None) is not None:
        run = replace(run, T=args.T)
    if getattr(args, "series_terms", None) is not None:
        run = replace(run, series_terms=args.series_terms)
    return replace(cfg, run=run)


def _print_checks(checks) -> bool:
    ok = True
    for c in checks:
        ok &= c.passed
        value = "" if c.value is None else f" value={c.value:.3e}"
        print(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}{value}")
    return ok


def _main(args) -> int:
    if args.command == "validate":
        cfg = load_scenario(args.scenario)
        scn = cfg.build(args.grid_points)
        print(f"{args.scenario}: ok ({len(scn.players)} players, {scn.grid.n_points} nodes)")
        return EXIT_OK

    if args.command == "fragment":
        fine = _apply_overrides(load_scenario(args.fine), args)
        coarse = _apply_overrides(load_scenario(args.coarse), args)
        out = None if args.out is None else args.out / "fragment.csv"
        rep = run_fragment(fine, coarse, out_path=out, n_points=args.grid_points)
        print(f"fragment {fine.name} vs {coarse.name}: min gap {rep.min_gap.min():.3e}, "
              f"steady gap {rep.steady_gap:.3e}, total pollution {rep.total_fine:.6g} vs "
              f"{rep.total_coarse:.6g}")
        print(f"  [{'PASS' if rep.passed else 'FAIL'}] pollution ordering (slack {rep.tol:.0e})")
        return EXIT_OK if rep.passed or not args.check else EXIT_CHECK

    cfg = _apply_overrides(load_scenario(args.scenario), args)

    if args.command == "sweep":
        out = None if args.out is None else args.out / f"sweep_{args.parameter}.csv"
        rows, checks = run_sweep(cfg, args.parameter, args.values, out, n_points=args.grid_points)
        print(f"sweep {args.parameter}: {len(args.values)} values, {len(rows)} rows")
        ok = _print_checks(checks) if args.check else True
        return EXIT_OK if ok else EXIT_CHECK

    scn = cfg.build(args.grid_points)
    runner = run_simulate if args.command == "simulate" else run_solve
    report, _ = runner(scn, args.out, check=args.check)
    if args.out is not None:
        path = args.out / "report.json"
        path.write_text(report.to_json())
    print("\n".join(report.summary_lines()))
    return EXIT_OK if report.passed else EXIT_CHECK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _main(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, DomainError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SteadyStateError, AlphaBoundError, AdmissibilityError, SingularSystemError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
