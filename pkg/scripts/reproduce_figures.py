"""Run every bundled scenario plus the sweeps and fragmentation pairs.

    python scripts/reproduce_figures.py --out out/figures

Writes one directory per scenario (profiles.csv, trajectory.csv, summary.csv,
report.json), long-format sweep CSVs and fragment CSVs, and prints a check
summary. Exits non-zero if any check fails.
"""

import argparse
import sys
from pathlib import Path

from spatialgame.runs import run_fragment, run_simulate, run_sweep
from spatialgame.scenario import load_scenario

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

SWEEPS = [
    ("symmetric", "sigma", [0.4, 0.8, 1.6, 3.2]),
    ("symmetric", "w_2", [0.9, 1.0, 1.1]),
    ("symmetric", "eta", [0.0, 0.1, 0.2, 0.4]),
]
PAIRS = [("halves", "whole"), ("quarters", "halves"), ("quarters", "whole")]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--out", type=Path, default=ROOT / "out" / "figures")
    parser.add_argument("--grid-points", type=int, default=None)
    args = parser.parse_args(argv)

    failures = 0
    for path in sorted(SCENARIOS.glob("*.yaml")):
        scn = load_scenario(path).build(args.grid_points)
        out = args.out / path.stem
        report, _ = run_simulate(scn, out)
        (out / "report.json").write_text(report.to_json())
        bad = [c.name for c in report.checks if not c.passed]
        failures += len(bad)
        print(f"{path.stem:<13} {len(report.checks):>2} checks  "
              f"{'ok' if not bad else 'FAILED: ' + ', '.join(bad)}")

    for name, parameter, values in SWEEPS:
        cfg = load_scenario(SCENARIOS / f"{name}.yaml")
        rows, checks = run_sweep(cfg, parameter, values, args.out / f"sweep_{name}_{parameter}.csv",
                                 n_points=args.grid_points)
        bad = [c.name for c in checks if not c.passed]
        failures += len(bad)
        print(f"sweep {parameter:<7} {len(rows):>6} rows  {'ok' if not bad else 'FAILED: ' + ', '.join(bad)}")

    for fine, coarse in PAIRS:
        rep = run_fragment(load_scenario(SCENARIOS / f"{fine}.yaml"),
                           load_scenario(SCENARIOS / f"{coarse}.yaml"),
                           out_path=args.out / f"fragment_{fine}_{coarse}.csv",
                           n_points=args.grid_points)
        failures += not rep.passed
        print(f"fragment {fine}/{coarse}: min gap {rep.min_gap.min():.2e}, total pollution "
              f"{rep.total_fine:.5g} vs {rep.total_coarse:.5g}  {'ok' if rep.passed else 'FAILED'}")

    print(f"outputs in {args.out}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
