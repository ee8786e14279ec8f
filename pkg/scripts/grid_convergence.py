"""Observed spatial order of the alpha solve and the Nash investment.

    python scripts/grid_convergence.py [--scenario scenarios/symmetric.yaml]

Solves on n = 128 ... 4096 nodes, restricts to the coarsest grid and reports
successive sup-norm differences and the implied order log2(d_n / d_2n).
"""

import argparse
from pathlib import Path

import numpy as np

from spatialgame import alpha_profile, nash_equilibrium
from spatialgame.scenario import load_scenario

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--scenario", type=Path, default=ROOT / "scenarios" / "symmetric.yaml")
    parser.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512, 1024, 2048, 4096])
    args = parser.parse_args(argv)

    cfg = load_scenario(args.scenario)
    coarse = min(args.sizes)
    alphas, invest = [], []
    for n in args.sizes:
        scn = cfg.build(n)
        stride = n // coarse
        alphas.append(alpha_profile(scn.players[0], scn.env, grid=scn.grid).values[::stride])
        invest.append(nash_equilibrium(scn.players, scn.env, scn.grid).i[::stride])

    print(f"{'n':>6} {'d_alpha':>10} {'order':>6} {'d_i':>10} {'order':>6}")
    prev = None
    for k in range(len(args.sizes) - 1):
        da = np.max(np.abs(alphas[k] - alphas[k + 1]))
        di = np.max(np.abs(invest[k] - invest[k + 1]))
        if prev is None:
            print(f"{args.sizes[k]:>6} {da:>10.3e} {'':>6} {di:>10.3e}")
        else:
            print(f"{args.sizes[k]:>6} {da:>10.3e} {np.log2(prev[0] / da):>6.2f} "
                  f"{di:>10.3e} {np.log2(prev[1] / di):>6.2f}")
        prev = (da, di)


if __name__ == "__main__":
    main()
