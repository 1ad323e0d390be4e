"""Reconstruction of the Golden Mean process as a function of sequence length.

    python3 scripts/golden_mean_reconstruction.py --seeds 20
"""
import argparse

import numpy as np

from gradualbench.config import text_table
from gradualbench.errors import InsufficientData
from gradualbench.mechanics import EpsilonMachine, simulate, statistical_complexity
from gradualbench.reconstruct import reconstruct_from_sequence

GOLDEN_MEAN = EpsilonMachine((0, 1), ("A", "B"), [(0, 0, 0, 0.5), (0, 1, 1, 0.5), (1, 0, 0, 1.0)])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--lengths", type=int, nargs="+", default=[1_000, 10_000, 100_000, 1_000_000])
    ap.add_argument("--l-max", type=int, default=4)
    ap.add_argument("--alpha", type=float, default=0.001)
    args = ap.parse_args()

    exact = statistical_complexity(GOLDEN_MEAN)
    rows = []
    for n in args.lengths:
        states, errs, declined = [], [], 0
        for s in range(args.seeds):
            try:
                m = reconstruct_from_sequence(simulate(GOLDEN_MEAN, n, seed=s), args.l_max, args.alpha)
            except InsufficientData:
                declined += 1
                continue
            states.append(m.n_states)
            errs.append(abs(statistical_complexity(m) - exact))
        rows.append({"length": n, "two_states": f"{states.count(2)}/{args.seeds}",
                     "median_states": float(np.median(states)) if states else None,
                     "max_C_mu_error": round(max(errs), 4) if errs else None, "declined": declined})
    print(f"C_mu of the source: {exact:.10f} bits")
    print(text_table(rows, ["length", "two_states", "median_states", "max_C_mu_error", "declined"]))


if __name__ == "__main__":
    main()
