"""Run a random-trajectory sweep and summarize how tight each bound is.

For every bound prints the number of violations and quantiles of
bound/tau over the samples (values near 1 are tight, above 1 violated).
"""

import argparse
import logging
import math
import time

import numpy as np

from qsl_lab.lab import SweepParams, run_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", type=int, nargs=2, default=(2, 6))
    args = p.parse_args()
    logging.basicConfig(level=logging.WARNING)

    start = time.perf_counter()
    records = run_sweep(SweepParams(args.seed, args.samples, tuple(args.dims), (0.25, 3.0), args.steps, 3, 1.0))
    print(f"{len(records)} samples in {time.perf_counter() - start:.1f} s")
    print(f"{'bound':>22} {'viol':>5} {'q10':>8} {'median':>8} {'q90':>8} {'max':>8}")
    for bid in records[0].values:
        r = np.array([rec.values[bid] / rec.tau for rec in records])
        finite = r[np.isfinite(r)]
        viol = int(np.sum(r > 1 + 1e-7))
        q = np.quantile(finite, [0.1, 0.5, 0.9]) if finite.size else [math.nan] * 3
        print(f"{bid:>22} {viol:5d} {q[0]:8.3f} {q[1]:8.3f} {q[2]:8.3f} {np.max(finite, initial=0):8.3f}")


if __name__ == "__main__":
    main()
