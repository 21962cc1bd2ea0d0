"""Tabulate how the Magnus truncation error shrinks as the horizon halves.

Prints ||Omega_exact - Omega1|| and ||Omega_exact - (Omega1 + Omega2)|| for a
sequence of horizons, together with the ratio between successive rows.
"""

import argparse

import numpy as np

from qsl_lab.linalg import KET_0, op_norm
from qsl_lab.propagation import build_generators, propagate_closed
from qsl_lab.schedules import driven_qubit, landau_zener

PRESETS = {
    "landau_zener": lambda tau: landau_zener(2.0, 1.0, tau),
    "driven_qubit": lambda tau: driven_qubit(1.0, 2.0, 3.0, tau),
}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--preset", choices=sorted(PRESETS), default="landau_zener")
    p.add_argument("--tau", type=float, default=0.8, help="largest horizon")
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--steps", type=int, default=8192)
    args = p.parse_args()

    prev = None
    print(f"{'tau':>10} {'err(O1)':>12} {'ratio':>7} {'err(O1+O2)':>12} {'ratio':>7}")
    for k in range(args.levels):
        tau = args.tau / 2**k
        h = PRESETS[args.preset](tau)
        gen = build_generators(h, propagate_closed(h, KET_0, args.steps).propagators[-1])
        e1 = op_norm(gen.omega_exact - gen.omega1)
        e2 = op_norm(gen.omega_exact - gen.omega1 - gen.omega2)
        r1, r2 = (prev[0] / e1, prev[1] / e2) if prev else (np.nan, np.nan)
        print(f"{tau:10.5f} {e1:12.4e} {r1:7.2f} {e2:12.4e} {r2:7.2f}")
        prev = (e1, e2)


if __name__ == "__main__":
    main()
