"""Static two-level counterexample to the Magnus-generator bound.

For H = diag(0, 1) and psi0 = (sqrt(1-p), sqrt(p)) the exact generator on
the nonnegative branch is tau*H, so |<psi0|Omega|psi0>|/tau = p while the
angle L stays of order sqrt(p)*tau. The bound hbar*L/p exceeds tau once p is
small enough.
"""

import argparse

import numpy as np

from qsl_lab.bounds import closed_report
from qsl_lab.propagation import build_generators, propagate_closed
from qsl_lab.schedules import constant


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=1024)
    args = p.parse_args()

    h = constant(np.diag([0.0, 1.0]), args.tau)
    print(f"{'p':>8} {'L':>10} {'magnus':>10} {'transition':>10} {'variance':>10}  tau={args.tau}")
    for prob in (0.5, 0.2, 0.1, 0.05, 0.01, 0.001):
        psi0 = np.array([np.sqrt(1 - prob), np.sqrt(prob)])
        traj = propagate_closed(h, psi0, args.steps)
        rep = closed_report(traj, build_generators(h, traj.propagators[-1], "nonnegative"))
        v = rep.values()
        flag = "  violated" if not rep["ml_magnus"].satisfied else ""
        print(f"{prob:8.3f} {rep['ml_magnus'].inputs['angle']:10.5f} {v['ml_magnus']:10.5f} "
              f"{v['ml_transition_energy']:10.5f} {v['mt_variance']:10.5f}{flag}")


if __name__ == "__main__":
    main()
