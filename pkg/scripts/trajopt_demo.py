"""Plan the hand reference and a synthetic teach trace, then replay the plans open loop.

    python scripts/trajopt_demo.py [--beta-error 0.05]

With ``--beta-error`` the replay runs on a limb whose force gains are off by
that fraction, showing how plan accuracy depends on calibration quality.
"""

import argparse
import time

import numpy as np

from smalimb import trajopt as to
from smalimb.config import default_limb
from smalimb.simcore import rollout


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta-error", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    limb = default_limb()
    plant = limb.replace(left=limb.left.replace(beta=limb.left.beta * (1 + args.beta_error)),
                         right=limb.right.replace(beta=limb.right.beta * (1 + args.beta_error)))
    _, hand = to.hand_reference(50.0)
    t, phi = to.synthetic_teach_trace("smooth", 45.0, seed=args.seed)
    refs = {"hand": hand, "teach": to.resample(t, phi, 0.1 * np.arange(451))}
    print(f"{'reference':10s} {'N':>4s} {'time':>6s} {'defect':>8s} {'mean':>6s} {'median':>6s} {'p90':>6s}")
    for name, ref in refs.items():
        pb = to.problem_from_phi(ref, limb)
        t0 = time.perf_counter()
        sol = to.solve(pb)
        elapsed = time.perf_counter() - t0
        rep = to.check_solution(sol, pb)
        r = rollout(pb.x_init, sol.u_star, pb.sim, plant)
        s = to.tracking_stats(r.phi, ref)
        print(f"{name:10s} {pb.N:4d} {elapsed:5.1f}s {rep['max_defect']:8.1e} "
              f"{s['mean']:6.2f} {s['median']:6.2f} {s['p90']:6.2f}")


if __name__ == "__main__":
    main()
