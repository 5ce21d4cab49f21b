"""Calibration recovery over many seeds at a given noise level.

    python scripts/calibration_monte_carlo.py --seeds 20 --noise-phi 0.2 --noise-V 0.2
"""

import argparse
import math

import numpy as np

from smalimb.calibration import calibrate_all, synthetic_campaign
from smalimb.config import DEFAULT_SIM, default_limb

NAMES = ["k", "sigma"] + [f"{a}_{s}" for s in ("l", "r") for a in ("a1", "a2", "a3", "beta")]


def errors(fit, truth):
    out = [fit.manip.k / truth.manip.k - 1, fit.manip.sigma / truth.manip.sigma - 1]
    for side in ("left", "right"):
        g, t = getattr(fit, side), getattr(truth, side)
        out += [getattr(g, a) / getattr(t, a) - 1 for a in ("a1", "a2", "a3", "beta")]
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--noise-phi", type=float, default=0.2, help="degrees")
    ap.add_argument("--noise-V", type=float, default=0.2, help="°C")
    args = ap.parse_args()
    truth = default_limb()
    errs = []
    for seed in range(args.seeds):
        camp = synthetic_campaign(truth, DEFAULT_SIM, seed=seed,
                                  noise_phi=math.radians(args.noise_phi), noise_V=args.noise_V)
        errs.append(errors(calibrate_all(camp, truth.manip, truth.T0)[0], truth))
        print(f"seed {seed:3d}  worst {np.abs(errs[-1]).max():.2%}")
    a = np.abs(errs)
    print(f"\n{'param':8s} {'median':>8s} {'p90':>8s} {'max':>8s}")
    for j, name in enumerate(NAMES):
        print(f"{name:8s} {np.median(a[:, j]):8.2%} {np.percentile(a[:, j], 90):8.2%} {a[:, j].max():8.2%}")


if __name__ == "__main__":
    main()
