"""Value jump across the interface of a corner obstacle.

Fixes the pursuer at distance ``d_P`` from the corner and moves the evader
through ``d_E = d_P * gamma_e / gamma_p`` on the boundary.  Usable states
have a small value; past the barrier no zero exists before ``t0``.
Run: ``python3 scripts/corner_jump.py``.
"""

import argparse
import math

import numpy as np

from visgame.corner import corner_bounds, corner_state, t0_corner, value_corner
from visgame.game import Speeds


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gap-offset", type=float, default=1e-3, help="distance of the gap below pi")
    args = ap.parse_args()
    sp = Speeds(1.0, 1.0)
    dP = 2.0
    gap = math.pi - args.gap_offset
    dEs = np.round(1.5 + 0.05 * np.arange(21), 12)
    t0 = min(t0_corner(corner_state(d, dP, gap), None, sp) for d in dEs)
    print("d_E,V,lower,upper")
    for dE in dEs:
        ps = corner_state(dE, dP, gap)
        V = value_corner(ps, sp, t0)
        b = corner_bounds(ps, sp, t0)
        up = f"{b.upper:.6g}" if b.upper_valid else ""
        print(f"{dE:.4g},{'' if V is None else f'{V:.6g}'},{b.lower:.6g},{up}")


if __name__ == "__main__":
    main()
