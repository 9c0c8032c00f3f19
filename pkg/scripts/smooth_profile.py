"""Value near a non-usable tangent state on the unit circle.

Approaches the boundary along the pursuer's upper tangent line and prints
``d*``, the value and the ratio ``V/d*``, which should settle near the
slope ``C*``.  Run: ``python3 scripts/smooth_profile.py``.
"""

import argparse

import numpy as np

from visgame.game import GameState, Speeds
from visgame.geometry import Circle
from visgame.smooth import build_setup, value_by_representation


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d-p", type=float, default=2.0)
    ap.add_argument("--n", type=int, default=12)
    args = ap.parse_args()
    obs, sp = Circle((0.0, 0.0), 1.0), Speeds(1.0, 1.0)
    x = np.array([0.0, 1.0])
    P = x + np.array([args.d_p, 0.0])
    print("d_star,V,V_over_d_star,C_star")
    for ds in np.geomspace(1e-4, 1e-2, args.n):
        rate = sp.gamma_p / args.d_p - ds
        E = x - np.array([sp.gamma_e / rate, 0.0])
        s = build_setup(GameState(E, P), obs, sp)
        V = value_by_representation(s, limit=True)
        print(f"{ds:.6g},{V:.10g},{V / ds:.6g},{s.C_star:.6g}")


if __name__ == "__main__":
    main()
