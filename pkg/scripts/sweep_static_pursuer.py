"""Grid refinement of the sweeping solver with a motionless pursuer.

With ``gamma_p = 0`` the exact value beyond the tangency point is the
distance to the pursuer's upper tangent line, so the error of the
Lax-Friedrichs sweep can be measured directly.
Run: ``python3 scripts/sweep_static_pursuer.py``.
"""

import argparse
import math
import time

import numpy as np

from visgame.game import Speeds
from visgame.geometry import Circle
from visgame.sweep import GridSpec, sweep_solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[17, 33, 65, 129, 257])
    args = ap.parse_args()
    obs, sp = Circle((0.0, 0.0), 1.0), Speeds(1.0, 0.0)
    P = np.array([2.0, 0.0])
    xs = np.array([0.5, math.sqrt(3) / 2])
    u = (xs - P) / np.linalg.norm(xs - P)
    rng = np.random.default_rng(0)
    s, d = rng.uniform(0.5, 2.0, 40), rng.uniform(0.2, 1.0, 40)
    pts = xs + s[:, None] * u + d[:, None] * xs
    print("n,h,mean_abs_err,max_abs_err,sweeps,seconds")
    for n in args.sizes:
        t = time.perf_counter()
        f = sweep_solve(obs, sp, GridSpec.static_pursuer((-4, -4), (4, 4), n, P))
        err = np.abs([f.interpolate([*x, *P]) - di for x, di in zip(pts, d)])
        print(f"{n},{8 / (n - 1):.4g},{err.mean():.4g},{err.max():.4g},{f.sweeps},{time.perf_counter() - t:.2f}")


if __name__ == "__main__":
    main()
