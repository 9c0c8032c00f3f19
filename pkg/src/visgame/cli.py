"""Command-line front end: ``visgame <subcommand> scenario.json``.

Every subcommand writes CSV (reals with 17 significant digits) to stdout or
``-o``.  Exit codes: 0 success, 2 schema error, 3 numerical non-convergence,
4 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import corner as cn
from . import smooth as sm
from .game import GameState, boundary_gap, classify_boundary
from .geometry import GeometryError
from .oracle import DiscreteGameConfig, discrete_value
from .scenario import Scenario, ScenarioError, load
from .sweep import GridSpec, SweepNotConverged, dump_field, extract_front, sweep_solve

EXIT_OK, EXIT_SCHEMA, EXIT_NONCONV, EXIT_INVARIANT = 0, 2, 3, 4


class InvariantViolation(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    return str(x)


def write_csv(fh, columns, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("VISGAME_WORKERS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    """Ordered map, parallel when ``VISGAME_WORKERS > 1``."""
    n = _workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _is_corner(sc: Scenario) -> bool:
    return sc.corner is not None


def _corner_polygon(sc: Scenario):
    c = sc.corner
    return cn.CornerSpec((0.0, 0.0), c.theta1, c.theta2, c.r).polygon()


def _oracle_cfg(sc: Scenario) -> DiscreteGameConfig:
    o = dict(sc.param("oracle"))
    return DiscreteGameConfig(float(o.get("dt", 2e-3)), int(o.get("depth", 150)), int(o.get("n_dirs_e", 64)),
                              int(o.get("n_dirs_p", 64)))


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

CLASSIFY_COLUMNS = ["scenario", "state", "label", "margin", "d_E", "d_P", "x_star_x", "x_star_y", "gap"]


def _classify_one(args):
    sc, i = args
    st = sc.states[i]
    c = classify_boundary(st, sc.obstacle, sc.speeds, sc.param("boundary_tol"), sc.param("interface_tol"))
    xs = c.x_star if c.x_star is not None else (None, None)
    return {"scenario": sc.id, "state": sc.state_ids[i], "label": c.label.value, "margin": c.margin,
            "d_E": c.d_E, "d_P": c.d_P, "x_star_x": xs[0], "x_star_y": xs[1],
            "gap": boundary_gap(st, sc.obstacle)}


def cmd_classify(sc: Scenario, args, out):
    rows = _map(_classify_one, [(sc, i) for i in range(len(sc.states))])
    write_csv(out, CLASSIFY_COLUMNS, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# value
# ---------------------------------------------------------------------------

VALUE_COLUMNS = ["scenario", "state", "method", "S0", "d_E", "d_P", "d_star", "d_star_kappa", "C_star", "C",
                 "t0", "t0_bar", "V_rep", "V_note", "lower", "upper", "lower_valid", "upper_valid", "lower_kappa",
                 "upper_kappa", "lower_kappa_valid", "upper_kappa_valid", "oracle", "oracle_rel_diff", "sweep",
                 "sweep_rel_diff", "violations", "barrier"]


def _smooth_row(sc: Scenario, st: GameState, methods) -> dict:
    setup = sm.build_setup(st, sc.obstacle, sc.speeds)
    V = sm.value_by_representation(setup)
    row = {"S0": setup.S0, "d_E": setup.d_E, "d_P": setup.d_P, "d_star": setup.d_star,
           "d_star_kappa": setup.d_star_kappa, "C_star": setup.C_star, "C": setup.C, "t0": setup.t0,
           "t0_bar": setup.t0_bar, "V_rep": V, "V_note": "" if V is not None else ">=t0"}
    if methods & {"bounds"}:
        delta = sc.param("delta")
        delta = delta if delta is not None else min(max(0.5, sm.delta_floor(setup) + 0.05), 0.95)
        # on the target boundary the bounds describe the limit from the free side
        Vb = sm.value_by_representation(setup, limit=True) if setup.S0 <= 0 else V
        b = sm.bounds_with_representation(setup, sm.value_bounds_kconst(setup, delta), Vb)
        eps = float(sc.param("epsilon"))
        bk = sm.value_bounds_smooth(setup, min(delta, 0.99 - eps), eps)
        bk = sm.bounds_with_representation(setup, bk, Vb)
        row.update(lower=b.lower, upper=b.upper, lower_valid=b.lower_valid, upper_valid=b.upper_valid,
                   lower_kappa=bk.lower, upper_kappa=bk.upper, lower_kappa_valid=bk.lower_valid,
                   upper_kappa_valid=bk.upper_valid)
        if Vb is not None:
            row["violations"] = int(not b.contains(Vb, 1e-9)) + int(not bk.contains(Vb, 1e-9))
    return row


def _corner_row(sc: Scenario, i: int, methods) -> dict:
    ps = sc.polar(i)
    t0 = cn.t0_corner(ps, _corner_polygon(sc), sc.speeds)
    V = cn.value_corner(ps, sc.speeds, t0)
    row = {"S0": ps.gap, "d_E": ps.d_E, "d_P": ps.d_P, "t0": t0, "t0_bar": t0, "V_rep": V,
           "V_note": "" if V is not None else ">=t0", "barrier": cn.barrier_membership(ps, sc.speeds, 1e-9)}
    if methods & {"bounds", "corner"}:
        b = cn.corner_bounds(ps, sc.speeds, t0)
        row.update(d_star=b.d_star, lower=b.lower, upper=b.upper, lower_valid=b.lower_valid,
                   upper_valid=b.upper_valid)
        if V is not None:
            row["violations"] = int(not b.contains(V, 1e-9))
    return row


def _value_one(args):
    sc, i, methods = args
    st = sc.states[i]
    row = {"scenario": sc.id, "state": sc.state_ids[i], "method": "+".join(sorted(methods))}
    if methods & {"rep", "bounds", "corner"}:
        row.update(_corner_row(sc, i, methods) if _is_corner(sc) else _smooth_row(sc, st, methods))
    if "oracle" in methods:
        cfg = _oracle_cfg(sc)
        ov = discrete_value(st, sc.obstacle, sc.speeds, cfg)
        row["oracle"] = ov
        V = row.get("V_rep")
        if V is not None and math.isfinite(ov):
            row["oracle_rel_diff"] = abs(V - ov) / max(V, cfg.dt)
    return row


def _sweep_grid(sc: Scenario) -> GridSpec:
    g = dict(sc.param("grid"))
    n = int(g.get("n", 17))
    if "lo" in g and "hi" in g:
        nn = g.get("shape", [n] * 4)
        return GridSpec(tuple(g["lo"]), tuple(g["hi"]), tuple(int(k) for k in nn))
    if g.get("static_pursuer") or sc.speeds.gamma_p == 0:
        hw = float(g.get("half_width", 4.0))
        c = np.asarray(g.get("center", (0.0, 0.0)), dtype=float)
        return GridSpec.static_pursuer(tuple(c - hw), tuple(c + hw), n, sc.states[0].P)
    return GridSpec.cube(float(g.get("half_width", 3.0)), n, tuple(g.get("center", (0.0, 0.0))))


def cmd_value(sc: Scenario, args, out):
    methods = {"rep", "bounds", "corner", "oracle", "sweep"} if args.method == "all" else {args.method}
    if "corner" in methods and not _is_corner(sc):
        methods.discard("corner")
        if args.method == "corner":
            raise ScenarioError("method 'corner' needs a corner obstacle")
    if _is_corner(sc) and args.method == "all":
        methods.discard("sweep")
    rows = _map(_value_one, [(sc, i, methods) for i in range(len(sc.states))])
    if "sweep" in methods:
        fld = sweep_solve(sc.obstacle, sc.speeds, _sweep_grid(sc), tol=args.tol)
        for r, st in zip(rows, sc.states):
            v = fld.interpolate(np.r_[st.E, st.P])
            r["sweep"] = v
            V = r.get("V_rep")
            if V is not None and V > 0:
                r["sweep_rel_diff"] = abs(v - V) / V
    write_csv(out, VALUE_COLUMNS, rows)
    if any(r.get("violations") for r in rows):
        raise InvariantViolation("value bounds violated with valid flags")
    return EXIT_OK


# ---------------------------------------------------------------------------
# scurve
# ---------------------------------------------------------------------------


def _scurve_one(args):
    sc, i, n = args
    rows = []
    if _is_corner(sc):
        ps = sc.polar(i)
        t0 = cn.t0_corner(ps, _corner_polygon(sc), sc.speeds)
        ts = np.linspace(0.0, t0, n)
        S = cn.S_corner(ts, ps, sc.speeds)
    else:
        setup = sm.build_setup(sc.states[i], sc.obstacle, sc.speeds)
        ts = np.linspace(0.0, setup.t0, n)
        S = np.array([sm.S_of_t(float(t), setup) for t in ts])
    # the smooth S decreases, the corner gap increases
    dS = np.diff(S) if _is_corner(sc) else -np.diff(S)
    mono = bool(np.all(dS >= 0))
    for t, s in zip(ts, S):
        rows.append({"scenario": sc.id, "state": sc.state_ids[i], "t": t, "S": s, "monotone": mono})
    return rows


def cmd_scurve(sc: Scenario, args, out):
    n = int(args.t_samples or sc.param("t_samples"))
    if n < 2:
        raise ScenarioError("--t-samples must be at least 2")
    parts = _map(_scurve_one, [(sc, i, n) for i in range(len(sc.states))])
    write_csv(out, ["scenario", "state", "t", "S", "monotone"], [r for p in parts for r in p])
    return EXIT_OK


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------


def parse_grid(spec: str) -> np.ndarray:
    """``lo:hi:n[:log|lin]``; log spacing is the default and needs ``lo > 0``."""
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise ScenarioError(f"bad grid spec {spec!r}; expected lo:hi:n[:log|lin]")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    mode = parts[3] if len(parts) == 4 else "log"
    if mode == "log":
        if lo <= 0:
            raise ScenarioError("log grid needs lo > 0")
        return np.geomspace(lo, hi, n)
    if mode == "lin":
        return np.linspace(lo, hi, n)
    raise ScenarioError(f"unknown grid spacing {mode!r}")


def _profile_smooth(sc: Scenario, i: int, grid) -> list:
    base = sm.build_setup(sc.states[i], sc.obstacle, sc.speeds)
    x, _, _ = base.curve.frame(base.s_P_plus)
    P = sc.states[i].P
    u = (x - P) / float(np.hypot(*(x - P)))
    dP = float(np.hypot(*(x - P)))
    ge, gp = sc.speeds.gamma_e, sc.speeds.gamma_p
    rows = []
    for ds in grid:
        row = {"scenario": sc.id, "state": sc.state_ids[i], "d_star": ds}
        rate = gp / dP - ds
        if rate <= 0:
            rows.append(row)
            continue
        E = x + (ge / rate) * u
        try:
            setup = sm.build_setup(GameState(E, P), sc.obstacle, sc.speeds)
            V = sm.value_by_representation(setup, limit=True)
            br = sm.boundary_profile(setup.d_E, setup.d_P, sc.speeds, setup.kappa0, setup.t0_bar, 0.0, setup.C_L)
            lo, hi = br.value_range()
            row.update(V=V if V is not None else None, lower=lo, upper=hi, sharp=br.sharp)
        except (GeometryError, ValueError) as exc:
            row["note"] = str(exc)
        rows.append(row)
    return rows


def _profile_corner(sc: Scenario, i: int, grid) -> list:
    ps0 = sc.polar(i)
    rows = []
    for ds in grid:
        ps = cn.PolarState(ps0.d_E, ps0.theta_E, ps0.d_P, ps0.theta_E + math.pi - ds, 0.0, ps0.theta1, ps0.theta2)
        row = {"scenario": sc.id, "state": sc.state_ids[i], "d_star": ds}
        try:
            t0 = cn.t0_corner(ps, _corner_polygon(sc), sc.speeds)
            V = cn.value_corner(ps, sc.speeds, t0)
            b = cn.corner_bounds(ps, sc.speeds, t0)
            row.update(V=V, lower=b.lower, upper=b.upper if b.upper_valid else None)
            if V is None:
                row["note"] = ">=t0"
        except (GeometryError, ValueError) as exc:
            row["note"] = str(exc)
        rows.append(row)
    return rows


def cmd_profile(sc: Scenario, args, out):
    grid = parse_grid(args.dstar_grid)
    fn = _profile_corner if _is_corner(sc) else _profile_smooth
    rows = [r for i in range(len(sc.states)) for r in fn(sc, i, grid)]
    write_csv(out, ["scenario", "state", "d_star", "V", "lower", "upper", "sharp", "note"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# barrier
# ---------------------------------------------------------------------------


def cmd_barrier(sc: Scenario, args, out):
    if not _is_corner(sc):
        raise ScenarioError("barrier needs a corner obstacle")
    rng = np.random.default_rng(sc.seed)
    rows, summary = [], []
    for i in range(len(sc.states)):
        ps = sc.polar(i)
        pieces = cn.piecewise_constant_control(rng, args.pieces, args.opponent)
        tr = cn.barrier_mimic_simulate(ps, sc.speeds, pieces, args.dt, args.T, defender=args.defender)
        for k in range(len(tr.t)):
            rows.append({"scenario": sc.id, "state": sc.state_ids[i], "t": tr.t[k], "d_E": tr.d_E[k],
                         "d_P": tr.d_P[k], "theta_E": tr.theta_E[k], "theta_P": tr.theta_P[k],
                         "drift": tr.drift[k]})
        summary.append(f"# {sc.state_ids[i]} max_drift={fmt(tr.max_drift)} drift_per_dt={fmt(tr.max_drift / args.dt)}"
                       f" left_region={fmt(tr.left_region)}")
    write_csv(out, ["scenario", "state", "t", "d_E", "d_P", "theta_E", "theta_P", "drift"], rows)
    for line in summary:
        print(line, file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def cmd_sweep(sc: Scenario, args, out):
    grid = _sweep_grid(sc)
    if args.n is not None:
        grid = GridSpec(grid.lo, grid.hi, tuple(1 if k == 1 else args.n for k in grid.n))
    fld = sweep_solve(sc.obstacle, sc.speeds, grid, tol=args.tol, max_sweeps=args.max_sweeps)
    if args.dump:
        with open(args.dump, "wb") as fh:
            dump_field(fld, fh)
    rows = []
    for i, st in enumerate(sc.states):
        v = fld.interpolate(np.r_[st.E, st.P])
        row = {"scenario": sc.id, "state": sc.state_ids[i], "sweep": v}
        if not _is_corner(sc) and sc.speeds.gamma_p > 0:
            try:
                V = sm.value_by_representation(sm.build_setup(st, sc.obstacle, sc.speeds))
                row["V_rep"] = V
                if V:
                    row["rel_diff"] = abs(v - V) / V
            except GeometryError:
                pass
        rows.append(row)
    write_csv(out, ["scenario", "state", "sweep", "V_rep", "rel_diff"], rows)
    finite = fld.values[np.isfinite(fld.values)]
    ts = np.linspace(0.0, float(finite.max()) if finite.size else 0.0, 8)
    fronts = [extract_front(fld, t) for t in ts]
    nested = all(np.all(fronts[k + 1].omega <= fronts[k].omega) for k in range(len(fronts) - 1))
    print(f"# sweeps={fld.sweeps} residual={fmt(fld.residual)} converged={fmt(fld.converged)} "
          f"nesting={fmt(nested)}", file=sys.stderr)
    if not nested:
        raise InvariantViolation("front nesting failed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="visgame", description="Visibility pursuit-evasion analyses.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def add(name, fn, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("scenario")
        s.add_argument("-o", "--output", help="CSV output path (default stdout)")
        s.set_defaults(fn=fn)
        return s

    add("classify", cmd_classify, "usable / non-usable labels")
    s = add("value", cmd_value, "value by representation, bounds, oracle or sweep")
    s.add_argument("--method", choices=["rep", "bounds", "corner", "oracle", "sweep", "all"], default="rep")
    s.add_argument("--tol", type=float, default=1e-8)
    s = add("scurve", cmd_scurve, "the function S(t) on [0, t0]")
    s.add_argument("--t-samples", type=int, default=None)
    s = add("profile", cmd_profile, "value against d* approaching the target boundary")
    s.add_argument("--dstar-grid", default="1e-4:1e-2:15")
    s = add("barrier", cmd_barrier, "radial-mimic simulation on the barrier")
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--T", type=float, default=0.2)
    s.add_argument("--opponent", choices=["random", "angular", "radial"], default="random")
    s.add_argument("--pieces", type=int, default=8)
    s.add_argument("--defender", choices=["evader", "pursuer"], default="evader")
    s = add("sweep", cmd_sweep, "fast-sweeping solution of the stationary equation")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-sweeps", type=int, default=4000)
    s.add_argument("--dump", help="write the field in the binary SWPF format")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load(args.scenario)
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as out:
                return args.fn(sc, args, out)
        return args.fn(sc, args, sys.stdout)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SweepNotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except InvariantViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (GeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
