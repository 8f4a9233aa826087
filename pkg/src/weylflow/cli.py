"""Command-line interface.

Every command reads a JSON config (``--config``), optionally overridden by
``--seed``, ``--dt`` and ``--out``, and writes CSV/JSON artifacts whose bytes
are identical for identical config and seed.  ``--plot`` additionally renders
a PNG figure next to each delimited output.

Exit codes: 0 success, 2 malformed config or usage, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bloch
from ._io import (flatten_group, read_csv, trajectory_rows,
                  unflatten_group, write_csv, write_json)
from .analysis import (majorization_margin, majorizes, orbit_points,
                       reach_sample, simulate_dominating)
from ._linprog import hull_distance
from .dynamics import (FullControls, ReducedControls, Trajectory,
                       integrate_full, integrate_reduced)
from .errors import (DivergenceError, DomainError, LPError, ShapeError,
                     SingularityError, WeylflowError)
from .fields import drift_from_dict
from .symspace import pair_from_dict
from .transfer import approximate_lift, lift_csv_rows, regular_lift

COMMANDS = ("simulate-full", "simulate-reduced", "project", "lift",
            "envelope", "reach", "majorize", "simulate-dominating", "bloch",
            "selftest")


class ConfigError(ValueError):
    pass


def _require(config, key, types=None):
    if key not in config:
        raise ConfigError(f"config is missing required key {key!r}")
    value = config[key]
    if types is not None and not isinstance(value, types):
        raise ConfigError(f"config key {key!r} has the wrong type")
    return value


def _finite_array(values, name):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"config key {name!r} contains non-finite values")
    return arr


def _grid_params(config):
    T = float(_require(config, "T", (int, float)))
    dt = float(config.get("dt", 1e-3))
    if not (math.isfinite(T) and math.isfinite(dt)) or dt <= 0 or T < 0:
        raise ConfigError("need finite T >= 0 and dt > 0")
    return T, dt


def _pair(config):
    try:
        return pair_from_dict(_require(config, "pair", dict))
    except ShapeError as exc:
        raise ConfigError(str(exc)) from exc


def _drift(pair, config):
    try:
        return drift_from_dict(pair, _require(config, "drift", dict))
    except (ShapeError, KeyError, ValueError) as exc:
        raise ConfigError(f"bad drift: {exc}") from exc


def _out_path(config, out_dir, stem, suffix):
    base = out_dir or config.get("out") or os.environ.get("WEYLFLOW_OUTDIR") or "."
    return os.path.join(base, f"{stem}{suffix}")


def _schedule_from_config(pair, spec, T, seed):
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return ReducedControls.constant(pair.group_identity(), T + 1e-9)
    if kind == "random":
        n = int(spec.get("n_pieces", 4))
        times = np.linspace(0.0, T + 1e-9, n + 1)
        elems = tuple(pair.haar_sample((seed, 977, j)) for j in range(n))
        return ReducedControls(times=times, elements=elems)
    if kind == "explicit":
        times = _finite_array(spec["times"], "schedule.times")
        elems = tuple(unflatten_group(pair, row) for row in spec["elements"])
        return ReducedControls(times=times, elements=elems)
    raise ConfigError(f"unknown schedule kind {kind!r}")


def _controls_from_config(pair, spec, T):
    if spec is None:
        return None
    times = _finite_array(spec["times"], "controls.times")
    values = _finite_array(spec["values"], "controls.values")
    directions = tuple(pair.k_from_coords(np.asarray(row, dtype=float))
                       for row in spec["directions"])
    return FullControls(times=times, values=values, directions=directions)


def _emit_trajectory(pair, traj, path, controls=None):
    header, rows = trajectory_rows(pair, traj, controls=controls)
    return write_csv(path, header, rows)


def cmd_simulate_full(config, out_dir, seed, plot):
    pair = _pair(config)
    X = _drift(pair, config)
    T, dt = _grid_params(config)
    p0 = pair.p_from_coords(_finite_array(_require(config, "p0", list), "p0"))
    controls = _controls_from_config(pair, config.get("controls"), T)
    traj = integrate_full(pair, X, controls, p0, T, dt)
    path = _out_path(config, out_dir, "simulate-full", ".csv")
    _emit_trajectory(pair, traj, path)
    if plot:
        from . import plotting
        plotting.plot_trajectory(traj.times, traj.states_matrix(pair),
                                 _out_path(config, out_dir, "simulate-full", ".png"),
                                 ylabel="ambient coordinates")
    return [path]


def cmd_simulate_reduced(config, out_dir, seed, plot):
    pair = _pair(config)
    X = _drift(pair, config)
    T, dt = _grid_params(config)
    a0 = _finite_array(_require(config, "a0", list), "a0")
    sched = _schedule_from_config(pair, config.get("schedule", {}), T, seed)
    traj = integrate_reduced(pair, X, sched, a0, T, dt)
    ctrl = [flatten_group(pair, sched.at(t)) for t in traj.times]
    path = _out_path(config, out_dir, "simulate-reduced", ".csv")
    _emit_trajectory(pair, traj, path, controls=ctrl)
    if plot:
        from . import plotting
        plotting.plot_trajectory(traj.times, traj.states_matrix(),
                                 _out_path(config, out_dir, "simulate-reduced", ".png"),
                                 ylabel="flat coordinates")
    return [path]


def _read_reduced_with_controls(pair, path):
    header, data = read_csv(path)
    d = pair.a_dim
    times = data[:, 0]
    states = [row[1:1 + d] for row in data]
    Ks = [unflatten_group(pair, row[1 + d:]) for row in data]
    traj = Trajectory(times=times, states=states, space="reduced")
    return traj, Ks


def cmd_project(config, out_dir, seed, plot):
    pair = _pair(config)
    header, data = read_csv(_require(config, "input", str))
    times = data[:, 0]
    states = [pair.p_from_coords(row[1:1 + pair.ambient_dim]) for row in data]
    traj = Trajectory(times=times, states=states, space="ambient")
    from .transfer import project_trajectory
    proj = project_trajectory(pair, traj)
    path = _out_path(config, out_dir, "project", ".csv")
    _emit_trajectory(pair, proj, path)
    if plot:
        from . import plotting
        plotting.plot_trajectory(proj.times, proj.states_matrix(),
                                 _out_path(config, out_dir, "project", ".png"),
                                 ylabel="chamber coordinates")
    return [path]


def cmd_lift(config, out_dir, seed, plot):
    pair = _pair(config)
    X = _drift(pair, config)
    traj, Ks = _read_reduced_with_controls(pair, _require(config, "input", str))
    eps = config.get("eps")
    if eps is None:
        result = regular_lift(pair, X, traj, Ks,
                              tol_reg=config.get("tol_reg"))
    else:
        result = approximate_lift(pair, X, traj, Ks, eps=float(eps),
                                  tol_sing=config.get("tol_sing"),
                                  tol_reg=config.get("tol_reg"))
    header, rows = lift_csv_rows(pair, result)
    path = _out_path(config, out_dir, "lift", ".csv")
    write_csv(path, header, rows)
    summary = {
        "deviation": result.deviation,
        "gronwall_bound": result.gronwall_bound,
        "within_gronwall": result.within_gronwall,
        "excised": [[float(a), float(b)] for a, b in result.excised],
        "excised_measure": float(sum(b - a for a, b in result.excised)),
        "blowup_exponent": result.blowup_exponent,
    }
    jpath = _out_path(config, out_dir, "lift", ".json")
    write_json(jpath, summary)
    if plot:
        from . import plotting
        coords = [pair.p_to_coords(p) for p in result.p_nodes]
        plotting.plot_lift(result.times, coords, result.excised_mask,
                           _out_path(config, out_dir, "lift", ".png"))
    return [path, jpath]


def cmd_envelope(config, out_dir, seed, plot):
    params = bloch.BlochParams(float(_require(config, "Gamma", (int, float))),
                               float(config.get("gamma", 1.0)))
    n = int(config.get("n_grid", 2001))
    a = np.linspace(-1.0, 1.0, n)
    u = bloch.envelope_u(params, a)
    phi = bloch.optimal_phi(params, a)
    path = _out_path(config, out_dir, "envelope", ".csv")
    write_csv(path, ["a", "u", "phi_star"], np.column_stack([a, u, phi]))
    if plot:
        from . import plotting
        plotting.plot_envelope(a, u, phi,
                               _out_path(config, out_dir, "envelope", ".png"))
    return [path]


def cmd_reach(config, out_dir, seed, plot):
    pair = _pair(config)
    X = _drift(pair, config)
    T, dt = _grid_params(config)
    a0 = _finite_array(_require(config, "a0", list), "a0")
    n_traj = int(config.get("n_traj", 32))
    cloud = reach_sample(pair, X, a0, T, n_traj=n_traj, rng_seed=seed, dt=dt,
                         n_samples=int(config.get("n_samples", 32)),
                         angle_grid=config.get("angle_grid"))
    path = _out_path(config, out_dir, "reach", ".csv")
    write_csv(path, [f"a{i+1}" for i in range(pair.a_dim)], cloud.points)
    summary = {
        "n_traj": n_traj, "T": T,
        "min": [float(v) for v in cloud.points.min(axis=0)],
        "max": [float(v) for v in cloud.points.max(axis=0)],
    }
    jpath = _out_path(config, out_dir, "reach", ".json")
    write_json(jpath, summary)
    if plot:
        from . import plotting
        plotting.plot_point_cloud(cloud.points,
                                  _out_path(config, out_dir, "reach", ".png"))
    return [path, jpath]


def cmd_majorize(config, out_dir, seed, plot):
    pair = _pair(config)
    a = _finite_array(_require(config, "a", list), "a")
    b = _finite_array(_require(config, "b", list), "b")
    verdict = majorizes(pair, a, b, tol=float(config.get("tol", 1e-9)),
                        method="both")
    dist, _ = hull_distance(orbit_points(pair, a), b)
    out = {"majorizes": bool(verdict),
           "fast_margin": float(majorization_margin(pair, a, b)),
           "lp_slack": float(-dist)}
    path = _out_path(config, out_dir, "majorize", ".json")
    write_json(path, out)
    vpath = _out_path(config, out_dir, "majorize-polytope", ".csv")
    write_csv(vpath, [f"a{i+1}" for i in range(pair.a_dim)],
              orbit_points(pair, a))
    return [path, vpath]


def cmd_simulate_dominating(config, out_dir, seed, plot):
    pair = _pair(config)
    X = _drift(pair, config)
    T, dt = _grid_params(config)
    a0 = _finite_array(_require(config, "a0", list), "a0")
    b0 = _finite_array(_require(config, "b0", list), "b0")
    sched = _schedule_from_config(pair, config.get("schedule", {}), T, seed)
    traj = integrate_reduced(pair, X, sched, a0, T, dt)
    res = simulate_dominating(pair, X, traj, b0,
                              slack_tol=float(config.get("slack_tol", 1e-6)))
    path = _out_path(config, out_dir, "simulate-dominating", ".csv")
    _emit_trajectory(pair, res.trajectory, path)
    summary = {"ok": bool(res.ok),
               "min_slack": float(res.slacks.min()),
               "first_violation": res.first_violation}
    jpath = _out_path(config, out_dir, "simulate-dominating", ".json")
    write_json(jpath, summary)
    if plot:
        from . import plotting
        plotting.plot_trajectory(res.trajectory.times,
                                 res.trajectory.states_matrix(),
                                 _out_path(config, out_dir,
                                           "simulate-dominating", ".png"),
                                 ylabel="dominating path")
    if not res.ok:
        raise DomainError(
            f"majorization lost at node {res.first_violation} "
            f"(min slack {res.slacks.min():.3e})")
    return [path, jpath]


def cmd_bloch(config, out_dir, seed, plot):
    params = bloch.BlochParams(float(_require(config, "Gamma", (int, float))),
                               float(config.get("gamma", 1.0)))
    T = float(config.get("T", 5.0))
    dt = float(config.get("dt", 1e-3))
    if dt <= 0 or T <= 0:
        raise ConfigError("bloch needs T > 0 and dt > 0")
    grid = np.arange(0.0, T + dt / 2, dt)
    if params.t0 < T:
        grid = np.unique(np.concatenate([grid, [params.t0]]))
    a = bloch.optimal_a_star(params, grid)
    phi = bloch.optimal_phi(params, a)
    w0, wc = bloch.optimal_controls(params, grid)
    path = _out_path(config, out_dir, "bloch", ".csv")
    write_csv(path, ["t", "a_star", "phi_star", "omega0", "omega_c"],
              np.column_stack([grid, a, phi, w0, wc]))
    if plot:
        from . import plotting
        plotting.plot_bloch_profile(grid, a, phi, w0, wc,
                                    _out_path(config, out_dir, "bloch", ".png"))
    return [path]


def cmd_selftest(config, out_dir, seed, plot):
    from .acceptance import run_all
    results = run_all()
    if not all(r.passed for r in results):
        raise SystemExit(1)
    return []


_HANDLERS = {
    "simulate-full": cmd_simulate_full,
    "simulate-reduced": cmd_simulate_reduced,
    "project": cmd_project,
    "lift": cmd_lift,
    "envelope": cmd_envelope,
    "reach": cmd_reach,
    "majorize": cmd_majorize,
    "simulate-dominating": cmd_simulate_dominating,
    "bloch": cmd_bloch,
    "selftest": cmd_selftest,
}


def run(command, config, out_dir=None, seed=None, plot=False):
    """Dispatch one command; returns the list of written artifact paths."""
    if command not in _HANDLERS:
        raise ConfigError(f"unknown command {command!r}")
    if seed is None:
        seed = int(config.get("seed", 0))
    if config.get("plot"):
        plot = True
    return _HANDLERS[command](config, out_dir, seed, plot)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="weylflow",
        description="Reduced control systems on symmetric matrix spaces.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="path to a JSON config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--dt", type=float, default=None,
                        help="override the config time step")
    parser.add_argument("--out", default=None,
                        help="output directory (overrides config)")
    parser.add_argument("--plot", action="store_true",
                        help="render PNG figures next to the data artifacts")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
        if not isinstance(config, dict):
            print("error: config must be a JSON object", file=sys.stderr)
            return 2
    if args.dt is not None:
        config["dt"] = args.dt
    try:
        paths = run(args.command, config, out_dir=args.out, seed=args.seed,
                    plot=args.plot)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ConfigError, ShapeError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, SingularityError, LPError, DomainError,
            WeylflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
