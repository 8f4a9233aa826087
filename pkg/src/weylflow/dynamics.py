"""Fixed-step time integration of the ambient and reduced systems.

Three integrators are provided:

* :func:`integrate_full` -- classic RK4 for the control-affine ambient system
  ``p' = X(p) + sum_i u_i(t) ad_{k_i}(p)`` with piecewise-constant controls.
* :func:`integrate_reduced` -- RK4 for ``a' = X_{K(t)}(a)`` with a
  piecewise-constant group-valued schedule.
* :func:`integrate_inclusion` -- selector-driven integration of the
  differential inclusion ``a' in derv(a)``: at each step a group element (or a
  convex mixture) is chosen from sampled achievable derivatives, frozen over
  the step, and advanced by RK2 (Euler for mixtures).

Fixed steps keep runs reproducible; selector switching limits the global
order anyway.  A state norm above ``DIVERGENCE_LIMIT`` aborts with the last
valid time attached to the error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError, ShapeError
from .fields import (DEFAULT_ANGLE_GRID, induced_field,
                     induced_values_on_angles)
from .symspace import PolarDecomposition, as_seed_sequence, rotation_2d

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class FullControls:
    """Piecewise-constant ambient controls on a breakpoint grid.

    ``values[j, i]`` is the coefficient of direction ``directions[i]`` on the
    interval ``[times[j], times[j+1])``.
    """

    times: np.ndarray
    values: np.ndarray
    directions: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise ShapeError("control grid must be strictly increasing")
        if self.values.shape != (t.size - 1, len(self.directions)):
            raise ShapeError("control values must be (n_intervals, n_directions)")

    def at(self, t):
        j = int(np.clip(np.searchsorted(self.times, t, side="right") - 1,
                        0, self.values.shape[0] - 1))
        return self.values[j]


@dataclass(frozen=True)
class ReducedControls:
    """Piecewise-constant group-valued schedule: ``elements[j]`` on interval j."""

    times: np.ndarray
    elements: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise ShapeError("schedule grid must be strictly increasing")
        if len(self.elements) != t.size - 1:
            raise ShapeError("schedule needs one element per interval")

    def at(self, t):
        j = int(np.clip(np.searchsorted(self.times, t, side="right") - 1,
                        0, len(self.elements) - 1))
        return self.elements[j]

    @classmethod
    def constant(cls, K, T):
        return cls(times=np.array([0.0, max(T, 1e-300)]), elements=(K,))

    @classmethod
    def from_function(cls, fn, t_grid):
        t_grid = np.asarray(t_grid, dtype=float)
        return cls(times=t_grid, elements=tuple(fn(t) for t in t_grid[:-1]))


@dataclass(frozen=True)
class Selector:
    """Step rule for the inclusion integrator.

    kinds: ``greedy_max_inner`` (maximize <v, direction>; direction drawn per
    step when omitted), ``envelope_max`` (rank one only: maximize v), and
    ``convex_mix`` (mix the sampled element across the finite symmetry orbit
    with fixed weights, producing a relaxed-system direction).
    """

    kind: str
    direction: np.ndarray | None = None
    weights: np.ndarray | None = None

    @classmethod
    def greedy_max_inner(cls, direction=None):
        d = None if direction is None else np.asarray(direction, dtype=float)
        return cls(kind="greedy_max_inner", direction=d)

    @classmethod
    def envelope_max(cls):
        return cls(kind="envelope_max")

    @classmethod
    def convex_mix(cls, weights):
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("convex_mix weights must lie on the simplex")
        return cls(kind="convex_mix", weights=w)


@dataclass
class Trajectory:
    """Sampled solution path.

    ``states`` holds one point per grid node (flat 1-d arrays for reduced
    paths, ambient matrices/vectors otherwise).  ``decompositions`` records,
    per interval, the convex combination ``[(mu_j, K_j)]`` of group elements
    that produced the step; integrators fill it in so that downstream
    consumers (the majorization simulator) need not reconstruct it.
    """

    times: np.ndarray
    states: list
    space: str
    meta: dict = field(default_factory=dict)
    decompositions: list | None = None

    def __post_init__(self):
        if len(self.states) != self.times.size:
            raise ShapeError("node count must equal grid length")

    @property
    def n_nodes(self):
        return self.times.size

    def states_matrix(self, pair=None):
        if self.space == "reduced":
            return np.array([np.asarray(s, dtype=float) for s in self.states])
        if pair is None:
            raise ShapeError("ambient trajectories need the pair to flatten")
        return np.array([pair.p_to_coords(s) for s in self.states])

    def restrict(self, t0, t1):
        mask = (self.times >= t0 - 1e-15) & (self.times <= t1 + 1e-15)
        idx = np.nonzero(mask)[0]
        dec = None
        if self.decompositions is not None:
            dec = [self.decompositions[i] for i in idx[:-1]]
        return Trajectory(times=self.times[idx].copy(),
                          states=[self.states[i] for i in idx],
                          space=self.space, meta=dict(self.meta),
                          decompositions=dec)


def time_grid(T, dt):
    if dt <= 0:
        raise DomainError("dt must be positive")
    if T < 0:
        raise DomainError("T must be nonnegative")
    n = max(int(round(T / dt)), 0) if T > 0 else 0
    if T > 0 and n == 0:
        n = 1
    return np.linspace(0.0, T, n + 1)


def _check_finite(pair_norm, state, t):
    nrm = pair_norm(state)
    if not math.isfinite(nrm) or nrm > DIVERGENCE_LIMIT:
        raise DivergenceError(f"state norm {nrm:.3e} at t={t:.6g}", t)


def integrate_full(pair, X, schedule, p0, T, dt):
    """RK4 for the ambient control-affine system."""
    grid = time_grid(T, dt)

    combined = {}

    def generator_at(t):
        # controls are piecewise constant: combine directions per interval
        j = int(np.clip(np.searchsorted(schedule.times, t, side="right") - 1,
                        0, schedule.values.shape[0] - 1))
        if j not in combined:
            k_eff = pair.k_zero()
            for ui, ki in zip(schedule.values[j], schedule.directions):
                if ui != 0.0:
                    k_eff = pair.k_add(k_eff, pair.k_scale(ui, ki))
            combined[j] = k_eff
        return combined[j]

    def rhs(t, p):
        out = X(pair, p)
        if schedule is not None:
            out = pair.p_add(out, pair.ad_bracket(generator_at(t), p))
        return out

    states = [p0]
    p = p0
    for j in range(grid.size - 1):
        t, h = grid[j], grid[j + 1] - grid[j]
        k1 = rhs(t, p)
        k2 = rhs(t + h / 2, pair.p_add(p, pair.p_scale(h / 2, k1)))
        k3 = rhs(t + h / 2, pair.p_add(p, pair.p_scale(h / 2, k2)))
        k4 = rhs(t + h, pair.p_add(p, pair.p_scale(h, k3)))
        incr = pair.p_add(pair.p_add(k1, k4),
                          pair.p_scale(2.0, pair.p_add(k2, k3)))
        p = pair.p_add(p, pair.p_scale(h / 6.0, incr))
        _check_finite(pair.p_norm, p, grid[j + 1])
        states.append(p)
    return Trajectory(times=grid, states=states, space="ambient",
                      meta={"dt": dt, "method": "rk4", "system": "full"})


def integrate_reduced(pair, X, schedule, a0, T, dt):
    """RK4 for the reduced system with a piecewise-constant schedule."""
    a0 = pair.check_a(a0)
    grid = time_grid(T, dt)
    states = [a0]
    decs = []
    a = a0
    for j in range(grid.size - 1):
        t, h = grid[j], grid[j + 1] - grid[j]
        K = schedule.at(t)
        f = lambda b: induced_field(pair, X, K, b)
        k1 = f(a)
        k2 = f(a + 0.5 * h * k1)
        k3 = f(a + 0.5 * h * k2)
        k4 = f(a + h * k3)
        a = a + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_finite(np.linalg.norm, a, grid[j + 1])
        states.append(a)
        decs.append([(1.0, K)])
    return Trajectory(times=grid, states=states, space="reduced",
                      meta={"dt": dt, "method": "rk4", "system": "reduced"},
                      decompositions=decs)


def _sample_step(pair, X, a, step_seed, n_samples, angle_grid):
    if isinstance(pair, PolarDecomposition) and pair.n == 2:
        n = angle_grid or DEFAULT_ANGLE_GRID
        angles = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        vals = induced_values_on_angles(pair, X, a, angles)
        return None, vals.reshape(-1, 1), angles
    streams = as_seed_sequence(step_seed).spawn(n_samples)
    elems = [pair.haar_sample(np.random.default_rng(ss)) for ss in streams]
    vals = np.array([induced_field(pair, X, K, a) for K in elems])
    return elems, vals, None


def integrate_inclusion(pair, X, selector, a0, T, dt, rng_seed=0,
                        n_samples=64, angle_grid=None):
    """Selector-driven integration of the differential inclusion.

    The chosen group element (or mixture) is frozen over each step
    (sample-and-hold), matching the measurable-control reading of the reduced
    system.  Greedy selections are deterministic for a given seed.
    """
    a0 = pair.check_a(a0)
    grid = time_grid(T, dt)
    root = as_seed_sequence(rng_seed)
    step_seeds = root.spawn(max(grid.size - 1, 1))
    if selector.kind == "convex_mix":
        weyl = pair.weyl_elements()
        if selector.weights.size != len(weyl):
            raise DomainError(
                f"convex_mix needs {len(weyl)} weights for this pair")
        reps = [pair.weyl_representative(w) for w in weyl]

    states = [a0]
    decs = []
    a = a0
    prev_angle = None
    for j in range(grid.size - 1):
        t, h = grid[j], grid[j + 1] - grid[j]
        seed_j = step_seeds[j]
        if selector.kind in ("greedy_max_inner", "envelope_max"):
            elems, vals, angles = _sample_step(pair, X, a, seed_j, n_samples,
                                               angle_grid)
            if selector.kind == "envelope_max":
                if pair.a_dim != 1:
                    raise DomainError("envelope_max needs a rank-one flat space")
                scores = vals[:, 0]
            else:
                d = selector.direction
                if d is None:
                    d = np.random.default_rng(seed_j.spawn(1)[0]) \
                        .standard_normal(pair.a_dim)
                scores = vals @ d
            i = int(scores.argmax())
            if elems is None:
                # near-ties (e.g. mirror-symmetric maximizers) break toward
                # the previous angle to keep the schedule piecewise smooth
                near = np.nonzero(scores >= scores[i]
                                  - 1e-9 * max(1.0, abs(scores[i])))[0]
                if prev_angle is not None and near.size > 1:
                    wrap = np.abs((angles[near] - prev_angle + math.pi)
                                  % (2.0 * math.pi) - math.pi)
                    i = int(near[wrap.argmin()])
                prev_angle = angles[i]
                K = rotation_2d(angles[i])
                ang = angles[i:i + 1]
                f = lambda b: induced_values_on_angles(pair, X, b, ang)
            else:
                K = elems[i]
                f = lambda b: induced_field(pair, X, K, b)
            mid = a + 0.5 * h * f(a)
            a = a + h * f(mid)
            decs.append([(1.0, K)])
        elif selector.kind == "convex_mix":
            streams = seed_j.spawn(1)
            K0 = pair.haar_sample(np.random.default_rng(streams[0]))
            mix = []
            v = np.zeros(pair.a_dim)
            for lam, N in zip(selector.weights, reps):
                if lam == 0.0:
                    continue
                Kj = pair.group_compose(K0, N)
                v = v + lam * induced_field(pair, X, Kj, a)
                mix.append((float(lam), Kj))
            a = a + h * v
            decs.append(mix)
        else:
            raise DomainError(f"unknown selector kind {selector.kind!r}")
        _check_finite(np.linalg.norm, a, grid[j + 1])
        states.append(a)
    return Trajectory(times=grid, states=states, space="reduced",
                      meta={"dt": dt, "method": "rk2-frozen",
                            "system": "inclusion", "selector": selector.kind},
                      decompositions=decs)


def schedule_from_angles(times, angles):
    """Planar rotation schedule from per-interval angles (clockwise basis).

    The element on interval j is ``exp(angles[j] * J)`` with
    ``J = [[0, 1], [-1, 0]]``, i.e. ``rotation_2d(-angles[j])``.
    """
    elems = tuple(rotation_2d(-t) for t in angles)
    return ReducedControls(times=np.asarray(times, dtype=float), elements=elems)


def path_speeds(traj):
    """Finite-difference node speeds |a'| of a reduced trajectory."""
    A = traj.states_matrix()
    dt = np.diff(traj.times)
    seg = np.linalg.norm(np.diff(A, axis=0), axis=1)
    return seg / dt


def path_length(traj):
    A = traj.states_matrix()
    return float(np.linalg.norm(np.diff(A, axis=0), axis=1).sum())
