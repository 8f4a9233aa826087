"""Moving solutions between the ambient and reduced systems.

The projection direction folds an ambient trajectory node-wise into the
fundamental chamber; :func:`projection_residual` then certifies that the
folded path's finite-difference derivatives are achievable, i.e. lie (close
to) the sampled achievable-derivative sets.

The lift direction reconstructs an ambient solution from a reduced one.  On
regular stretches the exact control is the induced part ``K' K^{-1}`` plus a
compensating part cancelling the orbital component of the drift; near
singular times the compensating part blows up like one over the regularity
margin, so :func:`approximate_lift` switches it off on small excised windows
and reports how far the re-integrated path strays (together with the
matching a-priori bound when a Lipschitz constant is declared).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linprog import hull_distance
from .dynamics import FullControls, Trajectory, integrate_full
from .errors import DomainError, ShapeError, SingularityError
from .fields import induced_values_on_angles, minimize_over_group, induced_field
from .symspace import PolarDecomposition, as_seed_sequence


def project_trajectory(pair, traj_full):
    """Node-wise diagonalization of an ambient trajectory into the chamber."""
    if traj_full.space != "ambient":
        raise ShapeError("expected an ambient trajectory")
    states = []
    for p in traj_full.states:
        a, _ = pair.diagonalize(p)
        a_fold, _ = pair.chamber_fold(a)
        states.append(a_fold)
    return Trajectory(times=traj_full.times.copy(), states=states,
                      space="reduced",
                      meta={**traj_full.meta, "projected": True})


@dataclass
class ResidualReport:
    """Per-node distances of finite-difference derivatives to achievability."""

    times: np.ndarray
    residuals: np.ndarray
    tol: float
    fraction_within: float

    def passes(self, required_fraction=0.95):
        return self.fraction_within >= required_fraction


def _node_residual(pair, X, a, v, seed, n_samples, tol, warm=None):
    """Upper bound on the distance from v to conv(derv(a)).

    Returns ``(residual, K_best)`` so consecutive nodes can warm-start.
    """
    if isinstance(pair, PolarDecomposition) and pair.n == 2:
        angles = np.linspace(0.0, 2.0 * math.pi, 512, endpoint=False)
        vals = induced_values_on_angles(pair, X, a, angles)
        lo, hi = float(vals.min()), float(vals.max())
        x = float(v[0])
        return max(lo - x, x - hi, 0.0), None

    streams = as_seed_sequence(seed).spawn(n_samples)
    elems = [pair.group_identity()]
    if warm is not None:
        elems.append(warm)
    elems += [pair.haar_sample(np.random.default_rng(ss)) for ss in streams]
    vals = np.array([induced_field(pair, X, K, a) for K in elems])
    dists = np.linalg.norm(vals - v[None, :], axis=1)
    order = np.argsort(dists)
    best = float(dists[order[0]])
    K_best = elems[order[0]]
    if best <= tol:
        return best, K_best

    def objective(K):
        return float(np.linalg.norm(induced_field(pair, X, K, a) - v))

    starts = [elems[i] for i in order[:2]]
    step0 = 0.05 if warm is not None else 0.5
    refined, K_ref = minimize_over_group(pair, objective, starts, iters=25,
                                         step0=step0, target=0.9 * tol)
    if refined < best:
        best, K_best = refined, K_ref
    if best <= tol:
        return best, K_best
    pool = [vals, induced_field(pair, X, K_best, a)[None, :]]
    stab = pair.weyl_stabilizer(a)
    if len(stab) > 1:
        extra = np.vstack(pool)
        pool.append(np.vstack([w.apply(row) for w in stab for row in extra]))
    dist_l1, _ = hull_distance(np.vstack(pool), v)
    return min(best, dist_l1), K_best


def projection_residual(pair, X, traj_a, n_samples=48, tol=None, rng_seed=0):
    """Check a reduced path against the sampled differential inclusion.

    Central finite differences at interior nodes; the reported residual is an
    upper bound on the distance to the convex hull of achievable derivatives
    (single achieving elements are searched first, then a hull LP).
    """
    if traj_a.space != "reduced":
        raise ShapeError("expected a reduced trajectory")
    t = traj_a.times
    if t.size < 3:
        raise DomainError("need at least 3 nodes for central differences")
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise DomainError("projection_residual needs a uniform grid")
    h = float(steps[0])
    A = traj_a.states_matrix()
    scale = max(1.0, float(np.abs(A).max()))
    if tol is None:
        tol = 1e-3 * scale
    root = as_seed_sequence(rng_seed)
    seeds = root.spawn(t.size)
    residuals = []
    warm = None
    for i in range(1, t.size - 1):
        v = (A[i + 1] - A[i - 1]) / (2.0 * h)
        res, warm = _node_residual(pair, X, A[i], v, seeds[i], n_samples, tol,
                                   warm=warm)
        residuals.append(res)
    residuals = np.asarray(residuals)
    return ResidualReport(times=t[1:-1].copy(), residuals=residuals, tol=tol,
                          fraction_within=float((residuals <= tol).mean()))


@dataclass
class LiftResult:
    """Ambient lift of a reduced trajectory with its control trace.

    The control at node i splits into the induced part (finite-difference
    logarithmic derivative of the schedule) and the compensating part, whose
    bracket with the state cancels the orbital drift component.  ``excised``
    lists the disjoint windows where the compensating part was switched off;
    ``deviation`` is the sup-norm gap between the reference lift and the
    re-integrated ambient solution.
    """

    times: np.ndarray
    p_nodes: list
    induced: list
    compensating: list
    excised: list
    excised_mask: np.ndarray
    deviation: float | None = None
    gronwall_bound: float | None = None
    within_gronwall: bool | None = None
    reintegrated: Trajectory | None = None
    blowup_exponent: float | None = None

    def total_control(self, pair, i):
        return pair.k_add(self.induced[i], self.compensating[i])


def _schedule_nodes(pair, schedule, times):
    if isinstance(schedule, (list, tuple)):
        if len(schedule) != len(times):
            raise ShapeError("need one group element per trajectory node")
        return list(schedule)
    return [schedule.at(t) for t in times]


def _group_diff(K_plus, K_minus, denom):
    if isinstance(K_plus, tuple):
        return tuple((a - b) / denom for a, b in zip(K_plus, K_minus))
    return (K_plus - K_minus) / denom


def _group_raw_mul(M, K):
    if isinstance(M, tuple):
        return tuple(a @ b for a, b in zip(M, K))
    return M @ K


def induced_controls(pair, Ks, times):
    """Symmetric finite differences of a sampled group path, projected skew."""
    n = len(Ks)
    out = []
    for i in range(n):
        lo, hi = max(i - 1, 0), min(i + 1, n - 1)
        if hi == lo:
            out.append(pair.k_zero())
            continue
        dK = _group_diff(Ks[hi], Ks[lo], times[hi] - times[lo])
        raw = _group_raw_mul(dK, pair.group_inverse(Ks[i]))
        out.append(pair.k_project(raw))
    return out


def _controls_schedule(pair, times, k_nodes):
    basis = pair.k_basis()
    values = np.array([pair.k_to_coords(k) for k in k_nodes[:-1]])
    rel = np.asarray(times, dtype=float) - float(times[0])
    return FullControls(times=rel, values=values, directions=tuple(basis))


def _reintegrate(pair, X, times, k_nodes, p0):
    schedule = _controls_schedule(pair, times, k_nodes)
    T = float(times[-1] - times[0])
    dt = float(times[1] - times[0])
    traj = integrate_full(pair, X, schedule, p0, T, dt)
    traj = Trajectory(times=traj.times + times[0], states=traj.states,
                      space="ambient", meta=traj.meta)
    return traj


def regular_lift(pair, X, traj_a, schedule, tol_reg=None, verify=True):
    """Exact lift of a regular reduced trajectory with its control split.

    Every node must clear the regularity margin ``tol_reg`` (default
    ``1e-8 * scale``); the first offending node is reported otherwise.
    """
    if traj_a.space != "reduced":
        raise ShapeError("expected a reduced trajectory")
    times = traj_a.times
    A = traj_a.states_matrix()
    scale = max(1.0, float(np.abs(A).max()))
    if tol_reg is None:
        tol_reg = 1e-8 * scale
    for i in range(times.size):
        margin = pair.regularity_margin(A[i])
        if margin <= tol_reg:
            raise SingularityError(
                f"node {i} (t={times[i]:.6g}) has margin {margin:.3e} "
                f"<= {tol_reg:.3e}")
    Ks = _schedule_nodes(pair, schedule, times)
    induced = induced_controls(pair, Ks, times)
    p_nodes = [pair.adjoint_action(K, pair.embed(a)) for K, a in zip(Ks, A)]
    compensating = []
    for p in p_nodes:
        orbital = pair.project_orbit(p, X(pair, p))
        if pair.p_norm(orbital) == 0.0:
            compensating.append(pair.k_zero())
        else:
            compensating.append(
                pair.ad_inverse_restricted(p, pair.p_scale(-1.0, orbital),
                                           tol_reg=tol_reg))
    result = LiftResult(times=times.copy(), p_nodes=p_nodes, induced=induced,
                        compensating=compensating, excised=[],
                        excised_mask=np.zeros(times.size, dtype=bool))
    if verify:
        k_total = [pair.k_add(a, b) for a, b in zip(induced, compensating)]
        reint = _reintegrate(pair, X, times, k_total, p_nodes[0])
        result.reintegrated = reint
        result.deviation = max(
            pair.p_norm(pair.p_sub(p, q))
            for p, q in zip(p_nodes, reint.states))
    return result


def _singular_windows(times, margins, tol_sing, eps):
    marked = margins <= tol_sing
    windows = []
    i = 0
    n = times.size
    while i < n:
        if marked[i]:
            j = i
            while j + 1 < n and marked[j + 1]:
                j += 1
            windows.append((times[i] - eps, times[j] + eps))
            i = j + 1
        else:
            i += 1
    merged = []
    for w in windows:
        lo = max(w[0], times[0])
        hi = min(w[1], times[-1])
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def _fit_blowup(margins, comp_norms, mask):
    sel = (~mask) & (comp_norms > 0) & (margins > 0)
    if sel.sum() < 8:
        return None
    m = margins[sel]
    c = comp_norms[sel]
    cutoff = np.median(m)
    small = m <= cutoff
    if small.sum() < 8:
        return None
    slope = np.polyfit(np.log(m[small]), np.log(c[small]), 1)[0]
    return float(-slope)


def approximate_lift(pair, X, traj_a, schedule, eps, tol_sing=None,
                     tol_reg=None, verify=True):
    """Lift with the compensating control excised near singular times.

    Nodes whose regularity margin falls below ``tol_sing`` mark singular
    times; maximal runs of marked nodes, widened by ``eps`` on both sides,
    form the excised windows where the compensating control is zeroed.  The
    ambient system is then re-integrated with the resulting control and the
    sup-norm deviation from the reference lift is measured.  When the drift
    declares linear-growth and Lipschitz constants the matching a-priori
    deviation bound ``2 mu (C1 R + C2) exp(L T)`` is reported alongside.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if traj_a.space != "reduced":
        raise ShapeError("expected a reduced trajectory")
    times = traj_a.times
    A = traj_a.states_matrix()
    scale = max(1.0, float(np.abs(A).max()))
    if tol_sing is None:
        tol_sing = 1e-8 * scale if tol_reg is None else tol_reg
    if tol_reg is None:
        tol_reg = min(1e-8 * scale, 0.5 * tol_sing) if tol_sing > 0 else 1e-8 * scale
    margins = np.array([pair.regularity_margin(a) for a in A])
    windows = _singular_windows(times, margins, tol_sing, eps)
    mask = np.zeros(times.size, dtype=bool)
    for lo, hi in windows:
        mask |= (times >= lo - 1e-15) & (times <= hi + 1e-15)

    Ks = _schedule_nodes(pair, schedule, times)
    induced = induced_controls(pair, Ks, times)
    p_nodes = [pair.adjoint_action(K, pair.embed(a)) for K, a in zip(Ks, A)]
    compensating = []
    for i, p in enumerate(p_nodes):
        if mask[i]:
            compensating.append(pair.k_zero())
            continue
        orbital = pair.project_orbit(p, X(pair, p))
        if pair.p_norm(orbital) <= 1e-15 * scale:
            compensating.append(pair.k_zero())
        else:
            compensating.append(
                pair.ad_inverse_restricted(p, pair.p_scale(-1.0, orbital),
                                           tol_reg=min(tol_reg, margins[i] / 2)))
    comp_norms = np.array([_k_norm(pair, c) for c in compensating])
    result = LiftResult(times=times.copy(), p_nodes=p_nodes, induced=induced,
                        compensating=compensating, excised=windows,
                        excised_mask=mask)
    result.blowup_exponent = _fit_blowup(margins, comp_norms, mask)
    if verify:
        k_total = [pair.k_add(a, b) for a, b in zip(induced, compensating)]
        reint = _reintegrate(pair, X, times, k_total, p_nodes[0])
        result.reintegrated = reint
        result.deviation = max(
            pair.p_norm(pair.p_sub(p, q))
            for p, q in zip(p_nodes, reint.states))
        mu = sum(hi - lo for lo, hi in windows)
        if X.kind in ("affine", "bloch"):
            C1, C2 = X.linear_bound(pair)
            L = X.lipschitz(pair)
            R = max(max(pair.p_norm(p) for p in p_nodes),
                    max(pair.p_norm(p) for p in reint.states))
            T = float(times[-1] - times[0])
            result.gronwall_bound = 2.0 * mu * (C1 * R + C2) * math.exp(L * T)
            result.within_gronwall = (None if mu == 0.0
                                      else result.deviation <= result.gronwall_bound)
    return result


def _k_norm(pair, k):
    c = pair.k_to_coords(k)
    return float(np.linalg.norm(c))


def lift_csv_rows(pair, result):
    """Rows (t, p-coords, induced-coords, compensating-coords, excised flag)."""
    rows = []
    for i, t in enumerate(result.times):
        row = [t]
        row.extend(pair.p_to_coords(result.p_nodes[i]))
        row.extend(pair.k_to_coords(result.induced[i]))
        row.extend(pair.k_to_coords(result.compensating[i]))
        row.append(1.0 if result.excised_mask[i] else 0.0)
        rows.append(row)
    header = ["t"]
    header += [f"p{i+1}" for i in range(pair.ambient_dim)]
    dim_k = len(pair.k_basis())
    header += [f"ind{i+1}" for i in range(dim_k)]
    header += [f"comp{i+1}" for i in range(dim_k)]
    header.append("excised")
    return header, rows
