"""Orbit polytopes, majorization, simulation, and reduced-system diagnostics.

The convex hull of a finite-symmetry orbit of a flat point is its orbit
polytope; containment of one point's polytope in another's defines the
majorization preorder.  This module provides the preorder (with fast
partial-sum paths and an LP ground truth), tangent cones at polytope
vertices, minimal-face decompositions, the constructive step of the
majorization-preserving simulation, and sampling-based tests for
reachability, stabilizability, invariance, and direct accessibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._linprog import cone_distance, hull_distance, max_weight_in_hull
from .dynamics import Selector, Trajectory, integrate_inclusion
from .errors import DomainError
from .fields import induced_field, speed_limit, derv_sample, \
    induced_values_on_angles
from .symspace import HermitianEVD, PolarDecomposition, as_seed_sequence


# ---------------------------------------------------------------------------
# majorization
# ---------------------------------------------------------------------------

def majorization_margin(pair, a, b):
    """Fast-path signed margin for ``b`` inside the orbit polytope of ``a``.

    Positive values mean strict containment.  For the eigenvalue pair this is
    the classical descending partial-sum test with equal totals; for the
    singular-value pairs it is the weak (absolute-value) variant.
    """
    a = pair.check_a(a)
    b = pair.check_a(b)
    if isinstance(pair, HermitianEVD):
        sa = np.sort(a)[::-1].cumsum()
        sb = np.sort(b)[::-1].cumsum()
        margin = float((sa[:-1] - sb[:-1]).min()) if a.size > 1 else math.inf
        total = abs(sa[-1] - sb[-1])
        return min(margin, -total) if total > 0 else min(margin, 0.0)
    # signed permutations: weak majorization of sorted absolute values
    sa = np.sort(np.abs(a))[::-1].cumsum()
    sb = np.sort(np.abs(b))[::-1].cumsum()
    return float((sa - sb).min())


def majorizes(pair, a, b, tol=1e-9, method="fast"):
    """Is ``b`` in the orbit polytope of ``a``?

    ``method`` selects the fast partial-sum path, the LP ground truth over
    the enumerated orbit, or ``"both"`` (which also checks agreement).
    """
    a = pair.check_a(a)
    b = pair.check_a(b)
    if method in ("fast", "both"):
        fast = majorization_margin(pair, a, b) >= -tol
        if method == "fast":
            return fast
    vertices = orbit_points(pair, a)
    dist, _ = hull_distance(vertices, b)
    lp = dist <= tol
    if method == "both" and lp != fast:
        raise DomainError(
            f"fast path ({fast}) and LP ({lp}) disagree at tol {tol:g}")
    return lp


def orbit_points(pair, a, dedup=True):
    """The symmetry orbit of ``a`` as stacked rows (bitwise-deduplicated)."""
    pts = pair.weyl_apply_all(a)
    if dedup:
        pts = np.unique(pts, axis=0)
    return pts


@dataclass
class WeylPolytope:
    """Convex hull of a finite-symmetry orbit."""

    base: np.ndarray
    vertices: np.ndarray
    facets: dict | None = None

    @property
    def n_vertices(self):
        return self.vertices.shape[0]


def weyl_polytope(pair, a, with_facets=False):
    base, _ = pair.chamber_fold(pair.check_a(a))
    vertices = orbit_points(pair, base)
    facets = None
    if with_facets and pair.rank <= 3:
        facets = _intrinsic_facets(pair, vertices)
    return WeylPolytope(base=base, vertices=vertices, facets=facets)


def _intrinsic_basis(pair):
    if isinstance(pair, HermitianEVD):
        n = pair.n
        rows = np.zeros((n - 1, n))
        for k in range(1, n):
            rows[k - 1, :k] = 1.0
            rows[k - 1, k] = -k
            rows[k - 1] /= math.sqrt(k * (k + 1))
        return rows
    return np.eye(pair.a_dim)


def _intrinsic_facets(pair, vertices):
    B = _intrinsic_basis(pair)
    pts = vertices @ B.T
    if pts.shape[0] <= pts.shape[1] + 1:
        return None
    try:
        from scipy.spatial import ConvexHull
        hull = ConvexHull(pts, qhull_options="QJ")
        return {"basis": B, "equations": hull.equations,
                "vertices": [int(i) for i in hull.vertices]}
    except Exception:
        return None


@dataclass
class ConeData:
    """A polyhedral cone given by generators and/or outward facet normals.

    Membership by normals means ``<normal, v> <= tol`` for every normal; when
    both descriptions are present they describe the same cone.
    """

    generators: np.ndarray | None = None
    normals: np.ndarray | None = None
    lp_only: bool = False

    def contains(self, v, tol=1e-9):
        v = np.asarray(v, dtype=float)
        if self.normals is not None:
            return bool((self.normals @ v <= tol).all())
        dist, _ = cone_distance(self.generators, v)
        return dist <= tol


def tangent_cone_at_vertex(pair, polytope, vertex, tol=1e-9):
    """Tangent cone of an orbit polytope at one of its vertices.

    At a regular vertex the cone has the closed form "minus the dual of the
    chamber", transported by the symmetry element folding the vertex; at a
    non-regular vertex the generator description ``cone(vertices - vertex)``
    is returned and flagged ``lp_only``.
    """
    vertex = pair.check_a(vertex)
    folded, w = pair.chamber_fold(vertex)
    gens = polytope.vertices - vertex[None, :]
    keep = np.linalg.norm(gens, axis=1) > tol
    gens = gens[keep]
    if pair.regularity_margin(vertex) <= tol:
        return ConeData(generators=gens, normals=None, lp_only=True)
    Minv = w.inverse().matrix()
    normals = pair.chamber_generators @ Minv.T
    root_gens = -pair.chamber_facet_normals @ Minv.T
    if isinstance(pair, HermitianEVD):
        # stay inside the zero-sum coordinate plane
        pass
    return ConeData(generators=np.vstack([root_gens, gens]) if gens.size else root_gens,
                    normals=normals, lp_only=False)


def face_decompose(pair, polytope, x, tol=1e-9):
    """Minimal face of the polytope containing ``x``, with convex weights.

    Returns ``(face_vertex_indices, weights)`` where ``weights`` is a convex
    combination over all polytope vertices, supported on the minimal face and
    reproducing ``x``.
    """
    x = pair.check_a(x)
    V = polytope.vertices
    dist, lam0 = hull_distance(V, x)
    scale = max(1.0, float(np.abs(V).max()))
    if dist > max(tol, 1e-9) * scale:
        raise DomainError(f"point is outside the polytope (l1 gap {dist:.3e})")
    budget = max(10.0 * dist, 1e-9 * scale)
    solutions = []
    face = []
    for v in range(V.shape[0]):
        lam = max_weight_in_hull(V, x, v, budget)
        if lam[v] > 1e-7:
            face.append(v)
            solutions.append(lam)
    weights = np.mean(solutions, axis=0) if solutions else lam0
    weights = np.clip(weights, 0.0, None)
    weights /= weights.sum()
    return face, weights


# ---------------------------------------------------------------------------
# majorization-preserving simulation
# ---------------------------------------------------------------------------

@dataclass
class SimulationStep:
    v: np.ndarray
    certificate_residual: float | None
    face: list | None


def _weyl_index_of_vertex(pair, base, vertex, tol=1e-9):
    for w in pair.weyl_elements():
        if np.linalg.norm(w.apply(base) - vertex) <= tol:
            return w
    raise DomainError("vertex is not on the orbit of the base point")


def simulation_direction(pair, X, x, a, decomposition, tol=1e-8,
                         verify_certificate=True, fold_stabilizer=True):
    """One constructive step of the majorization-preserving simulation.

    Given ``a`` in the orbit polytope of ``x`` and the convex decomposition
    ``a' = sum_j mu_j X_{K_j}(a)`` recorded by the integrator, builds the
    achievable direction ``v = sum_{i,j} lambda_i mu_j X_{K_j N_i}(x)`` whose
    gap to ``a'`` lies in the direction space of the face of the polytope
    containing ``a`` (certified by a least-squares residual), then folds ``v``
    by the stabilizer of ``x`` toward the chamber's tangent directions.
    """
    x = pair.check_a(x)
    a = pair.check_a(a)
    if X.kind not in ("affine", "bloch"):
        raise DomainError("the simulation step needs an affine drift")
    poly = weyl_polytope(pair, x)
    a_dot = np.zeros(pair.a_dim)
    for mu, K in decomposition:
        a_dot = a_dot + mu * induced_field(pair, X, K, a)

    if verify_certificate:
        face_idx, lam = face_decompose(pair, poly, a, tol=max(tol, 1e-8))
        support = [(i, lam[i]) for i in face_idx if lam[i] > 1e-12]
    else:
        dist, lam = hull_distance(poly.vertices, a)
        scale = max(1.0, float(np.abs(poly.vertices).max()))
        if dist > 1e-5 * scale:
            raise DomainError(f"point not majorized (l1 gap {dist:.3e})")
        face_idx = None
        support = [(i, w) for i, w in enumerate(lam) if w > 1e-12]

    v = np.zeros(pair.a_dim)
    total = sum(w for _, w in support)
    for i, w in support:
        vert = poly.vertices[i]
        welt = _weyl_index_of_vertex(pair, poly.base, vert)
        # vertex = welt . base; transport x's decomposition basepoint
        N = pair.weyl_representative(welt)
        for mu, K in decomposition:
            KN = pair.group_compose(K, N)
            v = v + (w / total) * mu * induced_field(pair, X, KN, poly.base)

    residual = None
    if verify_certificate:
        gap = v - a_dot
        F = poly.vertices[face_idx]
        if F.shape[0] <= 1:
            residual = float(np.linalg.norm(gap))
        else:
            D = (F[1:] - F[0]).T
            coef, *_ = np.linalg.lstsq(D, gap, rcond=None)
            residual = float(np.linalg.norm(D @ coef - gap))
        if residual > tol * max(1.0, float(np.linalg.norm(a_dot))):
            raise DomainError(
                f"certificate residual {residual:.3e} exceeds tolerance")

    if fold_stabilizer:
        best = v
        best_slack = float((pair.chamber_facet_normals @ v).min())
        for w in pair.weyl_stabilizer(x):
            cand = w.apply(v)
            slack = float((pair.chamber_facet_normals @ cand).min())
            if slack > best_slack + 1e-15:
                best, best_slack = cand, slack
        v = best
    return SimulationStep(v=v, certificate_residual=residual, face=face_idx)


@dataclass
class SimulationResult:
    trajectory: Trajectory
    slacks: np.ndarray
    ok: bool
    first_violation: int | None = None


def simulate_dominating(pair, X, traj_a, b0, slack_tol=1e-6):
    """Integrate a dominating solution that keeps majorizing the given one.

    The input trajectory must carry per-interval control decompositions.  The
    dominating path starts at the chamber fold of ``b0``, advances by Heun
    steps along the constructive simulation direction, is folded back into
    the chamber, and is certified node-wise by the majorization LP; the
    result flags the first node whose slack drops below ``-slack_tol``.
    """
    if traj_a.decompositions is None:
        raise DomainError("trajectory carries no control decompositions")
    A = traj_a.states_matrix()
    t = traj_a.times
    b0 = pair.check_a(b0)
    b, _ = pair.chamber_fold(b0)
    if not majorizes(pair, b, A[0], tol=1e-7):
        raise DomainError("b0 must majorize the initial point")

    def direction(x, a, dec):
        return simulation_direction(pair, X, x, a, dec,
                                    verify_certificate=False).v

    states = [b]
    slacks = [-hull_distance(orbit_points(pair, b), A[0])[0]]
    ok = True
    first = None
    for j in range(t.size - 1):
        h = t[j + 1] - t[j]
        x = states[-1]
        dec = traj_a.decompositions[j]
        v1 = direction(x, A[j], dec)
        x_pred, _ = pair.chamber_fold(x + h * v1)
        v2 = direction(x_pred, A[j + 1], dec)
        b_next, _ = pair.chamber_fold(x + 0.5 * h * (v1 + v2))
        states.append(b_next)
        dist, _ = hull_distance(orbit_points(pair, b_next), A[j + 1])
        slacks.append(-dist)
        if ok and dist > slack_tol:
            ok = False
            first = j + 1
    traj_b = Trajectory(times=t.copy(), states=states, space="reduced",
                        meta={"system": "simulation", "dt": traj_a.meta.get("dt")})
    return SimulationResult(trajectory=traj_b, slacks=np.asarray(slacks),
                            ok=ok, first_violation=first)


# ---------------------------------------------------------------------------
# reachability / stabilizability / invariance / accessibility
# ---------------------------------------------------------------------------

@dataclass
class ReachSample:
    """Terminal points of randomized inclusion integrations."""

    a0: np.ndarray
    T: float
    points: np.ndarray
    hull: dict | None = None


def reach_sample(pair, X, a0, T, n_traj=32, rng_seed=0, dt=1e-2,
                 n_samples=32, angle_grid=None):
    """Sample the reduced reachable set at time ``T``.

    Each trajectory runs the inclusion integrator with a greedy selector
    whose direction is drawn once per trajectory from its own substream, so
    the cloud sweeps extreme points of the reachable set in random
    directions.  Deterministic for a given seed.
    """
    a0 = pair.check_a(a0)
    if n_traj < 1:
        raise DomainError("n_traj must be >= 1")
    if T == 0.0:
        pts = np.tile(a0, (n_traj, 1))
        return ReachSample(a0=a0, T=0.0, points=pts)
    streams = as_seed_sequence(rng_seed).spawn(n_traj)
    points = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        direction = rng.standard_normal(pair.a_dim)
        sel = Selector.greedy_max_inner(direction)
        traj = integrate_inclusion(pair, X, sel, a0, T, dt,
                                   rng_seed=ss.spawn(1)[0],
                                   n_samples=n_samples, angle_grid=angle_grid)
        points.append(traj.states[-1])
    points = np.asarray(points)
    hull = None
    if pair.a_dim == 1:
        hull = {"min": float(points.min()), "max": float(points.max())}
    return ReachSample(a0=a0, T=float(T), points=points, hull=hull)


def stabilizable_test(pair, X, a, n_samples=256, tol=None, rng_seed=0,
                      angle_grid=None):
    """Strong/weak stabilizability of a flat point.

    Strong means the zero derivative is (approximately) achievable; weak
    means zero lies in the convex hull of sampled achievable derivatives.
    The default tolerance is scale-aware: ``1e-6 * (c(a) + 1)`` with ``c``
    the sampled speed limit.
    """
    a = pair.check_a(a)
    if tol is None:
        c, _ = speed_limit(pair, X, a, n_restarts=4, rng_seed=rng_seed,
                           angle_grid=angle_grid)
        tol = 1e-6 * (c + 1.0)
    if isinstance(pair, PolarDecomposition) and pair.n == 2:
        n = angle_grid or 1024
        angles = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        vals = induced_values_on_angles(pair, X, a, angles)
        # the achievable set is a full interval (continuous image of the
        # circle), so zero is attained exactly when it is in the hull
        weak = bool(vals.min() <= tol and vals.max() >= -tol)
        strong = weak or bool(np.abs(vals).min() <= tol)
        return {"strong": strong, "weak": weak, "tol": tol}
    sample = derv_sample(pair, X, a, n_samples=n_samples, rng_seed=rng_seed)
    vals = sample.values
    best = float(np.linalg.norm(vals, axis=1).min())
    strong = best <= tol
    if not strong:
        # polish the best candidate before giving up
        from .fields import minimize_over_group
        i = int(np.linalg.norm(vals, axis=1).argmin())
        obj = lambda K: float(np.linalg.norm(induced_field(pair, X, K, a)))
        refined, _ = minimize_over_group(pair, obj, [sample.entries[i][0]])
        strong = refined <= tol
    dist, _ = hull_distance(vals, np.zeros(pair.a_dim))
    weak = strong or dist <= tol
    return {"strong": bool(strong), "weak": bool(weak), "tol": tol}


def invariance_test(pair, X, ball_radius, n_boundary_samples=64,
                    n_derv_samples=64, tol=1e-9, rng_seed=0, angle_grid=None):
    """Invariance of the centered flat ball under the reduced inclusion.

    Checks that no sampled achievable derivative at sampled boundary points
    has a positive radial component beyond ``tol``.
    """
    if ball_radius <= 0:
        raise DomainError("ball radius must be positive")
    rng = np.random.default_rng(rng_seed)
    r = pair.a_dim
    if r == 1:
        boundary = [np.array([ball_radius]), np.array([-ball_radius])]
    else:
        dirs = rng.standard_normal((n_boundary_samples, r))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        boundary = [ball_radius * d for d in dirs]
    worst = -math.inf
    for i, a in enumerate(boundary):
        if isinstance(pair, PolarDecomposition) and pair.n == 2:
            n = angle_grid or 1024
            angles = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
            vals = induced_values_on_angles(pair, X, a, angles).reshape(-1, 1)
        else:
            vals = derv_sample(pair, X, a, n_samples=n_derv_samples,
                               rng_seed=(rng_seed, i)).values
        worst = max(worst, float((vals @ a).max()))
    return worst <= tol * max(1.0, ball_radius)


def direct_accessibility_test(pair, X, a, n_samples=128, tol=1e-6,
                              rng_seed=0, angle_grid=None):
    """Do sampled achievable derivatives span the flat tangent space?

    A certified yes (smallest intrinsic singular value above ``tol``); a no
    only reports that a spanning set was not found.
    """
    a = pair.check_a(a)
    if isinstance(pair, PolarDecomposition) and pair.n == 2:
        n = angle_grid or 1024
        angles = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        vals = induced_values_on_angles(pair, X, a, angles).reshape(-1, 1)
    else:
        vals = derv_sample(pair, X, a, n_samples=n_samples,
                           rng_seed=rng_seed).values
    B = _intrinsic_basis(pair)
    intrinsic = vals @ B.T
    if intrinsic.shape[0] < B.shape[0]:
        return False
    svals = np.linalg.svd(intrinsic, compute_uv=False)
    return bool(svals[B.shape[0] - 1] > tol)
