"""Drift fields, induced flat-space fields, achievable-derivative sampling.

A drift field lives on the ambient space.  Pulling it back by a group element
and projecting onto the flat subspace gives the induced field

    X_K(a) = proj_flat( Ad_K^{-1}( X( Ad_K( embed(a) ) ) ) ),

whose collection over the group is the right-hand side of the reduced
differential inclusion.  This module evaluates induced fields, samples the
achievable-derivative set, filters it to the strict subset, and estimates the
speed limit c(a) = max_K |X_K(a)|.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError
from .symspace import PolarDecomposition, as_seed_sequence, rotation_2d

#: Angle-grid resolution used for rank-one rotation groups.
DEFAULT_ANGLE_GRID = 4096

#: Fallback Lipschitz bound for custom fields that do not declare one.
DEFAULT_CUSTOM_LIPSCHITZ = 10.0


@dataclass(frozen=True)
class DriftField:
    """Drift on the ambient space: affine, the built-in Bloch field, or custom.

    Affine fields store their linear part as a matrix over the pair's
    orthonormal ambient coordinates (see ``SymmetricPair.p_basis``) and the
    offset as an ambient point.  The Bloch field is only valid on
    ``PolarDecomposition(2)`` with ambient coordinates ``(y, z)``:

        X(y, z) = (-Gamma * y, gamma * (1 - z)).
    """

    kind: str
    matrix: np.ndarray | None = None
    offset: object | None = None
    Gamma: float | None = None
    gamma: float | None = None
    evaluator: object | None = None
    declared_lipschitz: float | None = field(default=None)

    @classmethod
    def affine(cls, matrix, offset):
        matrix = np.asarray(matrix, dtype=float)
        return cls(kind="affine", matrix=matrix, offset=offset)

    @classmethod
    def bloch(cls, Gamma, gamma=1.0):
        if Gamma < 0 or gamma < 0:
            raise DomainError("bloch rates must be nonnegative")
        return cls(kind="bloch", Gamma=float(Gamma), gamma=float(gamma))

    @classmethod
    def custom(cls, evaluator, lipschitz_bound=None):
        return cls(kind="custom", evaluator=evaluator,
                   declared_lipschitz=lipschitz_bound)

    def _check_bloch_pair(self, pair):
        if not isinstance(pair, PolarDecomposition) or pair.n != 2:
            raise ShapeError("the bloch field is only defined on polar n=2")

    def __call__(self, pair, p):
        if self.kind == "affine":
            c = pair.p_to_coords(p)
            if self.matrix.shape != (c.size, c.size):
                raise ShapeError(
                    f"affine matrix must be {c.size}x{c.size} for this pair")
            return pair.p_add(pair.p_from_coords(self.matrix @ c), self.offset)
        if self.kind == "bloch":
            self._check_bloch_pair(pair)
            y, z = p
            return np.array([-self.Gamma * y, self.gamma * (1.0 - z)])
        if self.kind == "custom":
            return self.evaluator(p)
        raise ShapeError(f"unknown drift kind {self.kind!r}")

    def lipschitz(self, pair):
        """A Lipschitz bound for step control and deviation estimates."""
        if self.kind == "affine":
            return float(np.linalg.norm(self.matrix, 2))
        if self.kind == "bloch":
            return float(max(self.Gamma, self.gamma))
        if self.declared_lipschitz is not None:
            return float(self.declared_lipschitz)
        warnings.warn("custom drift declared no Lipschitz bound; "
                      f"using conservative default {DEFAULT_CUSTOM_LIPSCHITZ}",
                      stacklevel=2)
        return DEFAULT_CUSTOM_LIPSCHITZ

    def linear_bound(self, pair):
        """Constants ``(C1, C2)`` with ``|X(p)| <= C1 |p| + C2``."""
        if self.kind == "affine":
            return (float(np.linalg.norm(self.matrix, 2)),
                    float(pair.p_norm(self.offset)))
        if self.kind == "bloch":
            return float(max(self.Gamma, self.gamma)), float(self.gamma)
        raise DomainError("linear bound only available for affine/bloch fields")

    def to_dict(self, pair):
        if self.kind == "affine":
            return {"kind": "affine",
                    "matrix": [float(v) for v in self.matrix.ravel()],
                    "offset": [float(v) for v in pair.p_to_coords(self.offset)]}
        if self.kind == "bloch":
            return {"kind": "bloch", "Gamma": self.Gamma, "gamma": self.gamma}
        raise DomainError("custom fields have no serialized form")


def drift_from_dict(pair, d):
    """Parse ``{"kind": "affine", "matrix": [...], "offset": [...]}`` etc."""
    kind = d.get("kind")
    if kind == "affine":
        dim = pair.ambient_dim
        matrix = np.asarray(d["matrix"], dtype=float).reshape(dim, dim)
        offset = pair.p_from_coords(np.asarray(d["offset"], dtype=float))
        return DriftField.affine(matrix, offset)
    if kind == "bloch":
        return DriftField.bloch(d["Gamma"], d.get("gamma", 1.0))
    raise ShapeError(f"unknown drift kind {kind!r}")


def make_random_affine(pair, rng, linear_scale=1.0, offset_scale=1.0,
                       contraction=0.0):
    """Random affine drift in ambient coordinates (test/demo helper)."""
    d = pair.ambient_dim
    A = rng.standard_normal((d, d)) * (linear_scale / math.sqrt(d))
    A -= contraction * np.eye(d)
    offset = pair.p_from_coords(rng.standard_normal(d) * offset_scale)
    return DriftField.affine(A, offset)


def induced_field(pair, X, K, a):
    """Evaluate the induced flat-space field ``X_K`` at ``a``."""
    a = pair.check_a(a)
    p = pair.adjoint_action(K, pair.embed(a))
    pulled = pair.adjoint_action(pair.group_inverse(K), X(pair, p))
    return pair.project_abelian(pulled)


def _is_planar_rotation_pair(pair):
    return isinstance(pair, PolarDecomposition) and pair.n == 2


def angle_grid_elements(n_angles):
    angles = np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)
    return angles, [rotation_2d(t) for t in angles]


def induced_values_on_angles(pair, X, a, angles):
    """Vectorized induced values for the planar rotation group."""
    a = pair.check_a(a)[0]
    c = np.cos(angles)
    s = np.sin(angles)
    if X.kind == "bloch":
        return (X.Gamma - X.gamma) * a * c * c + X.gamma * c - X.Gamma * a
    if X.kind == "affine":
        # u(theta) = R(theta) e_z = (-sin, cos); value = <X(a u), u>
        U = np.stack([-s, c])
        vals_p = X.matrix @ (a * U) + np.asarray(X.offset, dtype=float)[:, None]
        return np.einsum("ij,ij->j", vals_p, U)
    U = np.stack([-s, c])
    P = a * U
    vals = np.empty(angles.size)
    for i in range(angles.size):
        vals[i] = pair.inner(X(pair, P[:, i]), U[:, i])
    return vals


@dataclass
class DervSample:
    """Sampled achievable derivatives at a base point.

    ``entries`` pairs each sampled group element with its induced value; the
    stacked values are kept alongside for vectorized work.  ``hull`` is an
    optional low-dimensional convex-hull summary (vertex indices).
    """

    a: np.ndarray
    entries: list
    hull: dict | None = None

    @property
    def values(self):
        return np.array([v for _, v in self.entries]).reshape(len(self.entries), -1)

    def __len__(self):
        return len(self.entries)


def _compute_hull(values):
    """Vertex summary of low-dimensional sample clouds.

    The cloud is first projected onto its affine span (samples may sit inside
    a hyperplane, e.g. zero-sum coordinates), then qhull runs in the reduced
    dimension.  Returns None when the span dimension exceeds 3.
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    if m == 0:
        return None
    center = values.mean(axis=0)
    rec = values - center[None, :]
    u, s, vt = np.linalg.svd(rec, full_matrices=False)
    rank = int((s > 1e-12 * max(s.max(initial=0.0), 1.0)).sum())
    if rank == 0:
        return {"vertices": [0], "span_dim": 0}
    if rank > 3:
        return None
    proj = rec @ vt[:rank].T
    if rank == 1:
        return {"vertices": [int(proj[:, 0].argmin()), int(proj[:, 0].argmax())],
                "span_dim": 1}
    if m <= rank + 1:
        return {"vertices": list(range(m)), "span_dim": rank}
    try:
        from scipy.spatial import ConvexHull
        hull = ConvexHull(proj, qhull_options="QJ")
        return {"vertices": sorted(int(i) for i in hull.vertices),
                "span_dim": rank}
    except Exception:
        return None


def derv_sample(pair, X, a, n_samples=64, rng_seed=0, angle_grid=None,
                with_hull=False):
    """Sample the achievable-derivative set at ``a``.

    Group elements are Haar draws from per-sample substreams of ``rng_seed``
    (order-independent and deterministic).  On the planar rotation pair an
    ``angle_grid`` size may be given instead, producing a deterministic grid
    of rotations.
    """
    a = pair.check_a(a)
    entries = []
    if angle_grid is not None:
        if not _is_planar_rotation_pair(pair):
            raise ShapeError("angle_grid is only supported on polar n=2")
        angles, elems = angle_grid_elements(angle_grid)
        vals = induced_values_on_angles(pair, X, a, angles)
        entries = [(K, np.array([v])) for K, v in zip(elems, vals)]
    else:
        if n_samples < 1:
            raise DomainError("n_samples must be >= 1")
        streams = as_seed_sequence(rng_seed).spawn(n_samples)
        for ss in streams:
            K = pair.haar_sample(np.random.default_rng(ss))
            entries.append((K, induced_field(pair, X, K, a)))
    sample = DervSample(a=a, entries=entries)
    if with_hull:
        sample.hull = _compute_hull(sample.values)
    return sample


def derv_strict_filter(pair, X, sample, tol=1e-9):
    """Keep entries whose commutant-projected pullback is flat.

    At a regular base point the condition holds automatically, so the filter
    is a no-op there; at singular points it cuts the sampled set down to the
    derivatives realizable by genuine ambient solutions.
    """
    a = sample.a
    x = pair.embed(a)
    scale = max(1.0, float(np.linalg.norm(a)))
    kept = []
    for K, v in sample.entries:
        p = pair.adjoint_action(K, x)
        pulled = pair.adjoint_action(pair.group_inverse(K), X(pair, p))
        z = pair.project_commutant(x, pulled)
        off_flat = pair.p_norm(pair.p_sub(z, pair.embed(pair.project_abelian(z))))
        if off_flat <= tol * scale:
            kept.append((K, v))
    return DervSample(a=a, entries=kept, hull=None)


def minimize_over_group(pair, objective, starts, iters=30, fd_step=1e-6,
                        step0=0.5, target=None):
    """Local descent of ``objective(K)`` over the compact group.

    Moves in exponential coordinates with forward-difference gradients and a
    backtracking step.  Returns ``(best_value, best_K)`` over all starts;
    stops early once the value drops below ``target``.
    """
    basis = pair.k_basis()
    m = len(basis)
    best_val = math.inf
    best_K = None
    for K0 in starts:
        K = K0
        val = objective(K)
        if target is not None and val <= target:
            return val, K
        step = step0
        for _ in range(iters):
            grad = np.empty(m)
            for i, b in enumerate(basis):
                Ki = pair.group_compose(K, pair.group_exp(pair.k_scale(fd_step, b)))
                grad[i] = (objective(Ki) - val) / fd_step
            gn = float(np.linalg.norm(grad))
            if gn < 1e-12:
                break
            direction = -grad / gn
            improved = False
            trial = step
            for _ in range(14):
                K_new = pair.group_compose(
                    K, pair.group_exp(pair.k_from_coords(trial * direction)))
                v_new = objective(K_new)
                if v_new < val - 1e-15:
                    K, val = K_new, v_new
                    step = trial * 1.5
                    improved = True
                    break
                trial *= 0.5
            if not improved:
                break
            if target is not None and val <= target:
                break
        if val < best_val:
            best_val, best_K = val, K
        if target is not None and best_val <= target:
            break
    return best_val, best_K


def _refine_angle(pair, X, a, angle, half_width, iters=40):
    """Golden-section maximization of |X_theta(a)| near a grid angle."""
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = angle - half_width, angle + half_width

    def f(t):
        return abs(float(induced_values_on_angles(pair, X, a, np.array([t]))[0]))

    c = hi - gr * (hi - lo)
    d = lo + gr * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - gr * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + gr * (hi - lo)
            fd = f(d)
    t = 0.5 * (lo + hi)
    return f(t), t


def speed_limit(pair, X, a, n_restarts=8, rng_seed=0, angle_grid=None,
                iters=30):
    """Certified lower bound on the speed limit ``max_K |X_K(a)|``.

    Multi-start ascent over the group; monotone in ``n_restarts`` because the
    restart seeds form a fixed prefix sequence.  On the planar rotation pair a
    deterministic angle grid with local refinement is used.  Returns
    ``(value, K_best)``.
    """
    a = pair.check_a(a)
    if _is_planar_rotation_pair(pair):
        n = angle_grid or DEFAULT_ANGLE_GRID
        angles = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        vals = np.abs(induced_values_on_angles(pair, X, a, angles))
        i = int(vals.argmax())
        best, theta = _refine_angle(pair, X, a, angles[i], 2.0 * math.pi / n)
        if vals[i] >= best:
            best, theta = vals[i], angles[i]
        return float(best), rotation_2d(theta)

    if n_restarts < 1:
        raise DomainError("n_restarts must be >= 1")
    streams = as_seed_sequence(rng_seed).spawn(n_restarts)
    starts = [pair.group_identity()]
    starts += [pair.haar_sample(np.random.default_rng(ss)) for ss in streams]

    def neg_speed(K):
        return -float(np.linalg.norm(induced_field(pair, X, K, a)))

    val, K = minimize_over_group(pair, neg_speed, starts, iters=iters)
    return -val, K
