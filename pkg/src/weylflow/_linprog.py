"""Small dense simplex solver and convex-membership helpers.

All convex feasibility questions in this package (orbit-polytope membership,
distance of a point to a sampled convex hull, cone membership) reduce to
linear programs with at most a few thousand columns.  They are solved by a
self-contained two-phase primal simplex with Bland's rule, so no external LP
solver is required.  Distances are measured in the l1 norm, which is what the
slack/penalty formulation below minimizes; an l1 bound is also an l2 bound.
"""

from __future__ import annotations

import numpy as np

from .errors import LPError

_TOL = 1e-11


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    basis[row] = col


def _simplex(T, basis, n_vars, max_iter):
    """Run Bland-rule simplex on a canonical tableau, in place."""
    for _ in range(max_iter):
        costs = T[-1, :n_vars]
        entering = np.nonzero(costs < -_TOL)[0]
        if entering.size == 0:
            return
        col = entering[0]
        column = T[:-1, col]
        positive = np.nonzero(column > _TOL)[0]
        if positive.size == 0:
            raise LPError("unbounded linear program")
        ratios = T[:-1, -1][positive] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + _TOL]
        row = ties[np.argmin(basis[ties])]
        _pivot(T, basis, row, col)
    raise LPError("simplex iteration limit reached")


def lp_solve(c, A, b, max_iter=None):
    """Minimize ``c @ x`` subject to ``A x = b`` and ``x >= 0``.

    Returns ``(x, objective)``.  Raises :class:`LPError` if the problem is
    infeasible or unbounded.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if max_iter is None:
        max_iter = 200 * (m + n + 10)

    A = A.copy()
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # Phase 1: artificial variables, drive their sum to zero.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, n:n + m] = 1.0
    T[-1] -= T[:m].sum(axis=0)
    basis = np.arange(n, n + m)
    _simplex(T, basis, n + m, max_iter)
    infeasibility = -T[-1, -1]
    if infeasibility > 1e-8 * (1.0 + abs(b).max(initial=0.0)):
        raise LPError(f"infeasible linear program (residual {infeasibility:.3e})")

    # Drive any leftover artificial variables out of the basis.
    for row in range(m):
        if basis[row] >= n:
            cols = np.nonzero(np.abs(T[row, :n]) > _TOL)[0]
            if cols.size:
                _pivot(T, basis, row, cols[0])

    keep = basis < n
    T2 = np.zeros((int(keep.sum()) + 1, n + 1))
    T2[:-1, :n] = T[:m][keep][:, :n]
    T2[:-1, -1] = T[:m][keep][:, -1]
    basis2 = basis[keep]
    T2[-1, :n] = c
    for i, var in enumerate(basis2):
        T2[-1] -= T2[-1, var] * T2[i]
    _simplex(T2, basis2, n, max_iter)

    x = np.zeros(n)
    x[basis2] = T2[: len(basis2), -1]
    return x, float(c @ x)


def _penalized_combination(points, target, extra_rows=None, extra_rhs=None,
                           simplex_constraint=True, cost_override=None):
    """Shared builder: lambda-weights plus signed l1 slack variables."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(target, dtype=float).ravel()
    m, d = P.shape
    if y.shape != (d,):
        raise LPError("target dimension mismatch")
    rows = d + (1 if simplex_constraint else 0)
    A = np.zeros((rows, m + 2 * d))
    A[:d, :m] = P.T
    A[:d, m:m + d] = np.eye(d)
    A[:d, m + d:] = -np.eye(d)
    b = np.concatenate([y, [1.0]]) if simplex_constraint else y
    if simplex_constraint:
        A[d, :m] = 1.0
    if extra_rows is not None:
        A = np.vstack([A, extra_rows])
        b = np.concatenate([b, extra_rhs])
    c = np.zeros(m + 2 * d)
    c[m:] = 1.0
    if cost_override is not None:
        c = cost_override
    return A, b, c, m, d


def hull_distance(points, target):
    """l1 distance from ``target`` to the convex hull of ``points``.

    Returns ``(distance, weights)`` where ``weights`` is a feasible convex
    combination attaining the distance (a basic solution, so its support is
    small).
    """
    A, b, c, m, _ = _penalized_combination(points, target)
    x, obj = lp_solve(c, A, b)
    lam = np.clip(x[:m], 0.0, None)
    s = lam.sum()
    if s > 0:
        lam = lam / s
    return max(obj, 0.0), lam


def hull_contains(points, target, tol=1e-9):
    """Membership of ``target`` in conv(points), with signed slack.

    ``slack`` is minus the l1 infeasibility, so membership gives ``slack = 0``
    and near-misses give small negative values.
    """
    dist, lam = hull_distance(points, target)
    return dist <= tol, -dist, lam


def cone_distance(rays, target):
    """l1 distance from ``target`` to the conic hull of ``rays``."""
    A, b, c, m, _ = _penalized_combination(rays, target, simplex_constraint=False)
    x, obj = lp_solve(c, A, b)
    return max(obj, 0.0), np.clip(x[:m], 0.0, None)


def cone_contains(rays, target, tol=1e-9):
    dist, mu = cone_distance(rays, target)
    return dist <= tol, -dist, mu


def max_weight_in_hull(points, target, index, budget):
    """Maximize the weight of one vertex over near-exact representations.

    Over all convex combinations of ``points`` reproducing ``target`` with l1
    error at most ``budget``, maximize ``weights[index]``.  Returns the full
    weight vector of the maximizer.
    """
    m = np.atleast_2d(points).shape[0]
    d = np.asarray(target).size
    A, b, c, _, _ = _penalized_combination(points, target)
    # Extra row: sum of slacks + one more slack variable == budget.
    A = np.hstack([A, np.zeros((A.shape[0], 1))])
    budget_row = np.zeros((1, A.shape[1]))
    budget_row[0, m:m + 2 * d] = 1.0
    budget_row[0, -1] = 1.0
    A = np.vstack([A, budget_row])
    b = np.concatenate([b, [budget]])
    cost = np.zeros(A.shape[1])
    cost[index] = -1.0
    x, _ = lp_solve(cost, A, b)
    lam = np.clip(x[:m], 0.0, None)
    s = lam.sum()
    return lam / s if s > 0 else lam
