"""Closed-form ground truth for the dissipative two-level example.

The unit disk carries the drift ``X(y, z) = (-Gamma * y, gamma * (1 - z))``;
the reduced state is the signed radius along the z-axis.  For
``Gamma / gamma >= 3/2`` the upper envelope of achievable radial derivatives,
the envelope-following trajectory from the south pole, the optimal angle, and
the generating controls all have closed forms, which this module evaluates.

Angle convention
----------------
The disk point with reduced coordinate ``a`` and angle ``phi`` is
``a * (sin(phi), cos(phi))`` in ``(y, z)`` coordinates, i.e. ``phi`` is
measured from the positive z-axis and ``phi = pi/2`` is the horizontal axis.
The corresponding group element is ``exp(phi * J)`` with
``J = [[0, 1], [-1, 0]]``, so a control ``k = omega * J`` has scalar
coefficient ``omega = k[0, 1]``.

With this convention the optimal angle is ``arccos(a0 / a)`` on the steep
branch and ``0`` on the relaxation branch, which is continuous at the branch
point, satisfies ``u(a) = X_{phi*}(a)`` exactly, and keeps the controls
smooth where the path crosses the origin.  The induced control ``omega_0``
is the time derivative of the optimal angle and blows up at the branch time
``t0`` while the compensating control ``omega_c = -(Gamma/delta) *
sqrt((delta - eta) / eta)`` vanishes there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ReducedControls, Trajectory
from .errors import DomainError
from .fields import DriftField
from .symspace import PolarDecomposition

#: Rotation generator fixing the angle convention: exp(phi * J) maps the
#: z-axis point (0, a) to a * (sin(phi), cos(phi)).
J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class BlochParams:
    """Rates of the dissipative two-level drift.

    ``gamma`` is removable by rescaling time and rates, so all closed forms
    are evaluated at the normalized ratio ``Gamma / gamma`` and mapped back.
    """

    Gamma: float
    gamma: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise DomainError("gamma must be positive")
        if self.Gamma / self.gamma < 1.5:
            raise DomainError("need Gamma / gamma >= 3/2")

    @property
    def Gn(self):
        return self.Gamma / self.gamma

    @property
    def a0(self):
        """Branch point of the envelope, in (-1, 0]."""
        return -1.0 / (2.0 * (self.Gn - 1.0))

    @property
    def t0(self):
        """Branch time of the envelope-following trajectory."""
        g = self.Gn
        return math.log((g - 1.0) * (2.0 * g - 1.0)) / (2.0 * g) / self.gamma

    @property
    def eta(self):
        return self.Gn / (self.Gn - 1.0)

    def delta(self, t):
        g = self.Gn
        return (1.0 - 2.0 * g) ** 2 * np.exp(-2.0 * g * self.gamma * np.asarray(t)) - 1.0


def make_pair():
    return PolarDecomposition(2)


def make_drift(params):
    return DriftField.bloch(params.Gamma, params.gamma)


def group_element(phi):
    """The rotation ``exp(phi * J)`` of the angle convention."""
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, s], [-s, c]])


def so2_coefficient(k):
    """Scalar coefficient of a planar rotation generator in the J basis."""
    return float(k[0, 1])


def envelope_u(params, a):
    """Upper envelope of achievable radial derivatives on [-1, 1]."""
    a = np.asarray(a, dtype=float)
    if np.any(a < -1.0 - 1e-12) or np.any(a > 1.0 + 1e-12):
        raise DomainError("envelope is defined on [-1, 1]")
    g = params.Gn
    a0 = params.a0
    steep = -(1.0 / (4.0 * (g - 1.0) * np.where(a == 0.0, 1.0, a)) + g * a)
    relax = 1.0 - a
    out = np.where(a <= a0, steep, relax) * params.gamma
    return float(out) if out.ndim == 0 else out


def optimal_phi(params, a):
    """Envelope-achieving angle: ``arccos(a0/a)`` below the branch, else 0."""
    a = np.asarray(a, dtype=float)
    a0 = params.a0
    ratio = np.clip(a0 / np.where(a == 0.0, 1.0, a), -1.0, 1.0)
    out = np.where(a <= a0, np.arccos(ratio), 0.0)
    return float(out) if out.ndim == 0 else out


def optimal_a_star(params, t):
    """Envelope-following trajectory from the south pole ``a(0) = -1``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-15):
        raise DomainError("trajectory is defined for t >= 0")
    g = params.Gn
    tau = params.gamma * t
    t0n = params.t0 * params.gamma
    delta = (1.0 - 2.0 * g) ** 2 * np.exp(-2.0 * g * tau) - 1.0
    steep = -np.sqrt(np.clip(delta, 0.0, None)) / (2.0 * math.sqrt(g * (g - 1.0)))
    coeff = (2.0 * g - 1.0) / (2.0 * (g - 1.0)) * ((g - 1.0) * (2.0 * g - 1.0)) ** (1.0 / (2.0 * g))
    relax = 1.0 - coeff * np.exp(-tau)
    out = np.where(tau <= t0n, steep, relax)
    return float(out) if out.ndim == 0 else out


def optimal_controls(params, t):
    """Controls ``(omega_0, omega_c)`` generating the optimal path.

    ``omega_0`` is the angle rate (the induced part) and ``omega_c`` the
    compensating part cancelling the orbital drift component; both vanish
    identically for ``t >= t0``, and ``omega_0`` diverges as ``t`` increases
    to ``t0`` while ``omega_c`` tends to zero.
    """
    t = np.asarray(t, dtype=float)
    g = params.Gn
    eta = params.eta
    tau = params.gamma * t
    t0n = params.t0 * params.gamma
    delta = (1.0 - 2.0 * g) ** 2 * np.exp(-2.0 * g * tau) - 1.0
    gap = np.clip(delta - eta, 0.0, None)
    safe_gap = np.where(gap > 0, gap, 1.0)
    w0 = -g * (delta + 1.0) / delta * np.sqrt(eta / safe_gap)
    wc = -(g / delta) * np.sqrt(gap / eta)
    before = tau < t0n
    omega0 = np.where(before, w0, 0.0) * params.gamma
    omegac = np.where(before, wc, 0.0) * params.gamma
    if omega0.ndim == 0:
        return float(omega0), float(omegac)
    return omega0, omegac


def optimal_trajectory(params, t_grid):
    """The optimal reduced path sampled on a grid, as a trajectory object."""
    t_grid = np.asarray(t_grid, dtype=float)
    values = optimal_a_star(params, t_grid)
    states = [np.array([v]) for v in np.atleast_1d(values)]
    return Trajectory(times=t_grid, states=states, space="reduced",
                      meta={"system": "bloch-optimal"})


def optimal_schedule(params, t_grid):
    """Piecewise-constant schedule of envelope-achieving rotations.

    The group element on each interval is evaluated at the interval's left
    endpoint, matching the sample-and-hold contract of the integrators.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    a_vals = np.atleast_1d(optimal_a_star(params, t_grid[:-1]))
    phis = np.atleast_1d(optimal_phi(params, a_vals))
    elems = tuple(group_element(p) for p in phis)
    return ReducedControls(times=t_grid, elements=elems)


def integral_abs_omega0(params, eps, n=20001):
    """Numeric integral of ``|omega_0|`` over ``[t0 - eps, t0]``.

    Uses the substitution ``t = t0 - eps * u**2`` so the inverse-square-root
    endpoint behavior integrates smoothly; composite midpoint rule.
    """
    if eps <= 0 or eps > params.t0:
        raise DomainError("eps must lie in (0, t0]")
    u = (np.arange(n) + 0.5) / n
    t = params.t0 - eps * u ** 2
    w0, _ = optimal_controls(params, t)
    integrand = np.abs(w0) * 2.0 * eps * u
    return float(integrand.mean())
