import math

import numpy as np
import pytest

from weylflow import DomainError, bloch, regular_lift
from weylflow.fields import induced_values_on_angles


@pytest.fixture(scope="module")
def params():
    return bloch.BlochParams(3.0)


def test_params_validation():
    with pytest.raises(DomainError):
        bloch.BlochParams(1.0)
    with pytest.raises(DomainError):
        bloch.BlochParams(3.0, gamma=0.0)
    p = bloch.BlochParams(3.0)
    assert p.a0 == pytest.approx(-0.25)
    assert p.t0 == pytest.approx(math.log(10.0) / 6.0, abs=1e-15)
    assert p.eta == pytest.approx(1.5)
    assert -1.0 < p.a0 < 0.0
    assert bloch.BlochParams(3.0).delta(p.t0) == pytest.approx(p.eta, abs=1e-12)


def test_envelope_branch_values(params):
    # both branches at the branch point, and the frozen endpoint values
    a0 = params.a0
    steep = -(1.0 / (4.0 * 2.0 * a0) + 3.0 * a0)
    relax = 1.0 - a0
    assert steep == pytest.approx(relax, abs=1e-12)
    assert bloch.envelope_u(params, a0) == pytest.approx(1.25, abs=1e-12)
    assert bloch.envelope_u(params, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert bloch.envelope_u(params, -1.0) == pytest.approx(25.0 / 8.0, abs=1e-12)
    with pytest.raises(DomainError):
        bloch.envelope_u(params, 1.5)


@pytest.mark.parametrize("Gamma", [1.5, 2.0, 3.0, 5.0])
def test_envelope_matches_refined_grid_max(Gamma):
    params = bloch.BlochParams(Gamma)
    pair = bloch.make_pair()
    X = bloch.make_drift(params)
    angles = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
    g = Gamma
    for a in np.linspace(-1.0, 1.0, 201):
        vals = induced_values_on_angles(pair, X, np.array([a]), angles)
        i = int(vals.argmax())
        # three Newton refinements on the stationarity of c = cos(phi)
        c = math.cos(angles[i])
        for _ in range(3):
            grad = 2.0 * (g - 1.0) * a * c + 1.0
            hess = 2.0 * (g - 1.0) * a
            if abs(hess) > 1e-14:
                c = min(1.0, max(-1.0, c - grad / hess))
        best = max(vals[i], (g - 1.0) * a * c * c + c - g * a)
        assert best == pytest.approx(bloch.envelope_u(params, a), abs=1e-9)


def test_optimal_phi_achieves_envelope(params):
    pair = bloch.make_pair()
    X = bloch.make_drift(params)
    for a in np.linspace(-1.0, 1.0, 41):
        phi = bloch.optimal_phi(params, a)
        val = induced_values_on_angles(pair, X, np.array([a]),
                                       np.array([phi]))[0]
        assert val == pytest.approx(bloch.envelope_u(params, a), abs=1e-12)
    assert bloch.optimal_phi(params, params.a0) == pytest.approx(0.0, abs=1e-7)
    # constant on the relaxation branch
    assert bloch.optimal_phi(params, 0.5) == 0.0


def test_a_star_values_and_continuity(params):
    assert bloch.optimal_a_star(params, 0.0) == pytest.approx(-1.0, abs=1e-12)
    t0 = params.t0
    left = bloch.optimal_a_star(params, t0 - 1e-15)
    right = bloch.optimal_a_star(params, t0 + 1e-15)
    assert left == pytest.approx(params.a0, abs=1e-12)
    assert right == pytest.approx(params.a0, abs=1e-12)
    assert bloch.optimal_a_star(params, 50.0) == pytest.approx(1.0, abs=1e-12)


def test_a_star_solves_envelope_ode(params):
    h = 1e-7
    for t in np.concatenate([np.linspace(0.01, params.t0 - 0.01, 25),
                             np.linspace(params.t0 + 0.01, 3.0, 25)]):
        fd = (bloch.optimal_a_star(params, t + h)
              - bloch.optimal_a_star(params, t - h)) / (2.0 * h)
        u = bloch.envelope_u(params, bloch.optimal_a_star(params, t))
        assert fd == pytest.approx(u, abs=1e-6)


def test_controls_explosion_asymmetry(params):
    t0 = params.t0
    w0_prev = 0.0
    for k in range(2, 7):
        w0, wc = bloch.optimal_controls(params, t0 - 10.0 ** (-k))
        assert abs(w0) > abs(w0_prev)
        w0_prev = w0
    w0, wc = bloch.optimal_controls(params, t0 - 1e-6)
    assert abs(w0) > 1e2 and abs(wc) < 1e-2
    assert bloch.optimal_controls(params, t0) == (0.0, 0.0)
    assert bloch.optimal_controls(params, t0 + 0.5) == (0.0, 0.0)


def test_controls_generate_the_optimal_path(params):
    # velocity matching: p' = X(p) + (w0 + wc) J p along the closed forms
    pair = bloch.make_pair()
    X = bloch.make_drift(params)
    h = 1e-7

    def p_of(t):
        a = bloch.optimal_a_star(params, t)
        phi = bloch.optimal_phi(params, a)
        return a * np.array([math.sin(phi), math.cos(phi)])

    for t in (0.05, 0.15, 0.25, 0.33):
        pdot = (p_of(t + h) - p_of(t - h)) / (2.0 * h)
        w0, wc = bloch.optimal_controls(params, t)
        rhs = X(pair, p_of(t)) + (w0 + wc) * (bloch.J2 @ p_of(t))
        assert np.allclose(pdot, rhs, atol=1e-5)


def test_lift_reproduces_controls(params):
    pair = bloch.make_pair()
    X = bloch.make_drift(params)
    dt = 5e-5
    t0 = params.t0
    tg = np.arange(0.05, t0 - 0.05 + dt / 2, dt)
    traj = bloch.optimal_trajectory(params, tg)
    sched = bloch.optimal_schedule(params, np.append(tg, tg[-1] + dt))
    lift = regular_lift(pair, X, traj, sched, verify=False)
    w0_ref, wc_ref = bloch.optimal_controls(params, tg)
    w0 = np.array([bloch.so2_coefficient(k) for k in lift.induced])
    wc = np.array([bloch.so2_coefficient(k) for k in lift.compensating])
    inner = slice(1, -1)
    assert np.abs(w0[inner] - w0_ref[inner]).max() < 1e-5
    assert np.abs(wc[inner] - wc_ref[inner]).max() < 1e-5


def test_controls_smooth_at_origin_crossing(params):
    # the radius crosses zero on the relaxation branch where both controls
    # vanish identically; evaluate across the crossing time
    g = params.Gn
    coeff = (2 * g - 1) / (2 * (g - 1)) * ((g - 1) * (2 * g - 1)) ** (1 / (2 * g))
    t_zero = math.log(coeff)
    assert bloch.optimal_a_star(params, t_zero) == pytest.approx(0.0, abs=1e-12)
    for t in np.linspace(t_zero - 0.01, t_zero + 0.01, 11):
        w0, wc = bloch.optimal_controls(params, t)
        assert w0 == 0.0 and wc == 0.0


def test_gamma_rescaling_consistency():
    base = bloch.BlochParams(3.0, 1.0)
    scaled = bloch.BlochParams(6.0, 2.0)
    assert scaled.t0 == pytest.approx(base.t0 / 2.0, abs=1e-14)
    for t in (0.05, 0.1, 0.15):
        assert bloch.optimal_a_star(scaled, t) == pytest.approx(
            bloch.optimal_a_star(base, 2.0 * t), abs=1e-13)
        w0s, wcs = bloch.optimal_controls(scaled, t)
        w0b, wcb = bloch.optimal_controls(base, 2.0 * t)
        assert w0s == pytest.approx(2.0 * w0b, abs=1e-10)
        assert wcs == pytest.approx(2.0 * wcb, abs=1e-10)
    for a in (-0.9, -0.3, 0.4):
        assert bloch.envelope_u(scaled, a) == pytest.approx(
            2.0 * bloch.envelope_u(base, a), abs=1e-12)


def test_integral_abs_omega0_converges(params):
    # integrable inverse-square-root endpoint: value settles as n grows
    v1 = bloch.integral_abs_omega0(params, 0.01, n=2000)
    v2 = bloch.integral_abs_omega0(params, 0.01, n=20000)
    assert v1 == pytest.approx(v2, rel=1e-3)
    assert v2 > 0
    with pytest.raises(DomainError):
        bloch.integral_abs_omega0(params, 0.0)
