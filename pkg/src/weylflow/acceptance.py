"""Self-test suite: the library's quantitative exit criteria.

Each criterion is a deterministic, seeded check with a pinned tolerance,
returning a :class:`CriterionResult`.  ``run_all`` executes them in order and
prints one pass/fail line per criterion; the CLI ``selftest`` subcommand
returns a nonzero exit status if any criterion fails.

Criterion 3 contains one bound that the exact closed forms do not satisfy
(the compensating control at 1e-2 and 1e-3 before the branch time is 0.582
and 0.198, above the 0.1 window).  It is asserted as stated rather than
loosened; see the test suite for the analysis.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import bloch
from ._linprog import cone_distance, hull_contains
from .analysis import majorizes, majorization_margin, orbit_points, \
    simulate_dominating, stabilizable_test, invariance_test, \
    tangent_cone_at_vertex, weyl_polytope
from .dynamics import (ReducedControls, Selector, integrate_full,
                       integrate_inclusion, integrate_reduced, path_length,
                       path_speeds, FullControls)
from .errors import WeylflowError
from .fields import (DriftField, derv_sample, induced_field,
                     induced_values_on_angles, make_random_affine,
                     speed_limit)
from .symspace import HermitianEVD, PolarDecomposition, RealSVD
from .transfer import (approximate_lift, project_trajectory,
                       projection_residual, regular_lift)


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str
    seconds: float


def _result(index, name, passed, detail, t_start):
    return CriterionResult(index=index, name=name, passed=bool(passed),
                           detail=detail, seconds=time.monotonic() - t_start)


def criterion_01_envelope():
    """Grid-plus-Newton maximization matches the closed-form envelope."""
    t0 = time.monotonic()
    params = bloch.BlochParams(3.0)
    g = 3.0
    a = np.linspace(-1.0, 1.0, 201)
    c = np.cos(np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False))
    vals = (g - 1.0) * a[:, None] * c[None, :] ** 2 + c[None, :] - g * a[:, None]
    best_c = c[vals.argmax(axis=1)]
    for _ in range(3):
        grad = 2.0 * (g - 1.0) * a * best_c + 1.0
        hess = 2.0 * (g - 1.0) * a
        step = np.where(np.abs(hess) > 1e-14, grad / np.where(hess == 0, 1, hess), 0.0)
        best_c = np.clip(best_c - step, -1.0, 1.0)
    refined = (g - 1.0) * a * best_c ** 2 + best_c - g * a
    grid_max = np.maximum(vals.max(axis=1), refined)
    gap = float(np.abs(grid_max - bloch.envelope_u(params, a)).max())
    elapsed = time.monotonic() - t0
    ok = gap <= 1e-9 and elapsed < 1.0
    return _result(1, "closed-form envelope vs refined grid max", ok,
                   f"max gap {gap:.2e}, runtime {elapsed:.2f}s", t0)


def criterion_02_optimal_trajectory():
    """Envelope-following inclusion integration matches the closed form."""
    t0 = time.monotonic()
    params = bloch.BlochParams(3.0)
    pair = bloch.make_pair()
    X = bloch.make_drift(params)
    traj = integrate_inclusion(pair, X, Selector.envelope_max(),
                               np.array([-1.0]), 5.0, 1e-4, angle_grid=4096)
    ref = bloch.optimal_a_star(params, traj.times)
    sup = float(np.abs(traj.states_matrix()[:, 0] - ref).max())
    # branch continuity at the branch time, from both closed-form branches
    tb = params.t0
    g = params.Gn
    steep = -math.sqrt((1 - 2 * g) ** 2 * math.exp(-2 * g * tb) - 1.0) \
        / (2.0 * math.sqrt(g * (g - 1.0)))
    coeff = (2 * g - 1) / (2 * (g - 1)) * ((g - 1) * (2 * g - 1)) ** (1 / (2 * g))
    relax = 1.0 - coeff * math.exp(-tb)
    cont = max(abs(steep - params.a0), abs(relax - params.a0))
    ok = sup <= 2e-4 and cont <= 1e-12
    return _result(2, "optimal trajectory via envelope selector", ok,
                   f"sup error {sup:.2e}, branch continuity {cont:.2e}", t0)


def criterion_03_optimal_controls():
    """Lift reproduces the control closed forms; explosion window bounds."""
    t0 = time.monotonic()
    params = bloch.BlochParams(3.0)
    pair = bloch.make_pair()
    X = bloch.make_drift(params)
    dt = 5e-5
    tb = params.t0
    tg = np.arange(0.05, tb - 0.05 + dt / 2, dt)
    traj = bloch.optimal_trajectory(params, tg)
    sched = bloch.optimal_schedule(params, np.append(tg, tg[-1] + dt))
    lift = regular_lift(pair, X, traj, sched, verify=False)
    w0_ref, wc_ref = bloch.optimal_controls(params, tg)
    w0 = np.array([bloch.so2_coefficient(k) for k in lift.induced])
    wc = np.array([bloch.so2_coefficient(k) for k in lift.compensating])
    inner = slice(1, -1)
    gap0 = float(np.abs(w0[inner] - w0_ref[inner]).max())
    gapc = float(np.abs(wc[inner] - wc_ref[inner]).max())
    reproduce_ok = gap0 <= 1e-5 and gapc <= 1e-5

    ks = range(2, 7)
    w0_k, wc_k = zip(*(bloch.optimal_controls(params, tb - 10.0 ** (-k))
                       for k in ks))
    increasing = all(abs(b) > abs(a) for a, b in zip(w0_k, w0_k[1:]))
    wc_bounded = all(abs(w) <= 1e-1 for w in wc_k)
    ok = reproduce_ok and increasing and wc_bounded
    wc_str = ", ".join(f"1e-{k}:{abs(w):.3f}" for k, w in zip(ks, wc_k))
    return _result(3, "optimal controls: lift reproduction and explosion", ok,
                   f"lift gaps ({gap0:.2e}, {gapc:.2e}), |w0| increasing: "
                   f"{increasing}, |wc(t0-s)| <= 0.1: {wc_bounded} [{wc_str}]",
                   t0)


def _random_full_run(pair, seed, T=1.0, dt=1e-3):
    rng = np.random.default_rng(seed)
    X = make_random_affine(pair, rng, linear_scale=0.6, offset_scale=0.6,
                           contraction=0.4)
    basis = pair.k_basis()
    n_pieces = 4
    times = np.linspace(0.0, T, n_pieces + 1)
    values = rng.standard_normal((n_pieces, len(basis))) * 0.8
    sched = FullControls(times=times, values=values, directions=tuple(basis))
    p0 = pair.random_p(rng, scale=0.8)
    traj = integrate_full(pair, X, sched, p0, T, dt)
    return X, traj


def criterion_04_projection_equivalence():
    """Projected ambient runs satisfy the reduced inclusion node-wise."""
    t0 = time.monotonic()
    pairs = [HermitianEVD(3), RealSVD(3, 2), PolarDecomposition(2)]
    worst = 1.0
    details = []
    for pair in pairs:
        fractions = []
        for seed in range(20):
            X, traj = _random_full_run(pair, (11, seed))
            from .dynamics import Trajectory
            step = 10
            coarse_ambient = Trajectory(times=traj.times[::step],
                                        states=traj.states[::step],
                                        space="ambient")
            coarse = project_trajectory(pair, coarse_ambient)
            report = projection_residual(pair, X, coarse, n_samples=16,
                                         rng_seed=(12, seed))
            fractions.append(report.fraction_within)
        worst = min(worst, min(fractions))
        details.append(f"{pair.kind}: min fraction {min(fractions):.3f}")
    elapsed = time.monotonic() - t0
    ok = worst >= 0.95 and elapsed < 30.0
    return _result(4, "projection equivalence on random ambient runs", ok,
                   "; ".join(details) + f"; runtime {elapsed:.1f}s", t0)


def criterion_05_lift_roundtrip():
    """Lift, re-integrate, re-project: returns the original chamber path."""
    t0 = time.monotonic()
    setups = []
    evd = HermitianEVD(2)
    setups.append((evd, np.array([0.8, -0.8]), np.array([1.0, -1.0])))
    svd = RealSVD(3, 2)
    setups.append((svd, np.array([1.4, 0.6]), np.array([1.5, 0.5])))
    worst = 0.0
    dt = 1e-4
    for i, (pair, a0, target) in enumerate(setups):
        rng = np.random.default_rng(100 + i)
        X = DriftField.affine(-np.eye(pair.ambient_dim), pair.embed(target))
        k0 = pair.k_from_coords(rng.standard_normal(len(pair.k_basis())) * 0.4)
        times = np.arange(0.0, 0.5 + dt / 2, dt)
        sched = ReducedControls.from_function(
            lambda t: pair.group_exp(pair.k_scale(t, k0)),
            np.append(times, 0.5 + dt))
        traj = integrate_reduced(pair, X, sched, a0, 0.5, dt)
        margins = [pair.regularity_margin(a) for a in traj.states]
        assert min(margins) > 0.05
        lift = regular_lift(pair, X, traj, sched, verify=True)
        proj = project_trajectory(pair, lift.reintegrated)
        ref = np.array([pair.chamber_fold(a)[0] for a in traj.states])
        worst = max(worst, float(np.abs(proj.states_matrix() - ref).max()))
    ok = worst <= 1e-4
    return _result(5, "regular lift roundtrip", ok,
                   f"sup roundtrip error {worst:.2e}", t0)


def criterion_06_approximate_lift():
    """Excised lifts: deviation decreases with the window and obeys the bound."""
    t0 = time.monotonic()
    pair = HermitianEVD(2)
    D = np.array([[0.5, 0.4], [0.4, -0.5]], dtype=complex)
    X = DriftField.affine(np.zeros((3, 3)), D)
    dt = 1e-3
    sched = ReducedControls.constant(pair.group_identity(), 2.0 + dt)
    traj = integrate_reduced(pair, X, sched, np.array([-0.5, 0.5]), 2.0, dt)
    deviations = []
    bounds = []
    for eps in (0.2, 0.1, 0.05, 0.025):
        res = approximate_lift(pair, X, traj, sched, eps=eps, tol_sing=0.02)
        deviations.append(res.deviation)
        bounds.append(res.gronwall_bound)
    monotone = all(d1 > d2 for d1, d2 in zip(deviations, deviations[1:]))
    below = all(d <= b for d, b in zip(deviations, bounds))
    ok = monotone and below
    return _result(6, "approximate lift near a chamber wall", ok,
                   f"deviations {['%.3e' % d for d in deviations]}, "
                   f"bounds {['%.3e' % b for b in bounds]}", t0)


def criterion_07_weyl_equivariance():
    """Induced fields transform covariantly under the finite symmetry."""
    t0 = time.monotonic()
    pair = HermitianEVD(3)
    rng = np.random.default_rng(7)
    X = make_random_affine(pair, rng)
    worst = 0.0
    for _ in range(50):
        a = pair.random_a(rng)
        K = pair.haar_sample(rng)
        for w in pair.weyl_elements():
            N = pair.weyl_representative(w)
            lhs = induced_field(pair, X, pair.group_compose(K, N), a)
            rhs = w.inverse().apply(induced_field(pair, X, K, w.apply(a)))
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    ok = worst <= 1e-10
    return _result(7, "finite-symmetry equivariance of induced fields", ok,
                   f"max violation {worst:.2e}", t0)


def criterion_08_fixed_point_at_origin():
    """Achievable derivatives at the origin fill the orbit hull of the offset."""
    t0 = time.monotonic()
    pair = HermitianEVD(3)
    rng = np.random.default_rng(8)
    x0 = np.array([0.8, -0.1, -0.7])
    A = rng.standard_normal((8, 8)) * 0.4
    X = DriftField.affine(A, pair.embed(x0))
    orbit = orbit_points(pair, x0)
    sample = derv_sample(pair, X, np.zeros(3), n_samples=200, rng_seed=81)
    min_slack = 0.0
    for v in sample.values:
        _, slack, _ = hull_contains(orbit, v, tol=1e-8)
        min_slack = min(min_slack, slack)
    inside = min_slack >= -1e-8
    K0, v0 = sample.entries[0]
    completed = np.vstack([sample.values,
                           np.array([w.apply(v0) for w in pair.weyl_elements()])])
    zero_in, zero_slack, _ = hull_contains(completed, np.zeros(3), tol=1e-8)
    # the constant-zero relaxed solution is achievable node-wise
    from .dynamics import Trajectory
    times = np.linspace(0.0, 0.5, 26)
    const = Trajectory(times=times, states=[np.zeros(3)] * 26, space="reduced")
    report = projection_residual(pair, X, const, n_samples=32, rng_seed=82)
    ok = inside and zero_in and report.fraction_within == 1.0
    return _result(8, "origin as a relaxed fixed point", ok,
                   f"orbit-hull slack {min_slack:.2e}, zero-in-hull slack "
                   f"{zero_slack:.2e}, residual fraction "
                   f"{report.fraction_within:.2f}", t0)


def criterion_09_schur_horn():
    """Shifted achievable derivatives obey the partial-sum inequalities."""
    t0 = time.monotonic()
    pair = HermitianEVD(3)
    d = np.array([1.0, 0.25, -1.25])
    X = DriftField.affine(-np.eye(8), pair.embed(d))
    rng = np.random.default_rng(9)
    a = pair.random_a(rng)
    x = pair.embed(a)
    D = pair.embed(d)
    worst = 0.0
    for _ in range(10000):
        K = pair.haar_sample(rng)
        v = pair.project_abelian(pair.adjoint_action(pair.group_inverse(K), D))
        worst = min(worst, majorization_margin(pair, d, v))
    vertex_gap = 0.0
    import itertools
    for perm in itertools.permutations(range(3)):
        P = np.zeros((3, 3), dtype=complex)
        for i, j in enumerate(perm):
            P[j, i] = 1.0
        # the shifted derivative at a permutation element is the permuted
        # diagonal; evaluate the orbit-projection map directly
        v = pair.project_abelian(pair.adjoint_action(pair.group_inverse(P), D))
        vertex_gap = max(vertex_gap, float(np.abs(v - d[list(perm)]).max()))
    ok = worst >= -1e-10 and vertex_gap == 0.0
    return _result(9, "partial-sum inequalities for sampled derivatives", ok,
                   f"min margin {worst:.2e}, vertex exactness gap {vertex_gap:.1e}",
                   t0)


def criterion_10_majorization_suite():
    """Fast partial-sum paths agree with the LP ground truth."""
    t0 = time.monotonic()
    rng = np.random.default_rng(10)
    agree_all = True
    details = []
    for pair in (HermitianEVD(4), RealSVD(3, 3)):
        agreements = 0
        for i in range(1000):
            a = pair.random_a(rng)
            if i % 2 == 0:
                lam = rng.dirichlet(np.ones(pair.weyl_order))
                b = lam @ pair.weyl_apply_all(a)
            else:
                b = pair.random_a(rng)
            fast = majorizes(pair, a, b, tol=1e-9, method="fast")
            lp = majorizes(pair, a, b, tol=1e-9, method="lp")
            agreements += fast == lp
        details.append(f"{pair.kind}: {agreements}/1000")
        agree_all &= agreements == 1000
    # preorder laws and vertex-set 1-Lipschitz continuity
    pair = HermitianEVD(3)
    laws = True
    lips = 0.0
    for _ in range(200):
        a = pair.random_a(rng)
        lam = rng.dirichlet(np.ones(6))
        b = lam @ pair.weyl_apply_all(a)
        lam2 = rng.dirichlet(np.ones(6))
        c = lam2 @ pair.weyl_apply_all(b)
        laws &= majorizes(pair, a, b) and majorizes(pair, b, c) and \
            majorizes(pair, a, c)
        e = a + rng.standard_normal(3) * 0.5
        Va, Ve = pair.weyl_apply_all(a), pair.weyl_apply_all(e)
        dmat = np.linalg.norm(Va[:, None] - Ve[None, :], axis=2)
        hausdorff = max(dmat.min(axis=0).max(), dmat.min(axis=1).max())
        lips = max(lips, hausdorff - np.linalg.norm(a - e))
    ok = agree_all and laws and lips <= 1e-10
    return _result(10, "majorization fast path vs LP, preorder, Lipschitz", ok,
                   "; ".join(details) + f"; laws {laws}, lipschitz excess {lips:.1e}",
                   t0)


def criterion_11_simulation():
    """Dominating solutions preserve majorization node-wise."""
    t0 = time.monotonic()
    instances = [HermitianEVD(2), HermitianEVD(3), RealSVD(2, 2)]
    min_slack = 0.0
    all_ok = True
    for pair in instances:
        for seed in range(20):
            rng = np.random.default_rng((13, seed))
            X = make_random_affine(pair, rng, linear_scale=0.5,
                                   offset_scale=0.4, contraction=0.6)
            Ks = tuple(pair.haar_sample((14, seed, j)) for j in range(3))
            sched = ReducedControls(times=np.linspace(0, 0.5, 4), elements=Ks)
            a0 = pair.random_a(rng, scale=0.7)
            traj = integrate_reduced(pair, X, sched, a0, 0.5, 2.5e-3)
            fold0, _ = pair.chamber_fold(a0)
            b0 = 1.4 * fold0 + 0.1 * pair.chamber_generators.sum(axis=0)
            res = simulate_dominating(pair, X, traj, b0, slack_tol=1e-6)
            min_slack = min(min_slack, float(res.slacks.min()))
            all_ok &= res.ok
    ok = all_ok and min_slack >= -1e-6
    return _result(11, "majorization-preserving simulation", ok,
                   f"min LP slack {min_slack:.2e}", t0)


def criterion_12_orbitope_cone():
    """Closed-form tangent cone at a regular vertex matches the LP probe."""
    t0 = time.monotonic()
    pair = HermitianEVD(3)
    a = np.array([1.2, 0.1, -1.3])
    poly = weyl_polytope(pair, a)
    cone = tangent_cone_at_vertex(pair, poly, a)
    rays = poly.vertices - a[None, :]
    rays = rays[np.linalg.norm(rays, axis=1) > 1e-12]
    rng = np.random.default_rng(12)
    agree = 0
    for _ in range(1000):
        v = rng.standard_normal(3)
        v -= v.mean()
        closed = cone.contains(v, tol=1e-9)
        lp = cone_distance(rays, v)[0] <= 1e-9
        agree += closed == lp
    ok = agree == 1000
    return _result(12, "orbitope tangent cone vs LP probe", ok,
                   f"{agree}/1000 probes agree", t0)


def criterion_13_disk_invariance_and_stabilizability():
    """Unit-disk invariance and the stabilizability oracle."""
    t0 = time.monotonic()
    params = bloch.BlochParams(3.0)
    pair = bloch.make_pair()
    X = bloch.make_drift(params)
    inv_ok = invariance_test(pair, X, 1.0)
    outward = DriftField.affine(np.eye(2), np.zeros(2))
    inv_bad = invariance_test(pair, outward, 1.0)
    disagreements = 0
    angles = np.linspace(0.0, 2.0 * math.pi, 2048, endpoint=False)
    for a in np.linspace(-1.0, 1.0, 401):
        vals = induced_values_on_angles(pair, X, np.array([a]), angles)
        oracle = bool(vals.min() <= 1e-9 and vals.max() >= -1e-9)
        out = stabilizable_test(pair, X, np.array([a]))
        disagreements += (out["strong"] != oracle) + (out["weak"] != oracle)
    ok = inv_ok and not inv_bad and disagreements == 0
    return _result(13, "disk invariance and stabilizability oracle", ok,
                   f"invariant {inv_ok}, outward-flow invariant {inv_bad}, "
                   f"oracle disagreements {disagreements}", t0)


def criterion_14_speed_limit():
    """Path lengths respect the sampled speed limit; c(0) = 1 for the disk."""
    t0 = time.monotonic()
    params = bloch.BlochParams(3.0)
    pair = bloch.make_pair()
    X = bloch.make_drift(params)
    c0, _ = speed_limit(pair, X, np.array([0.0]))
    trajs = []
    trajs.append((pair, X, integrate_inclusion(
        pair, X, Selector.envelope_max(), np.array([-1.0]), 2.0, 1e-3,
        angle_grid=1024)))
    evd = HermitianEVD(2)
    rng = np.random.default_rng(14)
    Xe = make_random_affine(evd, rng, contraction=0.5)
    sched = ReducedControls(times=np.linspace(0, 1, 4),
                            elements=tuple(evd.haar_sample(s) for s in range(3)))
    trajs.append((evd, Xe, integrate_reduced(evd, Xe, sched,
                                             evd.random_a(rng), 1.0, 1e-3)))
    svd = RealSVD(3, 2)
    Xs = make_random_affine(svd, rng, contraction=0.5)
    sched_s = ReducedControls.constant(svd.haar_sample(2), 1.0)
    trajs.append((svd, Xs, integrate_reduced(svd, Xs, sched_s,
                                             svd.random_a(rng), 1.0, 1e-3)))
    bound_ok = True
    for pr, Xr, traj in trajs:
        T = float(traj.times[-1] - traj.times[0])
        c_nodes = [speed_limit(pr, Xr, a, n_restarts=2, rng_seed=i, iters=10)[0]
                   for i, a in enumerate(traj.states[::100])]
        c_max = max(max(c_nodes), float(path_speeds(traj).max()))
        bound_ok &= path_length(traj) <= 1.1 * T * c_max
    ok = bound_ok and abs(c0 - 1.0) <= 1e-6
    return _result(14, "speed limit bounds path length; c(0) = 1", ok,
                   f"bounds hold {bound_ok}, c(0) = {c0:.9f}", t0)


CRITERIA = [
    criterion_01_envelope,
    criterion_02_optimal_trajectory,
    criterion_03_optimal_controls,
    criterion_04_projection_equivalence,
    criterion_05_lift_roundtrip,
    criterion_06_approximate_lift,
    criterion_07_weyl_equivariance,
    criterion_08_fixed_point_at_origin,
    criterion_09_schur_horn,
    criterion_10_majorization_suite,
    criterion_11_simulation,
    criterion_12_orbitope_cone,
    criterion_13_disk_invariance_and_stabilizability,
    criterion_14_speed_limit,
]


def run_all(stream=None):
    """Run every criterion, print one line each, return the results."""
    import sys
    stream = stream or sys.stdout
    results = []
    for fn in CRITERIA:
        try:
            res = fn()
        except WeylflowError as exc:  # honest failure, not a crash
            res = CriterionResult(index=len(results) + 1, name=fn.__name__,
                                  passed=False, detail=f"error: {exc}",
                                  seconds=0.0)
        results.append(res)
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] criterion {res.index:2d}: {res.name} "
              f"({res.seconds:.1f}s) -- {res.detail}", file=stream)
    return results
