import math

import numpy as np
import pytest

from weylflow import (DriftField, HermitianEVD, PolarDecomposition, RealSVD,
                      derv_sample, derv_strict_filter, drift_from_dict,
                      induced_field, majorization_margin, make_random_affine,
                      rotation_2d, speed_limit)
from weylflow._linprog import hull_contains
from weylflow.fields import DervSample, induced_values_on_angles


def minus_identity(pair):
    return DriftField.affine(-np.eye(pair.ambient_dim), pair.p_zero())


def test_induced_minus_identity(all_pairs, rng):
    for pair in all_pairs:
        X = minus_identity(pair)
        a = pair.random_a(rng)
        K = pair.haar_sample(rng)
        assert np.allclose(induced_field(pair, X, K, a), -a, atol=1e-12)


def test_induced_bloch_trig_formula(rng):
    pair = PolarDecomposition(2)
    G = 3.0
    X = DriftField.bloch(G, 1.0)
    for _ in range(10):
        a = rng.uniform(-1, 1)
        th = rng.uniform(0, 2 * math.pi)
        v = induced_field(pair, X, rotation_2d(th), np.array([a]))
        # oracle: expand <X(a u), u> for u = R(th) e_z
        ref = (G - 1.0) * a * math.cos(th) ** 2 + math.cos(th) - G * a
        assert v[0] == pytest.approx(ref, abs=1e-12)
    angles = rng.uniform(0, 2 * math.pi, size=64)
    vals = induced_values_on_angles(pair, X, np.array([0.3]), angles)
    ref = (G - 1) * 0.3 * np.cos(angles) ** 2 + np.cos(angles) - G * 0.3
    assert np.allclose(vals, ref, atol=1e-12)


def test_induced_identity_schedule_affine():
    pair = HermitianEVD(2)
    D = np.diag([1.0, -1.0]).astype(complex)
    X = DriftField.affine(-np.eye(pair.ambient_dim), D)
    a = np.array([0.3, -0.3])
    v = induced_field(pair, X, pair.group_identity(), a)
    assert np.allclose(v, np.array([1.0, -1.0]) - a, atol=1e-14)


def test_drift_dict_roundtrip(rng):
    pair = HermitianEVD(2)
    X = make_random_affine(pair, rng)
    d = X.to_dict(pair)
    X2 = drift_from_dict(pair, d)
    p = pair.random_p(rng)
    assert pair.p_norm(pair.p_sub(X(pair, p), X2(pair, p))) < 1e-12
    Xb = drift_from_dict(pair := PolarDecomposition(2),
                         {"kind": "bloch", "Gamma": 3.0, "gamma": 1.0})
    assert np.allclose(Xb(pair, np.array([0.0, 0.0])), [0.0, 1.0])


def test_derv_sample_minus_identity(rng):
    pair = RealSVD(3, 2)
    X = minus_identity(pair)
    a = pair.random_a(rng)
    s = derv_sample(pair, X, a, n_samples=16, rng_seed=5)
    assert np.allclose(s.values, -a[None, :], atol=1e-12)


def test_derv_sample_determinism():
    pair = HermitianEVD(2)
    X = minus_identity(pair)
    a = np.array([0.7, -0.7])
    v1 = derv_sample(pair, X, a, n_samples=8, rng_seed=11).values
    v2 = derv_sample(pair, X, a, n_samples=8, rng_seed=11).values
    assert np.array_equal(v1, v2)


def test_derv_grid_fills_interval():
    pair = PolarDecomposition(2)
    X = DriftField.bloch(3.0, 1.0)
    s = derv_sample(pair, X, np.array([0.0]), angle_grid=4096)
    vals = s.values[:, 0]
    assert vals.max() == pytest.approx(1.0, abs=1e-12)
    assert vals.min() == pytest.approx(-1.0, abs=1e-12)
    assert s.hull is None


def test_derv_schur_horn(rng):
    pair = HermitianEVD(3)
    d = np.array([1.0, 0.25, -1.25])
    X = DriftField.affine(-np.eye(pair.ambient_dim), np.diag(d).astype(complex))
    a = pair.random_a(rng)
    s = derv_sample(pair, X, a, n_samples=300, rng_seed=2)
    shifted = s.values + a[None, :]
    for row in shifted:
        assert majorization_margin(pair, d, row) >= -1e-10


def test_strict_filter_regular_noop(rng):
    pair = HermitianEVD(3)
    X = make_random_affine(pair, rng)
    a = np.array([1.0, 0.2, -1.2])  # regular
    s = derv_sample(pair, X, a, n_samples=12, rng_seed=1)
    kept = derv_strict_filter(pair, X, s, tol=1e-8)
    assert len(kept) == len(s)
    empty = DervSample(a=a, entries=[])
    assert len(derv_strict_filter(pair, X, empty)) == 0


def test_strict_filter_at_origin_keeps_diagonalizers():
    pair = HermitianEVD(2)
    D = np.array([[0.5, 0.4 + 0.1j], [0.4 - 0.1j, -0.5]])
    X = DriftField.affine(np.zeros((3, 3)), D)
    a = np.zeros(2)
    vals, vecs = np.linalg.eigh(D)
    swap = vecs[:, ::-1]
    rng = np.random.default_rng(9)
    randoms = [pair.haar_sample(rng) for _ in range(6)]
    entries = [(K, induced_field(pair, X, K, a))
               for K in [vecs, swap] + randoms]
    s = DervSample(a=a, entries=entries)
    kept = derv_strict_filter(pair, X, s, tol=1e-9)
    # survivors are exactly the two eigenbasis elements
    assert len(kept) == 2
    for K, v in kept.entries:
        pulled = pair.adjoint_action(pair.group_inverse(K), D)
        assert np.linalg.norm(pulled - np.diag(np.diagonal(pulled))) < 1e-9


def test_speed_limit_examples(rng):
    pair = HermitianEVD(2)
    X = minus_identity(pair)
    a = np.array([0.8, -0.8])
    c, K = speed_limit(pair, X, a, n_restarts=3, rng_seed=0)
    assert c == pytest.approx(float(np.linalg.norm(a)), abs=1e-9)
    pol = PolarDecomposition(2)
    c, _ = speed_limit(pol, DriftField.bloch(3.0, 1.0), np.array([0.0]))
    assert c == pytest.approx(1.0, abs=1e-12)
    X0 = DriftField.affine(rng.standard_normal((2, 2)), pol.p_zero())
    c, _ = speed_limit(pol, X0, np.array([0.0]))
    assert c == pytest.approx(0.0, abs=1e-12)


def test_speed_limit_monotone_in_restarts(rng):
    pair = HermitianEVD(3)
    X = make_random_affine(pair, rng)
    a = pair.random_a(rng)
    values = [speed_limit(pair, X, a, n_restarts=k, rng_seed=4, iters=12)[0]
              for k in (1, 2, 4)]
    assert values[0] <= values[1] + 1e-12 <= values[2] + 2e-12


def test_weyl_equivariance_of_induced_fields(rng):
    pair = HermitianEVD(3)
    X = make_random_affine(pair, rng)
    for _ in range(5):
        a = pair.random_a(rng)
        K = pair.haar_sample(rng)
        for w in pair.weyl_elements():
            N = pair.weyl_representative(w)
            KN = pair.group_compose(K, N)
            lhs = induced_field(pair, X, KN, a)
            rhs = w.inverse().apply(induced_field(pair, X, K, w.apply(a)))
            assert np.linalg.norm(lhs - rhs) <= 1e-10


def test_derv_orbit_equivariance(rng):
    pair = RealSVD(2, 2)
    X = make_random_affine(pair, rng)
    a = pair.random_a(rng)
    for w in pair.weyl_elements():
        N = pair.weyl_representative(w)
        for K in [pair.haar_sample(s) for s in (1, 2, 3)]:
            KN = pair.group_compose(K, N)
            assert np.allclose(w.apply(induced_field(pair, X, KN, a)),
                               induced_field(pair, X, K, w.apply(a)),
                               atol=1e-10)


def test_kostant_origin(rng):
    pair = HermitianEVD(3)
    x0 = np.array([0.9, -0.2, -0.7])
    A = rng.standard_normal((8, 8)) * 0.3
    X = DriftField.affine(A, pair.embed(x0))
    orbit = pair.weyl_apply_all(x0)
    s = derv_sample(pair, X, np.zeros(3), n_samples=100, rng_seed=8)
    for v in s.values:
        ok, slack, _ = hull_contains(orbit, v, tol=1e-8)
        assert ok and slack >= -1e-8
    # with the symmetry orbit of one sample included, zero is a convex mix
    K0, v0 = s.entries[0]
    completed = np.vstack([s.values] +
                          [[w.apply(v0)] for w in pair.weyl_elements()])
    ok, slack, _ = hull_contains(completed, np.zeros(3), tol=1e-8)
    assert ok


def test_derv_lipschitz_set_map(rng):
    pair = HermitianEVD(3)
    X = make_random_affine(pair, rng)
    L = X.lipschitz(pair)
    a = pair.random_a(rng)
    b = a + 0.05 * rng.standard_normal(3)
    va = derv_sample(pair, X, a, n_samples=24, rng_seed=3).values
    vb = derv_sample(pair, X, b, n_samples=24, rng_seed=3).values
    hausdorff = np.abs(va - vb).max()
    gap = np.linalg.norm(va - vb, axis=1).max()
    assert gap <= L * np.linalg.norm(a - b) * (1 + 1e-9) + 1e-12
    assert hausdorff <= gap + 1e-12


def test_speed_limit_empirical_continuity(rng):
    pair = PolarDecomposition(2)
    X = DriftField.bloch(3.0, 1.0)
    L = X.lipschitz(pair)
    grid = np.linspace(-0.9, 0.9, 13)
    vals = [speed_limit(pair, X, np.array([a]))[0] for a in grid]
    diffs = np.abs(np.diff(vals)) / np.diff(grid)
    assert np.all(diffs <= L * (1 + 1e-6) + 1e-9)


def test_stabilizer_derivative_hull(rng):
    # at a flat point with a repeated entry, sweeping the stabilizer of the
    # point fills the convex hull of the residual symmetry orbit of one value
    pair = HermitianEVD(3)
    a0 = np.array([1.0, 1.0, -2.0])
    X = make_random_affine(pair, rng)
    K = pair.haar_sample(rng)
    Y = pair.adjoint_action(pair.group_inverse(K), X(pair, pair.adjoint_action(K, pair.embed(a0))))
    block = Y[:2, :2]
    lams = np.linalg.eigvalsh(block)
    fixed = float(np.real(Y[2, 2]))
    for _ in range(60):
        U2 = HermitianEVD(2).haar_sample(rng)
        L = np.eye(3, dtype=complex)
        L[:2, :2] = U2
        KL = pair.group_compose(K, L)
        v = induced_field(pair, X, KL, a0)
        assert v[2] == pytest.approx(fixed, abs=1e-10)
        # 2x2 Schur-Horn: diagonal of a conjugated Hermitian block
        assert v[:2].sum() == pytest.approx(float(lams.sum()), abs=1e-10)
        assert v[:2].max() <= lams[1] + 1e-10
        assert v[:2].min() >= lams[0] - 1e-10


def test_custom_field_warns_without_bound():
    pair = PolarDecomposition(2)
    X = DriftField.custom(lambda p: -p)
    with pytest.warns(UserWarning):
        assert X.lipschitz(pair) > 0
    X2 = DriftField.custom(lambda p: -p, lipschitz_bound=1.0)
    assert X2.lipschitz(pair) == 1.0


def test_derv_sample_entries_reproducible_and_hull(rng):
    pair = HermitianEVD(2)
    X = make_random_affine(pair, rng)
    a = pair.random_a(rng)
    s = derv_sample(pair, X, a, n_samples=20, rng_seed=6, with_hull=True)
    for K, v in s.entries:
        assert np.linalg.norm(induced_field(pair, X, K, a) - v) <= 1e-12
    assert s.hull is not None and s.hull["span_dim"] == 1  # zero-sum plane
    vertices = s.values[s.hull["vertices"]]
    for v in s.values:
        ok, slack, _ = hull_contains(vertices, v, tol=1e-9)
        assert ok
    svd = RealSVD(2, 2)
    X2 = make_random_affine(svd, rng)
    s2 = derv_sample(svd, X2, svd.random_a(rng), n_samples=24, rng_seed=7,
                     with_hull=True)
    assert s2.hull is not None
    verts2 = s2.values[s2.hull["vertices"]]
    for v in s2.values:
        ok, _, _ = hull_contains(verts2, v, tol=1e-7)
        assert ok
