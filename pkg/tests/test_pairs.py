import math

import numpy as np
import pytest

from weylflow import (CapacityError, DomainError, HermitianEVD,
                      PolarDecomposition, RealSVD, ShapeError,
                      SingularityError, pair_from_dict, rotation_2d)


def test_descriptor_invariants(all_pairs):
    for pair in all_pairs:
        assert pair.rank >= 1
        assert pair.weyl_order == len(pair.weyl_elements())
    evd = HermitianEVD(3)
    assert evd.ambient_dim == 8 and evd.rank == 2 and evd.weyl_order == 6
    svd = RealSVD(3, 2)
    assert svd.rank == 2 and svd.weyl_order == 8
    pol = PolarDecomposition(2)
    assert pol.ambient_dim == 2 and pol.rank == 1 and pol.weyl_order == 2


def test_pair_from_dict_roundtrip():
    for d in ({"kind": "hermitian_evd", "n": 3},
              {"kind": "real_svd", "p": 3, "q": 2},
              {"kind": "polar", "n": 2}):
        assert pair_from_dict(d).descriptor() == d
    with pytest.raises(ShapeError):
        pair_from_dict({"kind": "nope"})
    with pytest.raises(ShapeError):
        pair_from_dict({"kind": "real_svd", "p": 3})


def test_adjoint_identity_and_rotation():
    evd = HermitianEVD(2)
    x = np.diag([1.0, -1.0]).astype(complex)
    assert np.allclose(evd.adjoint_action(evd.group_identity(), x), x)
    pol = PolarDecomposition(2)
    out = pol.adjoint_action(rotation_2d(math.pi / 2), np.array([1.0, 0.0]))
    assert np.allclose(out, [0.0, 1.0], atol=1e-15)


def test_adjoint_norm_preserving(all_pairs, rng):
    for pair in all_pairs:
        x = pair.random_p(rng)
        K = pair.haar_sample(42)
        out = pair.adjoint_action(K, x)
        assert pair.p_norm(out) == pytest.approx(pair.p_norm(x), abs=1e-12)


def test_adjoint_shape_error():
    evd = HermitianEVD(3)
    with pytest.raises(ShapeError):
        evd.adjoint_action(np.eye(2, dtype=complex), np.eye(3, dtype=complex))


def test_ad_bracket_examples():
    pol = PolarDecomposition(2)
    k = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.allclose(pol.ad_bracket(k, np.array([1.0, 0.0])), [0.0, 1.0])
    evd = HermitianEVD(2)
    x = np.diag([1.0, -1.0]).astype(complex)
    assert np.allclose(evd.ad_bracket(evd.k_zero(), x), 0.0)
    k_sy = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
    out = evd.ad_bracket(k_sy, x)
    assert abs(out[0, 0]) < 1e-15 and abs(out[1, 1]) < 1e-15
    assert evd.inner(out, x) == pytest.approx(0.0, abs=1e-14)


def test_ad_bracket_matches_flow_derivative(all_pairs, rng):
    t = 1e-6
    for pair in all_pairs:
        x = pair.random_p(rng)
        k = pair.k_from_coords(rng.standard_normal(len(pair.k_basis())))
        K = pair.group_exp(pair.k_scale(t, k))
        fd = pair.p_scale(1.0 / t, pair.p_sub(pair.adjoint_action(K, x), x))
        gap = pair.p_norm(pair.p_sub(fd, pair.ad_bracket(k, x)))
        assert gap < 1e-4


def test_project_abelian_examples(rng):
    evd = HermitianEVD(3)
    noise = evd.k_zero()
    noise[0, 1] = 0.3 + 0.2j
    noise[1, 0] = 0.3 - 0.2j
    x = np.diag([1.0, 2.0, -3.0]).astype(complex) + noise
    assert np.allclose(evd.project_abelian(x), [1.0, 2.0, -3.0])
    pol = PolarDecomposition(2)
    assert pol.project_abelian(np.array([3.0, 4.0])) == pytest.approx([4.0])
    for pair in [evd, pol, RealSVD(3, 2)]:
        a = pair.random_a(rng)
        assert np.allclose(pair.project_abelian(pair.embed(a)), a, atol=1e-15)


def test_project_commutant(all_pairs, rng):
    evd = HermitianEVD(2)
    x = np.diag([1.0, -1.0]).astype(complex)
    y = evd.random_p(rng)
    out = evd.project_commutant(x, y)
    assert np.allclose(out, np.diag(np.real(np.diagonal(y))), atol=1e-12)
    # orthogonality to orbit directions, and the zero point fixes everything
    for pair in all_pairs:
        x = pair.random_p(rng)
        k = pair.k_from_coords(rng.standard_normal(len(pair.k_basis())))
        v = pair.ad_bracket(k, x)
        assert pair.p_norm(pair.project_commutant(x, v)) < 1e-10 * max(1, pair.p_norm(v))
        y = pair.random_p(rng)
        assert pair.p_norm(pair.p_sub(pair.project_commutant(pair.p_zero(), y), y)) < 1e-12


def test_diagonalize_examples():
    evd = HermitianEVD(2)
    a, K = evd.diagonalize(np.diag([-1.0, 1.0]).astype(complex))
    assert np.allclose(a, [1.0, -1.0])
    pol = PolarDecomposition(2)
    x = np.array([3.0, 4.0])
    a, K = pol.diagonalize(x)
    assert a == pytest.approx([5.0])  # oracle: the norm
    assert np.allclose(K @ pol.embed(a), x, atol=1e-12)
    assert np.linalg.det(K) == pytest.approx(1.0, abs=1e-12)
    svd = RealSVD(2, 2)
    B = np.array([[0.0, 2.0], [1.0, 0.0]])
    a, K = svd.diagonalize(B)
    assert np.allclose(a, np.linalg.svd(B, compute_uv=False))  # (2, 1)
    assert np.allclose(svd.adjoint_action(K, svd.embed(a)), B, atol=1e-12)


def test_diagonalize_reconstruction(all_pairs, rng):
    for pair in all_pairs:
        for _ in range(5):
            x = pair.random_p(rng)
            a, K = pair.diagonalize(x)
            assert pair.chamber_margin(a) >= -1e-10
            rec = pair.adjoint_action(K, pair.embed(a))
            assert pair.p_norm(pair.p_sub(rec, x)) <= 1e-9 * max(pair.p_norm(x), 1e-12)


def test_chamber_fold_examples():
    evd = HermitianEVD(3)
    folded, w = evd.chamber_fold(np.array([0.0, 2.0, 1.0]))
    assert np.allclose(folded, [2.0, 1.0, 0.0])
    assert np.allclose(w.apply([0.0, 2.0, 1.0]), folded)
    svd = RealSVD(2, 2)
    folded, w = svd.chamber_fold(np.array([-3.0, 1.0]))
    assert np.allclose(folded, [3.0, 1.0])
    assert np.allclose(w.apply([-3.0, 1.0]), folded)
    pol = PolarDecomposition(2)
    folded, w = pol.chamber_fold(np.array([-2.0]))
    assert folded == pytest.approx([2.0]) and w.signs == (-1,)


def test_chamber_fold_retraction_and_uniqueness(all_pairs, rng):
    for pair in all_pairs:
        a = pair.random_a(rng)
        folded, _ = pair.chamber_fold(a)
        again, w2 = pair.chamber_fold(folded)
        assert np.array_equal(folded, again)
        # every orbit image folds to the same chamber point
        for w in pair.weyl_elements():
            f2, _ = pair.chamber_fold(w.apply(a))
            assert np.array_equal(f2, folded)


def test_regularity_margin_examples():
    evd = HermitianEVD(3)
    assert evd.regularity_margin(np.array([2.0, 1.0, 0.0])) == pytest.approx(1.0)
    assert HermitianEVD(2).regularity_margin(np.array([1.0, 1.0])) == 0.0
    assert PolarDecomposition(2).regularity_margin(np.array([0.0])) == 0.0
    svd = RealSVD(3, 2)
    assert svd.regularity_margin(np.array([3.0, 1.0])) == pytest.approx(1.0)
    assert svd.regularity_margin(np.array([1.0, -1.0])) == pytest.approx(0.0)


def test_haar_determinism_and_residual(all_pairs):
    for pair in all_pairs:
        K1 = pair.haar_sample(7)
        K2 = pair.haar_sample(7)
        flat = lambda K: np.concatenate([np.asarray(M).ravel() for M in
                                         (K if isinstance(K, tuple) else (K,))])
        assert np.array_equal(flat(K1), flat(K2))
        assert pair.group_residual(K1) <= 1e-10


def test_haar_mean_diagonal_is_trace_average():
    evd = HermitianEVD(3)
    x = np.diag([1.0, 0.5, -1.5]).astype(complex)
    rng = np.random.default_rng(3)
    n = 10000
    diags = np.empty((n, 3))
    for i in range(n):
        K = evd.haar_sample(rng)
        diags[i] = evd.project_abelian(evd.adjoint_action(K, x))
    mean = diags.mean(axis=0)
    sigma = diags.std(axis=0) / math.sqrt(n)
    assert np.all(np.abs(mean) <= 3.0 * sigma + 1e-12)  # tr x = 0


def test_ad_inverse_polar_closed_form(rng):
    pol = PolarDecomposition(3)
    p = np.array([1.0, 2.0, 2.0])
    yraw = rng.standard_normal(3)
    y = yraw - (yraw @ p) / (p @ p) * p
    k = pol.ad_inverse_restricted(p, y)
    k_ref = (np.outer(y, p) - np.outer(p, y)) / (p @ p)
    assert np.allclose(pol.ad_bracket(k_ref, p), y, atol=1e-12)
    assert np.allclose(k, k_ref, atol=1e-10)


def test_ad_inverse_evd_eigenbasis_division():
    evd = HermitianEVD(2)
    p = np.diag([1.5, -0.5]).astype(complex)
    y = np.array([[0.0, 0.3 - 0.1j], [0.3 + 0.1j, 0.0]])
    k = evd.ad_inverse_restricted(p, y)
    # oracle: entrywise division in the eigenbasis, [k, p]_{12} = k_12(l2 - l1)
    assert k[0, 1] == pytest.approx(y[0, 1] / (-0.5 - 1.5), abs=1e-10)
    assert np.allclose(evd.ad_bracket(k, p), y, atol=1e-10)


def test_ad_inverse_errors():
    evd = HermitianEVD(2)
    assert np.allclose(evd.ad_inverse_restricted(np.diag([1.0, -1.0]).astype(complex),
                                                 evd.p_zero()), 0.0)
    with pytest.raises(SingularityError):
        evd.ad_inverse_restricted(np.diag([1.0, 1.0]).astype(complex),
                                  evd.p_zero() + 1.0)
    with pytest.raises(DomainError):
        # diagonal target is in the commutant, not an orbit direction
        evd.ad_inverse_restricted(np.diag([1.0, -1.0]).astype(complex),
                                  np.diag([1.0, -1.0]).astype(complex))


def test_weyl_group_axioms(all_pairs, rng):
    for pair in all_pairs:
        elems = pair.weyl_elements()
        a = pair.random_a(rng)
        ident = [w for w in elems if w.is_identity()]
        assert len(ident) == 1
        for w in elems[: min(len(elems), 8)]:
            winv = w.inverse()
            assert w.compose(winv).is_identity()
            M = w.matrix()
            assert np.allclose(M @ M.T, np.eye(pair.a_dim))
            assert np.allclose(M @ np.asarray(a), w.apply(a))
            assert set(np.unique(M)).issubset({-1.0, 0.0, 1.0})
        w1, w2 = elems[0], elems[-1]
        assert np.allclose(w1.compose(w2).matrix(), w1.matrix() @ w2.matrix())


def test_weyl_representatives_realize_action(all_pairs, rng):
    for pair in all_pairs:
        a = pair.random_a(rng)
        for w in pair.weyl_elements():
            N = pair.weyl_representative(w)
            assert pair.group_residual(N) <= 1e-12
            moved = pair.adjoint_action(N, pair.embed(a))
            assert pair.p_norm(pair.p_sub(moved, pair.embed(w.apply(a)))) < 1e-12


def test_flat_projection_intertwines_representatives(all_pairs, rng):
    # projection onto the flat space commutes with normalizer elements
    for pair in all_pairs:
        x = pair.random_p(rng)
        for w in pair.weyl_elements()[:4]:
            N = pair.weyl_representative(w)
            lhs = pair.project_abelian(pair.adjoint_action(N, x))
            rhs = w.apply(pair.project_abelian(x))
            assert np.allclose(lhs, rhs, atol=1e-12)


def test_weyl_cap():
    with pytest.raises(CapacityError):
        HermitianEVD(8).weyl_elements(cap=5040)


def test_chamber_data_duality(all_pairs):
    for pair in all_pairs:
        A = pair.chamber_facet_normals
        G = pair.chamber_generators
        gram = A @ G.T
        # generators form the dual basis (positive diagonal, zero off-diagonal)
        assert np.allclose(gram - np.diag(np.diagonal(gram)), 0.0, atol=1e-12)
        assert np.all(np.diagonal(gram) > 0)


def test_coordinate_roundtrips(all_pairs, rng):
    for pair in all_pairs:
        c = rng.standard_normal(pair.ambient_dim)
        assert np.allclose(pair.p_to_coords(pair.p_from_coords(c)), c, atol=1e-12)
        kc = rng.standard_normal(len(pair.k_basis()))
        assert np.allclose(pair.k_to_coords(pair.k_from_coords(kc)), kc, atol=1e-12)
        x = pair.random_p(rng)
        assert pair.p_norm(x) == pytest.approx(
            float(np.linalg.norm(pair.p_to_coords(x))), abs=1e-10)
