"""Concrete semisimple orthogonal symmetric pairs and their numerics.

Three matrix realizations are provided, each pairing a flat "diagonal" space
with a compact group whose action sweeps out the remaining directions:

* :class:`HermitianEVD` -- traceless Hermitian ``n x n`` matrices acted on by
  unitary conjugation; diagonalization is the eigendecomposition, the
  residual symmetry group is the permutations of the eigenvalues.
* :class:`RealSVD` -- real ``p x q`` matrices acted on by ``B |-> V B W^T``
  with orthogonal ``V, W``; diagonalization is the singular value
  decomposition, the residual symmetry is signed permutations.
* :class:`PolarDecomposition` -- vectors in ``R^n`` acted on by rotations;
  diagonalization is taking the (signed) length along a reference axis.

Conventions
-----------
Ambient points (``x``) are kept in their natural matrix/vector form.  Flat
points (``a``) are 1-d float arrays: length ``n`` (zero-sum) for the EVD
pair, ``min(p, q)`` for the SVD pair, and 1 for the polar pair.  The inner
product is the real trace form, scaled so that the flat projection is literal
diagonal extraction and flat vectors carry the Euclidean norm.

All operations are pure; chamber data and enumerated symmetry elements are
cached on the pair instance and safe to share across threads.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.linalg

from .errors import CapacityError, DomainError, ShapeError, SingularityError

#: Hard cap on the order of an enumerated signed-permutation group (10!).
DEFAULT_WEYL_CAP = 3628800


class WeylElement:
    """A signed permutation acting on flat coordinates.

    The action is ``(w . a)[perm[k]] = signs[k] * a[k]``, i.e. the matrix
    ``P_sigma @ diag(signs)`` with entries in {-1, 0, 1}.
    """

    __slots__ = ("perm", "signs")

    def __init__(self, perm, signs):
        self.perm = tuple(int(i) for i in perm)
        self.signs = tuple(int(s) for s in signs)

    @property
    def dim(self):
        return len(self.perm)

    def matrix(self):
        M = np.zeros((self.dim, self.dim))
        for k, (j, s) in enumerate(zip(self.perm, self.signs)):
            M[j, k] = s
        return M

    def apply(self, a):
        a = np.asarray(a, dtype=float)
        out = np.empty_like(a)
        out[list(self.perm)] = np.asarray(self.signs, dtype=float) * a
        return out

    def compose(self, other):
        """Return ``self . other`` (apply ``other`` first)."""
        perm = tuple(self.perm[other.perm[k]] for k in range(self.dim))
        signs = tuple(other.signs[k] * self.signs[other.perm[k]]
                      for k in range(self.dim))
        return WeylElement(perm, signs)

    def inverse(self):
        perm = [0] * self.dim
        signs = [1] * self.dim
        for k, j in enumerate(self.perm):
            perm[j] = k
            signs[j] = self.signs[k]
        return WeylElement(perm, signs)

    def is_identity(self):
        return self.perm == tuple(range(self.dim)) and all(s == 1 for s in self.signs)

    def __eq__(self, other):
        return isinstance(other, WeylElement) and \
            self.perm == other.perm and self.signs == other.signs

    def __hash__(self):
        return hash((self.perm, self.signs))

    def __repr__(self):
        return f"WeylElement(perm={self.perm}, signs={self.signs})"


def _skew_part(M):
    return 0.5 * (M - M.conj().T)


def _haar_unitary(rng, n):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r).copy()
    d[d == 0] = 1.0
    return q * (d / np.abs(d))


def _haar_orthogonal(rng, n):
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.sign(np.diagonal(r))
    d[d == 0] = 1.0
    return q * d


def _haar_rotation(rng, n):
    q = _haar_orthogonal(rng, n)
    if np.linalg.det(q) < 0:
        q = q[:, list(range(1, n)) + [0]] if n > 1 else -q
    return q


def _as_rng(rng_seed):
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def as_seed_sequence(seed):
    """Normalize ints / int tuples / SeedSequence into a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


class SymmetricPair:
    """Base class: shared geometry built on the per-instance primitives."""

    kind = "abstract"

    def __init__(self):
        self._weyl = None
        self._k_basis = None
        self._p_basis = None

    # -- descriptor ------------------------------------------------------

    @property
    def rank(self):
        raise NotImplementedError

    @property
    def ambient_dim(self):
        raise NotImplementedError

    @property
    def weyl_order(self):
        raise NotImplementedError

    @property
    def a_dim(self):
        """Length of the flat coordinate vectors handled by this pair."""
        raise NotImplementedError

    def descriptor(self):
        raise NotImplementedError

    # -- ambient primitives ---------------------------------------------

    def embed(self, a):
        raise NotImplementedError

    def project_abelian(self, x):
        raise NotImplementedError

    def adjoint_action(self, K, x):
        raise NotImplementedError

    def ad_bracket(self, k, x):
        raise NotImplementedError

    def inner(self, x, y):
        raise NotImplementedError

    def p_norm(self, x):
        return math.sqrt(max(self.inner(x, x), 0.0))

    def diagonalize(self, x):
        """Return ``(a, K)`` with ``a`` in the chamber and ``Ad_K(embed(a)) = x``."""
        raise NotImplementedError

    def haar_sample(self, rng_seed):
        raise NotImplementedError

    # -- group element arithmetic ----------------------------------------

    def group_identity(self):
        raise NotImplementedError

    def group_compose(self, K1, K2):
        raise NotImplementedError

    def group_inverse(self, K):
        raise NotImplementedError

    def group_exp(self, k):
        """Exponentiate a compact-algebra element to a group element."""
        raise NotImplementedError

    def group_residual(self, K):
        """Orthogonality/unitarity defect of a group element."""
        raise NotImplementedError

    def k_residual(self, k):
        """Skewness defect of a compact-algebra element."""
        raise NotImplementedError

    def p_residual(self, x):
        """Representation-constraint defect of an ambient point."""
        raise NotImplementedError

    def k_project(self, M):
        """Project raw matrix data onto the compact algebra."""
        raise NotImplementedError

    def k_zero(self):
        raise NotImplementedError

    def k_add(self, k1, k2):
        raise NotImplementedError

    def k_scale(self, c, k):
        raise NotImplementedError

    # -- coordinates ------------------------------------------------------

    def p_basis(self):
        """Orthonormal basis of the ambient space, as a list of points."""
        raise NotImplementedError

    def k_basis(self):
        """Orthonormal basis of the compact algebra."""
        raise NotImplementedError

    def p_to_coords(self, x):
        raise NotImplementedError

    def p_from_coords(self, c):
        raise NotImplementedError

    def k_to_coords(self, k):
        raise NotImplementedError

    def k_from_coords(self, c):
        raise NotImplementedError

    # -- chamber and Weyl data --------------------------------------------

    @property
    def chamber_facet_normals(self):
        """Rows ``alpha_i`` with chamber = {a : <alpha_i, a> >= 0 for all i}."""
        raise NotImplementedError

    @property
    def chamber_generators(self):
        """Edge generators ``omega_i`` of the chamber cone (dual basis)."""
        raise NotImplementedError

    def chamber_margin(self, a):
        a = np.asarray(a, dtype=float)
        return float((self.chamber_facet_normals @ a).min())

    def chamber_fold(self, a):
        """Return ``(a_fold, w)`` with ``w.apply(a) == a_fold`` in the chamber."""
        raise NotImplementedError

    def regularity_margin(self, a):
        """Distance-like margin to the nearest chamber wall (0 iff singular)."""
        raise NotImplementedError

    def weyl_elements(self, cap=DEFAULT_WEYL_CAP):
        if self.weyl_order > cap:
            raise CapacityError(
                f"group order {self.weyl_order} exceeds cap {cap}")
        if self._weyl is None:
            self._weyl = tuple(self._enumerate_weyl())
        return self._weyl

    def _enumerate_weyl(self):
        raise NotImplementedError

    def weyl_representative(self, w):
        """A group element realizing ``w`` on the embedded flat space."""
        raise NotImplementedError

    def weyl_apply_all(self, a, cap=DEFAULT_WEYL_CAP):
        """Stack of ``w.apply(a)`` over the whole group, shape (order, a_dim)."""
        elems = self.weyl_elements(cap)
        a = np.asarray(a, dtype=float)
        out = np.empty((len(elems), a.size))
        for i, w in enumerate(elems):
            out[i] = w.apply(a)
        return out

    def weyl_stabilizer(self, a, tol=1e-9, cap=DEFAULT_WEYL_CAP):
        a = np.asarray(a, dtype=float)
        scale = max(1.0, float(np.linalg.norm(a)))
        return tuple(w for w in self.weyl_elements(cap)
                     if np.linalg.norm(w.apply(a) - a) <= tol * scale)

    # -- derived ambient operations ---------------------------------------

    def _orbit_direction_frame(self, x, rel_tol=1e-10):
        """Orthonormal coordinate frame of the orbit directions at ``x``."""
        basis = self.k_basis()
        L = np.column_stack([self.p_to_coords(self.ad_bracket(b, x)) for b in basis])
        u, s, _ = np.linalg.svd(L, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            return np.zeros((L.shape[0], 0)), L
        return u[:, s > rel_tol * s[0]], L

    def project_commutant(self, x, y, rel_tol=1e-10):
        """Orthogonal projection of ``y`` onto the commutant of ``x``.

        The image is ``{z : [x, z] = 0}`` and the kernel is the orbit
        direction space at ``x``; the two are orthogonal complements.
        """
        Q, _ = self._orbit_direction_frame(x, rel_tol)
        yc = self.p_to_coords(y)
        return self.p_from_coords(yc - Q @ (Q.T @ yc))

    def project_orbit(self, x, y, rel_tol=1e-10):
        """Complementary projection: the orbit-direction component of ``y``."""
        Q, _ = self._orbit_direction_frame(x, rel_tol)
        yc = self.p_to_coords(y)
        return self.p_from_coords(Q @ (Q.T @ yc))

    def ad_inverse_restricted(self, p, y, tol_reg=None, domain_tol=1e-8):
        """Minimal-norm ``k`` with ``ad_k(p) = [k, p] = y``.

        Requires ``p`` to be regular and ``y`` to lie in the orbit-direction
        space at ``p`` (commutant component negligible).
        """
        a, _ = self.diagonalize(p)
        scale = max(1.0, float(np.linalg.norm(a)))
        if tol_reg is None:
            tol_reg = 1e-8 * scale
        margin = self.regularity_margin(a)
        if margin <= tol_reg:
            raise SingularityError(
                f"regularity margin {margin:.3e} <= tol {tol_reg:.3e}")
        yn = self.p_norm(y)
        if yn == 0.0:
            return self.k_zero()
        commutant_part = self.p_norm(self.project_commutant(p, y))
        if commutant_part > domain_tol * max(yn, 1e-300):
            raise DomainError(
                f"target has commutant component {commutant_part:.3e} "
                f"(norm {yn:.3e}); not an orbit direction")
        _, L = self._orbit_direction_frame(p)
        coeffs, *_ = np.linalg.lstsq(L, self.p_to_coords(y), rcond=1e-12)
        k = self.k_from_coords(coeffs)
        residual = self.p_norm(self.p_sub(self.ad_bracket(k, p), y))
        if residual > 1e-8 * yn:
            raise SingularityError(
                f"ad-inverse residual {residual:.3e} exceeds 1e-8 * |y|")
        return k

    # -- ambient point arithmetic (shape-generic helpers) ------------------

    def p_add(self, x, y):
        return x + y

    def p_sub(self, x, y):
        return x - y

    def p_scale(self, c, x):
        return c * x

    def p_zero(self):
        return self.p_from_coords(np.zeros(self.ambient_dim))

    # -- sampling helpers ---------------------------------------------------

    def random_a(self, rng, scale=1.0):
        rng = _as_rng(rng)
        a = rng.standard_normal(self.a_dim) * scale
        return self._normalize_a(a)

    def random_p(self, rng, scale=1.0):
        rng = _as_rng(rng)
        return self.p_from_coords(rng.standard_normal(self.ambient_dim) * scale)

    def _normalize_a(self, a):
        return np.asarray(a, dtype=float)

    def check_a(self, a):
        a = np.asarray(a, dtype=float).ravel()
        if a.shape != (self.a_dim,):
            raise ShapeError(
                f"flat point must have length {self.a_dim}, got {a.shape}")
        return a

    def __repr__(self):
        return f"{type(self).__name__}({self.descriptor()})"


class HermitianEVD(SymmetricPair):
    """Traceless Hermitian matrices under unitary conjugation."""

    kind = "hermitian_evd"

    def __init__(self, n):
        super().__init__()
        if n < 2:
            raise ShapeError("hermitian_evd needs n >= 2")
        self.n = int(n)

    @property
    def rank(self):
        return self.n - 1

    @property
    def ambient_dim(self):
        return self.n * self.n - 1

    @property
    def weyl_order(self):
        return math.factorial(self.n)

    @property
    def a_dim(self):
        return self.n

    def descriptor(self):
        return {"kind": self.kind, "n": self.n}

    def _normalize_a(self, a):
        a = np.asarray(a, dtype=float)
        return a - a.mean()  # flat points are zero-sum (traceless)

    def embed(self, a):
        a = self.check_a(a)
        return np.diag(a).astype(complex)

    def project_abelian(self, x):
        return np.real(np.diagonal(x)).astype(float).copy()

    def adjoint_action(self, K, x):
        K = np.asarray(K)
        x = np.asarray(x)
        if K.shape != (self.n, self.n) or x.shape != (self.n, self.n):
            raise ShapeError(f"expected {self.n}x{self.n} matrices")
        return K @ x @ K.conj().T

    def ad_bracket(self, k, x):
        if np.shape(k) != (self.n, self.n) or np.shape(x) != (self.n, self.n):
            raise ShapeError(f"expected {self.n}x{self.n} matrices")
        return k @ x - x @ k

    def inner(self, x, y):
        return float(np.real(np.sum(x * np.conj(y))))

    def diagonalize(self, x):
        vals, vecs = np.linalg.eigh(x)
        a = vals[::-1].astype(float).copy()
        K = vecs[:, ::-1]
        return a, K

    def haar_sample(self, rng_seed):
        return _haar_unitary(_as_rng(rng_seed), self.n)

    def group_identity(self):
        return np.eye(self.n, dtype=complex)

    def group_compose(self, K1, K2):
        return K1 @ K2

    def group_inverse(self, K):
        return K.conj().T

    def group_exp(self, k):
        return scipy.linalg.expm(k)

    def group_residual(self, K):
        return float(np.linalg.norm(K @ K.conj().T - np.eye(self.n)))

    def k_residual(self, k):
        return float(np.linalg.norm(k + k.conj().T) + abs(np.trace(k)))

    def p_residual(self, x):
        return float(np.linalg.norm(x - x.conj().T) + abs(np.trace(x)))

    def k_project(self, M):
        S = _skew_part(np.asarray(M, dtype=complex))
        return S - (np.trace(S) / self.n) * np.eye(self.n)

    def k_zero(self):
        return np.zeros((self.n, self.n), dtype=complex)

    def k_add(self, k1, k2):
        return k1 + k2

    def k_scale(self, c, k):
        return c * k

    def _helmert_rows(self):
        n = self.n
        rows = np.zeros((n - 1, n))
        for k in range(1, n):
            rows[k - 1, :k] = 1.0
            rows[k - 1, k] = -k
            rows[k - 1] /= math.sqrt(k * (k + 1))
        return rows

    def p_basis(self):
        if self._p_basis is None:
            n = self.n
            basis = []
            for row in self._helmert_rows():
                basis.append(np.diag(row).astype(complex))
            for i in range(n):
                for j in range(i + 1, n):
                    sym = np.zeros((n, n), dtype=complex)
                    sym[i, j] = sym[j, i] = 1.0 / math.sqrt(2.0)
                    basis.append(sym)
                    asym = np.zeros((n, n), dtype=complex)
                    asym[i, j] = 1j / math.sqrt(2.0)
                    asym[j, i] = -1j / math.sqrt(2.0)
                    basis.append(asym)
            self._p_basis = tuple(basis)
        return self._p_basis

    def k_basis(self):
        if self._k_basis is None:
            n = self.n
            basis = []
            for i in range(n):
                for j in range(i + 1, n):
                    re = np.zeros((n, n), dtype=complex)
                    re[i, j] = 1.0 / math.sqrt(2.0)
                    re[j, i] = -1.0 / math.sqrt(2.0)
                    basis.append(re)
                    im = np.zeros((n, n), dtype=complex)
                    im[i, j] = im[j, i] = 1j / math.sqrt(2.0)
                    basis.append(im)
            for row in self._helmert_rows():
                basis.append(1j * np.diag(row))
            self._k_basis = tuple(basis)
        return self._k_basis

    def _p_stack(self):
        if getattr(self, "_p_stack_cache", None) is None:
            self._p_stack_cache = np.stack(self.p_basis())
            self._p_stack_conj = np.conj(self._p_stack_cache)
        return self._p_stack_cache

    def _k_stack(self):
        if getattr(self, "_k_stack_cache", None) is None:
            self._k_stack_cache = np.stack(self.k_basis())
            self._k_stack_conj = np.conj(self._k_stack_cache)
        return self._k_stack_cache

    def p_to_coords(self, x):
        self._p_stack()
        return np.real(np.einsum("kij,ij->k", self._p_stack_conj, x)).astype(float)

    def p_from_coords(self, c):
        return np.einsum("k,kij->ij", np.asarray(c, dtype=float), self._p_stack())

    def k_to_coords(self, k):
        self._k_stack()
        return np.real(np.einsum("kij,ij->k", self._k_stack_conj, k)).astype(float)

    def k_from_coords(self, c):
        return np.einsum("k,kij->ij", np.asarray(c, dtype=float), self._k_stack())

    @property
    def chamber_facet_normals(self):
        n = self.n
        rows = np.zeros((n - 1, n))
        for i in range(n - 1):
            rows[i, i] = 1.0
            rows[i, i + 1] = -1.0
        return rows

    @property
    def chamber_generators(self):
        n = self.n
        gens = np.zeros((n - 1, n))
        for i in range(1, n):
            gens[i - 1, :i] = 1.0
            gens[i - 1] -= i / n
        return gens

    def chamber_fold(self, a):
        a = self.check_a(a)
        order = np.argsort(-a, kind="stable")
        perm = [0] * self.n
        for new, old in enumerate(order):
            perm[old] = new
        w = WeylElement(perm, [1] * self.n)
        return a[order], w

    def regularity_margin(self, a):
        a = self.check_a(a)
        diffs = np.abs(a[:, None] - a[None, :])[np.triu_indices(self.n, 1)]
        return float(diffs.min())

    def _enumerate_weyl(self):
        idx = range(self.n)
        # element with perm sigma maps a -> a[sigma^{-1}] placed per convention
        for sigma in itertools.permutations(idx):
            yield WeylElement(sigma, [1] * self.n)

    def weyl_representative(self, w):
        N = np.zeros((self.n, self.n), dtype=complex)
        for k, j in enumerate(w.perm):
            N[j, k] = 1.0
        return N


class RealSVD(SymmetricPair):
    """Real ``p x q`` matrices under two-sided orthogonal multiplication.

    Group elements are pairs ``(V, W)`` of orthogonal matrices acting by
    ``B |-> V B W^T``; compact-algebra elements are pairs of skew-symmetric
    matrices.  Both orthogonal components range over the full orthogonal
    groups, so all signed permutations of the singular values are realized
    regardless of ``p`` and ``q``.
    """

    kind = "real_svd"

    def __init__(self, p, q):
        super().__init__()
        if p < 1 or q < 1:
            raise ShapeError("real_svd needs p, q >= 1")
        self.p = int(p)
        self.q = int(q)

    @property
    def rank(self):
        return min(self.p, self.q)

    @property
    def ambient_dim(self):
        return self.p * self.q

    @property
    def weyl_order(self):
        r = self.rank
        return (2 ** r) * math.factorial(r)

    @property
    def a_dim(self):
        return self.rank

    def descriptor(self):
        return {"kind": self.kind, "p": self.p, "q": self.q}

    def embed(self, a):
        a = self.check_a(a)
        B = np.zeros((self.p, self.q))
        np.fill_diagonal(B, a)
        return B

    def project_abelian(self, x):
        return np.diagonal(x).astype(float).copy()

    def adjoint_action(self, K, x):
        V, W = K
        if np.shape(V) != (self.p, self.p) or np.shape(W) != (self.q, self.q) \
                or np.shape(x) != (self.p, self.q):
            raise ShapeError(f"expected ({self.p},{self.p}),({self.q},{self.q}) "
                             f"factors and a {self.p}x{self.q} point")
        return V @ x @ W.T

    def ad_bracket(self, k, x):
        k1, k2 = k
        if np.shape(x) != (self.p, self.q):
            raise ShapeError(f"expected a {self.p}x{self.q} point")
        return k1 @ x - x @ k2

    def inner(self, x, y):
        return float(np.sum(x * y))

    def diagonalize(self, x):
        u, s, vh = np.linalg.svd(x, full_matrices=True)
        return s.astype(float).copy(), (u, vh.T)

    def haar_sample(self, rng_seed):
        rng = _as_rng(rng_seed)
        return _haar_orthogonal(rng, self.p), _haar_orthogonal(rng, self.q)

    def group_identity(self):
        return np.eye(self.p), np.eye(self.q)

    def group_compose(self, K1, K2):
        return K1[0] @ K2[0], K1[1] @ K2[1]

    def group_inverse(self, K):
        return K[0].T, K[1].T

    def group_exp(self, k):
        return scipy.linalg.expm(k[0]), scipy.linalg.expm(k[1])

    def group_residual(self, K):
        V, W = K
        return float(np.linalg.norm(V @ V.T - np.eye(self.p)) +
                     np.linalg.norm(W @ W.T - np.eye(self.q)))

    def k_residual(self, k):
        return float(np.linalg.norm(k[0] + k[0].T) + np.linalg.norm(k[1] + k[1].T))

    def p_residual(self, x):
        return 0.0 if np.shape(x) == (self.p, self.q) else float("inf")

    def k_project(self, M):
        return _skew_part(M[0]).real, _skew_part(M[1]).real

    def k_zero(self):
        return np.zeros((self.p, self.p)), np.zeros((self.q, self.q))

    def k_add(self, k1, k2):
        return k1[0] + k2[0], k1[1] + k2[1]

    def k_scale(self, c, k):
        return c * k[0], c * k[1]

    def p_basis(self):
        if self._p_basis is None:
            basis = []
            for i in range(self.p):
                for j in range(self.q):
                    E = np.zeros((self.p, self.q))
                    E[i, j] = 1.0
                    basis.append(E)
            self._p_basis = tuple(basis)
        return self._p_basis

    @staticmethod
    def _skew_basis(n):
        basis = []
        for i in range(n):
            for j in range(i + 1, n):
                E = np.zeros((n, n))
                E[i, j] = 1.0 / math.sqrt(2.0)
                E[j, i] = -1.0 / math.sqrt(2.0)
                basis.append(E)
        return basis

    def k_basis(self):
        if self._k_basis is None:
            zp = np.zeros((self.p, self.p))
            zq = np.zeros((self.q, self.q))
            basis = [(b, zq) for b in self._skew_basis(self.p)]
            basis += [(zp, b) for b in self._skew_basis(self.q)]
            self._k_basis = tuple(basis)
        return self._k_basis

    def p_to_coords(self, x):
        return np.asarray(x, dtype=float).ravel().copy()

    def p_from_coords(self, c):
        return np.asarray(c, dtype=float).reshape(self.p, self.q).copy()

    def k_to_coords(self, k):
        basis = self.k_basis()
        return np.array([np.sum(k[0] * b[0]) + np.sum(k[1] * b[1]) for b in basis])

    def k_from_coords(self, c):
        c = np.asarray(c, dtype=float)
        k1 = np.zeros((self.p, self.p))
        k2 = np.zeros((self.q, self.q))
        for ci, b in zip(c, self.k_basis()):
            k1 += ci * b[0]
            k2 += ci * b[1]
        return k1, k2

    @property
    def chamber_facet_normals(self):
        r = self.rank
        rows = np.zeros((r, r))
        for i in range(r - 1):
            rows[i, i] = 1.0
            rows[i, i + 1] = -1.0
        rows[r - 1, r - 1] = 1.0
        return rows

    @property
    def chamber_generators(self):
        r = self.rank
        gens = np.zeros((r, r))
        for i in range(1, r + 1):
            gens[i - 1, :i] = 1.0
        return gens

    def chamber_fold(self, a):
        a = self.check_a(a)
        mags = np.abs(a)
        order = np.argsort(-mags, kind="stable")
        signs = [0] * self.rank
        perm = [0] * self.rank
        for new, old in enumerate(order):
            perm[old] = new
            signs[old] = 1 if a[old] >= 0 else -1
        w = WeylElement(perm, signs)
        return w.apply(a), w

    def regularity_margin(self, a):
        a = self.check_a(a)
        vals = [np.abs(a).min()]
        r = self.rank
        if r > 1:
            iu = np.triu_indices(r, 1)
            vals.append(np.abs(a[:, None] - a[None, :])[iu].min())
            vals.append(np.abs(a[:, None] + a[None, :])[iu].min())
        return float(min(vals))

    def _enumerate_weyl(self):
        r = self.rank
        for sigma in itertools.permutations(range(r)):
            for signs in itertools.product((1, -1), repeat=r):
                yield WeylElement(sigma, signs)

    def weyl_representative(self, w):
        r = self.rank
        V = np.eye(self.p)
        W = np.eye(self.q)
        blockV = np.zeros((r, r))
        blockW = np.zeros((r, r))
        for k, (j, s) in enumerate(zip(w.perm, w.signs)):
            blockV[j, k] = s
            blockW[j, k] = 1.0
        V[:r, :r] = blockV
        W[:r, :r] = blockW
        return V, W


class PolarDecomposition(SymmetricPair):
    """Vectors in ``R^n`` under rotations; flat space is the last axis."""

    kind = "polar"

    def __init__(self, n):
        super().__init__()
        if n < 2:
            raise ShapeError("polar needs n >= 2")
        self.n = int(n)

    @property
    def rank(self):
        return 1

    @property
    def ambient_dim(self):
        return self.n

    @property
    def weyl_order(self):
        return 2

    @property
    def a_dim(self):
        return 1

    def descriptor(self):
        return {"kind": self.kind, "n": self.n}

    @property
    def axis(self):
        e = np.zeros(self.n)
        e[-1] = 1.0
        return e

    def embed(self, a):
        a = self.check_a(a)
        return a[0] * self.axis

    def project_abelian(self, x):
        return np.array([float(x[-1])])

    def adjoint_action(self, K, x):
        K = np.asarray(K, dtype=float)
        x = np.asarray(x, dtype=float)
        if K.shape != (self.n, self.n) or x.shape != (self.n,):
            raise ShapeError(f"expected {self.n}x{self.n} rotation and length-{self.n} vector")
        return K @ x

    def ad_bracket(self, k, x):
        if np.shape(k) != (self.n, self.n) or np.shape(x) != (self.n,):
            raise ShapeError(f"expected {self.n}x{self.n} generator and length-{self.n} vector")
        return k @ x

    def inner(self, x, y):
        return float(np.dot(x, y))

    def diagonalize(self, x):
        norm = float(np.linalg.norm(x))
        if norm == 0.0:
            return np.array([0.0]), np.eye(self.n)
        u = x / norm
        v = self.axis - u
        if np.linalg.norm(v) < 1e-14:
            K = np.eye(self.n)
        else:
            H = np.eye(self.n) - 2.0 * np.outer(v, v) / np.dot(v, v)
            H[:, 0] = -H[:, 0]
            K = H
        return np.array([norm]), K

    def haar_sample(self, rng_seed):
        return _haar_rotation(_as_rng(rng_seed), self.n)

    def group_identity(self):
        return np.eye(self.n)

    def group_compose(self, K1, K2):
        return K1 @ K2

    def group_inverse(self, K):
        return K.T

    def group_exp(self, k):
        return scipy.linalg.expm(k)

    def group_residual(self, K):
        return float(np.linalg.norm(K @ K.T - np.eye(self.n)) +
                     abs(np.linalg.det(K) - 1.0))

    def k_residual(self, k):
        return float(np.linalg.norm(k + k.T))

    def p_residual(self, x):
        return 0.0 if np.shape(x) == (self.n,) else float("inf")

    def k_project(self, M):
        return _skew_part(np.asarray(M, dtype=float)).real

    def k_zero(self):
        return np.zeros((self.n, self.n))

    def k_add(self, k1, k2):
        return k1 + k2

    def k_scale(self, c, k):
        return c * k

    def p_basis(self):
        if self._p_basis is None:
            self._p_basis = tuple(np.eye(self.n))
        return self._p_basis

    def k_basis(self):
        if self._k_basis is None:
            self._k_basis = tuple(RealSVD._skew_basis(self.n))
        return self._k_basis

    def p_to_coords(self, x):
        return np.asarray(x, dtype=float).copy()

    def p_from_coords(self, c):
        return np.asarray(c, dtype=float).copy()

    def k_to_coords(self, k):
        return np.array([np.sum(k * b) for b in self.k_basis()])

    def k_from_coords(self, c):
        k = np.zeros((self.n, self.n))
        for ci, b in zip(np.asarray(c, dtype=float), self.k_basis()):
            k += ci * b
        return k

    @property
    def chamber_facet_normals(self):
        return np.array([[1.0]])

    @property
    def chamber_generators(self):
        return np.array([[1.0]])

    def chamber_fold(self, a):
        a = self.check_a(a)
        sign = 1 if a[0] >= 0 else -1
        return np.array([abs(a[0])]), WeylElement((0,), (sign,))

    def regularity_margin(self, a):
        a = self.check_a(a)
        return float(abs(a[0]))

    def _enumerate_weyl(self):
        yield WeylElement((0,), (1,))
        yield WeylElement((0,), (-1,))

    def weyl_representative(self, w):
        if w.signs[0] == 1:
            return np.eye(self.n)
        R = np.eye(self.n)
        R[0, 0] = -1.0
        R[-1, -1] = -1.0
        return R


def rotation_2d(angle):
    """Counterclockwise rotation of the plane by ``angle``."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


_KINDS = {
    "hermitian_evd": lambda d: HermitianEVD(d["n"]),
    "real_svd": lambda d: RealSVD(d["p"], d["q"]),
    "polar": lambda d: PolarDecomposition(d["n"]),
}


def pair_from_dict(d):
    """Build a pair from its descriptor, e.g. ``{"kind": "polar", "n": 2}``."""
    try:
        kind = d["kind"]
    except (TypeError, KeyError):
        raise ShapeError("pair descriptor must be a dict with a 'kind' key")
    if kind not in _KINDS:
        raise ShapeError(f"unknown pair kind {kind!r}")
    try:
        return _KINDS[kind](d)
    except KeyError as exc:
        raise ShapeError(f"pair descriptor missing field {exc}") from exc
