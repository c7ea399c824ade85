"""Finite-dimensional von Neumann algebras as subspaces of M_n.

A unital *-subalgebra of M_n is stored as a Hilbert-Schmidt orthonormal basis
(``StarAlgebra.basis`` has shape ``(dim, n, n)``). Membership, intersection and
commutants then reduce to least-squares and nullspace computations on the
row-major vectorizations of the basis elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, PreconditionError, RetryExhausted, StructuralError
from .matrix import (
    DEFAULT_TOL,
    Projection,
    Tolerances,
    as_matrix,
    as_vector,
    cluster,
    op_norm,
    orthonormal_columns,
    scale_of,
)

# cos(theta) threshold for "shared direction" in subspace intersections
ANGLE_COS_THRESHOLD = 1 - 1e-8
CENTRAL_RETRIES = 32
CYCLIC_RETRIES = 64
# singular values below ROUNDING_FLOOR * n * max ||M|| are rounding noise whatever sigma_max is
ROUNDING_FLOOR = 1e-12


@dataclass(frozen=True)
class StarAlgebra:
    n: int
    basis: np.ndarray
    contains_identity: bool = True

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def vectors(self) -> np.ndarray:
        """Basis as columns of an ``(n*n, dim)`` matrix."""
        return self.basis.reshape(self.dim, -1).T

    @classmethod
    def from_spanning(cls, mats, tol: Tolerances = DEFAULT_TOL, n: int | None = None) -> "StarAlgebra":
        """Orthonormalize a spanning set. Does not close it under products."""
        mats = [as_matrix(m) for m in mats]
        if n is None:
            if not mats:
                raise PreconditionError("cannot infer dimension from an empty spanning set")
            n = mats[0].shape[0]
        C = np.column_stack([m.reshape(-1) for m in mats]) if mats else np.zeros((n * n, 0), complex)
        cut = tol.nullspace_tol * max(1.0, np.abs(C).max(initial=0.0))
        Q = orthonormal_columns(C, cut)
        return cls(n, Q.T.reshape(-1, n, n).copy())

    @classmethod
    def full(cls, n: int) -> "StarAlgebra":
        return cls(n, np.eye(n * n, dtype=np.complex128).reshape(n * n, n, n))

    @classmethod
    def scalars(cls, n: int) -> "StarAlgebra":
        return cls(n, (np.eye(n, dtype=np.complex128) / np.sqrt(n))[None])

    def residual(self, X) -> float:
        """Hilbert-Schmidt distance from ``X`` to the span of the basis."""
        x = np.asarray(X, dtype=np.complex128).reshape(-1)
        Q = self.vectors
        return float(np.linalg.norm(x - Q @ (Q.conj().T @ x)))

    def contains(self, X, tol: Tolerances = DEFAULT_TOL) -> bool:
        X = np.asarray(X, dtype=np.complex128)
        return self.residual(X) <= tol.nullspace_tol * max(1.0, np.linalg.norm(X))

    def is_abelian(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        if self.dim > self.n:
            return False
        B = self.basis
        for X in B:
            comm = X @ B - B @ X
            if np.abs(comm).max(initial=0.0) > tol.nullspace_tol:
                return False
        return True

    def random_element(self, rng: np.random.Generator, hermitian: bool = False) -> np.ndarray:
        c = rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim)
        X = np.tensordot(c, self.basis, axes=1)
        if hermitian:
            X = X + X.conj().T
        return X

    def defects(self) -> dict:
        """Orthonormality, adjoint-closure and product-closure residuals."""
        Q = self.vectors
        ortho = op_norm(Q.conj().T @ Q - np.eye(self.dim))
        adj = max((self.residual(B.conj().T) for B in self.basis), default=0.0)
        prod = 0.0
        for B in self.basis:
            for C in self.basis:
                prod = max(prod, self.residual(B @ C))
        return {"ortho": ortho, "adjoint": adj, "product": prod}


@dataclass(frozen=True)
class BlockDecomposition:
    """``U* A U = sum_i M_{n_i} (x) I_{m_i}``; blocks are ``(n_i, m_i)`` pairs."""

    unitary: np.ndarray
    blocks: list = field(default_factory=list)

    def block_slices(self):
        offset = 0
        for ni, mi in self.blocks:
            yield slice(offset, offset + ni * mi), ni, mi
            offset += ni * mi


@dataclass(frozen=True)
class IrreducibilityCertificate:
    irreducible: bool
    commutant_dim: int
    margin: float
    sigma_max: float


@dataclass(frozen=True)
class VectorReport:
    is_cyclic: bool
    is_separating: bool
    witnessed_rank_data: dict


def _extend_basis(Q: np.ndarray, C: np.ndarray, cutoff: float):
    R = C - Q @ (Q.conj().T @ C)
    R -= Q @ (Q.conj().T @ R)
    new = orthonormal_columns(R, cutoff)
    if new.shape[1]:
        new -= Q @ (Q.conj().T @ new)
        new, _ = np.linalg.qr(new)
    return np.hstack([Q, new]), new


def _letters(generators, n: int, tol: Tolerances) -> list[np.ndarray]:
    """Centered, norm-one generators and their adjoints; scalars dropped."""
    out = []
    eye = np.eye(n)
    for G in generators:
        C = G - np.trace(G) / n * eye
        s = op_norm(C)
        if s <= tol.nullspace_tol * scale_of(G):
            continue
        C = C / s
        out.append(C)
        if op_norm(C - C.conj().T) > tol.hermitian_tol:
            out.append(C.conj().T)
    return out


def generate_algebra(generators, tol: Tolerances = DEFAULT_TOL, n: int | None = None) -> StarAlgebra:
    """Unital *-algebra generated by ``generators``.

    Starts from ``{I, G, G*}`` and keeps multiplying the newest basis elements
    by the generators until no direction above ``nullspace_tol`` survives
    orthogonalization. Terminates in at most n^2 rounds.
    """
    gens = [as_matrix(g) for g in generators]
    if n is None:
        if not gens:
            raise PreconditionError("an empty generator list needs an explicit dimension n")
        n = gens[0].shape[0]
    if any(g.shape != (n, n) for g in gens):
        raise PreconditionError("generators must all be n x n")
    cut = tol.nullspace_tol
    Q = (np.eye(n, dtype=np.complex128).reshape(-1) / np.sqrt(n))[:, None]
    letters = _letters(gens, n, tol)
    if not letters:
        return StarAlgebra(n, Q.T.reshape(1, n, n).copy())
    Q, frontier = _extend_basis(Q, np.column_stack([L.reshape(-1) for L in letters]), cut)
    for _ in range(n * n):
        if frontier.shape[1] == 0:
            break
        F = frontier.T.reshape(-1, n, n)
        C = np.concatenate([(L @ F).reshape(F.shape[0], -1) for L in letters]).T
        Q, frontier = _extend_basis(Q, C, cut)
    return StarAlgebra(n, Q.T.reshape(-1, n, n).copy())


def _commutation_nullspace(mats, n: int, tol: Tolerances, vectors: bool = True):
    """Nullspace of X -> [XM - MX for M in mats] over vec(X).

    Returns ``(null_vectors (n*n, k), sigma_max, margin)``; tall systems are
    compressed with successive QR factorizations so only n^2 x n^2 pieces are
    held in memory. With ``vectors=False`` only the nullity is computed and
    the first item is the integer dimension.

    The cutoff is ``nullspace_tol * sigma_max`` but never below the rounding
    level of the generators, so a scalar plus 1e-17 noise has the full
    commutant instead of one measured against its own noise.
    """
    N = n * n
    eye = np.eye(n)
    R = np.zeros((0, N), dtype=np.complex128)
    floor = ROUNDING_FLOOR * n * max((op_norm(M) for M in mats), default=0.0)
    for M in mats:
        # row-major vec: vec(X M) = (I kron M^T) vec X, vec(M X) = (M kron I) vec X
        block = np.kron(eye, M.T) - np.kron(M, eye)
        R = np.vstack([R, block])
        if R.shape[0] > 2 * N:
            R = np.linalg.qr(R, mode="r")
    if R.shape[0] == 0:
        return (np.eye(N, dtype=np.complex128) if vectors else N), 0.0, np.inf
    if vectors:
        _, s, Vh = np.linalg.svd(R, full_matrices=True)
    else:
        s = np.linalg.svd(R, compute_uv=False)
    s_full = np.zeros(N)
    s_full[: s.size] = s
    sigma_max = float(s_full.max())
    cutoff = max(tol.nullspace_tol * sigma_max, floor)
    null = s_full <= cutoff
    above = s_full[~null]
    margin = float(above.min()) if above.size else np.inf
    if not vectors:
        return int(null.sum()), sigma_max, margin
    return Vh[null].conj().T, sigma_max, margin


def _commutant_parts(generators, tol: Tolerances, n: int | None, vectors: bool = True):
    if isinstance(generators, StarAlgebra):
        n = generators.n
        mats = list(generators.basis)
    else:
        gens = [as_matrix(g) for g in generators]
        if n is None:
            if not gens:
                raise PreconditionError("an empty generator list needs an explicit dimension n")
            n = gens[0].shape[0]
        mats = []
        for G in gens:
            mats.append(G)
            if op_norm(G - G.conj().T) > 0:
                mats.append(G.conj().T)
    V, smax, margin = _commutation_nullspace(mats, n, tol, vectors)
    if not vectors:
        return V, smax, margin
    return StarAlgebra(n, V.T.reshape(-1, n, n).copy()), smax, margin


def commutant(generators, tol: Tolerances = DEFAULT_TOL, n: int | None = None) -> StarAlgebra:
    """``{X : XG = GX and XG* = G*X}`` for every generator ``G``.

    ``generators`` may also be a ``StarAlgebra``; its basis is adjoint-closed
    so the adjoint equations are skipped.
    """
    return _commutant_parts(generators, tol, n)[0]


def is_irreducible(T, tol: Tolerances = DEFAULT_TOL) -> IrreducibilityCertificate:
    T = as_matrix(T)
    dim, smax, margin = _commutant_parts([T], tol, None, vectors=False)
    return IrreducibilityCertificate(dim == 1, dim, margin, smax)


def intersect(A: StarAlgebra, B: StarAlgebra) -> StarAlgebra:
    """Intersection of two spans via principal angles."""
    QA, QB = A.vectors, B.vectors
    U, s, _ = np.linalg.svd(QA.conj().T @ QB, full_matrices=False)
    keep = s > ANGLE_COS_THRESHOLD
    Z = QA @ U[:, : s.size][:, keep]
    return StarAlgebra(A.n, Z.T.reshape(-1, A.n, A.n).copy())


def center(A: StarAlgebra, tol: Tolerances = DEFAULT_TOL) -> StarAlgebra:
    return intersect(A, commutant(A, tol))


def _sort_projections(projs: list[Projection]) -> list[Projection]:
    return sorted(projs, key=lambda P: tuple(np.round(-P.matrix.diagonal().real, 8)))


def _atoms(Z: StarAlgebra, tol: Tolerances, seed: int) -> list[Projection]:
    """Minimal projections of an abelian algebra via one generic Hermitian element."""
    n = Z.n
    if Z.dim == 1:
        return [Projection.identity(n)]
    rng = np.random.default_rng(seed)
    for _ in range(CENTRAL_RETRIES):
        h = Z.random_element(rng, hermitian=True)
        w, U = np.linalg.eigh(h)
        groups = cluster(w, tol.cluster_tol * scale_of(h))
        if len(groups) != Z.dim:
            continue
        projs = [Projection.from_vectors(U[:, g]) for g in groups]
        if all(Z.contains(P.matrix, tol) for P in projs):
            return _sort_projections(projs)
    raise RetryExhausted(f"no element with {Z.dim} distinct eigenvalues after {CENTRAL_RETRIES} draws")


def minimal_central_projections(A: StarAlgebra, tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> list[Projection]:
    return _atoms(center(A, tol), tol, seed)


def _compress(A: StarAlgebra, W: np.ndarray, tol: Tolerances) -> StarAlgebra:
    """The algebra ``W* A W`` acting on ``ran W``."""
    comp = W.conj().T[None] @ A.basis @ W[None]
    return StarAlgebra.from_spanning(list(comp), tol, n=W.shape[1])


def _matrix_units(Bz: StarAlgebra, ni: int, mi: int, tol: Tolerances, rng) -> np.ndarray:
    """Unitary on ran Z putting the simple block ``Bz`` into ``M_ni (x) I_mi`` form."""
    r = Bz.n
    for _ in range(CENTRAL_RETRIES):
        h = Bz.random_element(rng, hermitian=True)
        w, V = np.linalg.eigh(h)
        groups = cluster(w, tol.cluster_tol * scale_of(h))
        if len(groups) == ni and all(len(g) == mi for g in groups):
            break
    else:
        raise RetryExhausted(f"could not split a {ni}x{ni} block into minimal projections")
    E = [V[:, g] for g in groups]
    cols = [E[0]]
    for k in range(1, ni):
        for _ in range(CENTRAL_RETRIES):
            X = Bz.random_element(rng)
            Wk = E[0].conj().T @ X @ E[k]
            c = np.sqrt(np.trace(Wk @ Wk.conj().T).real / mi)
            if c > tol.nullspace_tol * max(1.0, op_norm(X)):
                break
        else:
            raise RetryExhausted("minimal projections are not connected inside the block")
        # polar factor: E_1 X E_k is a multiple of a partial isometry ran E_k -> ran E_1
        u, _, vh = np.linalg.svd(Wk)
        cols.append(E[k] @ (u @ vh).conj().T)
    assert sum(c.shape[1] for c in cols) == r
    return np.hstack(cols)


def decomposition_residual(A: StarAlgebra, dec: BlockDecomposition) -> float:
    """Largest deviation of ``U* B U`` from block-diagonal tensor form over the basis."""
    U = dec.unitary
    worst = 0.0
    for B in A.basis:
        Y = U.conj().T @ B @ U
        rest = Y.copy()
        for sl, ni, mi in dec.block_slices():
            Yb = Y[sl, sl]
            x = np.einsum("kljl->kj", Yb.reshape(ni, mi, ni, mi)) / mi
            worst = max(worst, np.abs(Yb - np.kron(x, np.eye(mi))).max(initial=0.0))
            rest[sl, sl] = 0
        worst = max(worst, np.abs(rest).max(initial=0.0))
    return float(worst)


def wedderburn_decompose(A: StarAlgebra, tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> BlockDecomposition:
    rng = np.random.default_rng(seed)
    cols, blocks = [], []
    for Z in minimal_central_projections(A, tol, seed):
        W = Z.range_basis()
        Bz = _compress(A, W, tol)
        d = Bz.dim
        ni = int(round(np.sqrt(d)))
        if ni * ni != d:
            raise StructuralError(f"central block has dimension {d}, not a perfect square")
        if Z.rank % ni:
            raise StructuralError(f"block rank {Z.rank} is not a multiple of {ni}")
        mi = Z.rank // ni
        Ub = W if ni == 1 else W @ _matrix_units(Bz, ni, mi, tol, rng)
        cols.append(Ub)
        blocks.append((ni, mi))
    dec = BlockDecomposition(np.hstack(cols), blocks)
    res = decomposition_residual(A, dec)
    if res > tol.nullspace_tol * max(1, A.n) * 100:
        raise NumericalError("block decomposition failed its tensor-form check", residual=res)
    return dec


def canonical_algebra(blocks, unitary=None) -> StarAlgebra:
    """``U (sum_i M_{n_i} (x) I_{m_i}) U*`` built from its matrix units."""
    n = sum(ni * mi for ni, mi in blocks)
    U = np.eye(n, dtype=np.complex128) if unitary is None else np.asarray(unitary, dtype=np.complex128)
    mats = []
    offset = 0
    for ni, mi in blocks:
        for j in range(ni):
            for k in range(ni):
                X = np.zeros((n, n), dtype=np.complex128)
                Ejk = np.zeros((ni, ni))
                Ejk[j, k] = 1
                X[offset : offset + ni * mi, offset : offset + ni * mi] = np.kron(Ejk, np.eye(mi)) / np.sqrt(mi)
                mats.append(U @ X @ U.conj().T)
        offset += ni * mi
    basis = np.array(mats)
    return StarAlgebra(n, basis)


def atomic_support(A: StarAlgebra, tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> Projection:
    """Sum of the minimal projections of an abelian algebra."""
    if not A.is_abelian(tol):
        raise PreconditionError("atomic support is defined for abelian algebras only")
    total = sum(P.matrix for P in _atoms(A, tol, seed))
    return Projection.from_matrix(total, tol)


def central_support(P, A: StarAlgebra, tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> Projection:
    """Smallest central projection of ``A`` dominating ``P``."""
    P = P if isinstance(P, Projection) else Projection.from_matrix(P, tol)
    if not A.contains(P.matrix, tol):
        raise PreconditionError("projection is not in the algebra")
    if P.rank == 0:
        return Projection.zero(A.n)
    cut = tol.projection_tol * max(1, A.n)
    Zs = [Z for Z in minimal_central_projections(A, tol, seed) if op_norm(Z.matrix @ P.matrix) > cut]
    return Projection(sum(Z.matrix for Z in Zs), sum(Z.rank for Z in Zs))


def _orbit_rank(basis: np.ndarray, xi: np.ndarray, tol: Tolerances) -> int:
    M = (basis @ xi).T
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol.rank_tol * s[0]))


def is_cyclic(A: StarAlgebra, xi, tol: Tolerances = DEFAULT_TOL) -> bool:
    xi = as_vector(xi, A.n)
    return _orbit_rank(A.basis, xi, tol) == A.n


def vector_report(A: StarAlgebra, xi, tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> VectorReport:
    xi = as_vector(xi, A.n)
    if np.linalg.norm(xi) == 0:
        raise PreconditionError("zero vector")
    orbit = _orbit_rank(A.basis, xi, tol)
    comm = commutant(A, tol)
    comm_orbit = _orbit_rank(comm.basis, xi, tol)
    per_block = []
    for Z in minimal_central_projections(A, tol, seed):
        per_block.append({"rank": _orbit_rank(A.basis @ Z.matrix, xi, tol), "dim": Z.rank})
    data = {"n": A.n, "orbit_rank": orbit, "commutant_orbit_rank": comm_orbit, "blocks": per_block}
    return VectorReport(orbit == A.n, comm_orbit == A.n, data)


def admits_cyclic_vector(dec: BlockDecomposition) -> bool:
    return all(mi <= ni for ni, mi in dec.blocks)


def find_cyclic_vector(A: StarAlgebra, target, radius: float, tol: Tolerances = DEFAULT_TOL, seed: int = 0):
    """A cyclic vector within ``radius`` of ``target``, or ``None`` if ``A`` has none."""
    if not radius > 0:
        raise PreconditionError("radius must be positive")
    target = np.asarray(target, dtype=np.complex128)
    if target.shape != (A.n,) or not np.all(np.isfinite(target)):
        raise PreconditionError(f"target must be a finite vector of length {A.n}")
    dec = wedderburn_decompose(A, tol, seed)
    if not admits_cyclic_vector(dec):
        return None
    if np.linalg.norm(target) > 0 and is_cyclic(A, target, tol):
        return target
    rng = np.random.default_rng(seed)
    for _ in range(CYCLIC_RETRIES):
        u = rng.normal(size=A.n) + 1j * rng.normal(size=A.n)
        xi = target + 0.5 * radius * u / np.linalg.norm(u)
        if is_cyclic(A, xi, tol):
            return xi
    raise RetryExhausted(f"no cyclic vector found in {CYCLIC_RETRIES} draws although blocks {dec.blocks} admit one")


def failing_blocks(dec: BlockDecomposition) -> list:
    return [(ni, mi) for ni, mi in dec.blocks if mi > ni]


def is_masa(A: StarAlgebra, tol: Tolerances = DEFAULT_TOL) -> bool:
    return A.is_abelian(tol) and commutant(A, tol).dim == A.dim
