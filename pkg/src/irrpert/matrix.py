"""Dense complex matrix substrate.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The helpers
here validate shape and finiteness, symmetrize Hermitian input, and provide
the spectral tools (eigendecomposition, spectral projections, Schatten norms,
rank-one operators) the algebra and perturbation code is built on.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import AmbiguityError, NumericalError, PreconditionError


@dataclass(frozen=True)
class Tolerances:
    """Relative numerical thresholds.

    Every value is a *relative* factor; the absolute threshold is obtained by
    multiplying with the scale of the input at hand (``max(1, ||A||)`` for the
    first five, the largest singular value of the relevant linear system for
    ``nullspace_tol`` and ``rank_tol``).
    """

    hermitian_tol: float = 1e-9
    projection_tol: float = 1e-9
    ortho_tol: float = 1e-9
    recon_tol: float = 1e-9
    cluster_tol: float = 1e-8
    nullspace_tol: float = 1e-8
    rank_tol: float = 1e-8

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{f.name} must be a positive finite number, got {v!r}")

    def scaled(self, factor: float) -> "Tolerances":
        """Return a copy with every threshold multiplied by ``factor``."""
        if not factor > 0:
            raise ValueError("tolerance scale must be positive")
        return replace(self, **{f.name: getattr(self, f.name) * factor for f in fields(self)})


DEFAULT_TOL = Tolerances()


def as_matrix(M) -> np.ndarray:
    """Coerce to a finite square complex matrix with n >= 1."""
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] < 1:
        raise PreconditionError("matrix dimension must be at least 1")
    if not np.all(np.isfinite(A)):
        raise PreconditionError("matrix has non-finite entries")
    return A


def as_vector(v, n: int | None = None) -> np.ndarray:
    x = np.asarray(v, dtype=np.complex128)
    if x.ndim != 1 or x.shape[0] < 1:
        raise PreconditionError(f"expected a nonempty vector, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise PreconditionError(f"vector has dimension {x.shape[0]}, expected {n}")
    if not np.all(np.isfinite(x)):
        raise PreconditionError("vector has non-finite entries")
    return x


def op_norm(M: np.ndarray) -> float:
    """Operator (Schatten-infinity) norm."""
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def scale_of(M: np.ndarray) -> float:
    return max(1.0, op_norm(M))


def adjoint(M: np.ndarray) -> np.ndarray:
    return M.conj().T


def real_part(T: np.ndarray) -> np.ndarray:
    return (T + T.conj().T) / 2


def imag_part(T: np.ndarray) -> np.ndarray:
    return (T - T.conj().T) / 2j


def as_hermitian(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Validate ``M = M*`` within ``hermitian_tol`` and return its symmetrization."""
    A = as_matrix(M)
    defect = op_norm(A - A.conj().T)
    if defect > tol.hermitian_tol * scale_of(A):
        raise PreconditionError(f"matrix is not Hermitian (||A - A*|| = {defect:.3e})")
    return (A + A.conj().T) / 2


def rank_one(e, f) -> np.ndarray:
    """The operator ``h -> <h, f> e``, i.e. the matrix ``e f*``."""
    e = as_vector(e)
    f = as_vector(f)
    if e.shape != f.shape:
        raise PreconditionError(f"dimension mismatch: {e.shape[0]} vs {f.shape[0]}")
    # spelled out in real arithmetic so that rank_one(e, f)* == rank_one(f, e) bit for bit
    er, ei = e.real[:, None], e.imag[:, None]
    fr, fi = f.real[None, :], f.imag[None, :]
    return (er * fr + ei * fi) + 1j * (ei * fr - er * fi)


def singular_values(M: np.ndarray) -> np.ndarray:
    return np.linalg.svd(np.asarray(M, dtype=np.complex128), compute_uv=False)


def schatten_norm(M, p: float = 1) -> float:
    """Schatten p-norm, ``p >= 1`` or ``p = inf``."""
    if p != np.inf and not p >= 1:
        raise ValueError(f"Schatten norm needs p >= 1, got {p}")
    s = singular_values(as_matrix(M))
    if p == np.inf:
        return float(s.max())
    if p == 1:
        return float(s.sum())
    smax = s.max()
    if smax == 0:
        return 0.0
    # factor out the top singular value to keep large p from overflowing
    return float(smax * np.sum((s / smax) ** p) ** (1.0 / p))


def trace_norm(M) -> float:
    return schatten_norm(M, 1)


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    unitary: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U = self.unitary
        return (U * self.eigenvalues) @ U.conj().T


def hermitian_eig(A, tol: Tolerances = DEFAULT_TOL) -> EigenDecomposition:
    """Ascending eigendecomposition of a Hermitian matrix, residual-checked."""
    A = as_hermitian(A, tol)
    try:
        w, U = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigh failed: {exc}") from exc
    s = scale_of(A)
    n = A.shape[0]
    ortho = op_norm(U.conj().T @ U - np.eye(n))
    if ortho > tol.ortho_tol * s:
        raise NumericalError("eigenvectors are not orthonormal", residual=ortho)
    recon = op_norm(A @ U - U * w)
    if recon > tol.recon_tol * s:
        raise NumericalError("eigendecomposition residual too large", residual=recon)
    return EigenDecomposition(w, U)


def cluster(values, gap: float) -> list[np.ndarray]:
    """Group ascending ``values`` transitively: neighbours closer than ``gap`` share a group.

    Returns index arrays into ``values``.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    order = np.argsort(values, kind="stable")
    groups = [[order[0]]]
    for prev, cur in zip(order[:-1], order[1:]):
        if values[cur] - values[prev] <= gap:
            groups[-1].append(cur)
        else:
            groups.append([cur])
    return [np.array(g, dtype=int) for g in groups]


@dataclass(frozen=True)
class Projection:
    matrix: np.ndarray
    rank: int

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, P, tol: Tolerances = DEFAULT_TOL) -> "Projection":
        P = as_hermitian(P, tol)
        defect = op_norm(P @ P - P)
        if defect > tol.projection_tol * scale_of(P):
            raise PreconditionError(f"matrix is not idempotent (||P^2 - P|| = {defect:.3e})")
        tr = float(np.trace(P).real)
        rank = int(round(tr))
        if abs(tr - rank) > tol.projection_tol * max(1.0, P.shape[0]):
            raise PreconditionError(f"projection trace {tr} is not an integer")
        return cls(P, rank)

    @classmethod
    def from_vectors(cls, V: np.ndarray) -> "Projection":
        """Projection onto the span of the orthonormal columns of ``V``."""
        return cls(V @ V.conj().T, V.shape[1])

    @classmethod
    def zero(cls, n: int) -> "Projection":
        return cls(np.zeros((n, n), dtype=np.complex128), 0)

    @classmethod
    def identity(cls, n: int) -> "Projection":
        return cls(np.eye(n, dtype=np.complex128), n)

    def range_basis(self) -> np.ndarray:
        """Orthonormal basis of the range, built from ``P e_1, P e_2, ...`` in index order.

        Gram-Schmidt keeps a column when its residual has squared norm at
        least ``1/(4n)``. Residual norms only shrink, and after any ``k <
        rank`` picks some column still has squared residual ``>= 1/n``, so
        one pass finds exactly ``rank`` vectors. Each vector's own
        coordinate comes out real and positive, which fixes the phases.
        """
        n = self.n
        Q = np.zeros((n, 0), dtype=np.complex128)
        for j in range(n):
            if Q.shape[1] == self.rank:
                break
            r = self.matrix[:, j].astype(np.complex128)
            for _ in range(2):
                r = r - Q @ (Q.conj().T @ r)
            nrm = np.linalg.norm(r)
            if nrm * nrm >= 1 / (4 * n):
                Q = np.column_stack([Q, r / nrm])
        return Q

    def complement(self) -> "Projection":
        return Projection(np.eye(self.n) - self.matrix, self.n - self.rank)


def spectral_projection(A, interval, tol: Tolerances = DEFAULT_TOL) -> Projection:
    """Spectral projection of ``A`` for the closed interval ``[lo, hi]``.

    Eigenvalues within ``cluster_tol * max(1, ||A||)`` of the interval count as
    inside, so an endpoint sitting on an eigenvalue is fine. An eigenvalue
    cluster that this rule would split raises ``AmbiguityError``.
    """
    lo, hi = (float(x) for x in interval)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise PreconditionError(f"bad interval [{lo}, {hi}]")
    dec = hermitian_eig(A, tol)
    w, U = dec.eigenvalues, dec.unitary
    margin = tol.cluster_tol * scale_of(dec.reconstruct())
    inside = (w >= lo - margin) & (w <= hi + margin)
    for g in cluster(w, margin):
        if inside[g].any() and not inside[g].all():
            raise AmbiguityError(
                f"eigenvalue cluster [{w[g].min()}, {w[g].max()}] straddles an endpoint of [{lo}, {hi}]"
            )
    return Projection.from_vectors(U[:, inside])


def orthonormal_columns(C: np.ndarray, cutoff: float) -> np.ndarray:
    """Orthonormal basis for the column span of ``C``, dropping directions below ``cutoff``."""
    if C.shape[1] == 0:
        return C[:, :0]
    U, s, _ = np.linalg.svd(C, full_matrices=False)
    return U[:, s > cutoff]
