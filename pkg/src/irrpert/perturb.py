"""Trace-class perturbations that make operators irreducible.

Each construction returns a :class:`PerturbationResult` whose ``K`` has a
trace norm strictly below the requested budget, together with an
irreducibility certificate of the perturbed operator computed through
:func:`irrpert.algebra.is_irreducible`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from . import algebra as alg
from .errors import BudgetError, CertificationError, PreconditionError, StructuralError
from .matrix import (
    DEFAULT_TOL,
    Projection,
    Tolerances,
    as_hermitian,
    as_matrix,
    as_vector,
    hermitian_eig,
    imag_part,
    op_norm,
    rank_one,
    real_part,
    scale_of,
    trace_norm,
)

MAX_HALVINGS = 60
FALLBACK_GRID = 4096


@dataclass(frozen=True)
class PerturbationRequest:
    epsilon: float
    tolerances: Tolerances = DEFAULT_TOL
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise PreconditionError(f"epsilon must be positive, got {self.epsilon!r}")


@dataclass(frozen=True)
class LogEntry:
    stage: str
    budget: float
    used: float
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PerturbationResult:
    K: np.ndarray
    trace_norm: float
    epsilon: float
    certificate: alg.IrreducibilityCertificate
    construction_log: list = field(default_factory=list)
    witness: dict = field(default_factory=dict)


def _finish(T, K, req: PerturbationRequest, log, witness=None, strict=True, require_irreducible=False):
    used = trace_norm(K)
    n = K.shape[0]
    if strict and not used < req.epsilon + 1e-12 * n:
        raise BudgetError(f"||K||_1 = {used!r} exceeds the budget {req.epsilon!r}")
    if not strict and used > req.epsilon + 1e-12 * n:
        raise BudgetError(f"||K||_1 = {used!r} exceeds the budget {req.epsilon!r}")
    cert = alg.is_irreducible(T + K, req.tolerances)
    if require_irreducible and not cert.irreducible:
        raise CertificationError(
            f"perturbed operator has commutant dimension {cert.commutant_dim}",
            commutant_dim=cert.commutant_dim,
            margin=cert.margin,
        )
    return PerturbationResult(K, used, req.epsilon, cert, list(log), dict(witness or {}))


# -- diagonal shifts -----------------------------------------------------------


def _admissible(x, taken, forbidden, gap):
    return all(abs(x - t) > gap for t in taken) and all(abs(x - s) > gap for s in forbidden)


def _min_distance(x, taken, forbidden):
    pts = list(taken) + list(forbidden)
    return min((abs(x - p) for p in pts), default=np.inf)


def choose_shifts(alpha, forbidden, epsilon: float, gap: float) -> np.ndarray:
    """Shifts ``0 < delta_j < epsilon / 2**j`` (j from 1) separating ``alpha + delta``.

    Each ``delta_j`` starts at the midpoint of its interval and is halved until
    ``alpha_j + delta_j`` is farther than ``gap`` from every earlier shifted
    value and every forbidden point. If halving stalls inside a forbidden
    band, the point of a fine grid with the largest clearance is used.
    """
    alpha = np.asarray(alpha, dtype=float)
    forbidden = [float(s) for s in forbidden]
    deltas = np.empty(alpha.size)
    taken: list[float] = []
    for j, a in enumerate(alpha, start=1):
        bound = epsilon / 2.0**j
        d = bound / 2
        for _ in range(MAX_HALVINGS):
            if _admissible(a + d, taken, forbidden, gap):
                break
            d /= 2
        else:
            grid = bound * np.arange(1, FALLBACK_GRID) / FALLBACK_GRID
            clear = [_min_distance(a + g, taken, forbidden) for g in grid]
            best = int(np.argmax(clear))
            if clear[best] <= gap:
                raise StructuralError(f"no admissible shift for entry {j} in (0, {bound})")
            d = grid[best]
        deltas[j - 1] = d
        taken.append(a + d)
    return deltas


def diag_distinct(D, forbidden, req: PerturbationRequest) -> PerturbationResult:
    """Diagonal shift giving ``D + K`` a simple spectrum that avoids ``forbidden``."""
    tol = req.tolerances
    D = as_hermitian(D, tol)
    off = D - np.diag(np.diag(D))
    if np.abs(off).max(initial=0.0) > tol.hermitian_tol * scale_of(D):
        raise PreconditionError("input is not diagonal")
    alpha = np.diag(D).real
    gap = tol.cluster_tol * scale_of(D)
    deltas = choose_shifts(alpha, forbidden, req.epsilon, gap)
    K = np.diag(deltas).astype(np.complex128)
    algebra = alg.generate_algebra([D + K], tol)
    witness = {
        "deltas": deltas.tolist(),
        "bounds": [req.epsilon / 2.0**j for j in range(1, deltas.size + 1)],
        "spectrum": (alpha + deltas).tolist(),
        "masa": alg.is_masa(algebra, tol),
    }
    log = [LogEntry("diagonal-shift", req.epsilon, float(deltas.sum()))]
    return _finish(D, K, req, log, witness)


# -- isolated simple eigenvalue --------------------------------------------------


def _normalization(w: np.ndarray):
    """``(c, s)`` with ``(A - c I) / s`` positive of norm one."""
    lo, hi = float(w[0]), float(w[-1])
    if hi == lo:
        # scalar input: map it to the identity
        return lo - 1.0, 1.0
    c = min(lo, 0.0)
    return c, hi - c


def isolated_simple_eigenvalue(A, req: PerturbationRequest, xi=None):
    """Rank-one surgery producing an isolated eigenvalue of multiplicity one.

    ``A`` is brought to a positive norm-one operator by ``(A - c) / s``, the
    budget becomes ``epsilon / s``, and with ``F`` the projection onto a unit
    vector ``xi`` from the spectral subspace of ``[1 - epsilon'/4, 1]``::

        K' = (eps'/4) F + F (A'-I) F - F (A'-I) - (A'-I) F

    so that ``A' + K' = (1 + eps'/4) F + (I-F) A' (I-F)``. ``K = s K'`` is
    returned together with the eigenvalue ``c + s (1 + eps'/4)``.
    """
    tol = req.tolerances
    A = as_hermitian(A, tol)
    n = A.shape[0]
    dec = hermitian_eig(A, tol)
    c, s = _normalization(dec.eigenvalues)
    An = (A - c * np.eye(n)) / s
    wn = (dec.eigenvalues - c) / s
    eps_n = req.epsilon / s
    lo = 1 - eps_n / 4
    # membership in [lo, 1] with a cluster-sized allowance for rounding at the top
    slack = tol.cluster_tol
    band = dec.unitary[:, (wn >= lo - slack) & (wn <= 1 + slack)]
    if xi is None:
        xi = dec.unitary[:, -1]
    else:
        xi = as_vector(xi, n)
        nrm = np.linalg.norm(xi)
        if nrm == 0:
            raise PreconditionError("xi must be nonzero")
        xi = xi / nrm
        outside = np.linalg.norm(xi - band @ (band.conj().T @ xi))
        if outside > tol.projection_tol * max(1, n):
            raise PreconditionError("xi is not in the spectral subspace of [1 - eps/4, 1]")
    F = rank_one(xi, xi)
    M = An - np.eye(n)
    Kn = eps_n / 4 * F + F @ M @ F - F @ M - M @ F
    Kn = (Kn + Kn.conj().T) / 2
    K = s * Kn
    lam = c + s * (1 + eps_n / 4)
    C = null_space(xi[None].conj())
    rest = np.linalg.eigvalsh(C.conj().T @ An @ C)
    gap_n = (1 + eps_n / 4) - (rest.max() if rest.size else -np.inf)
    witness = {
        "eigenvalue": lam,
        "shift": c,
        "scale": s,
        "normalized_epsilon": eps_n,
        "normalized_gap": float(gap_n),
        "xi": xi,
        "complement_spectrum": (c + s * rest).tolist(),
    }
    log = [LogEntry("rank-one-surgery", req.epsilon, trace_norm(K))]
    return _finish(A, K, req, log, witness, strict=False), lam


# -- couplings -------------------------------------------------------------------


def _check_commutes(P: np.ndarray, B: np.ndarray, tol: Tolerances, what: str):
    defect = op_norm(P @ B - B @ P)
    if defect > tol.nullspace_tol * scale_of(B):
        raise PreconditionError(f"{what} does not commute with B (defect {defect:.3e})")


def _check_in_algebra(P: np.ndarray, A: np.ndarray, tol: Tolerances, what: str):
    WA = alg.generate_algebra([A], tol)
    if not WA.contains(P, tol):
        raise PreconditionError(f"{what} is not in W*(A)")


def couple_via_partial_isometry(A, B, P, req: PerturbationRequest) -> PerturbationResult:
    """Glue ``ran(I-P)`` to an irreducible corner ``ran P`` through ``V K_P``.

    ``V`` is the partial isometry sending the first ``rank(I-P)`` basis vectors
    of ``ran P`` onto a basis of ``ran(I-P)``, and ``K_P`` a positive diagonal
    operator on ``ran P`` with trivial kernel and ``||K_P||_1 < eps/2``. The
    imaginary part gains the off-diagonal blocks ``K_P V*`` and ``V K_P``.
    """
    tol = req.tolerances
    A = as_hermitian(A, tol)
    B = as_hermitian(B, tol)
    n = A.shape[0]
    P = P if isinstance(P, Projection) else Projection.from_matrix(P, tol)
    if P.rank == 0:
        raise PreconditionError("P must be nonzero")
    _check_in_algebra(P.matrix, A, tol, "P")
    _check_commutes(P.matrix, B, tol, "P")
    E = P.range_basis()
    corner = E.conj().T @ (A + 1j * B) @ E
    if not alg.is_irreducible(corner, tol).irreducible:
        raise PreconditionError("the compression of A + iB to ran P is not irreducible")
    T = A + 1j * B
    if P.rank == n:
        return _finish(T, np.zeros((n, n), complex), req, [LogEntry("no-complement", req.epsilon, 0.0)],
                       require_irreducible=True)
    G = P.complement().range_basis()
    r1, r2 = P.rank, n - P.rank
    if r1 < r2:
        raise StructuralError(
            f"rank(P) = {r1} < rank(I-P) = {r2}: no partial isometry from ran P onto ran(I-P)"
        )
    deltas = choose_shifts(np.zeros(r1), [], req.epsilon / 2, tol.cluster_tol)
    KP = E @ np.diag(deltas) @ E.conj().T
    V = G @ E[:, :r2].conj().T
    coupling = V @ KP
    dB = coupling + coupling.conj().T
    K = 1j * dB
    log = [LogEntry("partial-isometry-coupling", req.epsilon, trace_norm(dB), {"deltas": deltas.tolist()})]
    return _finish(T, K, req, log, {"rank_P": r1, "rank_complement": r2}, require_irreducible=True)


def superdiagonal_fill(Bb: np.ndarray, epsilon: float, threshold: float, schedule: str = "geometric"):
    """``K_1 = sum_j delta_j / 2**(j+2) (e_j e_{j+1}* + e_{j+1} e_j*)``.

    ``delta_j = 0`` where ``|B[j, j+1]| > threshold`` and ``epsilon``
    otherwise; a nonzero sub-threshold entry sets the phase of the fill so the
    two cannot cancel. ``||K_1||_1 < epsilon / 2``. With ``schedule="spread"``
    every filled entry gets the flat weight ``epsilon / (4m)`` instead.
    """
    if schedule not in ("geometric", "spread"):
        raise ValueError(f"unknown schedule {schedule!r}")
    m = Bb.shape[0]
    K1 = np.zeros((m, m), dtype=np.complex128)
    deltas = []
    for j in range(1, m):
        b = Bb[j - 1, j]
        if abs(b) > threshold:
            deltas.append(0.0)
            continue
        phase = b / abs(b) if b != 0 else 1.0
        weight = epsilon / (4 * m) if schedule == "spread" else epsilon / 2.0 ** (j + 2)
        coef = weight * phase
        K1[j - 1, j] = coef
        K1[j, j - 1] = np.conj(coef)
        deltas.append(epsilon)
    return K1, deltas


def two_projection_coupling(A, B, P1, req: PerturbationRequest, P2=None) -> PerturbationResult:
    """Chain ``ran P1`` by a superdiagonal fill and tie ``ran P2`` to it with ``K_2``.

    With orthonormal bases ``e_j`` of ``ran P1`` and ``f_j`` of ``ran P2``, the
    imaginary part gains ``K_1 + K_2 + K_2*`` where ``K_2 = sum eps/2**(j+2)
    f_j e_j*``. Equal ranks are required: with unequal ranks the finite sums
    either fail to separate the ``e_j`` or leave part of ``ran P2`` unreached.
    """
    tol = req.tolerances
    A = as_hermitian(A, tol)
    B = as_hermitian(B, tol)
    n = A.shape[0]
    P1 = P1 if isinstance(P1, Projection) else Projection.from_matrix(P1, tol)
    P2 = P1.complement() if P2 is None else (P2 if isinstance(P2, Projection) else Projection.from_matrix(P2, tol))
    if op_norm(P1.matrix + P2.matrix - np.eye(n)) > tol.projection_tol * max(1, n):
        raise PreconditionError("P1 + P2 != I")
    if P1.rank < 1 or P2.rank < 1:
        raise PreconditionError("P1 and P2 must both be nonzero")
    for name, P in (("P1", P1), ("P2", P2)):
        _check_commutes(P.matrix, B, tol, name)
        _check_in_algebra(P.matrix, A, tol, name)
    if P1.rank != P2.rank:
        raise StructuralError(f"rank(P1) = {P1.rank} != rank(P2) = {P2.rank}; the finite coupling needs equal ranks")
    e = P1.range_basis()
    f = P2.range_basis()
    eps = req.epsilon
    B11 = e.conj().T @ B @ e
    K1e, deltas = superdiagonal_fill(B11, eps, tol.cluster_tol * scale_of(B))
    K1 = e @ K1e @ e.conj().T
    K2 = sum(eps / 2.0 ** (j + 2) * rank_one(f[:, j - 1], e[:, j - 1]) for j in range(1, P1.rank + 1))
    dB = K1 + K2 + K2.conj().T
    K = 1j * dB
    log = [
        LogEntry("superdiagonal-fill", eps / 2, trace_norm(K1), {"deltas": deltas,
                                                               "vanished": [j for j, d in enumerate(deltas, 1) if d == 0]}),
        LogEntry("cross-coupling", eps / 2, trace_norm(K2 + K2.conj().T)),
    ]
    return _finish(A + 1j * B, K, req, log, require_irreducible=True)


def cyclic_coupling(A, B, split: int, req: PerturbationRequest) -> PerturbationResult:
    """Irreducible perturbation of ``A + iB`` with ``A = A11 (+) A22`` and ``A11`` diagonal.

    Budget ``eps/4`` separates the spectrum of ``A11`` from itself and from
    ``sigma(A22)``, ``eps/4`` fills the superdiagonal of ``B11``, and the rest
    pays for the rank-one coupling ``eta (x) xi'`` (plus adjoint) where
    ``B21 eta + xi'`` is cyclic for ``W*(A22 + i B22)``.
    """
    tol = req.tolerances
    A = as_hermitian(A, tol)
    B = as_hermitian(B, tol)
    n = A.shape[0]
    if not 1 <= split < n:
        raise PreconditionError(f"split must satisfy 1 <= split < {n}")
    s1 = slice(0, split)
    s2 = slice(split, n)
    sA = scale_of(A)
    if np.abs(A[s1, s2]).max(initial=0.0) > tol.hermitian_tol * sA:
        raise PreconditionError("A is not block diagonal for this split")
    A11, A22 = A[s1, s1], A[s2, s2]
    if np.abs(A11 - np.diag(np.diag(A11))).max(initial=0.0) > tol.hermitian_tol * sA:
        raise PreconditionError("A11 is not diagonal")
    eps = req.epsilon
    T = A + 1j * B

    sigma22 = np.linalg.eigvalsh(A22)
    d1 = choose_shifts(np.diag(A11).real, sigma22, eps / 4, tol.cluster_tol * sA)
    K1e, fill = superdiagonal_fill(B[s1, s1], eps / 2, tol.cluster_tol * scale_of(B))

    W22 = alg.generate_algebra([A22 + 1j * B[s2, s2]], tol)
    eta = np.zeros(split, dtype=np.complex128)
    eta[0] = 1
    target = B[s2, s1] @ eta
    zeta = alg.find_cyclic_vector(W22, target, eps / 4, tol, req.seed)
    if zeta is None:
        bad = alg.failing_blocks(alg.wedderburn_decompose(W22, tol, req.seed))
        raise StructuralError(
            f"W*(A22 + iB22) has no cyclic vector: blocks (n, m) = {bad} have multiplicity above size"
        )
    xi = zeta - target

    dA = np.zeros((n, n), dtype=np.complex128)
    dA[s1, s1] = np.diag(d1)
    dB = np.zeros((n, n), dtype=np.complex128)
    dB[s1, s1] = K1e
    dB[s1, s2] = np.outer(eta, xi.conj())
    dB[s2, s1] = np.outer(xi, eta.conj())
    K = dA + 1j * dB
    log = [
        LogEntry("diagonal-shift", eps / 4, float(d1.sum())),
        LogEntry("superdiagonal-fill", eps / 4, trace_norm(K1e), {"deltas": fill}),
        LogEntry("rank-one-coupling", eps / 2, 2 * float(np.linalg.norm(xi)), {"xi_norm": float(np.linalg.norm(xi))}),
    ]
    return _finish(T, K, req, log, require_irreducible=True)


def rank_one_completion_check(generators, xi, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Whether adjoining ``xi (x) xi`` to the generators gives all of M_n."""
    gens = [as_matrix(g) for g in generators]
    xi = as_vector(xi)
    if np.linalg.norm(xi) == 0:
        raise PreconditionError("zero vector")
    n = xi.shape[0]
    return alg.generate_algebra(gens + [rank_one(xi, xi)], tol, n=n).dim == n * n


# -- end to end ------------------------------------------------------------------


ROTATIONS = 16


def _best_rotation(T: np.ndarray, gap: float) -> float:
    """Angle ``k*pi/16`` whose rotated real part ``Re(e^{i theta} T)`` is best separated.

    Scored by the smallest eigenvalue gap above ``gap``; ties keep the smallest ``k``.
    """
    best, best_score = 0.0, -1.0
    for k in range(ROTATIONS):
        theta = k * np.pi / ROTATIONS
        w = np.linalg.eigvalsh(real_part(np.exp(1j * theta) * T))
        d = np.diff(w)
        d = d[d > gap]
        score = float(d.min()) if d.size else 0.0
        if score > best_score * (1 + 1e-9):
            best, best_score = theta, score
    return best


def spread_shifts(alpha, epsilon: float, gap: float) -> np.ndarray:
    """Shifts ``0 < delta_j < epsilon / m`` chosen greedily for maximal clearance.

    Each entry picks from the grid ``bound * k / (2m + 2)``, k = 1..2m+1, the
    point farthest from every earlier shifted value (ties go to the middle).
    """
    alpha = np.asarray(alpha, dtype=float)
    m = alpha.size
    bound = epsilon / m
    grid = bound * np.arange(1, 2 * m + 2) / (2 * m + 2)
    deltas = np.empty(m)
    taken: list[float] = []
    for j, a in enumerate(alpha):
        clear = np.array([_min_distance(a + g, taken, []) for g in grid])
        top = clear.max()
        cands = np.flatnonzero(clear >= top * (1 - 1e-12))
        pick = cands[np.argmin(np.abs(grid[cands] - bound / 2))]
        if clear[pick] <= gap:
            raise StructuralError(f"no admissible shift for entry {j + 1} in (0, {bound})")
        deltas[j] = grid[pick]
        taken.append(a + grid[pick])
    return deltas


def _pipeline_candidate(T, eps, tol, schedule):
    n = T.shape[0]
    gap = tol.cluster_tol * scale_of(T)
    theta = 0.0 if schedule == "geometric" else _best_rotation(T, gap)
    R = np.exp(1j * theta) * T
    dec = hermitian_eig(real_part(R), tol)
    U = dec.unitary
    Bu = U.conj().T @ imag_part(R) @ U
    if schedule == "geometric":
        deltas = choose_shifts(dec.eigenvalues, [], eps / 2, gap)
        K1, fill = superdiagonal_fill(Bu, eps, gap)
    else:
        deltas = spread_shifts(dec.eigenvalues, eps / 2, gap)
        K1, fill = superdiagonal_fill(Bu, eps, gap, schedule="spread")
    K = np.exp(-1j * theta) * (U @ (np.diag(deltas) + 1j * K1) @ U.conj().T)
    log = [
        LogEntry("real-part-distinct", eps / 2, float(deltas.sum()),
                 {"schedule": schedule, "rotation": theta}),
        LogEntry("imag-superdiagonal-fill", eps / 2, trace_norm(K1),
                 {"filled": [j for j, d in enumerate(fill, 1) if d != 0]}),
    ]
    return K, log


PIPELINE_SCHEDULES = ("geometric", "spread")
# relative certificate margin below which the next schedule is also tried
SAFE_MARGIN = 1e-6


def irreducible_pipeline(T, req: PerturbationRequest, schedules=PIPELINE_SCHEDULES) -> PerturbationResult:
    """``K`` with ``||K||_1 < eps`` and ``T + K`` irreducible, for any square ``T``.

    In an eigenbasis of ``Re T`` the real part is made simple with budget
    ``eps/2`` and the imaginary part gets a nonzero superdiagonal with budget
    ``eps/2``. A projection commuting with the result is then diagonal (simple
    real part) and scalar (connected superdiagonal).

    The first schedule halves shifts geometrically. When its relative
    certificate margin is below ``SAFE_MARGIN``, the next one rotates ``T`` by the phase that best
    separates its real part and spreads the budget evenly across entries;
    neither rotation nor the shared unitary changes ``||K||_1`` or the
    commutant. The candidate with the larger margin is returned.
    """
    tol = req.tolerances
    T = as_matrix(T)
    eps = req.epsilon
    if T.shape[0] == 1:
        return _finish(T, np.zeros((1, 1), complex), req, [LogEntry("scalar", eps, 0.0)], require_irreducible=True)
    best = None
    last = None
    for schedule in schedules:
        try:
            K, log = _pipeline_candidate(T, eps, tol, schedule)
            res = _finish(T, K, req, log)
        except StructuralError as exc:
            last = exc
            continue
        cert = res.certificate
        if cert.irreducible and (best is None or _rel_margin(cert) > _rel_margin(best.certificate)):
            best = res
        if best is not None and _rel_margin(best.certificate) >= SAFE_MARGIN:
            break
        if not cert.irreducible:
            last = CertificationError(
                f"perturbed operator has commutant dimension {cert.commutant_dim}",
                commutant_dim=cert.commutant_dim,
                margin=cert.margin,
            )
    if best is None:
        raise last
    return best


def _rel_margin(cert) -> float:
    return cert.margin / cert.sigma_max if cert.sigma_max > 0 else np.inf
