"""Independent re-checks of perturbation results.

Nothing here goes through the algebra module: the commutation system is
assembled entry by entry and handed straight to an SVD, so a bug in the
Kronecker-based commutant cannot certify its own output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .matrix import DEFAULT_TOL, Tolerances, as_matrix

CLAIM_RTOL = 1e-9
# absolute floor relative to ||T||: below it singular values are rounding noise
ROUNDING_FLOOR = 1e-12


@dataclass(frozen=True)
class VerificationReport:
    trace_norm_ok: bool
    irreducible_ok: bool
    commutant_dim: int
    margin: float
    details: list = field(default_factory=list)
    sigma_max: float = float("nan")

    @property
    def passed(self) -> bool:
        return self.trace_norm_ok and self.irreducible_ok


def _commutation_rows(M: np.ndarray) -> np.ndarray:
    """Rows of ``X -> XM - MX``; row ``(i, j)``, column ``(a, b)`` index ``X[a, b]``."""
    n = M.shape[0]
    S = np.zeros((n, n, n, n), dtype=np.complex128)
    idx = np.arange(n)
    for i in range(n):
        for j in range(n):
            # (XM)_{ij} = sum_k X_{ik} M_{kj}
            S[i, j, i, idx] += M[idx, j]
            # (MX)_{ij} = sum_k M_{ik} X_{kj}
            S[i, j, idx, j] -= M[i, idx]
    return S.reshape(n * n, n * n)


def brute_force_commutant_dim(T, tol: Tolerances = DEFAULT_TOL):
    """``(dim, margin)`` of ``{X : XT = TX, XT* = T*X}`` from the raw ``2n^2 x n^2`` system."""
    dim, margin, _ = brute_force_commutant(T, tol)
    return dim, margin


def brute_force_commutant(T, tol: Tolerances = DEFAULT_TOL):
    """Like :func:`brute_force_commutant_dim` but also returns the system's ``sigma_max``."""
    T = as_matrix(T)
    n = T.shape[0]
    S = np.vstack([_commutation_rows(T), _commutation_rows(T.conj().T)])
    s = np.linalg.svd(S, compute_uv=False)
    smax = float(s[0])
    cut = max(tol.nullspace_tol * smax, ROUNDING_FLOOR * n * float(np.linalg.norm(T, 2)))
    above = s[s > cut]
    dim = n * n - above.size
    margin = float(above.min()) if above.size else np.inf
    return dim, margin, smax


def _close(a: float, b: float) -> bool:
    if not (np.isfinite(a) and np.isfinite(b)):
        return a == b
    return abs(a - b) <= CLAIM_RTOL * max(1.0, abs(a), abs(b))


def verify_perturbation(T, result, tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """Re-measure ``||K||_1`` and irreducibility of ``T + K``; flag disagreeing claims.

    ``result`` needs ``K`` and ``epsilon``; ``trace_norm`` and ``certificate``
    are compared when present.
    """
    T = as_matrix(T)
    K = as_matrix(result.K)
    if K.shape != T.shape:
        raise PreconditionError(f"dimension mismatch: T is {T.shape}, K is {K.shape}")
    eps = float(result.epsilon)
    used = float(np.linalg.svd(K, compute_uv=False).sum())
    details = [f"measured ||K||_1 = {used!r}, budget {eps!r}"]
    trace_ok = used < eps
    if not trace_ok:
        details.append("trace norm is not strictly below the budget")
    claimed = getattr(result, "trace_norm", None)
    if claimed is not None and not _close(float(claimed), used):
        trace_ok = False
        details.append(f"claimed ||K||_1 = {claimed!r} disagrees with measurement")
    if claimed is not None and not float(claimed) < eps:
        trace_ok = False
        details.append(f"claimed ||K||_1 = {claimed!r} is not strictly below the budget")

    dim, margin, smax = brute_force_commutant(T + K, tol)
    details.append(f"commutant dimension {dim}, margin {margin:.3e}, sigma_max {smax:.3e}")
    irr_ok = dim == 1
    cert = getattr(result, "certificate", None)
    if cert is not None:
        if bool(cert.irreducible) != irr_ok or int(cert.commutant_dim) != dim:
            irr_ok = False
            details.append(
                f"claimed commutant dimension {cert.commutant_dim} "
                f"(irreducible={cert.irreducible}) disagrees with the oracle"
            )
    return VerificationReport(trace_ok, irr_ok, dim, margin, details, smax)
