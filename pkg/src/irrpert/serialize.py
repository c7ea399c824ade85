"""JSON encodings for matrices, algebras and reports.

Matrices are ``{"n", "re", "im"}`` objects with nested lists; ``im`` may be
omitted on input. Non-finite floats (an infinite margin, say) are written as
``null`` so every document is strict JSON.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import algebra as alg
from .errors import PreconditionError
from .perturb import LogEntry, PerturbationResult
from .verify import VerificationReport


def _num(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def _real(x, default=math.inf) -> float:
    return default if x is None else float(x)


def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=np.complex128)
    return {"n": int(M.shape[0]), "re": M.real.tolist(), "im": M.imag.tolist()}


def vector_to_json(v) -> dict:
    v = np.asarray(v, dtype=np.complex128)
    return {"n": int(v.shape[0]), "re": v.real.tolist(), "im": v.imag.tolist()}


def _field(obj, key, what):
    if not isinstance(obj, dict) or key not in obj:
        raise PreconditionError(f"{what} JSON needs a {key!r} field")
    return obj[key]


def matrix_from_json(obj) -> np.ndarray:
    n = _field(obj, "n", "matrix")
    try:
        re = np.asarray(_field(obj, "re", "matrix"), dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise PreconditionError(f"matrix entries must be numbers: {exc}") from exc
    if not isinstance(n, int) or n < 1 or re.shape != (n, n) or im.shape != (n, n):
        raise PreconditionError(f"matrix JSON does not describe an {n} x {n} matrix")
    return re + 1j * im


def vector_from_json(obj) -> np.ndarray:
    n = _field(obj, "n", "vector")
    try:
        re = np.asarray(_field(obj, "re", "vector"), dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise PreconditionError(f"vector entries must be numbers: {exc}") from exc
    if not isinstance(n, int) or n < 1 or re.shape != (n,) or im.shape != (n,):
        raise PreconditionError(f"vector JSON does not describe a length-{n} vector")
    return re + 1j * im


def algebra_to_json(A: alg.StarAlgebra) -> dict:
    return {"n": A.n, "basis": [matrix_to_json(B) for B in A.basis]}


def algebra_from_json(obj) -> alg.StarAlgebra:
    n = _field(obj, "n", "algebra")
    mats = [matrix_from_json(m) for m in _field(obj, "basis", "algebra")]
    return alg.StarAlgebra.from_spanning(mats, n=n)


def decomposition_to_json(D: alg.BlockDecomposition) -> dict:
    return {"unitary": matrix_to_json(D.unitary), "blocks": [[int(a), int(b)] for a, b in D.blocks]}


def result_to_json(r: PerturbationResult) -> dict:
    return {
        "K": matrix_to_json(r.K),
        "trace_norm": _num(r.trace_norm),
        "epsilon": _num(r.epsilon),
        "irreducible": bool(r.certificate.irreducible),
        "commutant_dim": int(r.certificate.commutant_dim),
        "margin": _num(r.certificate.margin),
        "log": [{"stage": e.stage, "budget": _num(e.budget), "used": _num(e.used)} for e in r.construction_log],
    }


def result_from_json(obj) -> PerturbationResult:
    K = matrix_from_json(_field(obj, "K", "result"))
    try:
        eps = float(_field(obj, "epsilon", "result"))
        cert = None
        if "irreducible" in obj or "commutant_dim" in obj:
            irreducible = bool(obj.get("irreducible", False))
            dim = int(obj.get("commutant_dim", 1 if irreducible else -1))
            cert = alg.IrreducibilityCertificate(irreducible, dim, _real(obj.get("margin")), math.nan)
        used = obj.get("trace_norm")
        log = [LogEntry(e["stage"], _real(e["budget"]), _real(e["used"])) for e in obj.get("log", [])]
    except (TypeError, ValueError, KeyError) as exc:
        raise PreconditionError(f"malformed result JSON: {exc}") from exc
    return PerturbationResult(K, None if used is None else float(used), eps, cert, log)


def report_to_json(r: VerificationReport) -> dict:
    return {
        "trace_norm_ok": r.trace_norm_ok,
        "irreducible_ok": r.irreducible_ok,
        "commutant_dim": r.commutant_dim,
        "margin": _num(r.margin),
        "sigma_max": _num(r.sigma_max),
        "details": list(r.details),
    }


def dumps(obj) -> str:
    """Deterministic single-document encoding."""
    return json.dumps(obj, sort_keys=True, allow_nan=False)


def load(path: str):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"{path}: not valid JSON ({exc})") from exc
