"""Command-line entry point: JSON in, JSON out.

Exit codes: 0 when every check passes, 2 when a check fails, 3 for
unreadable input or a violated structural precondition.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import algebra as alg
from . import perturb as pt
from . import serialize as ser
from .ensembles import ENSEMBLES, rng_for, sample
from .errors import IrrPertError
from .matrix import DEFAULT_TOL, Projection, Tolerances
from .verify import verify_perturbation

DEFAULT_SEED = 20240611
DEFAULT_EPS = 0.1
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 2, 3

CONSTRUCTIONS = ("diag-distinct", "isolated-eigenvalue", "couple", "two-projection", "cyclic-coupling")


@dataclass
class RunConfig:
    subcommand: str
    inputs: list = field(default_factory=list)
    epsilon: float = DEFAULT_EPS
    seed: int = DEFAULT_SEED
    tol_scale: float = 1.0
    output: str | None = None
    n: int = 100
    dim_max: int = 8
    ensemble: str = "generic"
    jobs: int = 1
    construction: str = "diag-distinct"
    vector: str | None = None
    projection: str | None = None
    projection2: str | None = None
    imag: str | None = None
    split: int | None = None
    forbidden: list = field(default_factory=list)

    @property
    def tolerances(self) -> Tolerances:
        return DEFAULT_TOL.scaled(self.tol_scale)

    def request(self) -> pt.PerturbationRequest:
        return pt.PerturbationRequest(self.epsilon, self.tolerances, self.seed)


def _matrices(paths):
    """Each file holds one matrix object or a list of them."""
    out = []
    for p in paths:
        obj = ser.load(p)
        out.extend(ser.matrix_from_json(m) for m in (obj if isinstance(obj, list) else [obj]))
    return out


def _one_matrix(paths, what="input"):
    mats = _matrices(paths)
    if len(mats) != 1:
        raise ValueError(f"expected exactly one {what} matrix, got {len(mats)}")
    return mats[0]


def _algebra(cfg: RunConfig) -> alg.StarAlgebra:
    return alg.generate_algebra(_matrices(cfg.inputs), cfg.tolerances)


def _check(cfg):
    cert = alg.is_irreducible(_one_matrix(cfg.inputs), cfg.tolerances)
    rep = {"irreducible": cert.irreducible, "commutant_dim": cert.commutant_dim, "margin": ser._num(cert.margin)}
    return rep, EXIT_OK if cert.irreducible else EXIT_FAIL


def _commutant(cfg):
    C = alg.commutant(_matrices(cfg.inputs), cfg.tolerances)
    return {"dim": C.dim, "algebra": ser.algebra_to_json(C)}, EXIT_OK


def _decompose(cfg):
    A = _algebra(cfg)
    D = alg.wedderburn_decompose(A, cfg.tolerances, cfg.seed)
    rep = ser.decomposition_to_json(D)
    rep["dim"] = A.dim
    return rep, EXIT_OK


def _supports(cfg):
    tol = cfg.tolerances
    A = _algebra(cfg)
    rep = {"central_projections": [ser.matrix_to_json(P.matrix) for P in alg.minimal_central_projections(A, tol, cfg.seed)]}
    if A.is_abelian(tol):
        rep["atomic_support"] = ser.matrix_to_json(alg.atomic_support(A, tol, cfg.seed).matrix)
    if cfg.projection:
        P = Projection.from_matrix(_one_matrix([cfg.projection], "projection"), tol)
        rep["central_support"] = ser.matrix_to_json(alg.central_support(P, A, tol, cfg.seed).matrix)
    return rep, EXIT_OK


def _cyclic(cfg):
    if not cfg.vector:
        raise ValueError("cyclic needs --vector")
    A = _algebra(cfg)
    xi = ser.vector_from_json(ser.load(cfg.vector))
    r = alg.vector_report(A, xi, cfg.tolerances, cfg.seed)
    rep = {"is_cyclic": r.is_cyclic, "is_separating": r.is_separating, "rank_data": r.witnessed_rank_data}
    return rep, EXIT_OK if r.is_cyclic else EXIT_FAIL


def _perturb(cfg):
    req = cfg.request()
    A = _one_matrix(cfg.inputs)
    B = _one_matrix([cfg.imag], "imaginary-part") if cfg.imag else np.zeros_like(A)
    c = cfg.construction
    extra = {}
    if c == "diag-distinct":
        res = pt.diag_distinct(A, cfg.forbidden, req)
    elif c == "isolated-eigenvalue":
        xi = ser.vector_from_json(ser.load(cfg.vector)) if cfg.vector else None
        res, lam = pt.isolated_simple_eigenvalue(A, req, xi)
        extra["eigenvalue"] = lam
    elif c == "couple":
        res = pt.couple_via_partial_isometry(A, B, _one_matrix([cfg.projection], "projection"), req)
    elif c == "two-projection":
        P2 = _one_matrix([cfg.projection2], "projection") if cfg.projection2 else None
        res = pt.two_projection_coupling(A, B, _one_matrix([cfg.projection], "projection"), req, P2)
    elif c == "cyclic-coupling":
        if cfg.split is None:
            raise ValueError("cyclic-coupling needs --split")
        res = pt.cyclic_coupling(A, B, cfg.split, req)
    else:
        raise ValueError(f"unknown construction {c!r}")
    rep = ser.result_to_json(res)
    rep["construction"] = c
    rep.update(extra)
    return rep, EXIT_OK


def _pipeline(cfg):
    T = _one_matrix(cfg.inputs)
    res = pt.irreducible_pipeline(T, cfg.request())
    rep = ser.result_to_json(res)
    v = verify_perturbation(T, res, cfg.tolerances)
    return rep, EXIT_OK if v.passed else EXIT_FAIL


def _verify(cfg):
    if len(cfg.inputs) != 2:
        raise ValueError("verify needs T.json and RESULT.json")
    T = _one_matrix(cfg.inputs[:1])
    res = ser.result_from_json(ser.load(cfg.inputs[1]))
    rep = verify_perturbation(T, res, cfg.tolerances)
    return ser.report_to_json(rep), EXIT_OK if rep.passed else EXIT_FAIL


def fuzz_sample(args):
    """Pipeline plus oracle on sample ``index``; returns a plain dict."""
    seed, index, ensemble, dim_max, eps, tol_scale = args
    rng = rng_for(seed, index)
    n = int(rng.integers(1, dim_max + 1))
    T = sample(ensemble, n, rng)
    tol = DEFAULT_TOL.scaled(tol_scale)
    out = {"index": index, "n": n}
    try:
        res = pt.irreducible_pipeline(T, pt.PerturbationRequest(eps, tol, seed))
    except IrrPertError as exc:
        out.update(passed=False, error=type(exc).__name__)
        return out
    v = verify_perturbation(T, res, tol)
    out.update(passed=v.passed, ratio=float(np.linalg.svd(res.K, compute_uv=False).sum()) / eps, margin=v.margin)
    return out


def _fuzz(cfg):
    if cfg.dim_max < 1 or cfg.n < 0:
        raise ValueError("--n must be >= 0 and --dim-max >= 1")
    if cfg.ensemble not in ENSEMBLES:
        raise ValueError(f"unknown ensemble {cfg.ensemble!r}")
    tasks = [(cfg.seed, i, cfg.ensemble, cfg.dim_max, cfg.epsilon, cfg.tol_scale) for i in range(cfg.n)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            rows = list(ex.map(fuzz_sample, tasks, chunksize=8))
    else:
        rows = [fuzz_sample(t) for t in tasks]
    rows.sort(key=lambda r: r["index"])
    passed = [r for r in rows if r["passed"]]
    ratios = [r["ratio"] for r in rows if "ratio" in r]
    margins = [r["margin"] for r in rows if "margin" in r]
    rep = {
        "ensemble": cfg.ensemble,
        "epsilon": cfg.epsilon,
        "seed": cfg.seed,
        "dim_max": cfg.dim_max,
        "samples": cfg.n,
        "passed": len(passed),
        "max_trace_norm_ratio": max(ratios) if ratios else None,
        "min_margin": ser._num(min(margins)) if margins else None,
        "failures": [{k: v for k, v in r.items() if k in ("index", "n", "error")} for r in rows if not r["passed"]],
    }
    return rep, EXIT_OK if len(passed) == cfg.n else EXIT_FAIL


HANDLERS = {
    "check": _check,
    "commutant": _commutant,
    "decompose": _decompose,
    "supports": _supports,
    "cyclic": _cyclic,
    "perturb": _perturb,
    "pipeline": _pipeline,
    "verify": _verify,
    "fuzz": _fuzz,
}


def run(cfg: RunConfig):
    """Dispatch ``cfg``; returns ``(exit_code, report)``. Errors become ``{"error": ...}`` reports."""
    if not cfg.epsilon > 0:
        return EXIT_INPUT, {"error": "epsilon must be positive"}
    try:
        rep, code = HANDLERS[cfg.subcommand](cfg)
    except (IrrPertError, ValueError, OSError) as exc:
        return EXIT_INPUT, {"error": str(exc), "kind": type(exc).__name__}
    return code, rep


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; here 2 means a failed check, so use 3."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="irrpert", description="Irreducibility perturbations of complex matrices.")
    common = _Parser(add_help=False)
    common.add_argument("--eps", type=float, default=DEFAULT_EPS, help=f"trace-norm budget (default {DEFAULT_EPS})")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--tol-scale", type=float, default=1.0, help="multiply every default tolerance")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    sub = ap.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    helps = {
        "check": "irreducibility certificate of one matrix",
        "commutant": "commutant of a set of matrices",
        "decompose": "block structure of the generated *-algebra",
        "supports": "central projections and supports of the generated *-algebra",
        "cyclic": "cyclic/separating test for --vector",
        "perturb": "run a single construction",
        "pipeline": "perturb T into an irreducible operator",
        "verify": "re-check a result against T",
        "fuzz": "random campaign through pipeline and verify",
    }
    for name, h in helps.items():
        p = sub.add_parser(name, parents=[common], help=h)
        if name != "fuzz":
            p.add_argument("inputs", nargs="+", help="matrix JSON files")
        if name in ("cyclic", "perturb"):
            p.add_argument("--vector", help="vector JSON file")
        if name in ("supports", "perturb"):
            p.add_argument("--projection", help="projection JSON file")
        if name == "perturb":
            p.add_argument("--construction", choices=CONSTRUCTIONS, default="diag-distinct")
            p.add_argument("--imag", help="imaginary part B for constructions on A + iB")
            p.add_argument("--projection2", help="second projection for two-projection")
            p.add_argument("--split", type=int, help="size of the first block for cyclic-coupling")
            p.add_argument("--forbidden", type=float, nargs="*", default=[], help="values the spectrum must avoid")
        if name == "fuzz":
            p.add_argument("--n", type=int, default=100, help="number of samples (default 100)")
            p.add_argument("--dim-max", type=int, default=8, help="largest matrix size (default 8)")
            p.add_argument("--ensemble", choices=ENSEMBLES, default="generic")
            p.add_argument("--jobs", type=int, default=1, help="worker processes (output does not depend on it)")
    return ap


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    kw = {k: v for k, v in vars(ns).items() if k not in ("eps", "tol_scale") and v is not None}
    cfg = RunConfig(epsilon=ns.eps, tol_scale=ns.tol_scale, **kw)
    if not cfg.tol_scale > 0:
        code, rep = EXIT_INPUT, {"error": "--tol-scale must be positive"}
    else:
        code, rep = run(cfg)
    text = ser.dumps(rep) + "\n"
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
