"""Acceptance criteria 1-8. Each test prints one PASS/FAIL line."""

import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.linalg import subspace_angles

from irrpert import algebra as alg
from irrpert import perturb as pt
from irrpert.ensembles import ginibre, random_blocks, random_block_operator, random_hermitian, random_normal, random_unitary, rng_for
from irrpert.errors import StructuralError
from irrpert.matrix import trace_norm
from irrpert.verify import brute_force_commutant_dim, verify_perturbation


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail

    return emit


def test_1_pipeline_soundness(report):
    t0 = time.perf_counter()
    bad = []
    worst_ratio, worst_margin = 0.0, np.inf
    for n in (2, 4, 8, 16):
        for eps in (1e-1, 1e-3):
            for i in range(200):
                T = ginibre(n, rng_for(1000 * n + int(-np.log10(eps)), i))
                res = pt.irreducible_pipeline(T, pt.PerturbationRequest(eps, seed=i))
                rep = verify_perturbation(T, res)
                sigma = rep.sigma_max
                used = float(np.linalg.svd(res.K, compute_uv=False).sum())
                worst_ratio = max(worst_ratio, used / eps)
                worst_margin = min(worst_margin, rep.margin / sigma)
                if not (used < eps and rep.commutant_dim == 1 and rep.margin > 1e-8 * sigma):
                    bad.append((n, eps, i))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    report(1, ok, f"1600 cases, failures {len(bad)}, max ||K||_1/eps {worst_ratio:.3f}, "
                  f"min margin/sigma_max {worst_margin:.2e}, {dt:.1f}s")


def test_2_isolated_eigenvalue(report):
    bad = []
    rng = np.random.default_rng(2)
    for eps in (0.8, 0.1):
        for i in range(100):
            n = int(rng.integers(1, 17))
            A = random_hermitian(n, rng) * rng.choice([0.3, 1.0, 5.0])
            w = np.linalg.eigvalsh(A)
            if w[-1] - w[0] <= 1e-8 * max(1, abs(w[-1])):
                c, s = w[0] - 1, 1.0  # a scalar is shifted onto the identity
            else:
                c = min(w[0], 0.0)
                s = w[-1] - c
            eps_n = eps / s
            # random unit vector inside the spectral subspace of [1 - eps'/4, 1] after normalization
            lam_all, U = np.linalg.eigh(A)
            band = U[:, (lam_all - c) / s >= 1 - eps_n / 4]
            coef = rng.normal(size=band.shape[1]) + 1j * rng.normal(size=band.shape[1])
            xi = band @ coef
            res, lam = pt.isolated_simple_eigenvalue(A, pt.PerturbationRequest(eps), xi=xi)
            spectrum = np.linalg.eigvalsh(A + res.K)
            predicted = w[-1] + eps / 4  # c + s (1 + eps'/4)
            ok = abs(lam - predicted) <= 1e-9 * max(1, abs(predicted))
            ok &= abs(spectrum[-1] - predicted) <= 1e-9 * max(1, s)
            if n > 1:
                ok &= (spectrum[-1] - spectrum[-2]) / s >= eps_n / 4 - 1e-9
            ok &= trace_norm(res.K) <= eps + 1e-12
            if not ok:
                bad.append((eps, i))
    A = np.diag([1, 0.9])
    res, lam = pt.isolated_simple_eigenvalue(A, pt.PerturbationRequest(0.8), xi=np.array([1, 1]) / np.sqrt(2))
    spectrum = np.linalg.eigvalsh(A + res.K)
    ref_norm = np.abs(np.linalg.eigvalsh(np.array([[0.075, 0.125], [0.125, 0.175]]))).sum()
    worked = np.allclose(spectrum, [0.95, 1.2], atol=1e-9, rtol=0) and abs(res.trace_norm - ref_norm) <= 1e-9
    report(2, not bad and worked, f"200 random cases, failures {len(bad)}; worked example spectrum "
                                  f"{np.round(spectrum, 12).tolist()}, ||K||_1 = {res.trace_norm:.6f}")


def test_3_diag_distinct(report):
    bad = []
    rng = np.random.default_rng(3)
    for i in range(100):
        n = int(rng.integers(1, 13))
        eps = float(rng.choice([1.0, 0.1, 1e-3]))
        alpha = rng.integers(-3, 4, size=n).astype(float)
        k = int(rng.integers(0, 21))
        forbidden = rng.integers(-3, 4, size=k).astype(float)
        forbidden[: k // 2] += eps / 2.0 ** rng.integers(2, 6, size=k // 2)  # land on halving points
        res = pt.diag_distinct(np.diag(alpha), forbidden.tolist(), pt.PerturbationRequest(eps))
        d = np.diag(res.K).real
        spectrum = alpha + d
        ok = np.count_nonzero(res.K - np.diag(np.diag(res.K))) == 0
        ok &= trace_norm(res.K) < eps
        ok &= all(0 < d[j] < eps / 2.0 ** (j + 1) for j in range(n))
        gaps = np.abs(spectrum[:, None] - spectrum[None, :])[~np.eye(n, dtype=bool)]
        ok &= gaps.size == 0 or gaps.min() > 1e-10
        ok &= forbidden.size == 0 or np.abs(spectrum[:, None] - forbidden[None, :]).min() > 1e-10
        ok &= alg.is_masa(alg.generate_algebra([np.diag(spectrum)]))
        if not ok:
            bad.append(i)
    report(3, not bad, f"100 cases, failures {len(bad)}")


def test_4_wedderburn_recovery(report):
    bad = []
    rng = np.random.default_rng(4)
    for i in range(100):
        total = int(rng.integers(1, 13))
        blocks = random_blocks(total, rng)
        U = random_unitary(total, rng)
        A = alg.canonical_algebra(blocks, U)
        dec = alg.wedderburn_decompose(A, seed=i)
        ok = sorted(dec.blocks) == sorted(blocks)
        ok &= A.dim == sum(a * a for a, _ in blocks)
        ok &= alg.commutant(A).dim == sum(m * m for _, m in blocks)
        if not ok:
            bad.append((i, blocks, dec.blocks))
    report(4, not bad, f"100 cases, failures {len(bad)}")


def test_5_bicommutant(report):
    bad = []
    worst = 0.0
    rng = np.random.default_rng(5)
    for i in range(200):
        n = int(rng.integers(1, 9))
        gens = []
        for _ in range(int(rng.integers(1, 4))):
            r = rng.random()
            if r < 0.5:
                gens.append(random_block_operator(n, rng)[0])
            elif r < 0.8:
                gens.append(ginibre(n, rng))
            else:
                gens.append(random_normal(n, rng))
        A = alg.generate_algebra(gens)
        AA = alg.commutant(alg.commutant(gens))
        angle = float(np.max(subspace_angles(A.vectors, AA.vectors))) if A.dim == AA.dim else np.inf
        worst = max(worst, angle)
        if not angle < 1e-6:
            bad.append(i)
    report(5, not bad, f"200 cases, failures {len(bad)}, largest principal angle {worst:.1e}")


def test_6_normal_operators(report):
    bad = []
    rng = np.random.default_rng(6)
    worst = np.inf
    for i in range(200):
        n = int(rng.integers(1, 13))
        N = random_normal(n, rng)
        res = pt.irreducible_pipeline(N, pt.PerturbationRequest(1e-2, seed=i))
        rep = verify_perturbation(N, res)
        worst = min(worst, rep.margin)
        if not (res.certificate.irreducible and rep.passed):
            bad.append(i)
    report(6, not bad, f"200 cases, failures {len(bad)}, smallest oracle margin {worst:.2e}")


def test_7_negative_controls(report):
    cert = alg.is_irreducible(np.diag([1.0, 2]))
    dim, _ = brute_force_commutant_dim(np.diag([1.0, 2]))
    reducible = (not cert.irreducible) and cert.commutant_dim == 2 and dim == 2

    T = np.zeros((2, 2))
    res = pt.irreducible_pipeline(T, pt.PerturbationRequest(0.8))
    exact = float(np.linalg.svd(res.K, compute_uv=False).sum())
    claim = pt.PerturbationResult(res.K, exact, exact, res.certificate, res.construction_log)
    strict = not verify_perturbation(T, claim).trace_norm_ok

    try:
        pt.cyclic_coupling(np.diag([0.0, 1, 1]), np.zeros((3, 3)), 1, pt.PerturbationRequest(0.4))
        fires = False
    except StructuralError as exc:
        fires = "(1, 2)" in str(exc)
    report(7, reducible and strict and fires,
           f"diag(1,2) reducible: {reducible}; ||K||_1 = eps rejected: {strict}; scalar block error: {fires}")


def test_8_fuzz_determinism(report):
    cmd = [sys.executable, "-m", "irrpert.cli", "fuzz", "--n", "50", "--seed", "7"]
    a = subprocess.run(cmd, capture_output=True)
    b = subprocess.run(cmd, capture_output=True)
    ok = a.returncode == 0 and b.returncode == 0 and a.stdout == b.stdout and len(a.stdout) > 0
    report(8, ok, f"exit codes {a.returncode}/{b.returncode}, {len(a.stdout)} bytes, identical: {a.stdout == b.stdout}")
