"""Seeded random matrix ensembles for property campaigns."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

ENSEMBLES = ("generic", "normal", "block")


def rng_for(seed: int, index: int = 0) -> np.random.Generator:
    """Independent stream for sample ``index`` of a campaign seeded by ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    if n == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=rng)


def ginibre(n: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2 * n)


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    G = ginibre(n, rng)
    return (G + G.conj().T) / 2


def random_normal(n: int, rng: np.random.Generator) -> np.ndarray:
    """``U diag(z) U*``; about half the draws reuse eigenvalues to force degeneracy."""
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    if n > 1 and rng.random() < 0.5:
        k = int(rng.integers(1, n))
        z = z[rng.integers(0, k, size=n)]
    U = random_unitary(n, rng)
    return (U * z) @ U.conj().T


def random_blocks(total: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Random ``(n_i, m_i)`` pairs with ``sum n_i m_i == total``."""
    blocks = []
    left = total
    while left:
        ni = int(rng.integers(1, min(left, 4) + 1))
        mi = int(rng.integers(1, left // ni + 1))
        mi = min(mi, 3)
        blocks.append((ni, mi))
        left -= ni * mi
    return blocks


def random_block_operator(n: int, rng: np.random.Generator):
    """A random element of a conjugated ``sum M_{n_i} (x) I_{m_i}``; returns ``(T, blocks, U)``."""
    blocks = random_blocks(n, rng)
    U = random_unitary(n, rng)
    parts = [np.kron(ginibre(ni, rng) * np.sqrt(ni), np.eye(mi)) for ni, mi in blocks]
    X = np.zeros((n, n), dtype=np.complex128)
    o = 0
    for (ni, mi), p in zip(blocks, parts):
        X[o : o + ni * mi, o : o + ni * mi] = p
        o += ni * mi
    return U @ X @ U.conj().T, blocks, U


def sample(ensemble: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if ensemble == "generic":
        return ginibre(n, rng)
    if ensemble == "normal":
        return random_normal(n, rng)
    if ensemble == "block":
        return random_block_operator(n, rng)[0]
    raise ValueError(f"unknown ensemble {ensemble!r}; choose from {ENSEMBLES}")
