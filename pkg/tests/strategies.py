"""Hypothesis strategies producing seeded random matrices."""

import numpy as np
from hypothesis import strategies as st

from irrpert.ensembles import ginibre, random_hermitian, random_unitary

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=6)


@st.composite
def complex_matrices(draw, n_min=1, n_max=6):
    n = draw(st.integers(n_min, n_max))
    rng = np.random.default_rng(draw(seeds))
    return ginibre(n, rng) * draw(st.sampled_from([1e-3, 1.0, 10.0]))


@st.composite
def hermitian_matrices(draw, n_min=1, n_max=6):
    n = draw(st.integers(n_min, n_max))
    return random_hermitian(n, np.random.default_rng(draw(seeds)))


@st.composite
def unitaries(draw, n):
    return random_unitary(n, np.random.default_rng(draw(seeds)))
