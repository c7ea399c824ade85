"""Trace-class perturbations that make finite matrices irreducible."""

from .algebra import (
    BlockDecomposition,
    IrreducibilityCertificate,
    StarAlgebra,
    VectorReport,
    admits_cyclic_vector,
    atomic_support,
    center,
    central_support,
    commutant,
    find_cyclic_vector,
    generate_algebra,
    is_cyclic,
    is_irreducible,
    is_masa,
    minimal_central_projections,
    vector_report,
    wedderburn_decompose,
)
from .errors import (
    AmbiguityError,
    BudgetError,
    CertificationError,
    IrrPertError,
    NumericalError,
    PreconditionError,
    RetryExhausted,
    StructuralError,
)
from .matrix import (
    DEFAULT_TOL,
    EigenDecomposition,
    Projection,
    Tolerances,
    hermitian_eig,
    rank_one,
    schatten_norm,
    spectral_projection,
    trace_norm,
)
from .perturb import (
    LogEntry,
    PerturbationRequest,
    PerturbationResult,
    couple_via_partial_isometry,
    cyclic_coupling,
    diag_distinct,
    irreducible_pipeline,
    isolated_simple_eigenvalue,
    rank_one_completion_check,
    two_projection_coupling,
)
from .verify import VerificationReport, brute_force_commutant_dim, verify_perturbation

__version__ = "0.1.0"
