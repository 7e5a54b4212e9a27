"""Limit analysis of matrix semigroups: reversible/stable splittings,
peripheral group detection, norm-convergence reports, resolvent pole probes,
positivity criteria, and a parabolic discretization demo."""

from .exceptions import (
    EigenSolverError,
    InputError,
    PositivityError,
    SpectralPointError,
)
from .fields import FieldExpr, parse_field
from .infinity import (
    ConvergenceReport,
    GroupDescriptor,
    InfinityDecomposition,
    PoleProbeResult,
    QuasiCompactWitness,
    Reason,
    SubsemigroupCheck,
    abel_pole_probe,
    converges,
    find_return_times,
    group_structure,
    infinity_decomposition,
    positive_convergence_check,
    quasi_compactness_witness,
    sqrt2_gap_check,
    strong_positivity_convergence,
    subsemigroup_consistency,
)
from .parabolic import (
    Grid,
    GridOperator,
    MeasurementReport,
    PotentialSpec,
    ProbeRow,
    Propagator,
    assemble_operator,
    build_propagator,
    check_dissipativity,
    check_lyapunov,
    measure_convergence,
)
from .semigroups import (
    DYADICS,
    MAX_LATTICE,
    NATURALS,
    NONNEG_RATIONALS,
    NONNEG_REALS,
    BoundResult,
    IndexMonoid,
    SemigroupSpec,
    continuous_semigroup,
    discrete_semigroup,
    is_bounded,
    is_contractive,
    is_essentially_divisible,
    parse_monoid,
    sample,
)
from .spectral import (
    PeripheralSet,
    SpectralDecomposition,
    SpectralItem,
    eig_decompose,
    induced_norm,
    log_norm_inf,
    matrix_exponential,
    numerical_rank,
    resolvent,
)

__version__ = "0.1.0"

__all__ = [
    "EigenSolverError",
    "InputError",
    "PositivityError",
    "SpectralPointError",
    "ConvergenceReport",
    "GroupDescriptor",
    "InfinityDecomposition",
    "PoleProbeResult",
    "QuasiCompactWitness",
    "Reason",
    "SubsemigroupCheck",
    "abel_pole_probe",
    "converges",
    "find_return_times",
    "group_structure",
    "infinity_decomposition",
    "positive_convergence_check",
    "quasi_compactness_witness",
    "sqrt2_gap_check",
    "strong_positivity_convergence",
    "subsemigroup_consistency",
    "FieldExpr",
    "parse_field",
    "Grid",
    "GridOperator",
    "MeasurementReport",
    "PotentialSpec",
    "ProbeRow",
    "Propagator",
    "assemble_operator",
    "build_propagator",
    "check_dissipativity",
    "check_lyapunov",
    "measure_convergence",
    "DYADICS",
    "MAX_LATTICE",
    "NATURALS",
    "NONNEG_RATIONALS",
    "NONNEG_REALS",
    "BoundResult",
    "IndexMonoid",
    "SemigroupSpec",
    "continuous_semigroup",
    "discrete_semigroup",
    "is_bounded",
    "is_contractive",
    "is_essentially_divisible",
    "parse_monoid",
    "sample",
    "PeripheralSet",
    "SpectralDecomposition",
    "SpectralItem",
    "eig_decompose",
    "induced_norm",
    "log_norm_inf",
    "matrix_exponential",
    "numerical_rank",
    "resolvent",
    "__version__",
]
