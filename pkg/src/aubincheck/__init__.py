"""Lipschitz-like (Aubin) property analysis of parametric stationary-point
set maps: exact condition checks on derivative matrices, coderivative
membership queries, and an independent brute-force numerical probe."""

from .calculus import (
    CaseTag,
    DerivativeBundle,
    EvalPoint,
    MultiplierInfo,
    ToleranceConfig,
    classify_point,
    derivative_bundle,
    finite_difference_audit,
    lagrange_multiplier,
    verify_stationarity,
)
from .conditions import (
    ConditionMatrices,
    ConditionReport,
    MembershipResult,
    Verdict,
    assemble_matrices,
    check_degenerate,
    check_interior,
    check_nondegenerate,
    coderivative_membership,
    extended_map_verdict,
    gamma_systems,
    verdict,
)
from .errors import (
    AubinCheckError,
    DimensionMismatch,
    DomainError,
    ExponentError,
    ExpressionSyntaxError,
    GridTooCoarse,
    InfeasiblePoint,
    InputError,
    MfcqViolated,
    NotStationary,
    PreconditionError,
    UnsupportedConePattern,
    VariableIndexError,
)
from .expr import ProblemSpec, differentiate, evaluate, parse, render
from .kernel import (
    ConeConstraint,
    ConeSpanResult,
    Feasibility,
    SubspaceBasis,
    affine_feasibility,
    cone_span,
    contained_in_kernel,
    null_space,
    stacked_kernel,
)
from .oracle import (
    GridSpec,
    ProbeConfig,
    ProbeReport,
    SampleSet,
    aubin_probe,
    kkt_residual,
    sample_stationary_set,
)
from .problemfile import ProblemFile, load_problem

__version__ = "0.1.0"
