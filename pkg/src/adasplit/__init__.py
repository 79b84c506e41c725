"""Adaptive three-operator splitting for 0 ∈ A(x) + B(x) + C(x).

A and B are maximally α- and β-monotone operators given by their
resolvents, C is σ-cocoercive.  The package provides the step-parameter
rules, the fixed-point solver (compiled kernel with a numpy fallback),
numerical certificates for the averagedness inequalities, seeded test
problems with exact oracles, and a command-line front end.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Affine, BallIndicator, BoxIndicator, CocoerciveSpec, DimensionMismatch, HuberGrad,
    LinearPSD, OperatorSpec, ParamPlan, Problem, Regime, ResolventDomainError,
    ScaledIdentity, Shifted, SpecError, SplittingError, SubdiffL1, SubdiffQuadratic,
    ZeroMap, ZeroOp, certify_modulus, certify_sigma,
)
from .resolvents import forward, resolvent, subdiff_contains_zero  # noqa: E402
from .params import (  # noqa: E402
    DeltaRange, GammaBelowThreshold, InfeasibleGamma, InfeasiblePair, NonMonotonePair,
    NonStrongPair, delta_range, diagnostic_plan, gamma_threshold, plan_for, plan_neutral,
    plan_strong, suggest,
)
from .engine import (  # noqa: E402
    IterateRecord, PlanMismatch, RunReport, Status, apply_T, fixed_point_from_zero,
    kkt_residual, make_bf, make_dr, make_fb, regularity_stats, shadow_membership, solve,
    t_bf, t_dr, t_fb,
)
from .certify import (  # noqa: E402
    AveragedCheck, HypothesisViolated, check_averaged_equivalence, check_conical,
    check_identity,
)
from .problems import NamedProblem, gen, oracle_solve  # noqa: E402
