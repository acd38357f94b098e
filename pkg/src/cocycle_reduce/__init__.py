"""Numerical rotations-reducibility of quasi-periodic SL(2, R) cocycles."""

from .arithmetic import (
    ConvergentTable,
    ResonanceReport,
    Subsequence,
    check_resonances,
    dist_to_integer,
    exact_alpha,
    expand,
    golden_alpha,
    liouville_alpha,
    resonance_threshold,
    select_subsequence,
)
from .cocycle import (
    Cocycle,
    DecomposedCocycle,
    IteratedDefect,
    RotationNumberEstimate,
    RotationOptions,
    almost_mathieu_potential,
    conformal_part,
    decompose,
    iterate,
    iterated_defect,
    lyapunov,
    q_project,
    rotation_number,
    schrodinger,
)
from .conjugation import (
    CheapTrickOptions,
    CheapTrickResult,
    EllipticOptions,
    EllipticResult,
    cheap_trick,
    elliptic_reduce,
)
from .errors import (
    BandwidthOverflow,
    CocycleError,
    DegenerateNorm,
    LogDiverges,
    NoContraction,
    NonConvergent,
    NonFinite,
    NotNearRotation,
    NumericalFailure,
    PreconditionFailed,
    RationalInput,
    ResonanceBlocked,
    ResonantAngle,
    SingularMatrix,
    SmallDivisorWarning,
)
from .scheme import (
    Outcome,
    SchemeConfig,
    SchemeReport,
    SchemeState,
    birkhoff_closeness,
    reduce_step,
    rotations_reduce,
    verify_conjugacy,
)
from .sweep import RunConfig, SweepRecord, energy_for_rho, run_sweep
from .torusfun import (
    MatFn,
    NormLedger,
    TorusFn,
    apply_pointwise,
    birkhoff_sum,
    cr_norm,
    derivative,
    from_samples,
    interpolation_ratio,
    mat_inverse,
    mat_product,
    numerics,
    rest,
    rotation_mat,
    sup_norm,
    translate,
    truncate,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BandwidthOverflow",
    "CheapTrickOptions",
    "CheapTrickResult",
    "Cocycle",
    "CocycleError",
    "ConvergentTable",
    "DecomposedCocycle",
    "DegenerateNorm",
    "EllipticOptions",
    "EllipticResult",
    "IteratedDefect",
    "LogDiverges",
    "MatFn",
    "NoContraction",
    "NonConvergent",
    "NonFinite",
    "NormLedger",
    "NotNearRotation",
    "NumericalFailure",
    "Outcome",
    "PreconditionFailed",
    "RationalInput",
    "ResonanceBlocked",
    "ResonanceReport",
    "ResonantAngle",
    "RotationNumberEstimate",
    "RotationOptions",
    "RunConfig",
    "SchemeConfig",
    "SchemeReport",
    "SchemeState",
    "SingularMatrix",
    "SmallDivisorWarning",
    "Subsequence",
    "SweepRecord",
    "TorusFn",
    "almost_mathieu_potential",
    "apply_pointwise",
    "birkhoff_closeness",
    "birkhoff_sum",
    "cheap_trick",
    "check_resonances",
    "conformal_part",
    "cr_norm",
    "decompose",
    "derivative",
    "dist_to_integer",
    "elliptic_reduce",
    "energy_for_rho",
    "exact_alpha",
    "expand",
    "from_samples",
    "golden_alpha",
    "interpolation_ratio",
    "iterate",
    "iterated_defect",
    "liouville_alpha",
    "lyapunov",
    "mat_inverse",
    "mat_product",
    "numerics",
    "q_project",
    "reduce_step",
    "resonance_threshold",
    "rest",
    "rotation_mat",
    "rotation_number",
    "rotations_reduce",
    "run_sweep",
    "schrodinger",
    "select_subsequence",
    "sup_norm",
    "translate",
    "truncate",
    "verify_conjugacy",
]
