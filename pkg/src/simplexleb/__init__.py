"""Numerical laboratory for Lebesgue constants of anisotropically dilated
simplices: lattice sums, kernel evaluation, L1 quadrature, growth predictors
and the fractional-part ("irrational") study."""

from .core import (
    CoefficientField,
    DilationVector,
    LambdaEvaluator,
    ResourceLimitError,
    SimplexLattice,
    build_lattice,
    fractional_coefficients,
    indicator_coefficients,
    slice_coefficients,
)
from .kernels import (
    GridField,
    GridSpec,
    apply_delta,
    eval_D,
    eval_F,
    eval_R,
    eval_S,
    grid_eval,
    grid_eval_sliced,
    reduce_torus,
)
from .norms import (
    FrakFValue,
    IdentityReport,
    NormConvergenceError,
    NormResult,
    double_integral_ld2,
    frak_f,
    identity_residuals,
    l1_norm,
    l1_norm_field,
    verify_identity,
)
from .asymptotics import (
    PredictorValue,
    RegimeError,
    SweepRecord,
    bilateral_fit,
    corollary1_check,
    corollary2_regime,
    eta_weights,
    fit_envelope,
    full_predictor,
    main_term,
    remainder_envelope,
)
from .irrational import (
    AlphaSpec,
    ContinuedFraction,
    I_n,
    cf_expand,
    fractional_parts,
    liouville_dip_scan,
    study_ratio,
)

__version__ = "0.1.0"
