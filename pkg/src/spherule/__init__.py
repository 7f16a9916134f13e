"""spherule: exact Cayley-Menger / twisted-cohomology calculus for
hypersphere arrangements, with a validated quadrature oracle."""

from .arrangement import (
    Arrangement,
    HypothesesReport,
    MinorSpec,
    STAR,
    a_principal_minor,
    b0,
    b0s,
    build_cm_matrix,
    check_hypotheses,
    cm_minor,
    cm_minor_cofactor,
    derive_normalized_alphas,
)
from .cohomology import (
    CohomClass,
    LambdaPoint,
    beta,
    beta_matrix,
    beta_recurrence,
    beta_tilde,
    f_in_w0,
    reduce_to_nbc,
    to_F,
    w0_in_F,
    weight_range,
)
from .connection import (
    ConnectionMatrix,
    ParamOneForm,
    conjecture_residual,
    gm_matrix,
    gm_theta,
    infinity_cycle_coeffs,
    minor_differential,
    nabla_b_varpi,
    theta,
    theta_chain,
    wronskian_trace,
    zeta_pair,
    zeta_pair_marked,
    zeta_triple,
)
from .contiguity import (
    eta_single,
    eta_value,
    fj_inv_class_recurrence,
    gamma,
    gamma_tilde,
    mult_diff,
    mult_fJ_w0,
    mult_fj,
    standard_form,
)
from .indices import admissible_sets, dimension, nbc_basis
from .verify import (
    Chamber,
    QuadratureResult,
    TwistIntegrand,
    chambers_1d,
    integrate,
    verify_gauss_manin,
    verify_identity,
)

__version__ = "0.1.0"
