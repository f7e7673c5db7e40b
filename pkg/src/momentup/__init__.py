"""Covariant hierarchy of moment-matrix uncertainty relations for one bosonic mode."""

from .algebra import (
    FockOperator,
    HbarConfig,
    MonomialIndex,
    clebsch_gordan,
    make_quadratures,
    tau_product_expansion,
    weyl_monomial,
)
from .covariance import (
    LorentzElement,
    Sp2Element,
    SymplecticForm,
    congruence_covariance_check,
    k_rep,
    lambda_of,
    scs_normal_form,
    transform_moments,
    williamson_symplectic_eigenvalues,
)
from .errors import (
    CutoffTooSmallError,
    GridTooSmallError,
    InvalidArgumentError,
    InvalidStateError,
    MomentUPError,
    NumericalFailureError,
    SingularAError,
)
from .fourth_order import build_blocks, eff_pair, fourth_order_analysis, fourth_order_verdict
from .hierarchy import (
    MomentTable,
    build_omega_tilde,
    check_psd,
    compute_moments,
    schur_increment,
    sr_up_check,
    variance_matrix,
)
from .states import DensityMatrix, StateSpec, density_from_spec
from .wigner import (
    PhaseGrid,
    lorentz_average,
    omega1_wigner,
    overlap,
    quadrature_moments,
    state_overlap,
    wigner_grid,
)

__all__ = [name for name in dir() if not name.startswith("_")]
