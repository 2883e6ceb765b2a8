"""Empirical VC-dimension estimation with generalization bounds that account for
the estimation error of the dimension itself."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    C3,
    ConstantsBundle,
    DeviationReport,
    GeneralizationReport,
    classical_risk_bound,
    compute_c1,
    compute_c2,
    compute_c_prime,
    compute_constants,
    delta_threshold,
    estimated_risk_bound,
    estimator_deviation_bound,
    invert_rho,
    log_growth_function,
    phi_deviation_bound,
    varphi,
)
from .classifiers import (  # noqa: E402
    ConstantFamily,
    Dataset,
    Interval1D,
    LabeledSample,
    LinearHalfspace,
    ShatterOracle,
    empirical_risk,
    fit_erm,
    make_family,
)
from .estimator import FitConfig, FitResult, fit_h, inner_product_k, residual_curve, weighted_norm_k  # noqa: E402
from .phi import (  # noqa: E402
    PHI_CONSTANTS,
    LipschitzEstimate,
    entropy_bound,
    lipschitz_envelope,
    lipschitz_lower,
    lipschitz_upper,
    phi_derivative_h,
    phi_value,
)
from .simulation import (  # noqa: E402
    DataSpec,
    DesignGrid,
    SimulationPlan,
    XiSamples,
    generate_dataset,
    simulate_xi,
    xi_single_run,
)
