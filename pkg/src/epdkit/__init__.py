"""epdkit: parameter-distribution estimation for ODE models from repeated
cross-sectional data.

The pipeline builds artificial trajectories by uniform per-time resampling
of pooled observations, fits each by bounded log-least-squares, and keeps a
fit with probability given by a logistic transform of its normalized loss.
"""

from .accept import (
    AcceptanceRecord,
    DistributionEstimate,
    accept_probabilities,
    apply_acceptance,
    gate,
    run_epd,
    run_mean_baseline,
)
from .errors import (
    ConfigurationError,
    DataFormatError,
    EpdError,
    EstimationError,
    EvaluationError,
    GenerationError,
    IntegrationFailure,
    MetricsError,
    NoSuccessfulFits,
)
from .fit import (
    FitConfig,
    FitResult,
    fit_trajectories,
    fit_trajectory,
    objective,
    residual_jacobian,
    residuals,
)
from .integrate import IntegratorConfig, Trajectory, solve_ivp
from .metrics import (
    MarginalSummary,
    count_modes,
    ks_statistic,
    silverman_bandwidth,
    summarize,
    summarize_samples,
    wasserstein1,
)
from .models import (
    LOGISTIC_CENTERS,
    TARGET_CELL_CENTERS,
    ModelSpec,
    builtin_names,
    eval_rhs,
    make_builtin,
    register_model,
)
from .rcs_data import (
    RcsDataset,
    SyntheticSpec,
    TruthRecord,
    align_to_model,
    apply_multiplicative_noise,
    generate_synthetic,
    load_params_csv,
    load_rcs_csv,
    mean_trajectory,
    save_rcs_csv,
    save_truth_csv,
)
from .resample import ArtificialTrajectory, sample_trajectories, sample_trajectory

__version__ = "0.1.0"
