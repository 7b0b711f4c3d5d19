"""Monte Carlo and spectral laboratory for symmetric alpha-stable exit times.

Simulates the subordinated stable process X_t = W_{S_t} in unbounded
Euclidean domains and checks, at desk scale, the spectral bounds on
survival probabilities, mean exit times and Dirichlet heat kernels in
terms of the bottom of the spectrum lambda(D).
"""

from .bounds import (
    EnvelopeParams,
    HKProfile,
    dirichlet_kernel_envelope,
    free_kernel_envelope,
    free_kernel_profile,
    hk_profile_rd,
    inradius_lower,
    iteration_exponent,
    kernel_survival_check,
    limit_rate,
    mean_exit_envelope,
    prelim_envelope,
    survival_upper_envelope,
    unit_ball_volume,
)
from .config import ExperimentConfig, load_config, validate_config
from .domains import (
    Ball,
    Domain,
    HalfSpace,
    Horn,
    Interval,
    Predicate,
    RationalProfile,
    ConstantProfile,
    SwissCheese,
    Tube,
    WavyStripWithHoles,
    contains,
    cross_section,
    dist_to_complement,
    inradius,
    projection,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionMismatchError,
    GridAlignmentError,
    HypothesisViolationError,
    InsufficientDataError,
    LevyLabError,
    ParameterError,
)
from .exit_mc import (
    DecayFit,
    ExitRecord,
    MeanExitEstimate,
    SurvivalCurve,
    WindowPolicy,
    dt_bias_check,
    fit_decay_rate,
    mean_exit_time,
    run_exit_ensemble,
    simulate_exit,
    survival_curve,
    wilson_interval,
)
from .harness import (
    ResultBundle,
    VerificationReport,
    fit_envelope_constant,
    load_bundle,
    render_report,
    run_experiment,
    save_bundle,
    verify,
)
from .sampler import (
    PathSample,
    RngStream,
    StableParams,
    sample_path,
    sample_stable_step,
    sample_subordinator_increment,
)
from .spectral import (
    DiscreteOperator,
    SpectralEstimate,
    ball_rayleigh_upper,
    eigenvalue_ladder,
    frac_laplacian_1d,
    frac_laplacian_constant,
    horn_bottom,
    laplacian_1d,
    rayleigh_upper,
    smallest_eigenvalue,
    solve_frac_poisson,
    tube_bottom,
)

__version__ = "0.1.0"
