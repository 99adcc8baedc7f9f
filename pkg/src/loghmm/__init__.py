"""Log-space hidden Markov models with exact weighted-MLE emission updates."""

from .distributions import (
    FAMILIES,
    Beta,
    Categorical,
    ChiSquared,
    Distribution,
    EcmeConfig,
    Exponential,
    FitWarning,
    Gamma,
    Gaussian,
    LogNormal,
    NegativeBinomial,
    Pareto,
    Poisson,
    Rayleigh,
    StudentT,
    Uniform,
    VonMises,
    Weibull,
    WeightedSample,
    fit_beta_nr,
    fit_chisquared,
    fit_closed_form,
    fit_gamma_nr,
    fit_negbinom_nr,
    fit_student_t_ecme,
    fit_vonmises,
    fit_weibull_nr,
)
from .inference import (
    ForwardBackwardResult,
    HmmModel,
    InfeasibleSequenceError,
    ViterbiResult,
    backward_log,
    forward_log,
    posterior_decode,
    posteriors,
    viterbi,
)
from .model_io import (
    ModelFormatError,
    load_model,
    model_from_json,
    model_to_json,
    read_sequences,
    save_model,
)
from .training import (
    ModelScore,
    TrainingConfig,
    TrainingError,
    TrainingReport,
    baum_welch,
    count_parameters,
    default_initial_model,
    m_step_emissions,
    m_step_transitions,
    score_model,
)

__version__ = "0.1.0"
