"""Adaptive causal numerical differentiation by input and state estimation."""

from .aise import Aise, AiseConfig, StepDiagnostics, VrfEr, differentiate, run
from .baselines import BackwardDifference, FilteredDifference, IirFilter, MovingAverage, butterworth_design
from .control_sim import (
    DiscretePlant,
    NoiseModel,
    PidConfig,
    PidController,
    PlantConfig,
    simulate_closed_loop,
    zoh_discretize,
)
from .covariance_adaptation import AdaptConfig, adapt_covariances
from .exceptions import ConfigError, DegenerateCovarianceError, NotReadyError
from .fdist import f_cdf, f_quantile
from .input_estimation import IeConfig
from .model_kalman import LtiModel, make_differentiator_model
from .rls_forgetting import ErConfig, RlsState, VariableRateForgetting, VrfConfig

__version__ = "0.1.0"
