"""Finite-key key rates for twin-field QKD without phase post-selection.

Modules
-------
channel      gain model of the measurement station and a Monte-Carlo sampler
statistics   Chernoff / Azuma intervals and the epsilon budget
decoy        four-intensity decoy bounds, LP reference, Poisson coefficients
fluctuation  intensity tomography and interval coefficients under fluctuation
keyrate      collective and coherent-attack key rates, Eve-information plugins
optimizer    scenario objective and particle swarm optimization
cli          command-line front end
"""

from .channel import ChannelParams, GainSet, ProtocolParams, closed_form_decoy_gain, code_mode_stats, expected_gains, mc_gains
from .decoy import PoissonCoeffs, QBounds, YieldTable, analytic_q_bounds, lp_q_bounds, synth_gains_from_yields
from .errors import (
    ConfigError,
    ContractViolation,
    DomainError,
    EstimationInfeasible,
    OrderingError,
    SaturationError,
    TfqkdError,
)
from .fluctuation import (
    CoeffIntervals,
    FluctuationSpec,
    TomographyRecord,
    coeff_intervals,
    extremize_fn,
    interval_q_bounds,
    mean_intensity_bounds,
)
from .interval import Interval
from .keyrate import KeyRateInputs, binary_entropy, iae_upper, plob_bound, skr_coherent, skr_collective
from .optimizer import ParamVector, PsoConfig, evaluate_scenario, pso_optimize
from .statistics import EpsilonBudget, GainIntervals, azuma_interval, budget_split, chernoff_interval, gain_intervals

__version__ = "0.1.0"
