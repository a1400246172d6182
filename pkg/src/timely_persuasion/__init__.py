"""Equilibrium rate policies for persuasion through the timing of updates."""

from .errors import (
    ConfigError,
    DegenerateRates,
    InfeasibleResidual,
    InvalidInstance,
    InvalidProfile,
    NonPositiveHorizon,
    NonPositiveTheta,
    NumericalError,
    PersuasionError,
    TooLarge,
    ValidationError,
)
from .model import (
    BestResponse,
    ProblemInstance,
    RatePolicy,
    SourceParams,
    StationaryDistribution,
    best_response,
    c_min,
    joint_stationary,
    prior_distribution,
    receiver_default_utility,
    receiver_utility,
    sender_utility_partials,
    sender_utility_term,
)
from .multi_source import (
    CandidateSolution,
    WaterFillConstants,
    bisect_theta,
    solve_active_set,
    solve_multi,
    water_fill_s,
)
from .oracle import GridSpec, grid_oracle
from .simulate import SimulationResult, simulate_joint, simulate_physical
from .single_source import EquilibriumOutcome, solve_single

__version__ = "0.1.0"
