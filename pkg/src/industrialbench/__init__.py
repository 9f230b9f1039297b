"""Seed-deterministic industrial plant simulation benchmark.

A partially observable stochastic environment with three steerable
quantities (velocity, gain, shift) and two reward components (consumption
and fatigue), plus a harness that generates the canonical off-policy
dataset and evaluates control policies on it.
"""

from .backend import available_backends, backend_name, get_backend, rollout
from .dynamics import (
    Action,
    DynamicsFault,
    FatigueState,
    MisCalibrationState,
    NoiseDraws,
    Steerings,
)
from .environment import (
    DataVector,
    EnvironmentConfig,
    EXTENDED_DIMS,
    ExternalDriver,
    IndustrialBenchmark,
    MARKOV_DIMS,
    OBSERVATION_DIMS,
    ResetRequired,
    SetPointDriver,
)
from .harness import (
    DEFAULT_SET_POINTS,
    DEFAULT_STEPS,
    EvalStats,
    SCHEMA_VERSION,
    Trajectory,
    TransitionTuple,
    TUPLE_COLUMNS,
    evaluate_policy,
    generate_dataset,
    max_entropy_policy,
    mrabd,
    read_dataset,
    write_dataset,
)
from .rng import GENERATOR_NAME, RandomStream, StreamError, ZeroNoiseStream, derive_seed

__version__ = "0.1.0"

__all__ = [
    "Action",
    "DataVector",
    "DEFAULT_SET_POINTS",
    "DEFAULT_STEPS",
    "DynamicsFault",
    "EnvironmentConfig",
    "EvalStats",
    "EXTENDED_DIMS",
    "ExternalDriver",
    "FatigueState",
    "GENERATOR_NAME",
    "IndustrialBenchmark",
    "MARKOV_DIMS",
    "MisCalibrationState",
    "NoiseDraws",
    "OBSERVATION_DIMS",
    "RandomStream",
    "ResetRequired",
    "SCHEMA_VERSION",
    "SetPointDriver",
    "Steerings",
    "StreamError",
    "Trajectory",
    "TransitionTuple",
    "TUPLE_COLUMNS",
    "ZeroNoiseStream",
    "available_backends",
    "backend_name",
    "derive_seed",
    "evaluate_policy",
    "generate_dataset",
    "get_backend",
    "max_entropy_policy",
    "mrabd",
    "read_dataset",
    "rollout",
    "write_dataset",
    "__version__",
]
