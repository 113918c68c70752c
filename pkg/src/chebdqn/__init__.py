"""Deep Q-learning on classic control tasks, with an optional Chebyshev
polynomial feature expansion in front of a small from-scratch dense net.

The pieces compose bottom-up: `chebyshev` (feature basis), `network`
(dense net + Adam), `envs` (cartpole / mountaincar / acrobot physics),
`replay` (transition memory), `agent` (the learning loop), `harness`
(multi-seed experiments and reports), `cli` (the `chebdqn` command).
"""

from .agent import Agent, AgentConfig, EpisodeRecord, RngStreams
from .chebyshev import ChebyshevBasis, eval_polynomial, orthogonality_check
from .envs import (
    Acrobot,
    CartPole,
    EnvState,
    Environment,
    MountainCar,
    NormalizationSpec,
    ShapingSpec,
    denormalize,
    make_env,
    normalize,
    shaped_step,
)
from .errors import ConfigError, DataError, UsageError
from .harness import (
    AggregateResult,
    ExperimentConfig,
    RunResult,
    aggregate,
    count_parameters,
    default_agent_config,
    emit_learning_curve,
    run_experiment,
    write_summary,
)
from .network import (
    AdamState,
    Network,
    NetworkSpec,
    adam_step,
    copy_weights,
    load_weights,
    parameter_count,
    save_weights,
)
from .replay import ReplayBuffer, Transition

__version__ = "0.1.0"

__all__ = [
    "Acrobot",
    "AdamState",
    "Agent",
    "AgentConfig",
    "AggregateResult",
    "CartPole",
    "ChebyshevBasis",
    "ConfigError",
    "DataError",
    "EnvState",
    "Environment",
    "EpisodeRecord",
    "ExperimentConfig",
    "MountainCar",
    "Network",
    "NetworkSpec",
    "NormalizationSpec",
    "ReplayBuffer",
    "RngStreams",
    "RunResult",
    "ShapingSpec",
    "Transition",
    "UsageError",
    "adam_step",
    "aggregate",
    "copy_weights",
    "count_parameters",
    "default_agent_config",
    "denormalize",
    "emit_learning_curve",
    "eval_polynomial",
    "load_weights",
    "make_env",
    "normalize",
    "orthogonality_check",
    "parameter_count",
    "run_experiment",
    "save_weights",
    "shaped_step",
    "write_summary",
]
