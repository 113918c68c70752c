"""Multi-seed experiment orchestration and result reporting.

A run = (environment, model, seed) trained for a fixed episode budget. The
harness executes every seed of a config (optionally in parallel processes),
streams one CSV row per episode as it happens, and aggregates final scores
and episodes-to-threshold across seeds into a markdown summary table.

All randomness in a run derives from its integer seed, and floats are
written with repr(), so rerunning a config reproduces the CSVs byte for
byte.
"""

from __future__ import annotations

import math
import os
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .agent import ARCH_CHEBYSHEV, ARCH_MLP, Agent, AgentConfig, EpisodeRecord, RngStreams
from .envs import make_env
from .errors import ConfigError, UsageError
from .network import NetworkSpec, parameter_count

CSV_HEADER = "episode,steps,raw_return,trailing_mean,epsilon,global_step,loss_mean"

# Per-environment training defaults. Learning rate and exploration horizon
# are the main knobs that differ; acrobot additionally gets a wider net and
# the tip-height shaping bonus to make its sparse reward learnable.
ENV_SETTINGS = {
    "cartpole-v1": {
        "learning_rate": 1e-3,
        "epsilon_decay_steps": 10_000,
        "hidden": (64, 64),
        "episodes": 500,
        "threshold": 195.0,
        "shaping_coefficient": 0.0,
    },
    "mountaincar-v0": {
        "learning_rate": 1e-3,
        "epsilon_decay_steps": 10_000,
        "hidden": (64, 64),
        "episodes": 2_000,
        "threshold": -110.0,
        "shaping_coefficient": 0.0,
    },
    "acrobot-v1": {
        "learning_rate": 5e-4,
        "epsilon_decay_steps": 20_000,
        "hidden": (128, 128),
        "episodes": 1_000,
        "threshold": -100.0,
        "shaping_coefficient": 0.1,
    },
}

# Externally reported totals for these architectures, kept for cross-checking
# in the params table. The cartpole column agrees with the arithmetic; the
# mountaincar and acrobot columns do not follow from the stated layer sizes,
# so where they disagree the computed value is authoritative here and the
# reference value is printed as an annotation.
REFERENCE_COUNTS = {
    ("cartpole-v1", "mlp"): 4_610,
    ("cartpole-v1", "cheb4"): 5_634,
    ("cartpole-v1", "cheb6"): 6_146,
    ("cartpole-v1", "cheb8"): 6_658,
    ("mountaincar-v0", "mlp"): 4_483,
    ("mountaincar-v0", "cheb4"): 5_027,
    ("mountaincar-v0", "cheb6"): 5_355,
    ("mountaincar-v0", "cheb8"): 5_683,
    ("acrobot-v1", "mlp"): 17_411,
    ("acrobot-v1", "cheb4"): 19_715,
    ("acrobot-v1", "cheb6"): 21_251,
    ("acrobot-v1", "cheb8"): 22_787,
}


def default_agent_config(
    env_id: str, architecture: str, degree: int | None = None, **overrides
) -> AgentConfig:
    """AgentConfig preloaded with the per-environment defaults."""
    if env_id not in ENV_SETTINGS:
        known = ", ".join(sorted(ENV_SETTINGS))
        raise ConfigError(f"unknown environment {env_id!r}; known ids: {known}")
    settings = ENV_SETTINGS[env_id]
    if architecture == ARCH_CHEBYSHEV and degree is None:
        degree = 4
    fields = {
        "architecture": architecture,
        "degree": degree,
        "hidden": settings["hidden"],
        "learning_rate": settings["learning_rate"],
        "epsilon_decay_steps": settings["epsilon_decay_steps"],
        "shaping_coefficient": settings["shaping_coefficient"],
    }
    fields.update(overrides)
    return AgentConfig(**fields)


@dataclass
class ExperimentConfig:
    env_id: str
    agent: AgentConfig
    seeds: tuple[int, ...] = (0, 1, 2)
    episodes: int = 500
    window: int = 100
    threshold: float = 195.0
    out_dir: str = "results"
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.env_id not in ENV_SETTINGS:
            known = ", ".join(sorted(ENV_SETTINGS))
            raise ConfigError(f"unknown environment {self.env_id!r}; known ids: {known}")
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be distinct, got {self.seeds}")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


@dataclass
class RunResult:
    """Everything recorded for one (config, seed) training run."""

    env_id: str
    model: str
    seed: int
    episodes: list[EpisodeRecord]
    final_score: float
    episodes_to_threshold: int | None
    parameter_count: int
    wall_clock_seconds: float
    csv_path: str | None = None


@dataclass
class AggregateResult:
    """Cross-seed statistics for one (environment, model) cell."""

    env_id: str
    model: str
    seeds: int
    mean_final: float
    std_final: float
    single_seed: bool
    median_episodes_to_threshold: float  # math.inf when unsolved
    parameter_count: int


def count_parameters(env_id: str, architecture: str, degree: int | None = None) -> int:
    """Trainable-parameter total for the net this (env, model) pair builds."""
    if env_id not in ENV_SETTINGS:
        known = ", ".join(sorted(ENV_SETTINGS))
        raise ConfigError(f"unknown environment {env_id!r}; known ids: {known}")
    env = make_env(env_id)
    if architecture == ARCH_CHEBYSHEV:
        if degree is None:
            degree = 4
        input_dim = env.obs_dim * (degree + 1)
    elif architecture == ARCH_MLP:
        input_dim = env.obs_dim
    else:
        raise ConfigError(f"unknown architecture {architecture!r}")
    hidden = ENV_SETTINGS[env_id]["hidden"]
    return parameter_count(NetworkSpec(input_dim, hidden, env.num_actions))


def reference_count(env_id: str, model: str) -> int | None:
    return REFERENCE_COUNTS.get((env_id, model))


# ---------------------------------------------------------------------------
# Config resolution: built-in defaults <- config file <- CLI flags

AGENT_KEYS = frozenset(
    {
        "gamma",
        "learning_rate",
        "batch_size",
        "buffer_capacity",
        "target_sync_period",
        "epsilon_start",
        "epsilon_end",
        "epsilon_decay_steps",
        "warmup_transitions",
        "shaping_coefficient",
        "bootstrap_on_truncation",
        "grad_clip",
        "hidden",
    }
)
EXPERIMENT_KEYS = frozenset(
    {"env", "arch", "degree", "seeds", "episodes", "window", "threshold", "out_dir", "jobs"}
)


def load_toml(path: str) -> dict:
    """Read a TOML config file into a plain dict."""
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def build_experiment_config(values: dict) -> ExperimentConfig:
    """Assemble an ExperimentConfig from a flat, fully merged settings dict.

    Keys mirror the config-file schema: experiment-level `env`, `arch`,
    `degree`, `seeds`, `episodes`, `window`, `threshold`, `out_dir`, `jobs`
    plus any AgentConfig hyperparameter. Unknown keys are rejected so typos
    fail loudly. Episode budget and threshold default per environment.
    """
    unknown = set(values) - AGENT_KEYS - EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    env_id = values.get("env")
    if env_id is None:
        raise ConfigError("an environment id is required (env key or --env flag)")
    if env_id not in ENV_SETTINGS:
        known = ", ".join(sorted(ENV_SETTINGS))
        raise ConfigError(f"unknown environment {env_id!r}; known ids: {known}")
    arch = values.get("arch", ARCH_CHEBYSHEV)
    degree = values.get("degree")
    if arch == ARCH_MLP and degree is not None:
        raise ConfigError("--degree/degree only applies to the cheb architecture")
    overrides = {k: values[k] for k in AGENT_KEYS if k in values}
    if "hidden" in overrides:
        overrides["hidden"] = tuple(int(h) for h in overrides["hidden"])
    agent = default_agent_config(env_id, arch, degree, **overrides)
    settings = ENV_SETTINGS[env_id]
    return ExperimentConfig(
        env_id=env_id,
        agent=agent,
        seeds=tuple(values.get("seeds", (0, 1, 2))),
        episodes=int(values.get("episodes", settings["episodes"])),
        window=int(values.get("window", 100)),
        threshold=float(values.get("threshold", settings["threshold"])),
        out_dir=str(values.get("out_dir", "results")),
        jobs=int(values.get("jobs", 1)),
    )


# ---------------------------------------------------------------------------
# CSV emission


def format_float(x: float) -> str:
    """Full-precision decimal that round-trips float64 exactly."""
    return repr(float(x))


def trailing_mean_at(returns: list[float], k: int, window: int) -> float:
    """Mean of returns over episodes max(1, k-window+1)..k (k is 1-based)."""
    lo = max(0, k - window)
    return float(np.mean(returns[lo:k]))


def format_row(episode: int, record: EpisodeRecord, trailing: float) -> str:
    return ",".join(
        (
            str(episode),
            str(record.steps),
            format_float(record.raw_return),
            format_float(trailing),
            format_float(record.epsilon),
            str(record.global_step),
            format_float(record.loss_mean),
        )
    )


def emit_learning_curve(
    records: list[EpisodeRecord], window: int, path: str
) -> None:
    """Write a complete learning-curve CSV, one row per episode."""
    returns = [r.raw_return for r in records]
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for k, record in enumerate(records, start=1):
            fh.write(format_row(k, record, trailing_mean_at(returns, k, window)) + "\n")


def read_learning_curve(path: str) -> list[dict]:
    """Parse a learning-curve CSV back into per-episode dicts."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path} does not look like a learning-curve CSV")
    keys = CSV_HEADER.split(",")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        row = dict(zip(keys, parts))
        for key in ("episode", "steps", "global_step"):
            row[key] = int(row[key])
        for key in ("raw_return", "trailing_mean", "epsilon", "loss_mean"):
            row[key] = float(row[key])
        rows.append(row)
    return rows


def run_csv_path(out_dir: str, env_id: str, model: str, seed: int) -> str:
    return os.path.join(out_dir, f"{env_id}_{model}_seed{seed}.csv")


# ---------------------------------------------------------------------------
# Training runs


def _run_single(config: ExperimentConfig, seed: int, verbose: bool) -> RunResult:
    streams = RngStreams.from_seed(seed)
    env = make_env(config.env_id)
    agent = Agent(config.agent, env, streams)
    model = config.agent.model_name()
    params = sum(int(p.size) for p in agent.policy.parameters())
    csv_path = run_csv_path(config.out_dir, config.env_id, model, seed)

    records: list[EpisodeRecord] = []
    returns: list[float] = []
    episodes_to_threshold: int | None = None
    start = time.perf_counter()
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        fh.flush()
        for k in range(1, config.episodes + 1):
            record = agent.run_episode(env)
            records.append(record)
            returns.append(record.raw_return)
            trailing = trailing_mean_at(returns, k, config.window)
            if episodes_to_threshold is None and trailing >= config.threshold:
                episodes_to_threshold = k
            fh.write(format_row(k, record, trailing) + "\n")
            fh.flush()
            if verbose and (k % config.window == 0 or k == config.episodes):
                print(
                    f"[{config.env_id} {model} seed {seed}] "
                    f"episode {k}/{config.episodes} "
                    f"trailing_mean {trailing:.2f} epsilon {record.epsilon:.3f}",
                    file=sys.stderr,
                )
    elapsed = time.perf_counter() - start
    final_window = min(config.window, len(returns))
    final_score = float(np.mean(returns[-final_window:]))
    return RunResult(
        env_id=config.env_id,
        model=model,
        seed=seed,
        episodes=records,
        final_score=final_score,
        episodes_to_threshold=episodes_to_threshold,
        parameter_count=params,
        wall_clock_seconds=elapsed,
        csv_path=csv_path,
    )


def _validate_before_training(config: ExperimentConfig) -> None:
    """Fail fast on invalid env/agent combinations (e.g. shaping outside
    acrobot) before any run starts."""
    Agent(config.agent, make_env(config.env_id), RngStreams.from_seed(0))


def run_experiment(config: ExperimentConfig, verbose: bool = False) -> list[RunResult]:
    """Train every seed of the config; returns one RunResult per seed.

    Each run is deterministic in (config, seed) and writes its CSV
    incrementally. With jobs > 1, seeds run in parallel processes.
    """
    _validate_before_training(config)
    os.makedirs(config.out_dir, exist_ok=True)
    if config.jobs > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [
                pool.submit(_run_single, config, seed, verbose)
                for seed in config.seeds
            ]
            return [f.result() for f in futures]
    return [_run_single(config, seed, verbose) for seed in config.seeds]


def aggregate(results: list[RunResult]) -> AggregateResult:
    """Mean +/- sample std of final scores and median episodes-to-threshold
    (unsolved runs count as infinity) over the seeds of one config."""
    if not results:
        raise UsageError("aggregate() needs at least one run result")
    finals = [r.final_score for r in results]
    single = len(finals) == 1
    std = 0.0 if single else statistics.stdev(finals)
    reached = [
        math.inf if r.episodes_to_threshold is None else float(r.episodes_to_threshold)
        for r in results
    ]
    return AggregateResult(
        env_id=results[0].env_id,
        model=results[0].model,
        seeds=len(results),
        mean_final=float(np.mean(finals)),
        std_final=float(std),
        single_seed=single,
        median_episodes_to_threshold=float(statistics.median(reached)),
        parameter_count=results[0].parameter_count,
    )


def write_summary(path: str, aggregates: list[AggregateResult]) -> None:
    """Markdown summary: one table per environment, one row per model."""
    by_env: dict[str, list[AggregateResult]] = {}
    for agg in aggregates:
        by_env.setdefault(agg.env_id, []).append(agg)
    lines = ["# Training summary", ""]
    for env_id, rows in by_env.items():
        lines.append(f"## {env_id}")
        lines.append("")
        lines.append(
            "| Model | Final Score (mean ± std) | "
            "Episodes-to-Threshold (median) | Parameters |"
        )
        lines.append("|---|---|---|---|")
        for agg in rows:
            score = f"{agg.mean_final:.1f} ± {agg.std_final:.1f}"
            if agg.single_seed:
                score += " (single seed)"
            med = agg.median_episodes_to_threshold
            reached = "not reached" if math.isinf(med) else f"{med:g}"
            lines.append(
                f"| {agg.model} | {score} | {reached} | {agg.parameter_count:,} |"
            )
        lines.append("")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines))


__all__ = [
    "AGENT_KEYS",
    "AggregateResult",
    "CSV_HEADER",
    "ENV_SETTINGS",
    "EXPERIMENT_KEYS",
    "ExperimentConfig",
    "RunResult",
    "aggregate",
    "build_experiment_config",
    "count_parameters",
    "default_agent_config",
    "emit_learning_curve",
    "load_toml",
    "read_learning_curve",
    "reference_count",
    "run_csv_path",
    "run_experiment",
    "trailing_mean_at",
    "write_summary",
]
