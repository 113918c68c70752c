"""Deep Q-learning agent.

One agent class covers both model families: with a Chebyshev basis the
observation is normalized and expanded into polynomial features before the
dense net; without it the normalized observation feeds the net directly.
Everything else — epsilon-greedy exploration with a linear schedule, replay,
TD targets from a frozen copy of the policy net, hard target syncs every C
steps — is identical, so like-for-like comparisons isolate the feature map.

Per environment step the agent does: select action, step, store, one
gradient update (after warm-up), then a possible target sync.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chebyshev import ChebyshevBasis
from .envs import Acrobot, Environment, ShapingSpec, normalize, shaping_bonus
from .errors import ConfigError
from .network import (
    AdamState,
    DenseLayer,
    Network,
    NetworkSpec,
    adam_step,
    clip_gradients,
    copy_weights,
)
from .replay import ReplayBuffer, Transition

ARCH_CHEBYSHEV = "cheb"
ARCH_MLP = "mlp"


@dataclass
class AgentConfig:
    """Hyperparameters for one training run; defaults follow the common
    small-scale DQN setup (gamma 0.99, 50k replay, batch 64, sync 500)."""

    architecture: str = ARCH_CHEBYSHEV
    degree: int | None = 4  # Chebyshev degree; must be None for mlp
    hidden: tuple[int, ...] = (64, 64)
    gamma: float = 0.99
    learning_rate: float = 1e-3
    batch_size: int = 64
    buffer_capacity: int = 50_000
    target_sync_period: int = 500
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 10_000
    warmup_transitions: int = 1_000
    shaping_coefficient: float = 0.0  # > 0 turns on acrobot tip-height shaping
    bootstrap_on_truncation: bool = True
    grad_clip: float | None = None

    def __post_init__(self) -> None:
        if self.architecture not in (ARCH_CHEBYSHEV, ARCH_MLP):
            raise ConfigError(
                f"architecture must be {ARCH_CHEBYSHEV!r} or {ARCH_MLP!r}, "
                f"got {self.architecture!r}"
            )
        if self.architecture == ARCH_MLP and self.degree is not None:
            raise ConfigError("degree is meaningless for the mlp architecture")
        if self.architecture == ARCH_CHEBYSHEV:
            if self.degree is None or self.degree < 0:
                raise ConfigError(f"chebyshev degree must be >= 0, got {self.degree}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.target_sync_period < 1:
            raise ConfigError("target_sync_period must be >= 1")
        if not self.epsilon_start >= self.epsilon_end >= 0.0:
            raise ConfigError("need epsilon_start >= epsilon_end >= 0")
        if self.epsilon_decay_steps < 1:
            raise ConfigError("epsilon_decay_steps must be >= 1")
        if self.batch_size < 1 or self.buffer_capacity < 1:
            raise ConfigError("batch_size and buffer_capacity must be >= 1")
        self.hidden = tuple(int(h) for h in self.hidden)

    def epsilon_at(self, step: int) -> float:
        """Linear schedule: start at step 0, end at/after decay_steps."""
        if step >= self.epsilon_decay_steps:
            return self.epsilon_end
        frac = step / self.epsilon_decay_steps
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac

    def model_name(self) -> str:
        if self.architecture == ARCH_MLP:
            return "mlp"
        return f"cheb{self.degree}"


@dataclass
class RngStreams:
    """Independent generators for each source of randomness in a run.

    Splitting by purpose keeps trajectories identical across architectures
    when exploration is fully random: weight init draws a different amount
    per architecture, and with a single stream that difference would bleed
    into every later action.
    """

    weights: np.random.Generator
    env: np.random.Generator
    explore: np.random.Generator
    replay: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RngStreams":
        children = np.random.SeedSequence(seed).spawn(4)
        return cls(*(np.random.default_rng(c) for c in children))


@dataclass
class EpisodeRecord:
    """Per-episode training log entry. Returns are raw environment rewards,
    never shaped ones. loss_mean is NaN for episodes with no updates."""

    steps: int
    raw_return: float
    epsilon: float
    global_step: int
    loss_mean: float


class Agent:
    def __init__(self, config: AgentConfig, env: Environment, streams: RngStreams):
        self.config = config
        self.env_id = env.env_id
        self.num_actions = env.num_actions
        self.normalization = env.normalization
        self.streams = streams

        if config.shaping_coefficient > 0.0 and not isinstance(env, Acrobot):
            raise ConfigError(
                f"reward shaping requires acrobot-v1, got {env.env_id}"
            )
        self.shaping: ShapingSpec | None = None
        if config.shaping_coefficient > 0.0:
            self.shaping = ShapingSpec(config.shaping_coefficient, config.gamma)

        if config.architecture == ARCH_CHEBYSHEV:
            self.basis: ChebyshevBasis | None = ChebyshevBasis(
                config.degree, env.obs_dim
            )
            input_dim = self.basis.feature_dim
        else:
            self.basis = None
            input_dim = env.obs_dim

        spec = NetworkSpec(input_dim, config.hidden, env.num_actions)
        self.policy = Network.initialize(spec, streams.weights)
        self.target = Network(
            spec,
            [
                DenseLayer(l.weights.copy(), l.biases.copy(), l.activation)
                for l in self.policy.layers
            ],
        )
        self.optimizer = AdamState.for_params(
            self.policy.parameters(), config.learning_rate
        )
        self.buffer = ReplayBuffer(config.buffer_capacity)
        self.global_step = 0

    # input pipeline -------------------------------------------------------
    def encode(self, observation: np.ndarray) -> np.ndarray:
        """Raw observation -> network input (single or [batch, dim])."""
        scaled = normalize(self.normalization, observation)
        if self.basis is None:
            return scaled
        if scaled.ndim == 1:
            return self.basis.featurize(scaled)
        return self.basis.featurize_batch(scaled)

    def q_values(self, observation: np.ndarray) -> np.ndarray:
        return self.policy.forward(self.encode(observation))

    @property
    def epsilon(self) -> float:
        return self.config.epsilon_at(self.global_step)

    # core operations ------------------------------------------------------
    def select_action(
        self, observation: np.ndarray, rng: np.random.Generator | None = None
    ) -> int:
        """Epsilon-greedy over policy Q-values; greedy ties go to the lowest
        action index (numpy argmax convention)."""
        if rng is None:
            rng = self.streams.explore
        if rng.random() < self.epsilon:
            return int(rng.integers(self.num_actions))
        return int(np.argmax(self.q_values(observation)))

    def compute_target(self, transition: Transition) -> float:
        """TD target y = r + gamma * max_a' Q(s', a'; frozen net); just r on
        genuine termination."""
        if transition.terminal:
            return float(transition.reward)
        q_next = self.target.forward(self.encode(transition.next_state))
        return float(transition.reward + self.config.gamma * np.max(q_next))

    def learn_step(self, rng: np.random.Generator | None = None) -> float | None:
        """One Adam update on the mean squared TD error of a sampled batch.

        Returns the batch loss, or None (skip, no mutation) while the buffer
        is below the warm-up threshold or the batch size.
        """
        cfg = self.config
        if self.buffer.size < max(cfg.batch_size, cfg.warmup_transitions):
            return None
        if rng is None:
            rng = self.streams.replay
        states, actions, rewards, next_states, terminals = self.buffer.sample_arrays(
            cfg.batch_size, rng
        )
        q_next = self.target.forward(self.encode(next_states))
        targets = rewards + cfg.gamma * q_next.max(axis=1) * ~terminals
        q = self.policy.forward(self.encode(states))
        selected = q[np.arange(cfg.batch_size), actions]
        loss = float(np.mean((selected - targets) ** 2))
        grads = self.policy.backward(actions, targets)
        if cfg.grad_clip is not None:
            clip_gradients(grads, cfg.grad_clip)
        adam_step(self.policy.parameters(), grads, self.optimizer)
        return loss

    def maybe_sync_target(self) -> bool:
        """Hard-copy policy weights into the target net every C steps."""
        if self.global_step % self.config.target_sync_period == 0:
            copy_weights(self.policy, self.target)
            return True
        return False

    def run_episode(self, env: Environment) -> EpisodeRecord:
        """Play one episode to termination/truncation, learning each step."""
        state = env.reset(self.streams.env)
        obs = state.observation
        raw_return = 0.0
        steps = 0
        loss_sum = 0.0
        loss_count = 0
        while True:
            action = self.select_action(obs)
            next_state, raw_reward = env.step(action)
            reward = raw_reward
            if self.shaping is not None:
                reward += shaping_bonus(self.shaping, obs, next_state)
            terminal = next_state.terminated
            if not self.config.bootstrap_on_truncation:
                terminal = terminal or next_state.truncated
            self.buffer.push(
                Transition(obs, action, reward, next_state.observation, terminal)
            )
            raw_return += raw_reward
            steps += 1
            self.global_step += 1
            loss = self.learn_step()
            if loss is not None:
                loss_sum += loss
                loss_count += 1
            self.maybe_sync_target()
            if next_state.terminated or next_state.truncated:
                break
            obs = next_state.observation
        loss_mean = loss_sum / loss_count if loss_count else math.nan
        return EpisodeRecord(
            steps=steps,
            raw_return=raw_return,
            epsilon=self.epsilon,
            global_step=self.global_step,
            loss_mean=loss_mean,
        )
