"""Self-contained classic-control environments.

Re-implements the standard CartPole-v1, MountainCar-v0, and Acrobot-v1
dynamics (Euler / closed-form / RK4 respectively) behind one small stepping
interface, so trajectories are deterministic functions of (seed, actions)
with no dependency on an external simulator. Also hosts observation
normalization into [-1, 1] and the potential-based reward shaping used for
the acrobot swing-up.

Conventions that differ from the usual wrappers:

* ``step`` returns the reward alongside an :class:`EnvState` carrying
  terminated/truncated separately; truncation is the time limit only.
* Every step pays the standard reward including the terminating one, so a
  raw episode return is exactly +length (cartpole) or -length (the other
  two).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, UsageError


@dataclass
class EnvState:
    """Raw observation plus how (if at all) the episode just ended."""

    observation: np.ndarray
    terminated: bool
    truncated: bool


@dataclass
class NormalizationSpec:
    """Per-dimension (low, high) bounds for linear scaling into [-1, 1]."""

    low: np.ndarray
    high: np.ndarray
    clip: bool = True

    def __post_init__(self) -> None:
        self.low = np.asarray(self.low, dtype=np.float64)
        self.high = np.asarray(self.high, dtype=np.float64)
        if self.low.shape != self.high.shape or self.low.ndim != 1:
            raise ConfigError("normalization bounds must be 1-d and same length")
        if not np.all(self.low < self.high):
            raise ConfigError("normalization requires low < high per dimension")

    @property
    def dim(self) -> int:
        return self.low.shape[0]


def normalize(spec: NormalizationSpec, observation: np.ndarray) -> np.ndarray:
    """Map x to 2(x-low)/(high-low) - 1 per component, clipping if enabled.

    Accepts a single observation or a [batch, dim] array.
    """
    obs = np.asarray(observation, dtype=np.float64)
    if obs.shape[-1] != spec.dim or obs.ndim not in (1, 2):
        raise ConfigError(
            f"observation shape {obs.shape} does not match {spec.dim} bounds"
        )
    if not np.all(np.isfinite(obs)):
        raise DataError("non-finite observation")
    scaled = 2.0 * (obs - spec.low) / (spec.high - spec.low) - 1.0
    if spec.clip:
        scaled = np.clip(scaled, -1.0, 1.0)
    return scaled


def denormalize(spec: NormalizationSpec, scaled: np.ndarray) -> np.ndarray:
    """Inverse of normalize on in-bounds values (clipping is lossy)."""
    arr = np.asarray(scaled, dtype=np.float64)
    return spec.low + (arr + 1.0) * 0.5 * (spec.high - spec.low)


class Environment:
    """Common stepping machinery; subclasses supply the physics."""

    env_id: str
    num_actions: int
    obs_dim: int
    max_episode_steps: int

    def __init__(self) -> None:
        self._obs: np.ndarray | None = None
        self._steps = 0
        self._done = True

    def reset(self, rng: np.random.Generator) -> EnvState:
        self._obs = self._initial_observation(rng)
        self._steps = 0
        self._done = False
        return EnvState(self._obs.copy(), False, False)

    @property
    def current_observation(self) -> np.ndarray:
        if self._obs is None:
            raise UsageError("environment has not been reset")
        return self._obs.copy()

    def step(self, action: int) -> tuple[EnvState, float]:
        """Advance one step; returns the new state and the step reward."""
        if self._done:
            raise UsageError("step() on a finished episode; reset first")
        if not isinstance(action, (int, np.integer)) or not (
            0 <= action < self.num_actions
        ):
            raise UsageError(
                f"action {action!r} not in 0..{self.num_actions - 1} "
                f"for {self.env_id}"
            )
        obs, reward, terminated = self._transition(int(action))
        self._obs = obs
        self._steps += 1
        truncated = (not terminated) and self._steps >= self.max_episode_steps
        self._done = terminated or truncated
        return EnvState(obs.copy(), terminated, truncated), reward

    # subclass hooks -----------------------------------------------------
    def _initial_observation(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def _transition(self, action: int) -> tuple[np.ndarray, float, bool]:
        raise NotImplementedError


class CartPole(Environment):
    """Pole balancing on a cart; explicit Euler at 0.02 s.

    State (x, x_dot, theta, theta_dot); push left/right with 10 N. Fails
    when the cart leaves +/-2.4 m or the pole tips past 12 degrees.
    """

    env_id = "cartpole-v1"
    num_actions = 2
    obs_dim = 4
    max_episode_steps = 500

    GRAVITY = 9.8
    CART_MASS = 1.0
    POLE_MASS = 0.1
    HALF_LENGTH = 0.5
    FORCE = 10.0
    TAU = 0.02
    X_LIMIT = 2.4
    THETA_LIMIT = 12.0 * 2.0 * math.pi / 360.0

    def __init__(self) -> None:
        super().__init__()
        self.normalization = NormalizationSpec(
            low=(-2.4, -3.0, -0.2095, -3.5), high=(2.4, 3.0, 0.2095, 3.5)
        )

    def _initial_observation(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-0.05, 0.05, size=4)

    def set_state(self, x, x_dot, theta, theta_dot) -> None:
        """Place the system at an exact state (mainly for tests)."""
        self._obs = np.array([x, x_dot, theta, theta_dot], dtype=np.float64)
        self._steps = 0
        self._done = False

    def _transition(self, action: int) -> tuple[np.ndarray, float, bool]:
        x, x_dot, theta, theta_dot = self._obs
        force = self.FORCE if action == 1 else -self.FORCE
        cos_t = math.cos(theta)
        sin_t = math.sin(theta)
        total_mass = self.CART_MASS + self.POLE_MASS
        pml = self.POLE_MASS * self.HALF_LENGTH
        temp = (force + pml * theta_dot**2 * sin_t) / total_mass
        theta_acc = (self.GRAVITY * sin_t - cos_t * temp) / (
            self.HALF_LENGTH * (4.0 / 3.0 - self.POLE_MASS * cos_t**2 / total_mass)
        )
        x_acc = temp - pml * theta_acc * cos_t / total_mass
        x = x + self.TAU * x_dot
        x_dot = x_dot + self.TAU * x_acc
        theta = theta + self.TAU * theta_dot
        theta_dot = theta_dot + self.TAU * theta_acc
        obs = np.array([x, x_dot, theta, theta_dot])
        terminated = bool(
            x < -self.X_LIMIT
            or x > self.X_LIMIT
            or theta < -self.THETA_LIMIT
            or theta > self.THETA_LIMIT
        )
        return obs, 1.0, terminated


class MountainCar(Environment):
    """Underpowered car in a valley; reach position 0.5 on the right hill."""

    env_id = "mountaincar-v0"
    num_actions = 3
    obs_dim = 2
    max_episode_steps = 200

    MIN_POSITION = -1.2
    MAX_POSITION = 0.6
    MAX_SPEED = 0.07
    GOAL_POSITION = 0.5
    FORCE = 0.001
    GRAVITY = 0.0025

    def __init__(self) -> None:
        super().__init__()
        self.normalization = NormalizationSpec(
            low=(self.MIN_POSITION, -self.MAX_SPEED),
            high=(self.MAX_POSITION, self.MAX_SPEED),
        )

    def _initial_observation(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([rng.uniform(-0.6, -0.4), 0.0])

    def set_state(self, position, velocity) -> None:
        self._obs = np.array([position, velocity], dtype=np.float64)
        self._steps = 0
        self._done = False

    def _transition(self, action: int) -> tuple[np.ndarray, float, bool]:
        position, velocity = self._obs
        velocity += (action - 1) * self.FORCE - math.cos(3 * position) * self.GRAVITY
        velocity = min(max(velocity, -self.MAX_SPEED), self.MAX_SPEED)
        position += velocity
        position = min(max(position, self.MIN_POSITION), self.MAX_POSITION)
        if position == self.MIN_POSITION and velocity < 0.0:
            velocity = 0.0
        terminated = bool(position >= self.GOAL_POSITION)
        return np.array([position, velocity]), -1.0, terminated


class Acrobot(Environment):
    """Two-link underactuated pendulum; swing the tip above one link height.

    Internal state is (theta1, theta2, dtheta1, dtheta2); the observation is
    the trig embedding (cos t1, sin t1, cos t2, sin t2, dt1, dt2). Dynamics
    follow the standard two-link equations with unit masses and lengths,
    integrated by one RK4 step of 0.2 s per action, angles wrapped to
    [-pi, pi] and velocities clipped to +/-4pi and +/-9pi.
    """

    env_id = "acrobot-v1"
    num_actions = 3
    obs_dim = 6
    max_episode_steps = 500

    DT = 0.2
    LINK_MASS = 1.0
    LINK_LENGTH = 1.0
    LINK_COM = 0.5
    LINK_MOI = 1.0
    GRAVITY = 9.8
    MAX_VEL_1 = 4.0 * math.pi
    MAX_VEL_2 = 9.0 * math.pi
    TORQUES = (-1.0, 0.0, 1.0)

    def __init__(self) -> None:
        super().__init__()
        self._internal = np.zeros(4)
        self.normalization = NormalizationSpec(
            low=(-1.0, -1.0, -1.0, -1.0, -self.MAX_VEL_1, -self.MAX_VEL_2),
            high=(1.0, 1.0, 1.0, 1.0, self.MAX_VEL_1, self.MAX_VEL_2),
        )

    def _initial_observation(self, rng: np.random.Generator) -> np.ndarray:
        self._internal = rng.uniform(-0.1, 0.1, size=4)
        return self._observe()

    def set_state(self, theta1, theta2, dtheta1, dtheta2) -> None:
        self._internal = np.array(
            [theta1, theta2, dtheta1, dtheta2], dtype=np.float64
        )
        self._obs = self._observe()
        self._steps = 0
        self._done = False

    @property
    def internal_state(self) -> np.ndarray:
        return self._internal.copy()

    def _observe(self) -> np.ndarray:
        t1, t2, dt1, dt2 = self._internal
        return np.array(
            [math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2), dt1, dt2]
        )

    def _dynamics(self, s: np.ndarray) -> np.ndarray:
        m = self.LINK_MASS
        l1 = self.LINK_LENGTH
        lc = self.LINK_COM
        moi = self.LINK_MOI
        g = self.GRAVITY
        theta1, theta2, dtheta1, dtheta2, torque = s
        d1 = (
            m * lc**2
            + m * (l1**2 + lc**2 + 2 * l1 * lc * math.cos(theta2))
            + moi
            + moi
        )
        d2 = m * (lc**2 + l1 * lc * math.cos(theta2)) + moi
        phi2 = m * lc * g * math.cos(theta1 + theta2 - math.pi / 2)
        phi1 = (
            -m * l1 * lc * dtheta2**2 * math.sin(theta2)
            - 2 * m * l1 * lc * dtheta2 * dtheta1 * math.sin(theta2)
            + (m * lc + m * l1) * g * math.cos(theta1 - math.pi / 2)
            + phi2
        )
        ddtheta2 = (
            torque
            + d2 / d1 * phi1
            - m * l1 * lc * dtheta1**2 * math.sin(theta2)
            - phi2
        ) / (m * lc**2 + moi - d2**2 / d1)
        ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
        return np.array([dtheta1, dtheta2, ddtheta1, ddtheta2, 0.0])

    @staticmethod
    def _wrap(angle: float) -> float:
        while angle > math.pi:
            angle -= 2.0 * math.pi
        while angle < -math.pi:
            angle += 2.0 * math.pi
        return angle

    def _transition(self, action: int) -> tuple[np.ndarray, float, bool]:
        s = np.append(self._internal, self.TORQUES[action])
        dt = self.DT
        k1 = self._dynamics(s)
        k2 = self._dynamics(s + dt / 2.0 * k1)
        k3 = self._dynamics(s + dt / 2.0 * k2)
        k4 = self._dynamics(s + dt * k3)
        s = s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        self._internal = np.array(
            [
                self._wrap(s[0]),
                self._wrap(s[1]),
                min(max(s[2], -self.MAX_VEL_1), self.MAX_VEL_1),
                min(max(s[3], -self.MAX_VEL_2), self.MAX_VEL_2),
            ]
        )
        terminated = bool(
            -math.cos(self._internal[0])
            - math.cos(self._internal[0] + self._internal[1])
            > 1.0
        )
        return self._observe(), -1.0, terminated


def tip_height(observation: np.ndarray) -> float:
    """-cos(t1) - cos(t1 + t2) recovered from the trig observation; in [-2, 2]."""
    c1, s1, c2, s2 = observation[0], observation[1], observation[2], observation[3]
    return float(-c1 - (c1 * c2 - s1 * s2))


@dataclass
class ShapingSpec:
    """Potential-based shaping: bonus gamma*phi(s') - phi(s), phi = k*tip height."""

    coefficient: float = 0.1
    gamma: float = 0.99

    def __post_init__(self) -> None:
        if self.coefficient < 0:
            raise ConfigError("shaping coefficient must be >= 0")

    def potential(self, observation: np.ndarray) -> float:
        return self.coefficient * tip_height(observation)


def shaping_bonus(
    spec: ShapingSpec, obs_before: np.ndarray, state_after: EnvState
) -> float:
    """gamma*phi(s') - phi(s); the potential of a terminal successor is zero."""
    phi_after = 0.0 if state_after.terminated else spec.potential(state_after.observation)
    return spec.gamma * phi_after - spec.potential(obs_before)


def shaped_step(
    env: Environment, action: int, spec: ShapingSpec
) -> tuple[EnvState, float]:
    """Step with the shaping bonus folded into the reward.

    Because the bonus is a pure telescoping term (with zero potential at
    episode end), optimal policies are unchanged.
    """
    if not isinstance(env, Acrobot):
        raise ConfigError(f"reward shaping is only defined for acrobot-v1, got {env.env_id}")
    obs_before = env.current_observation
    state, reward = env.step(action)
    return state, reward + shaping_bonus(spec, obs_before, state)


_ENV_FACTORIES = {
    "cartpole-v1": CartPole,
    "mountaincar-v0": MountainCar,
    "acrobot-v1": Acrobot,
}


def make_env(env_id: str) -> Environment:
    """Build an environment from its string id."""
    try:
        factory = _ENV_FACTORIES[env_id]
    except KeyError:
        known = ", ".join(sorted(_ENV_FACTORIES))
        raise ConfigError(f"unknown environment {env_id!r}; known ids: {known}")
    return factory()
