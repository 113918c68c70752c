"""Fixed-capacity FIFO replay memory with uniform minibatch sampling.

Storage is a set of preallocated rings (one array per transition field),
sized on the first push. Sampling is uniform with replacement over the
current contents. Observations go in raw; any normalization or feature
mapping happens when a batch is fed to the network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UsageError


@dataclass
class Transition:
    """One environment step as stored for learning.

    ``terminal`` is true only for genuine MDP termination; transitions cut
    off by the time limit keep it false so the TD target still bootstraps.
    """

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


class ReplayBuffer:
    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._count = 0  # total insertions ever
        self._states: np.ndarray | None = None
        self._actions: np.ndarray | None = None
        self._rewards: np.ndarray | None = None
        self._next_states: np.ndarray | None = None
        self._terminals: np.ndarray | None = None

    @property
    def size(self) -> int:
        return min(self._count, self.capacity)

    def __len__(self) -> int:
        return self.size

    def push(self, transition: Transition) -> None:
        """Append one transition, evicting the oldest when full."""
        state = np.asarray(transition.state, dtype=np.float64)
        next_state = np.asarray(transition.next_state, dtype=np.float64)
        if self._states is None:
            dim = state.shape[0]
            self._states = np.empty((self.capacity, dim))
            self._next_states = np.empty((self.capacity, dim))
            self._actions = np.empty(self.capacity, dtype=np.int64)
            self._rewards = np.empty(self.capacity)
            self._terminals = np.empty(self.capacity, dtype=bool)
        if state.shape != self._states.shape[1:] or next_state.shape != state.shape:
            raise ConfigError(
                f"transition observation shape {state.shape} does not match "
                f"buffer dimension {self._states.shape[1]}"
            )
        idx = self._count % self.capacity
        self._states[idx] = state
        self._actions[idx] = transition.action
        self._rewards[idx] = transition.reward
        self._next_states[idx] = next_state
        self._terminals[idx] = transition.terminal
        self._count += 1

    def _sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
        if self.size < batch_size:
            raise UsageError(
                f"buffer holds {self.size} transitions, cannot sample {batch_size}"
            )
        return rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform-with-replacement minibatch as Transition objects."""
        idx = self._sample_indices(batch_size, rng)
        return [
            Transition(
                self._states[i].copy(),
                int(self._actions[i]),
                float(self._rewards[i]),
                self._next_states[i].copy(),
                bool(self._terminals[i]),
            )
            for i in idx
        ]

    def sample_arrays(
        self, batch_size: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Same draw as sample(), but as stacked arrays for the learn step:
        (states, actions, rewards, next_states, terminals)."""
        idx = self._sample_indices(batch_size, rng)
        return (
            self._states[idx],
            self._actions[idx],
            self._rewards[idx],
            self._next_states[idx],
            self._terminals[idx],
        )

    def contents(self) -> list[Transition]:
        """Stored transitions, oldest first (test/debug helper)."""
        if self._count <= self.capacity:
            order = range(self._count)
        else:
            start = self._count % self.capacity
            order = [(start + k) % self.capacity for k in range(self.capacity)]
        return [
            Transition(
                self._states[i].copy(),
                int(self._actions[i]),
                float(self._rewards[i]),
                self._next_states[i].copy(),
                bool(self._terminals[i]),
            )
            for i in order
        ]
