"""Minimal dense feed-forward network with backpropagation and Adam.

Everything is float64 numpy. The topology is fixed: ReLU hidden layers and
an identity output layer with one unit per action. Works on single input
vectors or [batch, features] arrays; training always goes through the batch
path. Gradients are exact derivatives of the mean squared error on the
selected action outputs, which keeps them checkable against central finite
differences to tight tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UsageError

RELU = "relu"
IDENTITY = "identity"


@dataclass(frozen=True)
class NetworkSpec:
    """Layer sizes of a dense net: input -> hidden... -> one output per action."""

    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int

    def __post_init__(self) -> None:
        dims = (self.input_dim, *self.hidden, self.output_dim)
        if any(d < 1 for d in dims):
            raise ConfigError(f"all layer sizes must be >= 1, got {dims}")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden, self.output_dim)


def parameter_count(spec: NetworkSpec) -> int:
    """Total trainable parameters: sum of out*in + out over all layers."""
    sizes = spec.layer_sizes
    return sum(o * i + o for i, o in zip(sizes[:-1], sizes[1:]))


@dataclass
class DenseLayer:
    weights: np.ndarray  # [out, in]
    biases: np.ndarray  # [out]
    activation: str

    def __post_init__(self) -> None:
        if self.activation not in (RELU, IDENTITY):
            raise ConfigError(f"unknown activation {self.activation!r}")


class Network:
    """Dense net over a NetworkSpec; single-writer during training."""

    def __init__(self, spec: NetworkSpec, layers: list[DenseLayer]):
        self.spec = spec
        self.layers = layers
        self._cache: list[tuple[np.ndarray, np.ndarray]] | None = None

    @classmethod
    def initialize(cls, spec: NetworkSpec, rng: np.random.Generator) -> "Network":
        """Glorot-uniform weights (limit sqrt(6/(in+out))), zero biases.

        Layers are drawn in order, so the rng consumption is reproducible.
        """
        sizes = spec.layer_sizes
        layers = []
        for idx, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            limit = math.sqrt(6.0 / (n_in + n_out))
            weights = rng.uniform(-limit, limit, size=(n_out, n_in))
            act = IDENTITY if idx == len(sizes) - 2 else RELU
            layers.append(DenseLayer(weights, np.zeros(n_out), act))
        return cls(spec, layers)

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...]; arrays are live views."""
        params: list[np.ndarray] = []
        for layer in self.layers:
            params.append(layer.weights)
            params.append(layer.biases)
        return params

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Q-values for one state vector or a [batch, input_dim] array.

        The pass is cached for a subsequent backward() call.
        """
        arr = np.asarray(x, dtype=np.float64)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.spec.input_dim:
            raise ConfigError(
                f"input has shape {np.shape(x)}, network expects "
                f"(*, {self.spec.input_dim})"
            )
        cache = []
        a = arr
        for layer in self.layers:
            z = a @ layer.weights.T + layer.biases
            cache.append((a, z))
            a = np.maximum(z, 0.0) if layer.activation == RELU else z
        self._cache = cache
        return a[0] if single else a

    def backward(
        self, action_index: int | np.ndarray, td_target: float | np.ndarray
    ) -> list[np.ndarray]:
        """Gradients of the mean squared TD error on the selected actions.

        Uses the activations cached by the last forward(). For a batch the
        loss is mean_b (y_b - Q(s_b, a_b))^2; for a single sample it is the
        plain squared error. The returned list matches parameters() order.
        """
        if self._cache is None:
            raise UsageError("backward() called without a cached forward pass")
        actions = np.atleast_1d(np.asarray(action_index, dtype=np.int64))
        targets = np.atleast_1d(np.asarray(td_target, dtype=np.float64))
        batch = self._cache[0][0].shape[0]
        if actions.shape != (batch,) or targets.shape != (batch,):
            raise ConfigError(
                f"got {actions.shape[0]} actions / {targets.shape[0]} targets "
                f"for a cached batch of {batch}"
            )
        q_out = self._cache[-1][1]  # output activation is identity
        rows = np.arange(batch)
        diff = q_out[rows, actions] - targets
        delta = np.zeros_like(q_out)
        delta[rows, actions] = 2.0 * diff / batch

        grads: list[np.ndarray] = []
        for idx in range(len(self.layers) - 1, -1, -1):
            a_in, _ = self._cache[idx]
            grads.append(delta.sum(axis=0))  # biases
            grads.append(delta.T @ a_in)  # weights
            if idx > 0:
                layer = self.layers[idx]
                _, z_prev = self._cache[idx - 1]
                delta = delta @ layer.weights
                if self.layers[idx - 1].activation == RELU:
                    delta = delta * (z_prev > 0.0)
        grads.reverse()
        return grads


@dataclass
class AdamState:
    """Adam accumulators; shapes mirror the parameter list they update."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(
        cls, params: list[np.ndarray], learning_rate: float, **kwargs
    ) -> "AdamState":
        return cls(
            learning_rate=learning_rate,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **kwargs,
        )


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> None:
    """One bias-corrected Adam update, applied to params in place."""
    if len(params) != len(state.m):
        raise ConfigError(
            f"state tracks {len(state.m)} parameter arrays, got {len(params)}"
        )
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ConfigError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)


def clip_gradients(grads: list[np.ndarray], max_norm: float) -> float:
    """Scale grads in place so their global L2 norm is at most max_norm."""
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total > max_norm and total > 0.0:
        scale = max_norm / total
        for g in grads:
            g *= scale
    return total


def copy_weights(src: Network, dst: Network) -> None:
    """Copy parameters bit-for-bit; optimizer state is untouched."""
    if src.spec != dst.spec:
        raise ConfigError(f"spec mismatch: {src.spec} vs {dst.spec}")
    for ls, ld in zip(src.layers, dst.layers):
        np.copyto(ld.weights, ls.weights)
        np.copyto(ld.biases, ls.biases)


CHECKPOINT_MAGIC = "chebdqn-net v1"


def save_weights(net: Network, path: str) -> None:
    """Write a text checkpoint: layer sizes, then per layer the row-major
    weights (one row per line) and the bias vector. repr() round-trips
    float64 exactly, so load_weights reproduces the net bit-for-bit.
    """
    lines = [CHECKPOINT_MAGIC, " ".join(str(s) for s in net.spec.layer_sizes)]
    for idx, layer in enumerate(net.layers):
        lines.append(f"layer {idx} {layer.activation}")
        for row in layer.weights:
            lines.append(" ".join(repr(float(w)) for w in row))
        lines.append("bias " + " ".join(repr(float(b)) for b in layer.biases))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_weights(path: str) -> Network:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ConfigError(f"{path} is not a {CHECKPOINT_MAGIC} checkpoint")
    sizes = tuple(int(s) for s in lines[1].split())
    spec = NetworkSpec(sizes[0], sizes[1:-1], sizes[-1])
    layers = []
    pos = 2
    for idx, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        header = lines[pos].split()
        if header[:2] != ["layer", str(idx)]:
            raise ConfigError(f"malformed checkpoint at line {pos + 1}")
        activation = header[2]
        pos += 1
        weights = np.array(
            [[float(w) for w in lines[pos + r].split()] for r in range(n_out)]
        )
        pos += n_out
        bias_parts = lines[pos].split()
        if bias_parts[0] != "bias":
            raise ConfigError(f"malformed checkpoint at line {pos + 1}")
        biases = np.array([float(b) for b in bias_parts[1:]])
        pos += 1
        if weights.shape != (n_out, n_in) or biases.shape != (n_out,):
            raise ConfigError(f"checkpoint layer {idx} has wrong shape")
        layers.append(DenseLayer(weights, biases, activation))
    return Network(spec, layers)
