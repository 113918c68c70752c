"""Chebyshev polynomials of the first kind and the feature map built on them.

T_n is evaluated with the three-term recurrence
    T_0(x) = 1,  T_1(x) = x,  T_{n+1}(x) = 2x T_n(x) - T_{n-1}(x),
which is the production path everywhere in the package; the trigonometric
identity T_n(x) = cos(n arccos x) is reserved for tests.

A state vector s in [-1, 1]^D is expanded dimension by dimension into
    [T_0(s_1) .. T_N(s_1), T_0(s_2) .. T_N(s_2), ..., T_0(s_D) .. T_N(s_D)]
giving D * (N + 1) features. The per-dimension T_0 entries are redundant
constants but are kept so feature width matches the published layer sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Inputs within this distance outside [-1, 1] are treated as normalization
# round-off and clamped; anything farther out is a real bug upstream.
DOMAIN_TOL = 1e-9


def _check_domain(x: np.ndarray | float, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    # The inverted comparison also rejects NaN/inf, which would sail through
    # a plain `> 1 + tol` test.
    if not np.all(np.abs(arr) <= 1.0 + DOMAIN_TOL):
        worst = float(np.max(np.abs(arr)))
        raise ValueError(
            f"{what} outside [-1, 1] by more than {DOMAIN_TOL:g} "
            f"(max |x| = {worst!r}); check the normalization bounds"
        )
    return np.clip(arr, -1.0, 1.0)


def eval_polynomial(n: int, x: float) -> float:
    """Evaluate T_n(x) by the three-term recurrence.

    Args:
        n: polynomial order, n >= 0.
        x: evaluation point in [-1, 1] (up to DOMAIN_TOL of round-off).

    Raises:
        ValueError: if n < 0 or x lies farther than DOMAIN_TOL outside [-1, 1].
    """
    if n < 0:
        raise ValueError(f"polynomial order must be >= 0, got {n}")
    xc = float(_check_domain(x, "evaluation point"))
    if n == 0:
        return 1.0
    t_prev, t_cur = 1.0, xc
    for _ in range(n - 1):
        t_prev, t_cur = t_cur, 2.0 * xc * t_cur - t_prev
    return t_cur


@dataclass(frozen=True)
class ChebyshevBasis:
    """Feature basis of maximum order `degree` over a `state_dim`-dimensional state."""

    degree: int
    state_dim: int

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ConfigError(f"degree must be >= 0, got {self.degree}")
        if self.state_dim < 1:
            raise ConfigError(f"state_dim must be >= 1, got {self.state_dim}")

    @property
    def feature_dim(self) -> int:
        return self.state_dim * (self.degree + 1)

    def featurize(self, state: np.ndarray) -> np.ndarray:
        """Expand one normalized state into its feature vector.

        Args:
            state: vector of length state_dim with every entry in [-1, 1].

        Returns:
            Feature vector of length state_dim * (degree + 1), ordered
            dimension-major: all orders of s_1 first, then s_2, and so on.
        """
        state = np.asarray(state, dtype=np.float64)
        if state.shape != (self.state_dim,):
            raise ConfigError(
                f"state has shape {state.shape}, basis expects ({self.state_dim},)"
            )
        return self.featurize_batch(state[None, :])[0]

    def featurize_batch(self, states: np.ndarray) -> np.ndarray:
        """Vectorized featurize over a [batch, state_dim] array."""
        states = np.asarray(states, dtype=np.float64)
        if states.ndim != 2 or states.shape[1] != self.state_dim:
            raise ConfigError(
                f"states have shape {states.shape}, basis expects (*, {self.state_dim})"
            )
        x = _check_domain(states, "normalized state")
        batch = x.shape[0]
        t = np.empty((batch, self.state_dim, self.degree + 1), dtype=np.float64)
        t[:, :, 0] = 1.0
        if self.degree >= 1:
            t[:, :, 1] = x
        for n in range(2, self.degree + 1):
            t[:, :, n] = 2.0 * x * t[:, :, n - 1] - t[:, :, n - 2]
        return t.reshape(batch, self.feature_dim)


def orthogonality_check(n: int, m: int, nodes: int) -> float:
    """Gauss-Chebyshev quadrature of the weighted product T_n T_m.

    Computes (pi / K) * sum_k T_n(x_k) T_m(x_k) over the Chebyshev nodes
    x_k = cos((2k - 1) pi / (2K)), k = 1..K. The quadrature is exact for
    polynomials of degree < 2K, so with K >= n + m + 1 the result is the
    inner product: 0 for n != m, pi for n = m = 0, pi/2 for n = m != 0.
    """
    k = np.arange(1, nodes + 1, dtype=np.float64)
    x = np.cos((2.0 * k - 1.0) * np.pi / (2.0 * nodes))
    order = max(n, m)
    t = np.empty((order + 1, nodes), dtype=np.float64)
    t[0] = 1.0
    if order >= 1:
        t[1] = x
    for i in range(2, order + 1):
        t[i] = 2.0 * x * t[i - 1] - t[i - 2]
    return float(np.pi / nodes * np.sum(t[n] * t[m]))
