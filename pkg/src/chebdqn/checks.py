"""Fast self-verification suite behind the `check` CLI subcommand.

Each check is named, independent, and takes well under a couple of seconds:
closed-form polynomial agreement, quadrature orthogonality, finite-difference
gradient validation, frozen environment step fixtures, replay buffer FIFO +
uniformity, and a short two-run determinism probe. The gradient check takes
a perturbation knob so a deliberately corrupted gradient provably fails.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .chebyshev import ChebyshevBasis, eval_polynomial, orthogonality_check
from .envs import Acrobot, CartPole, MountainCar
from .harness import ExperimentConfig, default_agent_config, run_experiment
from .network import Network, NetworkSpec
from .replay import ReplayBuffer, Transition

# 99% chi-square critical value for 3 degrees of freedom (frozen constant so
# the check needs no stats dependency at runtime).
CHI2_99_DF3 = 11.344866730144373


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_polynomial_recurrence() -> CheckResult:
    """Recurrence vs the cos(n*arccos x) closed form on a dense grid."""
    grid = np.linspace(-1.0, 1.0, 1001)
    worst = 0.0
    for n in range(13):
        closed = np.cos(n * np.arccos(grid))
        ours = np.array([eval_polynomial(n, x) for x in grid])
        worst = max(worst, float(np.max(np.abs(ours - closed))))
    return CheckResult(
        "polynomial-recurrence", worst < 1e-12, f"max |recurrence - closed form| = {worst:.3e}"
    )


def check_orthogonality() -> CheckResult:
    """Gauss-Chebyshev quadrature of T_n*T_m reproduces 0 / pi / pi/2."""
    worst = 0.0
    for n in range(9):
        for m in range(9):
            value = orthogonality_check(n, m, nodes=64)
            if n != m:
                expected = 0.0
            elif n == 0:
                expected = math.pi
            else:
                expected = math.pi / 2.0
            worst = max(worst, abs(value - expected))
    return CheckResult(
        "orthogonality-quadrature", worst < 1e-10, f"max deviation = {worst:.3e}"
    )


def gradient_check(
    num_probes: int = 100,
    step: float = 1e-5,
    tolerance: float = 1e-5,
    perturbation: float = 0.0,
    seed: int = 1234,
) -> tuple[bool, float]:
    """Compare backprop gradients against central finite differences.

    Probes random parameter entries of a small net on a random batch and
    returns (ok, worst relative error). `perturbation` is a testing hook:
    it is added to every analytic gradient, so any nonzero value must make
    the check fail.
    """
    rng = np.random.default_rng(seed)
    spec = NetworkSpec(6, (8, 7), 3)
    net = Network.initialize(spec, rng)
    # Keep all pre-activations clear of the ReLU kink so the finite
    # difference is taken on a locally smooth function.
    while True:
        x = rng.normal(size=(4, 6))
        net.forward(x)
        if all(np.min(np.abs(z)) > 1e-3 for _, z in net._cache):
            break
    actions = rng.integers(0, 3, size=4)
    targets = rng.normal(size=4)

    def loss() -> float:
        q = net.forward(x)
        selected = q[np.arange(4), actions]
        return float(np.mean((selected - targets) ** 2))

    loss()  # populate the cache for backward
    grads = net.backward(actions, targets)
    params = net.parameters()
    worst = 0.0
    for _ in range(num_probes):
        p_idx = int(rng.integers(len(params)))
        flat = params[p_idx].reshape(-1)
        e_idx = int(rng.integers(flat.size))
        original = flat[e_idx]
        flat[e_idx] = original + step
        up = loss()
        flat[e_idx] = original - step
        down = loss()
        flat[e_idx] = original
        fd = (up - down) / (2.0 * step)
        analytic = grads[p_idx].reshape(-1)[e_idx] + perturbation
        rel = abs(fd - analytic) / max(abs(fd), abs(analytic), 1e-8)
        worst = max(worst, rel)
    net.forward(x)  # leave the cache consistent with current weights
    return worst < tolerance, worst


def check_gradients(perturbation: float = 0.0) -> CheckResult:
    ok, worst = gradient_check(perturbation=perturbation)
    return CheckResult(
        "gradient-finite-difference", ok, f"worst relative error = {worst:.3e}"
    )


# Frozen single-step fixtures, hand-evaluated from the update equations
# before the environments were implemented.
CARTPOLE_FIXTURE = (
    (0.0, 0.0, 0.0, 0.0),
    1,
    (0.0, 0.1951219512195122, 0.0, -0.2926829268292683),
)
MOUNTAINCAR_FIXTURES = (
    ((-0.5, 0.0), 1, (-0.5001768430041692, -0.00017684300416925727)),
    ((0.4, 0.05), 2, (0.45009410561380836, 0.050094105613808323)),
)
ACROBOT_FIXTURES = (
    # (internal state, action, expected internal state after one step)
    (
        (0.0, 0.0, 0.0, 0.0),
        2,
        (
            -0.013262967177227747,
            0.034287229347385484,
            -0.12866185280996106,
            0.33450108998660194,
        ),
    ),
    (
        (0.3, -0.2, 0.5, -0.4),
        0,
        (
            0.36927794851451434,
            -0.26119734067803346,
            0.1782439054420113,
            -0.19372506273449022,
        ),
    ),
)


def check_env_fixtures() -> CheckResult:
    """Single-step dynamics match the frozen hand-computed vectors."""
    worst = 0.0

    cart = CartPole()
    cart.set_state(*CARTPOLE_FIXTURE[0])
    state, _ = cart.step(CARTPOLE_FIXTURE[1])
    worst = max(worst, float(np.max(np.abs(state.observation - CARTPOLE_FIXTURE[2]))))

    car = MountainCar()
    for start, action, expected in MOUNTAINCAR_FIXTURES:
        car.set_state(*start)
        state, _ = car.step(action)
        worst = max(worst, float(np.max(np.abs(state.observation - expected))))

    bot = Acrobot()
    for start, action, expected in ACROBOT_FIXTURES:
        bot.set_state(*start)
        bot.step(action)
        worst = max(worst, float(np.max(np.abs(bot.internal_state - expected))))

    return CheckResult(
        "environment-fixtures", worst < 1e-9, f"max fixture deviation = {worst:.3e}"
    )


def check_replay_buffer() -> CheckResult:
    """FIFO eviction plus chi-square uniformity of 10,000 draws from 4 items."""
    buf = ReplayBuffer(2)
    for k in range(3):
        buf.push(Transition(np.array([float(k)]), 0, 0.0, np.array([0.0]), False))
    kept = [t.state[0] for t in buf.contents()]
    if buf.size != 2 or kept != [1.0, 2.0]:
        return CheckResult(
            "replay-buffer", False, f"FIFO eviction broken: size {buf.size}, kept {kept}"
        )

    buf4 = ReplayBuffer(8)
    for k in range(4):
        buf4.push(Transition(np.array([float(k)]), k, 0.0, np.array([0.0]), False))
    rng = np.random.default_rng(2024)
    counts = np.zeros(4)
    for _ in range(10_000):
        counts[buf4.sample(1, rng)[0].action] += 1
    expected = 10_000 / 4.0
    stat = float(np.sum((counts - expected) ** 2 / expected))
    return CheckResult(
        "replay-buffer",
        stat < CHI2_99_DF3,
        f"uniformity chi-square = {stat:.3f} (99% bound {CHI2_99_DF3:.3f})",
    )


def check_feature_map() -> CheckResult:
    """Feature vector matches closed-form polynomial values, in order."""
    basis = ChebyshevBasis(degree=4, state_dim=2)
    state = np.array([0.5, -0.25])
    features = basis.featurize(state)
    expected = np.array(
        [math.cos(n * math.acos(x)) for x in state for n in range(5)]
    )
    worst = float(np.max(np.abs(features - expected)))
    in_range = bool(np.all(np.abs(features) <= 1.0 + 1e-12))
    return CheckResult(
        "feature-map",
        worst < 1e-12 and in_range,
        f"max deviation = {worst:.3e}, all |values| <= 1: {in_range}",
    )


def check_short_run_determinism() -> CheckResult:
    """Two identical three-episode runs produce byte-identical CSVs."""
    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        for rep in range(2):
            out = os.path.join(tmp, f"rep{rep}")
            config = ExperimentConfig(
                env_id="cartpole-v1",
                agent=default_agent_config("cartpole-v1", "cheb", 4),
                seeds=(0,),
                episodes=3,
                window=2,
                threshold=195.0,
                out_dir=out,
            )
            result = run_experiment(config)[0]
            with open(result.csv_path, "rb") as fh:
                outputs.append(fh.read())
    same = outputs[0] == outputs[1]
    return CheckResult(
        "short-run-determinism",
        same,
        "identical CSV bytes" if same else "CSV bytes differ between reruns",
    )


def run_checks(gradient_perturbation: float = 0.0) -> list[CheckResult]:
    return [
        check_polynomial_recurrence(),
        check_orthogonality(),
        check_gradients(perturbation=gradient_perturbation),
        check_env_fixtures(),
        check_replay_buffer(),
        check_feature_map(),
        check_short_run_determinism(),
    ]
