"""Tests for the dense network, backprop, Adam, and checkpoints.

The forward/backward fixtures below were computed by hand on a 2-2-1 net
(one ReLU hidden layer, identity output) before the implementation existed:

    W1 = [[0.1, -0.2], [0.3, 0.4]], b1 = [0.05, -0.05]
    W2 = [[0.7, -0.6]],             b2 = [0.2]
    x  = [1, 2]
    pre-activations: z1 = (-0.25, 1.05) -> h = (0, 1.05), output = -0.43
"""

import numpy as np
import pytest

from chebdqn.checks import gradient_check
from chebdqn.errors import ConfigError, UsageError
from chebdqn.network import (
    AdamState,
    DenseLayer,
    Network,
    NetworkSpec,
    adam_step,
    clip_gradients,
    copy_weights,
    load_weights,
    parameter_count,
    save_weights,
)


def tiny_net() -> Network:
    spec = NetworkSpec(2, (2,), 1)
    layers = [
        DenseLayer(np.array([[0.1, -0.2], [0.3, 0.4]]), np.array([0.05, -0.05]), "relu"),
        DenseLayer(np.array([[0.7, -0.6]]), np.array([0.2]), "identity"),
    ]
    return Network(spec, layers)


class TestParameterCount:
    def test_sum_formula(self):
        # out*in + out summed over layers
        assert parameter_count(NetworkSpec(4, (64, 64), 2)) == 4_610
        assert parameter_count(NetworkSpec(20, (64, 64), 2)) == 5_634
        assert parameter_count(NetworkSpec(28, (64, 64), 2)) == 6_146
        assert parameter_count(NetworkSpec(36, (64, 64), 2)) == 6_658

    def test_no_hidden_layers(self):
        assert parameter_count(NetworkSpec(3, (), 2)) == 8

    def test_invalid_sizes(self):
        with pytest.raises(ConfigError):
            NetworkSpec(0, (4,), 2)
        with pytest.raises(ConfigError):
            NetworkSpec(4, (0,), 2)


class TestForward:
    def test_hand_computed_output(self):
        net = tiny_net()
        out = net.forward(np.array([1.0, 2.0]))
        assert out.shape == (1,)
        assert out[0] == pytest.approx(-0.43, abs=1e-15)

    def test_relu_clamps_negative_preactivation(self):
        # first hidden unit has z = -0.25; removing its outgoing weight
        # must not change the output
        net = tiny_net()
        reference = net.forward(np.array([1.0, 2.0]))[0]
        net.layers[1].weights[0, 0] = 123.0
        assert net.forward(np.array([1.0, 2.0]))[0] == reference

    def test_batch_matches_single(self):
        rng = np.random.default_rng(0)
        net = Network.initialize(NetworkSpec(5, (16, 8), 3), rng)
        xs = rng.normal(size=(7, 5))
        batch = net.forward(xs)
        assert batch.shape == (7, 3)
        # BLAS may take different kernels for [1,n] and [7,n] products, so
        # agreement is to rounding, not bitwise
        for row, x in zip(batch, xs):
            np.testing.assert_allclose(net.forward(x), row, rtol=1e-12, atol=1e-14)

    def test_input_shape_validation(self):
        net = tiny_net()
        with pytest.raises(ConfigError):
            net.forward(np.zeros(3))
        with pytest.raises(ConfigError):
            net.forward(np.zeros((4, 3)))


class TestInitialize:
    def test_glorot_bounds_and_zero_biases(self):
        spec = NetworkSpec(10, (20,), 4)
        net = Network.initialize(spec, np.random.default_rng(42))
        limit0 = np.sqrt(6.0 / (10 + 20))
        limit1 = np.sqrt(6.0 / (20 + 4))
        assert np.all(np.abs(net.layers[0].weights) <= limit0)
        assert np.all(np.abs(net.layers[1].weights) <= limit1)
        assert np.all(net.layers[0].biases == 0.0)
        assert np.all(net.layers[1].biases == 0.0)
        assert net.layers[0].activation == "relu"
        assert net.layers[1].activation == "identity"

    def test_deterministic_given_seed(self):
        spec = NetworkSpec(6, (8, 8), 3)
        a = Network.initialize(spec, np.random.default_rng(7))
        b = Network.initialize(spec, np.random.default_rng(7))
        for la, lb in zip(a.layers, b.layers):
            np.testing.assert_array_equal(la.weights, lb.weights)


class TestBackward:
    def test_hand_computed_gradients(self):
        # single sample, action 0, target 0: dL/dq = 2(q - y) = -0.86
        net = tiny_net()
        net.forward(np.array([1.0, 2.0]))
        grads = net.backward(0, 0.0)
        w1, b1, w2, b2 = grads
        assert b2[0] == pytest.approx(-0.86, abs=1e-15)
        np.testing.assert_allclose(w2, [[0.0, -0.903]], atol=1e-15)
        # hidden unit 0 is dead (z = -0.25), unit 1 passes -0.86 * -0.6
        np.testing.assert_allclose(b1, [0.0, 0.516], atol=1e-15)
        np.testing.assert_allclose(w1, [[0.0, 0.0], [0.516, 1.032]], atol=1e-15)

    def test_requires_cached_forward(self):
        net = tiny_net()
        with pytest.raises(UsageError):
            net.backward(0, 0.0)

    def test_batch_gradient_is_mean_of_singles(self):
        rng = np.random.default_rng(5)
        spec = NetworkSpec(4, (6,), 3)
        net = Network.initialize(spec, rng)
        xs = rng.normal(size=(8, 4))
        actions = rng.integers(0, 3, size=8)
        targets = rng.normal(size=8)
        net.forward(xs)
        batch_grads = net.backward(actions, targets)
        summed = [np.zeros_like(g) for g in batch_grads]
        for x, a, y in zip(xs, actions, targets):
            net.forward(x)
            for acc, g in zip(summed, net.backward(int(a), float(y))):
                acc += g
        for got, acc in zip(batch_grads, summed):
            np.testing.assert_allclose(got, acc / 8.0, rtol=1e-12, atol=1e-14)

    def test_batch_size_mismatch(self):
        net = tiny_net()
        net.forward(np.zeros((3, 2)))
        with pytest.raises(ConfigError):
            net.backward(np.zeros(2, dtype=int), np.zeros(2))

    def test_finite_difference_agreement(self):
        ok, worst = gradient_check(num_probes=100, step=1e-5, tolerance=1e-5)
        assert ok, f"worst relative error {worst}"

    def test_finite_difference_detects_fault(self):
        ok, _ = gradient_check(num_probes=100, perturbation=1e-3)
        assert not ok


class TestAdam:
    def test_first_step_closed_form(self):
        # from zero moments, one step moves by -lr * g / (|g| + eps)
        # independently computed: g=0.3 -> -0.00999999966666668,
        #                         g=-2.0 -> +0.009999999950000001
        params = [np.array([1.0]), np.array([-0.5])]
        grads = [np.array([0.3]), np.array([-2.0])]
        state = AdamState.for_params(params, learning_rate=0.01)
        adam_step(params, grads, state)
        assert state.step == 1
        assert params[0][0] == pytest.approx(1.0 - 0.00999999966666668, abs=1e-15)
        assert params[1][0] == pytest.approx(-0.5 + 0.009999999950000001, abs=1e-15)

    def test_zero_gradient_leaves_params_bitwise_unchanged(self):
        params = [np.array([0.123456789, -9.87]), np.array([[1.5, 2.5]])]
        before = [p.copy() for p in params]
        state = AdamState.for_params(params, learning_rate=0.1)
        adam_step(params, [np.zeros_like(p) for p in params], state)
        assert state.step == 1
        for p, b in zip(params, before):
            np.testing.assert_array_equal(p, b)

    def test_updates_in_place_on_network_views(self):
        net = Network.initialize(NetworkSpec(3, (4,), 2), np.random.default_rng(1))
        params = net.parameters()
        state = AdamState.for_params(params, learning_rate=0.05)
        w_before = net.layers[0].weights.copy()
        adam_step(params, [np.ones_like(p) for p in params], state)
        assert not np.array_equal(net.layers[0].weights, w_before)

    def test_shape_mismatch_rejected(self):
        params = [np.zeros(3)]
        state = AdamState.for_params(params, learning_rate=0.1)
        with pytest.raises(ConfigError):
            adam_step(params, [np.zeros(4)], state)


class TestClipGradients:
    def test_scales_to_max_norm(self):
        grads = [np.array([3.0]), np.array([4.0])]
        total = clip_gradients(grads, max_norm=1.0)
        assert total == pytest.approx(5.0)
        assert grads[0][0] == pytest.approx(0.6)
        assert grads[1][0] == pytest.approx(0.8)

    def test_untouched_below_max(self):
        grads = [np.array([0.3])]
        clip_gradients(grads, max_norm=10.0)
        assert grads[0][0] == 0.3


class TestCopyWeights:
    def test_hard_copy(self):
        rng = np.random.default_rng(2)
        spec = NetworkSpec(4, (5,), 2)
        src = Network.initialize(spec, rng)
        dst = Network.initialize(spec, rng)
        copy_weights(src, dst)
        x = rng.normal(size=4)
        np.testing.assert_array_equal(src.forward(x), dst.forward(x))
        # copies, not views: changing src afterwards must not leak into dst
        src.layers[0].weights += 1.0
        assert not np.array_equal(src.layers[0].weights, dst.layers[0].weights)

    def test_spec_mismatch(self):
        rng = np.random.default_rng(3)
        a = Network.initialize(NetworkSpec(4, (5,), 2), rng)
        b = Network.initialize(NetworkSpec(4, (6,), 2), rng)
        with pytest.raises(ConfigError):
            copy_weights(a, b)


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(9)
        net = Network.initialize(NetworkSpec(6, (12, 7), 3), rng)
        path = str(tmp_path / "net.txt")
        save_weights(net, path)
        loaded = load_weights(path)
        assert loaded.spec == net.spec
        for la, lb in zip(net.layers, loaded.layers):
            np.testing.assert_array_equal(la.weights, lb.weights)
            np.testing.assert_array_equal(la.biases, lb.biases)
        x = rng.normal(size=(4, 6))
        np.testing.assert_array_equal(net.forward(x), loaded.forward(x))

    def test_rejects_non_checkpoint(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("hello\nworld\n")
        with pytest.raises(ConfigError):
            load_weights(str(path))
