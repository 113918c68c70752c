"""Replay buffer tests: FIFO eviction, uniform sampling, array views."""

import numpy as np
import pytest

from chebdqn.errors import ConfigError, UsageError
from chebdqn.replay import ReplayBuffer, Transition

# 99th-percentile chi-square critical value, 3 degrees of freedom
CHI2_99_DF3 = 11.344866730144373


def _transition(tag: float) -> Transition:
    return Transition(
        state=np.array([tag, 0.0]),
        action=int(tag) % 3,
        reward=-1.0,
        next_state=np.array([tag + 1.0, 0.0]),
        terminal=False,
    )


class TestPushAndEvict:
    def test_fifo_eviction(self):
        buf = ReplayBuffer(capacity=2)
        for tag in (0.0, 1.0, 2.0):
            buf.push(_transition(tag))
        kept = [t.state[0] for t in buf.contents()]
        assert kept == [1.0, 2.0]

    def test_len_saturates_at_capacity(self):
        buf = ReplayBuffer(capacity=5)
        for tag in range(12):
            buf.push(_transition(float(tag)))
            assert len(buf) == min(tag + 1, 5)

    def test_wraparound_is_oldest_first(self):
        buf = ReplayBuffer(capacity=4)
        for tag in range(7):
            buf.push(_transition(float(tag)))
        assert [t.state[0] for t in buf.contents()] == [3.0, 4.0, 5.0, 6.0]

    def test_large_volume(self):
        buf = ReplayBuffer(capacity=50_000)
        for tag in range(60_000):
            buf.push(_transition(float(tag)))
        assert len(buf) == 50_000
        contents = buf.contents()
        assert contents[0].state[0] == 10_000.0
        assert contents[-1].state[0] == 59_999.0

    def test_shape_mismatch_rejected(self):
        buf = ReplayBuffer(capacity=4)
        buf.push(_transition(0.0))
        with pytest.raises(ConfigError):
            buf.push(
                Transition(
                    state=np.zeros(3),
                    action=0,
                    reward=0.0,
                    next_state=np.zeros(3),
                    terminal=False,
                )
            )

    def test_invalid_capacity(self):
        with pytest.raises(ConfigError):
            ReplayBuffer(capacity=0)


class TestSample:
    def test_insufficient_data_signalled(self):
        buf = ReplayBuffer(capacity=10)
        rng = np.random.default_rng(0)
        with pytest.raises(UsageError):
            buf.sample(1, rng)
        buf.push(_transition(0.0))
        with pytest.raises(UsageError):
            buf.sample(2, rng)
        # exactly batch_size transitions is enough
        buf.push(_transition(1.0))
        assert len(buf.sample(2, rng)) == 2

    def test_samples_are_members(self):
        buf = ReplayBuffer(capacity=8)
        for tag in range(8):
            buf.push(_transition(float(tag)))
        rng = np.random.default_rng(3)
        for t in buf.sample(8, rng):
            assert t.state[0] in set(range(8))

    def test_sampling_is_with_replacement(self):
        # two items, batch of two, many trials: a duplicate pair must occur
        buf = ReplayBuffer(capacity=2)
        buf.push(_transition(0.0))
        buf.push(_transition(1.0))
        rng = np.random.default_rng(7)
        saw_duplicate = False
        for _ in range(64):
            batch = buf.sample(2, rng)
            if batch[0].state[0] == batch[1].state[0]:
                saw_duplicate = True
                break
        assert saw_duplicate

    def test_uniformity_chi_square(self):
        # 10,000 single draws from a 4-item buffer; each cell expects 2,500
        buf = ReplayBuffer(capacity=4)
        for tag in range(4):
            buf.push(_transition(float(tag)))
        rng = np.random.default_rng(2024)
        counts = np.zeros(4)
        for _ in range(10_000):
            counts[int(buf.sample(1, rng)[0].state[0])] += 1
        chi2 = float(np.sum((counts - 2500.0) ** 2 / 2500.0))
        assert chi2 < CHI2_99_DF3

    def test_determinism(self):
        def draw(seed):
            buf = ReplayBuffer(capacity=16)
            for tag in range(16):
                buf.push(_transition(float(tag)))
            rng = np.random.default_rng(seed)
            return [t.state[0] for t in buf.sample(8, rng)]

        assert draw(99) == draw(99)

    def test_sample_arrays_consistent_with_sample(self):
        buf = ReplayBuffer(capacity=6)
        for tag in range(6):
            buf.push(
                Transition(
                    state=np.array([float(tag), 0.5]),
                    action=tag % 2,
                    reward=float(-tag),
                    next_state=np.array([float(tag) + 1.0, 0.5]),
                    terminal=(tag == 5),
                )
            )
        states, actions, rewards, next_states, terminals = buf.sample_arrays(
            4, np.random.default_rng(11)
        )
        assert states.shape == (4, 2)
        assert next_states.shape == (4, 2)
        assert actions.shape == rewards.shape == terminals.shape == (4,)
        # each row is an intact transition: fields line up by the tag
        for i in range(4):
            tag = int(states[i, 0])
            assert actions[i] == tag % 2
            assert rewards[i] == float(-tag)
            assert next_states[i, 0] == float(tag) + 1.0
            assert terminals[i] == (tag == 5)

    def test_sampled_state_mutations_do_not_corrupt_storage(self):
        buf = ReplayBuffer(capacity=2)
        buf.push(_transition(0.0))
        buf.push(_transition(1.0))
        batch = buf.sample(2, np.random.default_rng(1))
        batch[0].state[0] = 777.0
        values = sorted(t.state[0] for t in buf.contents())
        assert values == [0.0, 1.0]
