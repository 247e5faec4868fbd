import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphmixup.rl import (MINUS, PLUS, QTable, ScaleAgent, check_termination, q_update,
                           reward, run_convergence_harness, select_action)


@pytest.mark.parametrize("now, prev, r", [(0.62, 0.60, 1), (0.60, 0.60, 0), (0.55, 0.60, -1)])
def test_reward(now, prev, r):
    assert reward(now, prev) == r


class TestSelectAction:
    def test_greedy(self, rng):
        q = QTable(epsilon=0.0, values={(0, PLUS): 1.0, (0, MINUS): 0.0})
        assert all(select_action(q, 0, rng) == PLUS for _ in range(50))

    def test_greedy_minus(self, rng):
        q = QTable(epsilon=0.0, values={(0, PLUS): -1.0})
        assert select_action(q, 0, rng) == MINUS

    def test_tie_goes_plus(self, rng):
        assert select_action(QTable(epsilon=0.0), 3, rng) == PLUS

    def test_uniform_when_exploring(self, rng):
        q = QTable(epsilon=1.0, values={(0, PLUS): 5.0})
        n = 10_000
        plus = sum(select_action(q, 0, rng) == PLUS for _ in range(n))
        assert abs(plus - n / 2) <= 3 * np.sqrt(n * 0.25)


class TestQUpdate:
    def test_bellman_substitution(self):
        q = QTable(gamma=1.0, values={(1, PLUS): 2.0, (1, MINUS): -4.0})
        q_update(q, 0, PLUS, 1, 1)
        assert q.get(0, PLUS) == 3.0

    def test_myopic(self):
        q = QTable(gamma=0.0, values={(1, PLUS): 7.0})
        q_update(q, 0, MINUS, 0, 1)
        assert q.get(0, MINUS) == 0.0

    def test_partial_step(self):
        q = QTable(gamma=1.0, values={(0, PLUS): 1.0})
        q_update(q, 0, PLUS, 1, 5, lr=0.5)
        assert q.get(0, PLUS) == 1.0

    def test_two_state_chain_matches_value_iteration(self):
        # + moves to state 1 and pays 1, - moves to state 0 and pays 0
        step = {PLUS: (1, 1.0), MINUS: (0, 0.0)}
        gamma = 0.9
        V = np.zeros(2)
        for _ in range(500):
            V = np.array([max(r + gamma * V[s2] for s2, r in step.values()) for _ in range(2)])
        oracle = {(s, a): step[a][1] + gamma * V[step[a][0]] for s in (0, 1) for a in step}
        q = QTable(gamma=gamma)
        n = 0
        while n < 50:
            for s in (0, 1):
                for a in (PLUS, MINUS):
                    q_update(q, s, a, step[a][1], step[a][0])
                    n += 1
        assert q.greedy(0) == PLUS and q.greedy(1) == PLUS
        assert max(oracle, key=oracle.get)[1] == PLUS


class TestTermination:
    def test_constant(self):
        assert check_termination([0.3] * 21, 0.05)

    def test_alternating(self):
        assert not check_termination([0.25, 0.35] * 10 + [0.25], 0.05)

    def test_range_equal_to_step(self):
        assert check_termination([0.3] * 18 + [0.35] * 3, 0.05)

    def test_short_history(self):
        assert not check_termination([0.3] * 20, 0.05)


class TestAgent:
    def test_warmup_keeps_initial_scales(self):
        agent = ScaleAgent({1: 0.5, 2: 0.8}, warmup=50)
        for e in range(50):
            assert agent.rl_step(0.1 * (e % 3), e) == {1: 0.5, 2: 0.8}

    def test_three_plus_moves(self):
        agent = ScaleAgent({1: 0.5}, epsilon=0.0, warmup=0)
        for e in range(3):
            agent.step()
        assert agent.scales()[1] == pytest.approx(0.65)

    def test_frozen_after_termination(self):
        agent = ScaleAgent({1: 0.5}, warmup=0, seed=3)
        agent.terminated = True
        s = agent.scales()
        for e in range(10):
            assert agent.rl_step(np.random.rand(), e) == s

    @given(st.floats(0.0, 1.0), st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_grid_and_nonnegative(self, init, seed):
        agent = ScaleAgent({0: init, 1: init + 0.2}, warmup=0, seed=seed)
        r = np.random.default_rng(seed)
        for e in range(200):
            scales = agent.rl_step(float(r.random()), e)
            assert min(scales.values()) >= 0
            assert agent.kappa / agent.delta_kappa == pytest.approx(
                round(agent.kappa / agent.delta_kappa), abs=1e-9)
            if agent.terminated:
                frozen = dict(scales)
                assert agent.rl_step(0.5, e + 1) == frozen
                break


@pytest.mark.parametrize("seed", range(10))
def test_convergence_harness(seed):
    steps, kappa, done, _ = run_convergence_harness(target=0.3, seed=seed)
    assert done and steps <= 500
    assert abs(kappa - 0.3) <= 0.05 + 1e-12
