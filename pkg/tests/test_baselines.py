"""Baseline policy tests: oracle, round-robin, uniform random."""

import numpy as np
import pytest

from ecsic.baselines import (
    OraclePlayer,
    RoundRobinPlayer,
    UniformRandomPlayer,
    round_robin_regret_rate,
)
from ecsic.driver import simulate
from ecsic.env import GameConfig, new_environment


def _cfg(horizon=1000):
    return GameConfig(
        means=np.array([0.9, 0.8, 0.1]), n_players=2, horizon=horizon,
        delta=0.5, epsilon=0.05, mu_min=0.1,
    )


class TestOracle:
    def test_zero_regret(self):
        cfg = _cfg()
        players = [OraclePlayer(cfg.means, j + 1) for j in range(2)]
        trace = simulate(new_environment(cfg, 0), players)
        assert trace.cumulative[-1] == pytest.approx(0.0, abs=1e-9)

    def test_tie_break_lower_index(self):
        assert OraclePlayer(np.array([0.5, 0.5]), 1).arm == 0
        assert OraclePlayer(np.array([0.5, 0.5]), 2).arm == 1


class TestRoundRobin:
    def test_schedule(self):
        p = RoundRobinPlayer(3, rank=2)
        block = p.next_block()
        assert block.actions[:4].tolist() == [1, 2, 0, 1]

    def test_no_collisions(self):
        cfg = _cfg()
        players = [RoundRobinPlayer(3, j + 1) for j in range(2)]
        seen = []
        simulate(new_environment(cfg, 0), players,
                 span_hook=lambda t, s, l, a, c: seen.append(c.any()))
        assert not any(seen)

    def test_closed_form_regret(self):
        cfg = _cfg(999)  # whole K-cycles: the closed form is exact
        players = [RoundRobinPlayer(3, j + 1) for j in range(2)]
        trace = simulate(new_environment(cfg, 0), players)
        rate = round_robin_regret_rate(cfg.means, 2)
        assert rate == pytest.approx(1.7 - 1.8 * 2 / 3)
        assert trace.cumulative[-1] == pytest.approx(999 * rate, rel=1e-9)

    def test_single_player_example(self):
        cfg = GameConfig(np.array([0.9, 0.5]), 1, 1000, 0.3, 0.05, 0.5)
        trace = simulate(new_environment(cfg, 0), [RoundRobinPlayer(2, 1)])
        assert trace.cumulative[-1] == pytest.approx(200.0, rel=1e-9)


class TestUniformRandom:
    def test_collision_frequency(self):
        cfg = GameConfig(np.array([0.9, 0.8]), 2, 100_000, 0.05, 0.01, 0.5)
        players = [
            UniformRandomPlayer(2, np.random.default_rng(j)) for j in range(2)
        ]
        colls = []
        simulate(new_environment(cfg, 0), players,
                 span_hook=lambda t, s, l, a, c: colls.append(c[0]))
        freq = np.concatenate(colls).mean()
        assert abs(freq - 0.5) < 0.02

    def test_actions_in_range(self):
        p = UniformRandomPlayer(5, np.random.default_rng(0))
        block = p.next_block()
        assert block.actions.min() >= 0 and block.actions.max() < 5
