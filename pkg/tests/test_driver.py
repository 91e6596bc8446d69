"""Driver tests: block execution is equivalent to per-round stepping."""

import numpy as np
import pytest

from ecsic.driver import simulate
from ecsic.env import GameConfig, ProtocolError, new_environment
from ecsic.protocol import Block


class ScriptedPlayer:
    """Plays a fixed action sequence, split into blocks of a given size."""

    def __init__(self, actions, block_size):
        self.actions = np.asarray(actions, dtype=np.int64)
        self.block_size = block_size
        self.pos = 0
        self.rewards = []
        self.events = []

    def next_block(self):
        if self.pos >= len(self.actions):
            return Block(np.zeros(1, dtype=np.int64), "idle")
        chunk = self.actions[self.pos : self.pos + self.block_size]
        self.pos += len(chunk)
        return Block(chunk, "scripted")

    def observe(self, rewards):
        self.rewards.append(rewards)


def _cfg(horizon):
    return GameConfig(
        means=np.array([0.9, 0.8, 0.1]), n_players=2, horizon=horizon,
        delta=0.5, epsilon=0.05, mu_min=0.1,
    )


def test_block_size_does_not_change_outcome():
    rng = np.random.default_rng(0)
    horizon = 500
    seqs = [rng.integers(3, size=horizon) for _ in range(2)]
    traces, rewards = [], []
    for sizes in [(1, 1), (7, 13), (500, 500), (3, 250)]:
        players = [ScriptedPlayer(s, b) for s, b in zip(seqs, sizes)]
        env = new_environment(_cfg(horizon), 99)
        traces.append(simulate(env, players).cumulative)
        rewards.append([np.concatenate(p.rewards) for p in players])
    for t in traces[1:]:
        assert np.allclose(t, traces[0], atol=1e-9)
    for r in rewards[1:]:
        assert all(np.array_equal(a, b) for a, b in zip(r, rewards[0]))


def test_matches_env_step_loop():
    horizon = 300
    rng = np.random.default_rng(1)
    seqs = [rng.integers(3, size=horizon) for _ in range(2)]
    players = [ScriptedPlayer(s, 64) for s in seqs]
    trace = simulate(new_environment(_cfg(horizon), 7), players)

    env = new_environment(_cfg(horizon), 7)
    total = 0.0
    for t in range(horizon):
        joint = [seqs[0][t], seqs[1][t]]
        res = env.step(joint)
        total += env.pseudo_regret_increment(joint)
        for j in range(2):
            got = np.concatenate(players[j].rewards)[t]
            assert got == res.rewards[j]
    assert trace.cumulative[-1] == pytest.approx(total, abs=1e-9)


def test_rounds_argument_truncates():
    players = [ScriptedPlayer(np.zeros(100), 10), ScriptedPlayer(np.ones(100), 10)]
    trace = simulate(new_environment(_cfg(100), 0), players, rounds=40)
    assert len(trace.cumulative) == 40


def test_player_count_mismatch():
    with pytest.raises(ProtocolError):
        simulate(new_environment(_cfg(10), 0), [ScriptedPlayer(np.zeros(10), 5)])


def test_empty_block_rejected():
    class Bad:
        events = []

        def next_block(self):
            return Block(np.zeros(0, dtype=np.int64), "bad")

        def observe(self, r):
            pass

    with pytest.raises(ProtocolError):
        simulate(new_environment(_cfg(10), 0), [Bad(), Bad()])


def test_span_hook_sees_every_round():
    players = [ScriptedPlayer(np.zeros(60), 7), ScriptedPlayer(np.ones(60), 11)]
    seen = []
    simulate(new_environment(_cfg(60), 0), players,
             span_hook=lambda t, s, labels, a, c: seen.append((t, s)))
    assert sum(s for _, s in seen) == 60
    assert seen[0][0] == 0 and all(
        seen[i][0] + seen[i][1] == seen[i + 1][0] for i in range(len(seen) - 1)
    )
