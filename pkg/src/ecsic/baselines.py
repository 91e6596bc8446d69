"""Baseline policies bracketing the main protocol from below and above.

All baselines speak the same block contract as the protocol players, so the
driver and harness treat them interchangeably.
"""

from __future__ import annotations

import numpy as np

from ecsic.protocol import EXPLOIT_CHUNK, Block


class _ChunkedPlayer:
    """Shared scaffolding: emit fixed-size blocks, ignore observations."""

    events: list = []

    def observe(self, rewards):
        pass

    def next_block(self) -> Block:
        raise NotImplementedError


class OraclePlayer(_ChunkedPlayer):
    """Genie: rank j sits on the j-th best arm forever (zero regret)."""

    def __init__(self, means, rank: int):
        means = np.asarray(means, dtype=np.float64)
        order = np.lexsort((np.arange(len(means)), -means))
        self.arm = int(order[rank - 1])

    def next_block(self):
        return Block(np.full(EXPLOIT_CHUNK, self.arm, dtype=np.int64), "oracle")


class RoundRobinPlayer(_ChunkedPlayer):
    """Collision-free rotation over all K arms; linear regret upper bracket."""

    def __init__(self, n_arms: int, rank: int):
        self.n_arms = n_arms
        self.rank = rank
        self.t = 0

    def next_block(self):
        arms = (self.rank - 1 + self.t + np.arange(EXPLOIT_CHUNK)) % self.n_arms
        self.t += EXPLOIT_CHUNK
        return Block(arms.astype(np.int64), "round_robin")


class UniformRandomPlayer(_ChunkedPlayer):
    """Independent uniform arm choice each round."""

    def __init__(self, n_arms: int, rng: np.random.Generator):
        self.n_arms = n_arms
        self.rng = rng

    def next_block(self):
        arms = self.rng.integers(self.n_arms, size=EXPLOIT_CHUNK)
        return Block(arms.astype(np.int64), "uniform")


def round_robin_regret_rate(means, n_players: int) -> float:
    """Exact per-round pseudo-regret of the round-robin baseline.

    With M distinct residues the rotation is collision-free and visits every
    arm with frequency M/K, so the rate is constant.
    """
    means = np.asarray(means, dtype=np.float64)
    top = np.sort(means)[::-1][:n_players].sum()
    return float(top - means.sum() * n_players / len(means))
