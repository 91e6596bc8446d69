"""Lock-step simulation driver.

Players commit blocks of actions; the driver repeatedly advances by the
shortest outstanding block (the *span*), resolves collisions and rewards for
the whole span in one vectorized call, and delivers realized rewards to each
player when its block completes. Per-round semantics are identical to calling
``Environment.step`` round by round, but spans keep the Python-level loop
count proportional to the number of blocks, not the horizon.
"""

from __future__ import annotations

import numpy as np

from ecsic import kernels
from ecsic.env import Environment, ProtocolError, RegretTrace


class _Pending:
    __slots__ = ("actions", "label", "filled", "rewards")

    def __init__(self, block):
        self.actions = np.asarray(block.actions, dtype=np.int64)
        if self.actions.ndim != 1 or len(self.actions) == 0:
            raise ProtocolError("player committed an empty or non-1D block")
        self.label = block.label
        self.filled = 0
        self.rewards = np.empty(len(self.actions))


def simulate(env: Environment, players, rounds=None, span_hook=None) -> RegretTrace:
    """Run all players against `env` for `rounds` rounds (default: horizon).

    span_hook, if given, is called as span_hook(t0, span, labels, actions,
    collisions) for every resolved span; `actions` and `collisions` are
    (M, span) arrays. Returns the cumulative pseudo-regret trace with each
    player's phase-transition events as markers.
    """
    config = env.config
    if len(players) != config.n_players:
        raise ProtocolError(
            f"expected {config.n_players} players, got {len(players)}"
        )
    total = config.horizon if rounds is None else min(rounds, config.horizon)
    cumulative = np.empty(total)
    pending = [_Pending(p.next_block()) for p in players]

    t = 0
    running = 0.0
    while t < total:
        span = min(total - t, *(len(q.actions) - q.filled for q in pending))
        actions = np.empty((len(players), span), dtype=np.int64)
        for j, q in enumerate(pending):
            actions[j] = q.actions[q.filled : q.filled + span]
        draws = env.reward_block(t, t + span)
        rewards, coll, inc = kernels.resolve_span(
            actions, draws, config.means, env.top_m_sum
        )
        if span_hook is not None:
            span_hook(t, span, [q.label for q in pending], actions, coll)
        cumulative[t : t + span] = running + np.cumsum(inc)
        running = cumulative[t + span - 1]
        for j, q in enumerate(pending):
            q.rewards[q.filled : q.filled + span] = rewards[j]
            q.filled += span
            if q.filled == len(q.actions):
                players[j].observe(q.rewards)
                pending[j] = _Pending(players[j].next_block())
        t += span

    markers = [
        (when, j + 1, label)
        for j, p in enumerate(players)
        for when, label in getattr(p, "events", [])
    ]
    markers.sort()
    return RegretTrace(cumulative=cumulative, markers=markers)
