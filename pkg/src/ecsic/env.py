"""Multi-player bandit environment: reward draws, collision semantics,
no-sensing observation views, and pseudo-regret accounting.

Arms are 0-indexed throughout the library.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ecsic import kernels


class ConfigError(ValueError):
    """A game or experiment configuration violates an invariant."""


class ProtocolError(RuntimeError):
    """An action stream violates the environment contract."""


class HorizonExhausted(ProtocolError):
    """step() called after the horizon was consumed."""


@dataclass
class GameConfig:
    """Arms, players, horizon and the protocol constants of one game."""

    means: np.ndarray
    n_players: int
    horizon: int
    delta: float
    epsilon: float
    mu_min: float
    sensing: str = "no-sensing"

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        if self.means.ndim != 1 or len(self.means) < 1:
            raise ConfigError("means: must be a non-empty vector")
        if ((self.means < 0) | (self.means > 1)).any():
            raise ConfigError("means: every mean must lie in [0, 1]")
        if not 0 < self.mu_min <= 1:
            raise ConfigError(f"mu_min: must be in (0, 1], got {self.mu_min}")
        if (self.means < self.mu_min - 1e-12).any():
            raise ConfigError("means: every mean must be >= mu_min")
        if not 1 <= self.n_players <= len(self.means):
            raise ConfigError(
                f"n_players: must satisfy 1 <= M <= K, got M={self.n_players}, K={len(self.means)}"
            )
        if self.horizon < 1:
            raise ConfigError(f"horizon: must be positive, got {self.horizon}")
        if self.delta <= 0:
            raise ConfigError(f"delta: must be positive, got {self.delta}")
        order = np.sort(self.means)[::-1]
        if self.n_players < len(self.means):
            gap = order[self.n_players - 1] - order[self.n_players]
            if gap + 1e-12 < self.delta:
                raise ConfigError(
                    f"delta: order-statistic gap {gap:.6g} smaller than delta={self.delta}"
                )
        if not 0 < self.epsilon < self.delta / 4:
            raise ConfigError(
                f"epsilon: must be in (0, delta/4)=(0, {self.delta / 4:.6g}), got {self.epsilon}"
            )
        if self.sensing not in ("no-sensing", "collision-sensing"):
            raise ConfigError(f"sensing: unknown mode {self.sensing!r}")

    @property
    def n_arms(self) -> int:
        return len(self.means)

    def top_arms(self) -> np.ndarray:
        """The M optimal arms, ties broken by lower index."""
        order = np.lexsort((np.arange(self.n_arms), -self.means))
        return order[: self.n_players]


@dataclass
class RoundResult:
    """Referee view of one joint round; players only ever see `rewards`."""

    actions: np.ndarray
    rewards: np.ndarray
    collisions: np.ndarray
    t: int

    def observation(self) -> np.ndarray:
        """The no-sensing view: per-player rewards only."""
        return self.rewards.copy()


@dataclass
class RegretTrace:
    """Cumulative pseudo-regret with phase-transition markers."""

    cumulative: np.ndarray
    markers: list = field(default_factory=list)


class Environment:
    """Global referee for one replication.

    Reward draws are counter-based (Philox): arm k's draw at round t depends
    only on (seed, t, k), never on which arms players visit.
    """

    def __init__(self, config: GameConfig, seed: int | None = None, trace: np.ndarray | None = None):
        self.config = config
        self._trace = None
        if trace is not None:
            trace = np.asarray(trace, dtype=np.uint8)
            if trace.shape != (config.horizon, config.n_arms):
                raise ConfigError(
                    f"trace: shape {trace.shape} does not match (T, K)="
                    f"({config.horizon}, {config.n_arms})"
                )
            self._trace = trace
        elif seed is None:
            raise ConfigError("seed: required for a Bernoulli environment")
        self._seed = seed
        self.means = config.means
        self.top_m_sum = float(np.sort(self.means)[::-1][: config.n_players].sum())
        self.t = 0

    def reward_block(self, t0: int, t1: int) -> np.ndarray:
        """Realized 0/1 rewards for rounds [t0, t1), shape (t1-t0, K)."""
        if self._trace is not None:
            return self._trace[t0:t1]
        k = self.config.n_arms
        offset = t0 * k
        bitgen = np.random.Philox(key=self._seed)
        bitgen.advance(offset // 4)  # Philox counter advances 4 doubles per unit
        rng = np.random.Generator(bitgen)
        rem = offset % 4
        u = rng.random(rem + (t1 - t0) * k)[rem:]
        return (u.reshape(t1 - t0, k) < self.means).astype(np.uint8)

    def step(self, actions) -> RoundResult:
        """Resolve one joint round for all M players."""
        actions = np.asarray(actions, dtype=np.int64)
        if actions.shape != (self.config.n_players,):
            raise ProtocolError(f"expected {self.config.n_players} actions, got {actions.shape}")
        if (actions < 0).any() or (actions >= self.config.n_arms).any():
            raise ProtocolError("action out of range [0, K)")
        if self.t >= self.config.horizon:
            raise HorizonExhausted(f"horizon {self.config.horizon} exhausted")
        draws = self.reward_block(self.t, self.t + 1)
        rewards, coll, _ = kernels.resolve_span(
            actions[:, None], draws, self.means, self.top_m_sum
        )
        result = RoundResult(
            actions=actions,
            rewards=rewards[:, 0],
            collisions=coll[:, 0].astype(bool),
            t=self.t,
        )
        self.t += 1
        return result

    def pseudo_regret_increment(self, actions) -> float:
        """Means-based regret of one joint action against the best allocation."""
        actions = np.asarray(actions, dtype=np.int64)
        if (actions < 0).any() or (actions >= self.config.n_arms).any():
            raise ProtocolError("action out of range [0, K)")
        values, counts = np.unique(actions, return_counts=True)
        colliding = set(values[counts > 1])
        captured = sum(self.means[a] for a in actions if a not in colliding)
        return float(self.top_m_sum - captured)


def new_environment(config: GameConfig, seed: int) -> Environment:
    """Deterministic Bernoulli environment: (config, seed) fixes the stream."""
    return Environment(config, seed=seed)


def trace_environment(
    reward_matrix: np.ndarray,
    n_players: int,
    delta: float | None = None,
    epsilon: float | None = None,
    mu_min: float | None = None,
) -> Environment:
    """Replay environment: arm k's reward at round t is reward_matrix[t, k].

    Game constants default to values derived from the matrix column means.
    """
    reward_matrix = np.asarray(reward_matrix)
    if reward_matrix.ndim != 2:
        raise ConfigError("trace: reward matrix must be 2-D (T, K)")
    if not np.isin(reward_matrix, (0, 1)).all():
        raise ConfigError("trace: matrix entries must be binary")
    means = reward_matrix.mean(axis=0)
    order = np.sort(means)[::-1]
    if delta is None:
        delta = float(order[n_players - 1] - order[n_players]) if n_players < len(means) else 1.0
    if epsilon is None:
        epsilon = delta / 8
    if mu_min is None:
        mu_min = float(means.min())
    config = GameConfig(
        means=means,
        n_players=n_players,
        horizon=reward_matrix.shape[0],
        delta=delta,
        epsilon=epsilon,
        mu_min=mu_min,
    )
    return Environment(config, trace=reward_matrix.astype(np.uint8))
