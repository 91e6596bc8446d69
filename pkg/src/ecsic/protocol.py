"""EC-SIC per-player state machine.

Each player is an independent decision-maker observing only her own rewards.
Players emit *blocks*: a committed schedule of actions whose choice cannot
depend on observations made inside the block (true of every protocol phase),
together with a label for diagnostics. The driver executes blocks lock-step
and hands back the realized rewards when a block completes.

Phases: musical-chair fixation -> player-count estimation -> repeated
(exploration, collision-coded communication) -> exploitation.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from ecsic import codec

Block = namedtuple("Block", ["actions", "label"])

EXPLOIT_CHUNK = 1 << 18


@dataclass(frozen=True)
class ProtocolConstants:
    """Shared constants all players derive from the public game parameters."""

    n_arms: int
    horizon: int
    delta: float
    epsilon: float
    mu_min: float
    scheme: str
    p0: int
    better_comm_arms: bool
    q_bits: int
    t_c: int
    rep_count: int
    n_sym: int
    log_t: int


def make_constants(
    n_arms: int,
    horizon: int,
    delta: float,
    epsilon: float,
    mu_min: float,
    scheme: str = "repetition",
    p0: int = 1,
    better_comm_arms: bool = True,
    rep_count_override: int | None = None,
) -> ProtocolConstants:
    """Derive payload width, block lengths and codeword sizes.

    Natural logarithm throughout, matching the codeword-length formulas.
    """
    if not 0 < epsilon < delta / 4:
        raise ValueError(f"epsilon must be in (0, delta/4), got {epsilon}")
    q_bits = max(
        math.ceil(math.log2(1.0 / (delta / 4 - epsilon))),
        math.ceil(math.log2(n_arms + 1)),
    )
    t_c = math.ceil(math.log(horizon) / mu_min)
    if rep_count_override is not None:
        rep_count = rep_count_override
        n_sym = codec.codeword_length(scheme, q_bits, rep_count)
    else:
        rep_count, n_sym = codec.code_length(scheme, q_bits, horizon, mu_min)
    return ProtocolConstants(
        n_arms=n_arms,
        horizon=horizon,
        delta=delta,
        epsilon=epsilon,
        mu_min=mu_min,
        scheme=scheme,
        p0=p0,
        better_comm_arms=better_comm_arms,
        q_bits=q_bits,
        t_c=t_c,
        rep_count=rep_count,
        n_sym=n_sym,
        log_t=math.ceil(math.log(horizon)),
    )


def confidence_bound(total_pulls: int, horizon: int, delta: float, epsilon: float) -> float:
    """sqrt(2 ln T / s) + (delta/4 - epsilon), with s the pooled pull count."""
    if total_pulls < 1:
        raise ValueError(f"pull count must be >= 1, got {total_pulls}")
    return math.sqrt(2.0 * math.log(horizon) / total_pulls) + (delta / 4 - epsilon)


def accept_reject(agg_means: np.ndarray, bound: float, m_p: int):
    """Elimination decisions over the active arms.

    Accept position k when it confidently beats at least K_p - M_p others;
    reject it when at least M_p others confidently beat it. Returns
    (accepted, rejected) position lists, each ascending.
    """
    agg_means = np.asarray(agg_means, dtype=np.float64)
    k_p = len(agg_means)
    beats = (agg_means[:, None] - agg_means[None, :]) >= 2.0 * bound
    acc = np.nonzero(beats.sum(axis=1) >= k_p - m_p)[0]
    rej = np.nonzero(beats.sum(axis=0) >= m_p)[0]
    return list(acc), list(rej)


def aggregate(entries):
    """Pull-count-weighted average of per-arm mean vectors.

    entries: iterable of (means vector, pull count). Returns (aggregate
    vector, total pulls).
    """
    entries = list(entries)
    if not entries:
        raise ValueError("nothing to aggregate")
    total = sum(count for _, count in entries)
    if total <= 0:
        raise ValueError("aggregate pull counts must be positive")
    acc = np.zeros_like(np.asarray(entries[0][0], dtype=np.float64))
    for means, count in entries:
        acc += np.asarray(means, dtype=np.float64) * count
    return acc / total, total


def exploration_action(rank: int, active_arms, step: int) -> int:
    """Arm pulled at exploration step `step` by the player with this rank.

    Starts one past the rank-indexed arm and hops by one each round, so
    distinct ranks occupy distinct residues and never collide.
    """
    k_p = len(active_arms)
    return active_arms[(rank + step) % k_p]


def estimate_m_arm(n_arms: int, ext_rank: int, block: int) -> int:
    """Arm occupied during estimation block `block` (1-based) by the player
    whose musical-chair arm is `ext_rank` (0-based): sit for the first
    2*(ext_rank+1) blocks, then hop one arm per block."""
    k1 = ext_rank + 1
    if block <= 2 * k1:
        return ext_rank
    return (ext_rank + (block - 2 * k1)) % n_arms

def estimate_m_update(m_est: int, rank: int, block: int, ext_rank: int, block_was_all_zero: bool):
    """One estimation step: an all-zero block reveals a squatting or hopping
    player; it bumps the player count, and also the internal rank while the
    observer is still sitting on her own arm."""
    if block_was_all_zero:
        m_est += 1
        if block <= 2 * (ext_rank + 1):
            rank += 1
    return m_est, rank


def assign_fixed(acc, m_p: int, rank: int):
    """Exploitation arm for this rank given the accepted list, or None."""
    idx = m_p - rank + 1
    if 1 <= idx <= len(acc):
        return acc[idx - 1]
    return None


def comm_plan_lengths(
    m_p: int,
    k_p: int,
    n_sym: int,
    n_rej: int = 0,
    n_acc: int = 0,
    segment_d: bool = False,
):
    """Round counts of one communication phase's slot layout."""
    followers = max(m_p - 1, 0)
    plan = {
        "stats": followers * k_p * n_sym,
        "sizes": followers * 2 * n_sym,
        "contents": followers * (n_rej + n_acc) * n_sym,
        "assignments": followers * 2 * n_sym if segment_d else 0,
    }
    plan["total"] = sum(plan.values())
    return plan


class EcSicPlayer:
    """One decentralized player; see module docstring for the block contract."""

    def __init__(self, constants: ProtocolConstants, rng: np.random.Generator, diagnostics: bool = False):
        self.c = constants
        self.rng = rng
        self.t = 0
        self.phase = "musical_chair"
        self.ext_rank = -1
        self.m_est = 1
        self.rank = 1
        self.fixed_arm = -1
        self.p = constants.p0
        self.active_arms: list[int] = list(range(constants.n_arms))
        self.events: list[tuple[int, str]] = []
        self.log: list[dict] | None = [] if diagnostics else None
        self._gen = self._run()
        self._primed = False
        self._last_rewards: np.ndarray | None = None

    # -- driver interface --------------------------------------------------

    def next_block(self) -> Block:
        if not self._primed:
            self._primed = True
            return next(self._gen)
        return self._gen.send(self._last_rewards)

    def observe(self, rewards: np.ndarray) -> None:
        self._last_rewards = rewards

    # -- internals -----------------------------------------------------------

    def _play(self, actions, label):
        actions = np.asarray(actions, dtype=np.int64)
        if len(actions) == 0:
            return np.zeros(0)
        rewards = yield Block(actions, label)
        self.t += len(actions)
        return rewards

    def _event(self, label):
        self.events.append((self.t, label))

    def _diag(self, **record):
        if self.log is not None:
            self.log.append({"t": self.t, "rank": self.rank, "phase": self.phase, **record})

    def _run(self):
        c = self.c
        yield from self._musical_chair()
        yield from self._estimate_m()
        self._event("init_end")

        sums = np.zeros(c.n_arms)
        own_pulls = 0
        frozen: dict[int, tuple[dict[int, int], int]] = {}  # leader only
        my_comm_next = None
        leader_comm_next = None
        assignment_next: dict[int, int] | None = None  # leader only

        while self.fixed_arm < 0 and self.t < c.horizon:
            m_p = self.m_est
            j = self.rank
            active = self.active_arms
            k_p = len(active)

            # Communication-arm addressing for this phase.
            if j == 1:
                if assignment_next is not None:
                    comm_of = dict(assignment_next)
                    for i in range(1, m_p + 1):
                        comm_of.setdefault(i, active[(i - 1) % k_p])
                else:
                    comm_of = {i: active[(i - 1) % k_p] for i in range(1, m_p + 1)}
                comm_self = comm_of[1]
            else:
                comm_self = my_comm_next if my_comm_next is not None else active[(j - 1) % k_p]
                leader_arm = leader_comm_next if leader_comm_next is not None else active[0]

            # ---- exploration ----
            self.phase = "explore"
            self._event(f"explore_start p={self.p}")
            length = k_p * (2**self.p) * c.log_t
            sched = (j + np.arange(length)) % k_p
            arms = np.take(active, sched)
            rewards = yield from self._play(arms, "explore")
            per_arm = np.bincount(sched, weights=rewards, minlength=k_p)
            for idx, arm in enumerate(active):
                sums[arm] += per_arm[idx]
            own_pulls += (2**self.p) * c.log_t
            mu_hat = sums[list(active)] / own_pulls
            qm_own = np.array([codec.quantize_value(x, c.q_bits) for x in mu_hat])

            # ---- communication ----
            self.phase = "comm"
            self._event(f"comm_start p={self.p}")
            if j == 1:
                outcome = yield from self._lead(
                    m_p, active, qm_own, own_pulls, frozen, comm_of
                )
                acc, rej, assignment_next = outcome
            else:
                outcome = yield from self._follow(
                    m_p, j, active, qm_own, comm_self, leader_arm
                )
                acc, rej, my_comm_next, leader_comm_next = outcome

            # ---- elimination / fixation ----
            fixed = assign_fixed(acc, m_p, j)
            if fixed is not None:
                self.fixed_arm = fixed
                break
            removed = set(acc) | set(rej)
            m_new = m_p - len(acc)
            if j == 1:
                for i in range(m_new + 1, m_p + 1):
                    if i >= 2 and i in self._last_decoded_stats:
                        frozen[i] = (dict(self._last_decoded_stats[i]), own_pulls)
            self.m_est = m_new
            self.active_arms = [a for a in active if a not in removed]
            self.p += 1

        if self.fixed_arm >= 0:
            self.phase = "exploit"
            self._event(f"fixate arm={self.fixed_arm}")
            while True:
                yield from self._play(
                    np.full(EXPLOIT_CHUNK, self.fixed_arm), "exploit"
                )
        else:
            # Horizon ran out mid-protocol; park on the rank-indexed arm.
            park = self.active_arms[(self.rank - 1) % len(self.active_arms)]
            while True:
                yield from self._play(np.full(EXPLOIT_CHUNK, park), "parked")

    # -- initialization ------------------------------------------------------

    def _musical_chair(self):
        c = self.c
        window = c.n_arms * c.t_c
        used = 0
        arm = 0
        while used < window and self.ext_rank < 0:
            arm = int(self.rng.integers(c.n_arms))
            reward = (yield from self._play([arm], "musical_chair"))[0]
            used += 1
            if reward > 0:
                self.ext_rank = arm
        if self.ext_rank < 0:
            # Window exhausted without a positive reward (probability <= 1/T);
            # proceed on the last sampled arm and let the run fail loudly.
            self.ext_rank = arm
        if used < window:
            yield from self._play(np.full(window - used, self.ext_rank), "musical_chair")
        self._event(f"musical_chair arm={self.ext_rank}")

    def _estimate_m(self):
        c = self.c
        self.phase = "estimate_m"
        for block in range(1, 2 * c.n_arms + 1):
            arm = estimate_m_arm(c.n_arms, self.ext_rank, block)
            rewards = yield from self._play(np.full(c.t_c, arm), "estimate_m")
            self.m_est, self.rank = estimate_m_update(
                self.m_est, self.rank, block, self.ext_rank, rewards.sum() == 0
            )
        self._event(f"estimate_m M={self.m_est} rank={self.rank}")

    # -- communication: leader ------------------------------------------------

    def _lead(self, m_p, active, qm_own, own_pulls, frozen, comm_of):
        c = self.c
        n = c.n_sym
        k_p = len(active)
        self._last_decoded_stats: dict[int, dict[int, int]] = {}

        # Segment A: gather quantized statistics from every follower.
        stats_by_rank = {}
        if m_p > 1:
            seg_a = (m_p - 1) * k_p * n
            rewards = yield from self._play(np.full(seg_a, comm_of[1]), "comm")
            syms = (rewards == 0).astype(np.uint8)
            for i in range(2, m_p + 1):
                vals = {}
                for k_idx, arm in enumerate(active):
                    off = ((i - 2) * k_p + k_idx) * n
                    bits = codec.decode(c.scheme, syms[off : off + n], c.q_bits, c.rep_count)
                    vals[arm] = codec.bits_to_int(bits)
                stats_by_rank[i] = vals
            self._last_decoded_stats = stats_by_rank
            self._diag(event="decoded_stats", stats=stats_by_rank)

        # Aggregate own + follower + frozen statistics, then decide.
        scale = 2**c.q_bits
        entries = [(qm_own / scale, own_pulls)]
        for i in range(2, m_p + 1):
            vec = np.array([stats_by_rank[i][arm] for arm in active]) / scale
            entries.append((vec, own_pulls))
        for vals, pulls in frozen.values():
            vec = np.array([vals.get(arm, 0) for arm in active]) / scale
            entries.append((vec, pulls))
        agg, total_pulls = aggregate(entries)
        bound = confidence_bound(total_pulls, c.horizon, c.delta, c.epsilon)
        acc_pos, rej_pos = accept_reject(agg, bound, m_p)
        acc = [active[i] for i in acc_pos]
        rej = [active[i] for i in rej_pos]
        self._diag(event="decision", acc=acc, rej=rej, bound=bound, agg=list(agg))

        # Next-phase communication arms: rank r gets the r-th best surviving arm.
        assignment = None
        if c.better_comm_arms:
            survivors = [a for a in active if a not in set(acc) | set(rej)]
            m_new = m_p - len(acc)
            if survivors and m_new >= 1:
                by_mean = sorted(survivors, key=lambda a: (-agg[active.index(a)], a))
                assignment = {
                    r: by_mean[(r - 1) % len(by_mean)] for r in range(1, m_new + 1)
                }

        if m_p > 1:
            send = lambda items, label: self._send(items, comm_of[1], label)
            # Segment B: set sizes.
            items = []
            for i in range(2, m_p + 1):
                items.append((comm_of[i], codec.int_to_bits(len(rej), c.q_bits)))
                items.append((comm_of[i], codec.int_to_bits(len(acc), c.q_bits)))
            yield from send(items, "comm")
            # Segment C: set contents, rejected then accepted, arm ids 1-based.
            items = []
            for i in range(2, m_p + 1):
                for arm in rej:
                    items.append((comm_of[i], codec.int_to_bits(arm + 1, c.q_bits)))
                for arm in acc:
                    items.append((comm_of[i], codec.int_to_bits(arm + 1, c.q_bits)))
            yield from send(items, "comm")
            # Segment D: next-phase communication arms (enhancement only).
            if c.better_comm_arms:
                items = []
                for i in range(2, m_p + 1):
                    own_next = assignment[i] if assignment and i in assignment else comm_of[i]
                    leader_next = assignment[1] if assignment else comm_of[1]
                    items.append((comm_of[i], codec.int_to_bits(own_next + 1, c.q_bits)))
                    items.append((comm_of[i], codec.int_to_bits(leader_next + 1, c.q_bits)))
                yield from send(items, "comm")

        return acc, rej, assignment

    def _send(self, items, own_arm, label):
        """Transmit codewords: symbol 1 pulls the receiver's arm (forced
        collision), symbol 0 pulls the sender's own arm."""
        chunks = []
        for receiver_arm, bits in items:
            syms = codec.encode(self.c.scheme, bits, self.c.rep_count)
            chunks.append(np.where(syms == 1, receiver_arm, own_arm))
        if chunks:
            yield from self._play(np.concatenate(chunks), label)

    # -- communication: follower ----------------------------------------------

    def _follow(self, m_p, j, active, qm_own, comm_self, leader_arm):
        c = self.c
        n = c.n_sym
        k_p = len(active)

        # Segment A: own sending slot, idle on the communication arm otherwise.
        chunks = []
        for i in range(2, m_p + 1):
            if i == j:
                for v in qm_own:
                    syms = codec.encode(
                        c.scheme, codec.int_to_bits(int(v), c.q_bits), c.rep_count
                    )
                    chunks.append(np.where(syms == 1, leader_arm, comm_self))
            else:
                chunks.append(np.full(k_p * n, comm_self))
        if chunks:
            yield from self._play(np.concatenate(chunks), "comm")
        self._diag(event="sent_stats", stats={arm: int(v) for arm, v in zip(active, qm_own)})

        # Segment B: decode the accepted/rejected set sizes from own slot.
        seg_b = (m_p - 1) * 2 * n
        rewards = yield from self._play(np.full(seg_b, comm_self), "comm")
        syms = (rewards == 0).astype(np.uint8)
        off = (j - 2) * 2 * n
        n_rej = codec.bits_to_int(codec.decode(c.scheme, syms[off : off + n], c.q_bits, c.rep_count))
        n_acc = codec.bits_to_int(
            codec.decode(c.scheme, syms[off + n : off + 2 * n], c.q_bits, c.rep_count)
        )
        sizes_ok = n_rej + n_acc <= k_p

        # Segment C: decode set contents; slot layout uses own decoded sizes.
        per_follower = (n_rej + n_acc) * n
        rewards = yield from self._play(
            np.full((m_p - 1) * per_follower, comm_self), "comm"
        )
        syms = (rewards == 0).astype(np.uint8)
        off = (j - 2) * per_follower
        decoded = []
        for idx in range(n_rej + n_acc):
            bits = codec.decode(
                c.scheme, syms[off + idx * n : off + (idx + 1) * n], c.q_bits, c.rep_count
            )
            decoded.append(codec.bits_to_int(bits) - 1)
        rej, acc = decoded[:n_rej], decoded[n_rej:]
        active_set = set(active)
        content_ok = (
            sizes_ok
            and all(a in active_set for a in decoded)
            and len(set(decoded)) == len(decoded)
        )
        if not content_ok:
            # Fail-safe: treat the phase as a no-op rather than desynchronize.
            acc, rej = [], []
        self._diag(event="decoded_decision", acc=acc, rej=rej, ok=content_ok)

        # Segment D: next-phase communication arm assignments.
        my_next = None
        leader_next = None
        if c.better_comm_arms:
            seg_d = (m_p - 1) * 2 * n
            rewards = yield from self._play(np.full(seg_d, comm_self), "comm")
            syms = (rewards == 0).astype(np.uint8)
            off = (j - 2) * 2 * n
            mine = codec.bits_to_int(
                codec.decode(c.scheme, syms[off : off + n], c.q_bits, c.rep_count)
            ) - 1
            lead = codec.bits_to_int(
                codec.decode(c.scheme, syms[off + n : off + 2 * n], c.q_bits, c.rep_count)
            ) - 1
            survivors = active_set - set(acc) - set(rej)
            if mine in survivors and lead in survivors:
                my_next, leader_next = mine, lead

        return acc, rej, my_next, leader_next
