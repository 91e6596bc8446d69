"""Experiment orchestration: seeded replications, aggregation, file emission.

The whole experiment output is a pure function of (spec, seed): replication
r always draws from SeedSequence(seed, spawn_key=(r,)) regardless of worker
count or execution order.
"""

from __future__ import annotations

import csv
import json
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ecsic import protocol
from ecsic.baselines import OraclePlayer, RoundRobinPlayer, UniformRandomPlayer
from ecsic.driver import simulate
from ecsic.env import ConfigError, Environment, GameConfig, new_environment
from ecsic.protocol import EcSicPlayer, make_constants

TRACE_MAGIC = b"TRC1"


@dataclass(frozen=True)
class AlgorithmSpec:
    """One algorithm arm of an experiment.

    name: "ecsic", "oracle", "round_robin" or "uniform". The estimate
    overrides feed the protocol believed values in place of the true ones;
    rep_count_override pins the per-bit repetition count A directly.
    """

    name: str
    scheme: str = "repetition"
    p0: int = 5
    better_comm_arms: bool = True
    rep_count_override: int | None = None
    mu_min_est: float | None = None
    delta_est: float | None = None
    label: str | None = None

    def __post_init__(self):
        if self.name not in ("ecsic", "oracle", "round_robin", "uniform"):
            raise ConfigError(f"algorithm: unknown name {self.name!r}")
        for attr in ("rep_count_override", "mu_min_est", "delta_est"):
            v = getattr(self, attr)
            if v is not None and v <= 0:
                raise ConfigError(f"algorithm: {attr} must be positive, got {v}")

    @property
    def display(self) -> str:
        if self.label:
            return self.label
        return f"ecsic_{self.scheme}" if self.name == "ecsic" else self.name


@dataclass
class ExperimentSpec:
    """Scenario + algorithm list + replication budget."""

    config: GameConfig
    algorithms: list
    replications: int = 100
    seed: int = 0
    grid_points: int = 200
    reward_matrix: np.ndarray | None = None  # replay scenario, shuffled per rep

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError(f"replications: must be >= 1, got {self.replications}")
        if not self.algorithms:
            raise ConfigError("algorithms: list must be non-empty")
        if self.grid_points < 2:
            raise ConfigError(f"grid_points: must be >= 2, got {self.grid_points}")


@dataclass
class ReplicationResult:
    algorithm: str
    replication: int
    grid: np.ndarray
    regret: np.ndarray
    final_regret: float
    converged: bool
    fixed_arms: list
    markers: list = field(default_factory=list)
    error: str | None = None


def _constants_for(alg: AlgorithmSpec, config: GameConfig) -> protocol.ProtocolConstants:
    delta = alg.delta_est if alg.delta_est is not None else config.delta
    epsilon = config.epsilon if alg.delta_est is None else delta / 8
    mu_min = alg.mu_min_est if alg.mu_min_est is not None else config.mu_min
    return make_constants(
        config.n_arms,
        config.horizon,
        delta,
        epsilon,
        mu_min,
        scheme=alg.scheme,
        p0=alg.p0,
        better_comm_arms=alg.better_comm_arms,
        rep_count_override=alg.rep_count_override,
    )


def make_players(alg: AlgorithmSpec, config: GameConfig, seeds, diagnostics=False):
    if alg.name == "ecsic":
        constants = _constants_for(alg, config)
        return [
            EcSicPlayer(constants, np.random.Generator(np.random.Philox(s)), diagnostics)
            for s in seeds
        ]
    if alg.name == "oracle":
        return [OraclePlayer(config.means, j + 1) for j in range(config.n_players)]
    if alg.name == "round_robin":
        return [RoundRobinPlayer(config.n_arms, j + 1) for j in range(config.n_players)]
    return [
        UniformRandomPlayer(config.n_arms, np.random.Generator(np.random.Philox(s)))
        for s in seeds
    ]


def regret_grid(horizon: int, points: int) -> np.ndarray:
    return np.unique(np.linspace(0, horizon - 1, points).astype(np.int64))


def run_replication(spec: ExperimentSpec, alg: AlgorithmSpec, replication: int) -> ReplicationResult:
    """One seeded replication; deterministic in (spec, alg, replication)."""
    config = spec.config
    root = np.random.SeedSequence(spec.seed, spawn_key=(replication,))
    env_ss, *player_ss = root.spawn(config.n_players + 1)
    if spec.reward_matrix is not None:
        perm = np.random.default_rng(env_ss).permutation(spec.reward_matrix.shape[0])
        env = Environment(config, trace=spec.reward_matrix[perm])
    else:
        env = new_environment(config, int(env_ss.generate_state(1, np.uint64)[0]))
    players = make_players(alg, config, player_ss)
    grid = regret_grid(config.horizon, spec.grid_points)

    try:
        trace = simulate(env, players)
    except Exception as exc:  # report, never silently average
        return ReplicationResult(
            algorithm=alg.display,
            replication=replication,
            grid=grid,
            regret=np.full(len(grid), np.nan),
            final_regret=float("nan"),
            converged=False,
            fixed_arms=[],
            error=f"{type(exc).__name__}: {exc}",
        )

    if alg.name == "ecsic":
        fixed = [p.fixed_arm for p in players]
        converged = (
            all(a >= 0 for a in fixed)
            and len(set(fixed)) == config.n_players
            and set(fixed) == set(config.top_arms().tolist())
        )
    else:
        fixed, converged = [], True
    markers = [
        (when, rank, label, float(trace.cumulative[min(when, config.horizon - 1)]))
        for when, rank, label in trace.markers
    ]
    return ReplicationResult(
        algorithm=alg.display,
        replication=replication,
        grid=grid,
        regret=trace.cumulative[grid],
        final_regret=float(trace.cumulative[-1]),
        converged=converged,
        fixed_arms=fixed,
        markers=markers,
    )


def _rep_task(args):
    return run_replication(*args)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> dict:
    """All replications of all algorithms; aggregation is order-invariant."""
    tasks = [
        (spec, alg, r) for alg in spec.algorithms for r in range(spec.replications)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reps = list(pool.map(_rep_task, tasks, chunksize=1))
    else:
        reps = [run_replication(*t) for t in tasks]

    results = {}
    for alg in spec.algorithms:
        mine = sorted(
            (r for r in reps if r.algorithm == alg.display),
            key=lambda r: r.replication,
        )
        ok = [r for r in mine if r.error is None]
        curves = np.array([r.regret for r in ok]) if ok else np.zeros((0, 0))
        entry = {
            "spec": alg,
            "replications": mine,
            "grid": mine[0].grid,
            "mean": curves.mean(axis=0) if len(ok) else None,
            "std": curves.std(axis=0) if len(ok) else None,
            "final_mean": float(np.mean([r.final_regret for r in ok])) if ok else float("nan"),
            "n_error": sum(1 for r in mine if r.error is not None),
            "n_nonconverged": sum(1 for r in mine if r.error is None and not r.converged),
        }
        if alg.name == "ecsic":
            c = _constants_for(alg, spec.config)
            entry["code"] = {"Q": c.q_bits, "A": c.rep_count, "N": c.n_sym}
        results[alg.display] = entry
    return results


# -- file emission ------------------------------------------------------------

_FMT = "%.17g"  # round-trips float64 exactly


def emit_outputs(results: dict, spec: ExperimentSpec, directory: str) -> list:
    """Write per-replication CSVs, the aggregate JSON, and the plot-data CSV."""
    if not results:
        raise ConfigError("results: nothing to emit")
    os.makedirs(directory, exist_ok=True)
    written = []

    for label, entry in results.items():
        for rep in entry["replications"]:
            path = os.path.join(directory, f"{label}_rep{rep.replication:04d}.csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["round", "cumulative_regret", "marker"])
                for t, v in zip(rep.grid, rep.regret):
                    w.writerow([int(t), _FMT % v, ""])
                for when, rank, text, v in rep.markers:
                    w.writerow([int(when), _FMT % v, f"player {rank}: {text}"])
            written.append(path)

    aggregate = {
        "config": {
            "means": spec.config.means.tolist(),
            "n_players": spec.config.n_players,
            "horizon": spec.config.horizon,
            "delta": spec.config.delta,
            "epsilon": spec.config.epsilon,
            "mu_min": spec.config.mu_min,
        },
        "replications": spec.replications,
        "seed": spec.seed,
        "algorithms": {},
    }
    for label, entry in results.items():
        alg_out = {
            "grid": entry["grid"].tolist(),
            "mean": None if entry["mean"] is None else entry["mean"].tolist(),
            "std": None if entry["std"] is None else entry["std"].tolist(),
            "final_mean": entry["final_mean"],
            "n_error": entry["n_error"],
            "n_nonconverged": entry["n_nonconverged"],
        }
        if "code" in entry:
            alg_out["code"] = entry["code"]
        aggregate["algorithms"][label] = alg_out
    agg_path = os.path.join(directory, "aggregate.json")
    with open(agg_path, "w") as fh:
        json.dump(aggregate, fh, indent=2)
    written.append(agg_path)

    plot_path = os.path.join(directory, "plot_data.csv")
    grid = next(iter(results.values()))["grid"]
    with open(plot_path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["round"]
        for label in results:
            header += [f"{label}_mean", f"{label}_std"]
        w.writerow(header)
        for i, t in enumerate(grid):
            row = [int(t)]
            for entry in results.values():
                if entry["mean"] is None:
                    row += ["nan", "nan"]
                else:
                    row += [_FMT % entry["mean"][i], _FMT % entry["std"][i]]
            w.writerow(row)
    written.append(plot_path)
    return written


def read_trace_csv(path: str):
    """Parse an emitted per-replication CSV back into (grid, regret, markers)."""
    grid, regret, markers = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for t, v, marker in reader:
            if marker:
                markers.append((int(t), float(v), marker))
            else:
                grid.append(int(t))
                regret.append(float(v))
    return np.array(grid), np.array(regret), markers


# -- scenario / spec serialization --------------------------------------------


def save_spec(spec: ExperimentSpec, path: str) -> None:
    doc = {
        "scenario": {
            "means": spec.config.means.tolist(),
            "n_players": spec.config.n_players,
            "horizon": spec.config.horizon,
            "delta": spec.config.delta,
            "epsilon": spec.config.epsilon,
            "mu_min": spec.config.mu_min,
        },
        "replications": spec.replications,
        "seed": spec.seed,
        "grid_points": spec.grid_points,
        "algorithms": [
            {
                k: v
                for k, v in {
                    "name": a.name,
                    "scheme": a.scheme,
                    "p0": a.p0,
                    "better_comm_arms": a.better_comm_arms,
                    "rep_count_override": a.rep_count_override,
                    "mu_min_est": a.mu_min_est,
                    "delta_est": a.delta_est,
                    "label": a.label,
                }.items()
                if v is not None
            }
            for a in spec.algorithms
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)


def load_spec(path: str, trace_matrix: np.ndarray | None = None) -> ExperimentSpec:
    with open(path) as fh:
        doc = json.load(fh)
    sc = doc["scenario"]
    config = GameConfig(
        means=np.asarray(sc["means"], dtype=np.float64),
        n_players=sc["n_players"],
        horizon=sc["horizon"],
        delta=sc["delta"],
        epsilon=sc["epsilon"],
        mu_min=sc["mu_min"],
    )
    algorithms = [AlgorithmSpec(**a) for a in doc["algorithms"]]
    return ExperimentSpec(
        config=config,
        algorithms=algorithms,
        replications=doc.get("replications", 100),
        seed=doc.get("seed", 0),
        grid_points=doc.get("grid_points", 200),
        reward_matrix=trace_matrix,
    )


# -- replay-matrix binary format ------------------------------------------------


def save_trace_matrix(path: str, matrix: np.ndarray) -> None:
    """Binary replay matrix: magic 'TRC1', uint64 T, uint64 K, row-major uint8."""
    matrix = np.ascontiguousarray(matrix, dtype=np.uint8)
    if matrix.ndim != 2:
        raise ConfigError("trace: matrix must be 2-D")
    with open(path, "wb") as fh:
        fh.write(TRACE_MAGIC)
        fh.write(struct.pack("<QQ", *matrix.shape))
        fh.write(matrix.tobytes())


def load_trace_matrix(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(4) != TRACE_MAGIC:
            raise ConfigError(f"trace: {path} is not a replay-matrix file")
        t, k = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(t * k), dtype=np.uint8)
    if data.size != t * k:
        raise ConfigError(f"trace: {path} is truncated")
    return data.reshape(t, k)


# -- shipped scenarios ----------------------------------------------------------


def easy_game(horizon: int = 500_000) -> GameConfig:
    """Synthetic 9-arm / 6-player game with gap 0.06 (a construction, not a
    reproduction of any published arm set)."""
    means = np.array([0.9, 0.85, 0.8, 0.75, 0.7, 0.65, 0.59, 0.5, 0.4])
    return GameConfig(
        means=means, n_players=6, horizon=horizon, delta=0.06, epsilon=0.06 / 8, mu_min=0.3
    )


def hard_game(horizon: int = 500_000) -> GameConfig:
    """Hard variant: order-statistic gap 0.01."""
    means = np.array([0.9, 0.85, 0.8, 0.75, 0.7, 0.65, 0.64, 0.5, 0.4])
    return GameConfig(
        means=means, n_players=6, horizon=horizon, delta=0.01, epsilon=0.01 / 8, mu_min=0.3
    )


def large_game(horizon: int = 500_000) -> GameConfig:
    """Wider game: 29 arms, 10 players, gap 0.05."""
    means = np.concatenate([np.linspace(0.95, 0.5, 10), np.linspace(0.45, 0.31, 19)])
    return GameConfig(
        means=means, n_players=10, horizon=horizon, delta=0.05, epsilon=0.05 / 8, mu_min=0.3
    )
