"""Compare the compiled span-resolution kernel against the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py

Times the raw kernel on synthetic spans and a full protocol replication under
each backend. The fallback is selected with ECSIC_PURE_PYTHON=1, so the
replication comparison re-executes this script in a subprocess.
"""

import os
import subprocess
import sys
import time

import numpy as np

from ecsic import kernels
from ecsic.driver import simulate
from ecsic.harness import easy_game, make_players, AlgorithmSpec
from ecsic.env import new_environment


def bench_kernel(n_players=6, n_arms=9, span=100_000, repeats=20):
    rng = np.random.default_rng(0)
    actions = rng.integers(n_arms, size=(n_players, span)).astype(np.int64)
    draws = rng.integers(2, size=(span, n_arms)).astype(np.uint8)
    means = rng.random(n_arms)
    impls = [("numpy", kernels.resolve_span_numpy)]
    if kernels.HAVE_COMPILED:
        from ecsic._speedups import resolve_span as compiled
        impls.append(("compiled", compiled))
    baseline = None
    for name, fn in impls:
        fn(actions, draws, means, 3.0)  # warm up
        t0 = time.perf_counter()
        for _ in range(repeats):
            out = fn(actions, draws, means, 3.0)
        dt = (time.perf_counter() - t0) / repeats
        rate = n_players * span / dt / 1e6
        print(f"kernel {name:9s} {dt * 1e3:8.2f} ms/span   {rate:8.1f} M player-rounds/s")
        if baseline is None:
            baseline = out
        else:
            # rewards/collisions match exactly; regret increments only up to
            # float summation order
            assert np.array_equal(baseline[0], out[0])
            assert np.array_equal(baseline[1], out[1])
            assert np.allclose(baseline[2], out[2], atol=1e-12)


def bench_replication():
    config = easy_game(500_000)
    seeds = np.random.SeedSequence(42).spawn(config.n_players)
    env = new_environment(config, 12345)
    players = make_players(AlgorithmSpec("ecsic"), config, seeds)
    t0 = time.perf_counter()
    trace = simulate(env, players)
    dt = time.perf_counter() - t0
    print(
        f"replication [{kernels.BACKEND}] T={config.horizon}: {dt:.3f} s, "
        f"final regret {trace.cumulative[-1]:.0f}"
    )


if __name__ == "__main__":
    print(f"backend: {kernels.BACKEND}")
    bench_kernel()
    bench_replication()
    if kernels.BACKEND == "compiled" and "ECSIC_PURE_PYTHON" not in os.environ:
        print("--- numpy fallback ---")
        env = dict(os.environ, ECSIC_PURE_PYTHON="1")
        subprocess.run([sys.executable, __file__], env=env, check=True)
