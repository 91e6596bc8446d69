"""Hot-kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set ECSIC_PURE_PYTHON=1 to force the fallback (used by the benchmark and to
cross-check both implementations).
"""

from __future__ import annotations

import os

import numpy as np

try:
    from ecsic._speedups import resolve_span as _resolve_span_compiled
except ImportError:  # pragma: no cover - depends on the build
    _resolve_span_compiled = None

HAVE_COMPILED = _resolve_span_compiled is not None
_FORCE_PURE = os.environ.get("ECSIC_PURE_PYTHON", "") not in ("", "0")


def resolve_span_numpy(actions, draws, means, top_m_sum):
    """Pure-numpy joint-action resolution for one span of lock-step rounds.

    actions: (M, span) arm indices; draws: (span, K) realized 0/1 rewards.
    Returns (rewards (M, span), collisions (M, span) uint8, per-round
    pseudo-regret increments (span,)).
    """
    n_players, span = actions.shape
    n_arms = means.shape[0]
    rows = np.arange(span)
    flat = actions + rows * n_arms
    counts = np.bincount(flat.ravel(), minlength=span * n_arms).reshape(span, n_arms)
    coll = (counts[rows, actions] > 1).astype(np.uint8)
    no_coll = 1 - coll
    rewards = draws[rows, actions].astype(np.float64) * no_coll
    inc = top_m_sum - (means[actions] * no_coll).sum(axis=0)
    return rewards, coll, inc


if HAVE_COMPILED and not _FORCE_PURE:
    _resolve_impl = _resolve_span_compiled
    BACKEND = "compiled"
else:
    _resolve_impl = resolve_span_numpy
    BACKEND = "numpy"


def resolve_span(actions, draws, means, top_m_sum):
    """Validated entry point used by the simulation driver."""
    actions = np.ascontiguousarray(actions, dtype=np.int64)
    if actions.min() < 0 or actions.max() >= means.shape[0]:
        raise ValueError("action out of range [0, K)")
    return _resolve_impl(actions, draws, means, top_m_sum)
