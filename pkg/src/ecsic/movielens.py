"""Ratings-log ingestion: view-count grouping, hour binning, replay matrices.

Movies are ranked by total view count (descending, ties by lower id) and
split into K contiguous groups of near-equal movie count; when K does not
divide the movie count, the extra movies go to the last (least-viewed)
groups. Per hour bin and group, the binary reward is 1 iff at least one view
of any movie in the group occurred in that hour.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ecsic.env import ConfigError


class ParseError(ValueError):
    """A ratings record could not be parsed; carries the line number."""


@dataclass
class MovieLensScenario:
    source: str
    k_groups: int
    bin_hours: float
    matrix: np.ndarray          # (n_bins, K) binary, untiled
    group_sizes: list
    group_of: dict              # movie id -> group index
    means: np.ndarray
    mu_min: float

    def delta_at(self, n_players: int) -> float:
        order = np.sort(self.means)[::-1]
        if n_players >= len(order):
            raise ConfigError("delta: needs at least one non-played arm")
        return float(order[n_players - 1] - order[n_players])

    def reward_matrix(self, horizon: int) -> np.ndarray:
        """Replay matrix tiled end-to-end to `horizon` rows."""
        reps = math.ceil(horizon / self.matrix.shape[0])
        return np.tile(self.matrix, (reps, 1))[:horizon]


def read_ratings(path: str):
    """Yield (movie_id, timestamp) pairs from a comma-separated ratings log.

    Accepts the 4-column userId,movieId,rating,timestamp layout (an optional
    header row is skipped). Malformed records raise ParseError with the
    offending line number.
    """
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if lineno == 1 and row and not row[-1].strip().isdigit():
                continue  # header
            if len(row) != 4:
                raise ParseError(f"line {lineno}: expected 4 fields, got {len(row)}")
            try:
                yield int(row[1]), int(row[3])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None


def partition_groups(movie_counts: dict, k_groups: int):
    """Contiguous near-equal-count partition of the view-count ranking.

    Returns (ordered movie ids, group sizes, movie id -> group index).
    """
    if k_groups > len(movie_counts):
        raise ConfigError(
            f"k_groups: {k_groups} groups but only {len(movie_counts)} movies"
        )
    ranked = sorted(movie_counts, key=lambda m: (-movie_counts[m], m))
    base, extra = divmod(len(ranked), k_groups)
    sizes = [base + (1 if g >= k_groups - extra else 0) for g in range(k_groups)]
    group_of = {}
    start = 0
    for g, size in enumerate(sizes):
        for movie in ranked[start : start + size]:
            group_of[movie] = g
        start += size
    return ranked, sizes, group_of


def ingest_movielens(path: str, k_groups: int = 40, bin_hours: float = 1.0) -> MovieLensScenario:
    """Build a replay scenario from a ratings log."""
    counts: dict = {}
    events = []
    for movie, ts in read_ratings(path):
        counts[movie] = counts.get(movie, 0) + 1
        events.append((movie, ts))
    if not events:
        raise ConfigError(f"ratings: no records in {path}")
    _, sizes, group_of = partition_groups(counts, k_groups)

    t0 = min(ts for _, ts in events)
    width = int(bin_hours * 3600)
    n_bins = (max(ts for _, ts in events) - t0) // width + 1
    matrix = np.zeros((n_bins, k_groups), dtype=np.uint8)
    for movie, ts in events:
        matrix[(ts - t0) // width, group_of[movie]] = 1

    means = matrix.mean(axis=0)
    return MovieLensScenario(
        source=path,
        k_groups=k_groups,
        bin_hours=bin_hours,
        matrix=matrix,
        group_sizes=sizes,
        group_of=group_of,
        means=means,
        mu_min=float(means.min()),
    )
