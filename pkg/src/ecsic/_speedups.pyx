# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernel: joint-action resolution for one span of rounds."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def resolve_span(cnp.int64_t[:, ::1] actions, cnp.uint8_t[:, ::1] draws,
                 double[::1] means, double top_m_sum):
    """Resolve collisions and rewards for `span` lock-step rounds.

    actions: (M, span) arm indices, draws: (span, K) realized 0/1 rewards.
    Returns (rewards (M, span), collisions (M, span) uint8,
    per-round pseudo-regret increments (span,)).
    """
    cdef Py_ssize_t n_players = actions.shape[0]
    cdef Py_ssize_t span = actions.shape[1]
    cdef Py_ssize_t n_arms = means.shape[0]
    cdef Py_ssize_t j, l
    cdef cnp.int64_t a

    rewards_arr = np.zeros((n_players, span), dtype=np.float64)
    coll_arr = np.zeros((n_players, span), dtype=np.uint8)
    inc_arr = np.empty(span, dtype=np.float64)
    count_arr = np.zeros(n_arms, dtype=np.int64)

    cdef double[:, ::1] rewards = rewards_arr
    cdef cnp.uint8_t[:, ::1] coll = coll_arr
    cdef double[::1] inc = inc_arr
    cdef cnp.int64_t[::1] count = count_arr
    cdef double acc

    for l in range(span):
        for j in range(n_players):
            count[actions[j, l]] += 1
        acc = top_m_sum
        for j in range(n_players):
            a = actions[j, l]
            if count[a] > 1:
                coll[j, l] = 1
            else:
                rewards[j, l] = draws[l, a]
                acc -= means[a]
        for j in range(n_players):
            count[actions[j, l]] = 0
        inc[l] = acc

    return rewards_arr, coll_arr, inc_arr
