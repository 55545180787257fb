"""Compiled inner loops for nearest-neighbour retrieval."""

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def nearest_scan(states, seqs, count, query):
    """Return (row, distance) of the closest of the first ``count`` rows.

    Equal distances resolve to the row with the lowest insertion sequence.
    Returns (-1, inf) when ``count`` is zero.
    """
    best = -1
    best_d2 = np.inf
    best_seq = np.iinfo(np.int64).max
    dim = query.shape[0]
    for i in range(count):
        d2 = 0.0
        for j in range(dim):
            diff = states[i, j] - query[j]
            d2 += diff * diff
            if d2 > best_d2:
                break
        if d2 < best_d2 or (d2 == best_d2 and seqs[i] < best_seq):
            best = i
            best_d2 = d2
            best_seq = seqs[i]
    return best, np.sqrt(best_d2)
