"""Numba kernels for the negative-sampling layout optimizer.

One kernel call performs a single epoch so the caller can verify the
embedding stays finite between epochs. The serial variant is
deterministic for a fixed rng state; the parallel variant races on
coordinate updates by design and is flagged non-deterministic.
"""

from __future__ import annotations

import numba
import numpy as np
from numba import njit


@njit("i8(i8[::1])", cache=True, nogil=True)
def _tau_rand_int(state):
    # Three-component Tausworthe generator over 32-bit lanes held in int64.
    state[0] = (((state[0] & 4294967294) << 12) & 0xFFFFFFFF) ^ (
        (((state[0] << 13) & 0xFFFFFFFF) ^ state[0]) >> 19
    )
    state[1] = (((state[1] & 4294967288) << 4) & 0xFFFFFFFF) ^ (
        (((state[1] << 2) & 0xFFFFFFFF) ^ state[1]) >> 25
    )
    state[2] = (((state[2] & 4294967280) << 17) & 0xFFFFFFFF) ^ (
        (((state[2] << 3) & 0xFFFFFFFF) ^ state[2]) >> 11
    )
    return state[0] ^ state[1] ^ state[2]


@njit("f8(f8)", cache=True, nogil=True)
def _clip(val):
    if val > 4.0:
        return 4.0
    elif val < -4.0:
        return -4.0
    return val


def _layout_epoch(
    head_embedding,
    tail_embedding,
    heads,
    tails,
    n_vertices,
    epochs_per_sample,
    epochs_per_negative,
    epoch_of_next_sample,
    epoch_of_next_negative,
    a,
    b,
    gamma,
    alpha,
    move_other,
    epoch,
    rng_state,
):
    for i in numba.prange(heads.shape[0]):
        if epoch_of_next_sample[i] <= epoch:
            j = heads[i]
            k = tails[i]
            dx = head_embedding[j, 0] - tail_embedding[k, 0]
            dy = head_embedding[j, 1] - tail_embedding[k, 1]
            dist_sq = dx * dx + dy * dy
            if dist_sq > 0.0:
                coeff = (-2.0 * a * b * dist_sq ** (b - 1.0)) / (
                    a * dist_sq**b + 1.0
                )
            else:
                coeff = 0.0
            gx = _clip(coeff * dx)
            gy = _clip(coeff * dy)
            head_embedding[j, 0] += gx * alpha
            head_embedding[j, 1] += gy * alpha
            if move_other:
                tail_embedding[k, 0] -= gx * alpha
                tail_embedding[k, 1] -= gy * alpha

            epoch_of_next_sample[i] += epochs_per_sample[i]

            n_negative = int(
                (epoch - epoch_of_next_negative[i]) / epochs_per_negative[i]
            )
            for _ in range(n_negative):
                t = _tau_rand_int(rng_state) % n_vertices
                dx = head_embedding[j, 0] - tail_embedding[t, 0]
                dy = head_embedding[j, 1] - tail_embedding[t, 1]
                dist_sq = dx * dx + dy * dy
                if dist_sq > 0.0:
                    coeff = (2.0 * gamma * b) / (
                        (0.001 + dist_sq) * (a * dist_sq**b + 1.0)
                    )
                elif j == t:
                    continue
                else:
                    coeff = 0.0
                if coeff > 0.0:
                    gx = _clip(coeff * dx)
                    gy = _clip(coeff * dy)
                else:
                    # Coincident distinct points: push hard to break the tie.
                    gx = 4.0
                    gy = 4.0
                head_embedding[j, 0] += gx * alpha
                head_embedding[j, 1] += gy * alpha

            epoch_of_next_negative[i] += n_negative * epochs_per_negative[i]


layout_epoch_serial = njit(cache=True, nogil=True, fastmath=True)(_layout_epoch)
layout_epoch_parallel = njit(cache=True, nogil=True, fastmath=True, parallel=True)(
    _layout_epoch
)


@njit(cache=True, nogil=True, fastmath=True)
def refine_queries(
    query_embedding,
    train_embedding,
    indptr,
    indices,
    epochs_per_sample,
    epochs_per_negative,
    rng_states,
    n_epochs,
    a,
    b,
    gamma,
    initial_alpha,
):
    """Refine each query row independently against a frozen atlas.

    Rows are optimized one at a time with their own rng state and edge
    schedule, so a row's trajectory does not depend on what else is in
    the batch. Only ``query_embedding`` is mutated.
    """
    n_train = train_embedding.shape[0]
    for row in range(query_embedding.shape[0]):
        start = indptr[row]
        stop = indptr[row + 1]
        m = stop - start
        next_sample = epochs_per_sample[start:stop].copy()
        next_negative = epochs_per_negative[start:stop].copy()
        state = rng_states[row]
        alpha = initial_alpha
        for epoch in range(n_epochs):
            for e in range(m):
                if next_sample[e] <= epoch:
                    t = indices[start + e]
                    dx = query_embedding[row, 0] - train_embedding[t, 0]
                    dy = query_embedding[row, 1] - train_embedding[t, 1]
                    dist_sq = dx * dx + dy * dy
                    if dist_sq > 0.0:
                        coeff = (-2.0 * a * b * dist_sq ** (b - 1.0)) / (
                            a * dist_sq**b + 1.0
                        )
                        query_embedding[row, 0] += _clip(coeff * dx) * alpha
                        query_embedding[row, 1] += _clip(coeff * dy) * alpha

                    next_sample[e] += epochs_per_sample[start + e]

                    n_negative = int(
                        (epoch - next_negative[e]) / epochs_per_negative[start + e]
                    )
                    for _ in range(n_negative):
                        u = _tau_rand_int(state) % n_train
                        dx = query_embedding[row, 0] - train_embedding[u, 0]
                        dy = query_embedding[row, 1] - train_embedding[u, 1]
                        dist_sq = dx * dx + dy * dy
                        if dist_sq > 0.0:
                            coeff = (2.0 * gamma * b) / (
                                (0.001 + dist_sq) * (a * dist_sq**b + 1.0)
                            )
                            query_embedding[row, 0] += _clip(coeff * dx) * alpha
                            query_embedding[row, 1] += _clip(coeff * dy) * alpha
                    next_negative[e] += n_negative * epochs_per_negative[start + e]
            alpha = initial_alpha * (1.0 - epoch / n_epochs)
