"""Pure-NumPy simulation kernels.

Vectorized across trials, sequential along the signal.  The arithmetic follows
``_ckernels.pyx`` operation for operation, so both backends return identical
bits and bit-identical scores.
"""

import numpy as np


def h1_bits(u, w, v, p10_init, p01, p10, sigma0, sigma1, corr, innov, noise_std):
    m, n = u.shape
    bits = np.empty((m, n), dtype=np.int8)
    active = u[:, 0] >= p10_init
    s = np.where(active, sigma1 * w[:, 0], sigma0 * w[:, 0])
    bits[:, 0] = np.where(s + noise_std * v[:, 0] >= 0.0, 1, -1)
    for i in range(1, n):
        prev = active
        active = np.where(prev, u[:, i] >= p10, u[:, i] < p01)
        fresh = np.where(active, sigma1 * w[:, i], sigma0 * w[:, i])
        s = np.where(active & prev, corr * s + innov * w[:, i], fresh)
        bits[:, i] = np.where(s + noise_std * v[:, i] >= 0.0, 1, -1)
    return bits


def h0_bits(v, noise_std):
    return np.where(noise_std * v >= 0.0, 1, -1).astype(np.int8)


def scores(bits, gain_agree, gain_disagree):
    """Sum of per-term gains for every trial (rows) and coefficient set (rows of the gains)."""
    agree = bits[:, 1:] == bits[:, :-1]
    k = gain_agree.shape[0]
    out = np.empty((bits.shape[0], k))
    for j in range(k):
        terms = np.where(agree, gain_agree[j], gain_disagree[j])
        out[:, j] = np.cumsum(terms, axis=1)[:, -1]
    return out
