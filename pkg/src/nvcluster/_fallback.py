"""Pure-Python implementations of the compiled kernels.

Used when the extension is not built or ``NVCLUSTER_PURE_PYTHON`` is set.
``telegraph_counts`` consumes random variates in exactly the same order as
the compiled version, so results are bit-identical for a given seed.
"""
from __future__ import annotations

import numpy as np


def _bright_time(rng, neg, k_ion, k_rec, T):
    t = 0.0
    t_neg = 0.0
    while True:
        rate = k_ion if neg else k_rec
        if rate <= 0.0:
            if neg:
                t_neg += T - t
            break
        dwell = rng.standard_exponential() / rate
        if t + dwell >= T:
            if neg:
                t_neg += T - t
            break
        if neg:
            t_neg += dwell
        t += dwell
        neg = not neg
    return t_neg


def telegraph_counts(rng, gamma_bright, gamma_dark, k_ion, k_rec, T, init_neg):
    init_neg = np.ascontiguousarray(init_neg, dtype=np.uint8)
    out = np.empty(init_neg.shape[0], dtype=np.int64)
    gamma_bright = float(gamma_bright)
    gamma_dark = float(gamma_dark)
    k_ion = float(k_ion)
    k_rec = float(k_rec)
    T = float(T)
    for i, neg in enumerate(init_neg.tolist()):
        if T <= 0.0:
            out[i] = 0
            continue
        t_neg = _bright_time(rng, bool(neg), k_ion, k_rec, T)
        lam = gamma_bright * t_neg + gamma_dark * (T - t_neg)
        out[i] = rng.poisson(lam)
    return out


def _rhs(P, g, k_ion, k_rec):
    # P has shape (2 init, 2 charge, m); charge 0 = NEG, 1 = NEUTRAL
    shifted = np.zeros_like(P)
    shifted[:, :, 1:] = P[:, :, :-1]
    dP = g[None, :, None] * (shifted - P)
    pn = P[:, 0, :]
    pu = P[:, 1, :]
    flow = k_ion * pn - k_rec * pu
    dP[:, 0, :] -= flow
    dP[:, 1, :] += flow
    return dP


def count_master_rk4(g_neg, g_neu, k_ion, k_rec, T, n_max, n_steps):
    m = int(n_max) + 1
    P = np.zeros((2, 2, m))
    P[0, 0, 0] = 1.0
    P[1, 1, 0] = 1.0
    g = np.array([g_neg, g_neu], dtype=float)
    h = T / n_steps
    for _ in range(int(n_steps)):
        k1 = _rhs(P, g, k_ion, k_rec)
        k2 = _rhs(P + 0.5 * h * k1, g, k_ion, k_rec)
        k3 = _rhs(P + 0.5 * h * k2, g, k_ion, k_rec)
        k4 = _rhs(P + h * k3, g, k_ion, k_rec)
        P = P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return P[:, 0, :] + P[:, 1, :]
