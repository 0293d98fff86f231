# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. ``_fallback`` mirrors every function here.

The telegraph sampler pulls variates straight from the generator's
``bitgen_t`` in the same order as the pure-Python version, so both backends
return bit-identical counts for the same seed.
"""
import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_exponential, random_poisson


cdef inline double _bright_time(bitgen_t *bg, int neg, double k_ion, double k_rec,
                                double T) noexcept nogil:
    cdef double t = 0.0
    cdef double t_neg = 0.0
    cdef double rate, dwell
    while True:
        rate = k_ion if neg else k_rec
        if rate <= 0.0:
            if neg:
                t_neg += T - t
            break
        dwell = random_standard_exponential(bg) / rate
        if t + dwell >= T:
            if neg:
                t_neg += T - t
            break
        if neg:
            t_neg += dwell
        t += dwell
        neg = not neg
    return t_neg


def telegraph_counts(rng, double gamma_bright, double gamma_dark, double k_ion,
                     double k_rec, double T, const unsigned char[::1] init_neg):
    """Photon counts of independent telegraph emitters, one per ``init_neg`` entry."""
    cdef Py_ssize_t n = init_neg.shape[0]
    cdef Py_ssize_t i
    cdef double t_neg, lam
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] o = out
    capsule = rng.bit_generator.capsule
    cdef bitgen_t *bg = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
    with rng.bit_generator.lock, nogil:
        for i in range(n):
            if T <= 0.0:
                o[i] = 0
                continue
            t_neg = _bright_time(bg, init_neg[i], k_ion, k_rec, T)
            lam = gamma_bright * t_neg + gamma_dark * (T - t_neg)
            o[i] = random_poisson(bg, lam)
    return out


cdef void _rhs(const double[::1] P, double[::1] dP, Py_ssize_t m,
               double g_neg, double g_neu, double k_ion, double k_rec) noexcept nogil:
    # layout: P[(init*2 + charge)*m + n], charge 0 = NEG, 1 = NEUTRAL
    cdef Py_ssize_t a, n, b0, b1
    cdef double pn, pu, pn_prev, pu_prev
    for a in range(2):
        b0 = (a * 2) * m
        b1 = (a * 2 + 1) * m
        pn_prev = 0.0
        pu_prev = 0.0
        for n in range(m):
            pn = P[b0 + n]
            pu = P[b1 + n]
            dP[b0 + n] = -k_ion * pn + k_rec * pu + g_neg * (pn_prev - pn)
            dP[b1 + n] = k_ion * pn - k_rec * pu + g_neu * (pu_prev - pu)
            pn_prev = pn
            pu_prev = pu


def count_master_rk4(double g_neg, double g_neu, double k_ion, double k_rec,
                     double T, Py_ssize_t n_max, Py_ssize_t n_steps):
    """Integrate the count-resolved two-state master equation with RK4.

    Returns an array of shape (2, n_max + 1): row 0 is p(n | start NEG),
    row 1 is p(n | start NEUTRAL). Mass leaving ``n_max`` is dropped.
    """
    cdef Py_ssize_t m = n_max + 1
    cdef Py_ssize_t size = 4 * m
    cdef Py_ssize_t s, j
    cdef double h = T / n_steps
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0
    P_arr = np.zeros(size)
    cdef double[::1] P = P_arr
    cdef double[::1] k1 = np.empty(size)
    cdef double[::1] k2 = np.empty(size)
    cdef double[::1] k3 = np.empty(size)
    cdef double[::1] k4 = np.empty(size)
    cdef double[::1] tmp = np.empty(size)
    P[0] = 1.0
    P[3 * m] = 1.0
    with nogil:
        for s in range(n_steps):
            _rhs(P, k1, m, g_neg, g_neu, k_ion, k_rec)
            for j in range(size):
                tmp[j] = P[j] + h2 * k1[j]
            _rhs(tmp, k2, m, g_neg, g_neu, k_ion, k_rec)
            for j in range(size):
                tmp[j] = P[j] + h2 * k2[j]
            _rhs(tmp, k3, m, g_neg, g_neu, k_ion, k_rec)
            for j in range(size):
                tmp[j] = P[j] + h * k3[j]
            _rhs(tmp, k4, m, g_neg, g_neu, k_ion, k_rec)
            for j in range(size):
                P[j] += h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    out = P_arr.reshape(2, 2, m)
    return out[:, 0, :] + out[:, 1, :]
