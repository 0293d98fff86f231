"""Analytic photon-count distributions for switching emitters.

A single emitter is a Markov-modulated Poisson process: the probability
``P(n, c, t)`` of having counted ``n`` photons while in charge state ``c``
obeys the count-resolved master equation

    dP(n, c)/dt = sum_c' Q[c', c] P(n, c') + gamma_c (P(n-1, c) - P(n, c))

with ``Q`` the two-state switching generator. Because counts only increase,
truncating at ``n_max`` leaves every bin ``n <= n_max`` exact. The cluster pmf
for a fixed joint initial charge configuration is the convolution of the
per-emitter conditional pmfs; a histogram with random initial charge is a
mixture of those.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from nvcluster import _backend
from nvcluster.emitter import (
    TAIL_LIMIT,
    Charge,
    ClusterModel,
    EmitterParams,
    all_charge_configs,
    charge_config,
    config_index,
)
from nvcluster.errors import ParameterError, TruncationError


@dataclass(frozen=True)
class ConditionalPmf:
    """p(n | initial charge) for n in 0..n_max, rows ordered (NEG, NEUTRAL)."""

    pmf: np.ndarray
    params: EmitterParams
    T: float
    tail_mass: np.ndarray

    @property
    def n_max(self) -> int:
        return self.pmf.shape[1] - 1

    def __getitem__(self, charge) -> np.ndarray:
        return self.pmf[int(Charge.parse(charge))]

    @property
    def neg(self) -> np.ndarray:
        return self.pmf[0]

    @property
    def neutral(self) -> np.ndarray:
        return self.pmf[1]


def rk4_steps(params: EmitterParams, T: float) -> int:
    """Fixed step count with h <= min(1/(10 * total rate), T/100)."""
    total = max(params.gamma_bright, params.gamma_dark) + params.k_ion + params.k_rec
    h_max = T / 100.0
    if total > 0:
        h_max = min(h_max, 1.0 / (10.0 * total))
    return max(100, int(math.ceil(T / h_max - 1e-9)))


def spectral_size(n_max: int) -> int:
    return 1 << max(6, int(math.ceil(math.log2(2 * (n_max + 1)))))


def generating_function(params: EmitterParams, T: float, M: int) -> np.ndarray:
    """Count generating functions G_k(z) on the M-th roots of unity.

    Row 0 starts in NEG, row 1 in NEUTRAL. G_k(z) = e_k^T exp(T (Q + (z - 1) Gamma)) 1,
    computed with the closed-form 2x2 matrix exponential.
    """
    z = np.exp(2j * np.pi * np.arange(M) / M)
    a = T * (-params.k_ion + (z - 1.0) * params.gamma_bright)
    d = T * (-params.k_rec + (z - 1.0) * params.gamma_dark)
    b = T * params.k_ion
    c = T * params.k_rec
    m = 0.5 * (a + d)
    s = np.sqrt(0.25 * (a - d) ** 2 + b * c + 0j)
    ep = np.exp(m + s)
    em = np.exp(m - s)
    cosh_term = 0.5 * (ep + em)
    small = np.abs(s) < 1e-6
    safe_s = np.where(small, 1.0, s)
    sinhc = np.where(small, np.exp(m) * (1.0 + s * s / 6.0), (ep - em) / (2.0 * safe_s))
    g_neg = cosh_term + sinhc * (a - m + b)
    g_neu = cosh_term + sinhc * (d - m + c)
    return np.vstack([g_neg, g_neu])


def coefficients(gen: np.ndarray, n_max: int) -> np.ndarray:
    """Invert generating-function samples on roots of unity back to a pmf."""
    M = gen.shape[-1]
    return np.fft.fft(gen, axis=-1).real[..., : n_max + 1] / M


def _spectral(params: EmitterParams, T: float, n_max: int) -> np.ndarray:
    # aliasing folds mass beyond M - 1 onto low counts; negligible for
    # M >= 2 (n_max + 1) once the n_max tail check passes
    gen = generating_function(params, T, spectral_size(n_max))
    return np.clip(coefficients(gen, n_max), 0.0, None)


def single_emitter_pmf(params: EmitterParams, T: float, n_max: int,
                       method: str = "rk4", n_steps: int | None = None) -> ConditionalPmf:
    """Conditional count pmfs p(n | NEG) and p(n | NEUTRAL) over a window T.

    ``method="rk4"`` integrates the count-resolved master equation with a fixed
    step RK4 scheme (see :func:`rk4_steps`); ``method="spectral"`` evaluates the
    generating function exactly and inverts it with an FFT, which is much
    faster and is what the fitting code uses.

    Raises TruncationError when more than 1e-6 mass lies above ``n_max``.
    Returned rows are renormalized after that check.
    """
    n_max = int(n_max)
    if n_max < 1:
        raise ParameterError("n_max must be >= 1")
    T = float(T)
    if not math.isfinite(T) or T < 0:
        raise ParameterError(f"T must be finite and >= 0, got {T}")
    for name in ("gamma_bright", "gamma_dark", "k_ion", "k_rec"):
        if not math.isfinite(getattr(params, name)):
            raise ParameterError(f"{name} must be finite")
    if T == 0:
        pmf = np.zeros((2, n_max + 1))
        pmf[:, 0] = 1.0
        return ConditionalPmf(pmf, params, T, np.zeros(2))
    if method == "rk4":
        steps = n_steps if n_steps is not None else rk4_steps(params, T)
        raw = _backend.count_master_rk4(params.gamma_bright, params.gamma_dark,
                                        params.k_ion, params.k_rec, T, n_max, int(steps))
        raw = np.asarray(raw)
    elif method == "spectral":
        raw = _spectral(params, T, n_max)
    else:
        raise ParameterError(f"unknown pmf method {method!r}")
    tail = 1.0 - raw.sum(axis=1)
    if np.any(tail > TAIL_LIMIT):
        raise TruncationError(
            f"tail mass {tail.max():.2e} beyond n_max={n_max} exceeds {TAIL_LIMIT:g}; "
            "raise n_max")
    pmf = np.clip(raw, 0.0, None)
    pmf = pmf / pmf.sum(axis=1, keepdims=True)
    return ConditionalPmf(pmf, params, T, np.clip(tail, 0.0, None))


def cluster_conditional_pmfs(cluster: ClusterModel, method: str = "rk4") -> list[ConditionalPmf]:
    return [single_emitter_pmf(e, cluster.readout_time, cluster.n_max, method=method)
            for e in cluster.emitters]


def _convolve_truncated(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m = a.shape[-1]
    out = np.convolve(a, b)[:m]
    lost = 1.0 - out.sum()
    if lost > TAIL_LIMIT:
        raise TruncationError(
            f"convolution tail mass {lost:.2e} beyond n_max={m - 1} exceeds {TAIL_LIMIT:g}")
    return out / out.sum()


def _check_shared_n_max(pmfs: Sequence[ConditionalPmf]) -> int:
    if not pmfs:
        raise ParameterError("need at least one emitter pmf")
    n_max = pmfs[0].n_max
    if any(p.n_max != n_max for p in pmfs):
        raise ParameterError("all conditional pmfs must share n_max")
    return n_max


def cluster_pmf(pmfs: Sequence[ConditionalPmf], init) -> np.ndarray:
    """Count pmf of the summed emission for a joint initial charge config.

    Convolves the per-emitter conditional pmfs left to right, truncating at
    the shared ``n_max`` and checking the discarded mass.
    """
    _check_shared_n_max(pmfs)
    config = charge_config(init, len(pmfs))
    out = pmfs[0][config[0]].copy()
    for p, c in zip(pmfs[1:], config[1:]):
        out = _convolve_truncated(out, p[c])
    return out


def all_cluster_pmfs(pmfs: Sequence[ConditionalPmf]) -> np.ndarray:
    """Cluster pmfs for every config in :func:`all_charge_configs` order.

    Shape (2**N, n_max + 1). Shares partial convolutions across configs.
    """
    _check_shared_n_max(pmfs)
    table = pmfs[0].pmf.copy()
    for p in pmfs[1:]:
        rows = []
        for prefix in table:
            rows.append(_convolve_truncated(prefix, p.neg))
            rows.append(_convolve_truncated(prefix, p.neutral))
        table = np.array(rows)
    return table


def _weights_vector(weights, n_emitters: int) -> np.ndarray:
    n_configs = 2 ** n_emitters
    if isinstance(weights, dict):
        w = np.zeros(n_configs)
        for config, value in weights.items():
            w[config_index(charge_config(config, n_emitters))] += float(value)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n_configs,):
            raise ParameterError(f"expected {n_configs} charge weights, got shape {w.shape}")
    if np.any(w < 0):
        raise ParameterError("charge weights must be non-negative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ParameterError(f"charge weights must sum to 1, got {w.sum()!r}")
    return w


def mixture_pmf(pmfs: Sequence[ConditionalPmf], charge_weights) -> np.ndarray:
    """Pmf of a histogram whose initial joint charge config is random.

    ``charge_weights`` is either a dict mapping configs to probabilities or a
    vector over :func:`all_charge_configs` (index 0 = all NEG).
    """
    w = _weights_vector(charge_weights, len(pmfs))
    table = all_cluster_pmfs(pmfs)
    out = w @ table
    return out / out.sum()


def charge_config_labels(n_emitters: int) -> list[str]:
    return ["".join(c.symbol for c in config) for config in all_charge_configs(n_emitters)]


def pmf_to_text(pmf: np.ndarray, header: dict | None = None) -> str:
    lines = [f"# {k}: {v}" for k, v in (header or {}).items()]
    lines.append("# count\tprobability")
    lines.extend(f"{n}\t{p!r}" for n, p in enumerate(np.asarray(pmf, dtype=float).tolist()))
    return "\n".join(lines) + "\n"


def pmf_from_text(text: str) -> np.ndarray:
    values = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            n, p = line.split()
            values.append((int(n), float(p)))
    out = np.zeros(max(n for n, _ in values) + 1)
    for n, p in values:
        out[n] = p
    return out


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """TV distance 0.5 * sum |p - q| after zero-padding to a common length."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m = max(p.size, q.size)
    p = np.pad(p, (0, m - p.size))
    q = np.pad(q, (0, m - q.size))
    return 0.5 * float(np.abs(p - q).sum())
