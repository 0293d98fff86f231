"""Maximum-likelihood calibration of emitter rates from count histograms.

The likelihood of a histogram is multinomial under the mixture pmf over
initial joint charge configurations. Rates are optimized in log space with a
multi-start bounded Nelder-Mead search; mixture weights are softmax logits.
The mixture pmf is assembled in the generating-function domain (one FFT per
evaluation), which is equivalent to the convolution route in
:mod:`nvcluster.photon_stats` and much cheaper inside the optimizer.

Dark emission rates are tied to the bright rates by the template ratio by
default. The summed count only depends on ``gamma_dark_i + gamma_bright_j``
combinations, so shifting emitter 1 up and emitter 2 down by the same amount
leaves the pmf unchanged; the tie removes that flat direction.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize

from nvcluster.emitter import (
    ClusterModel,
    EmitterParams,
    Histogram,
    default_n_max,
    independent_charge_weights,
    sample_cluster_counts,
    steady_state_neg,
)
from nvcluster.errors import ParameterError
from nvcluster.photon_stats import coefficients, generating_function, spectral_size
from nvcluster.rng import SeedLike, make_rng, spawn

log = logging.getLogger(__name__)

RATE_NAMES = ("gamma_bright", "gamma_dark", "k_ion", "k_rec")
DEFAULT_FREE = ("gamma_bright", "k_ion", "k_rec")
DEFAULT_SPAN = {"gamma_bright": 10.0, "gamma_dark": 10.0, "k_ion": 100.0, "k_rec": 100.0}


@dataclass
class FitResult:
    emitters: tuple[EmitterParams, ...]
    charge_weights: np.ndarray
    nll: float
    converged: bool
    iterations: int
    readout_time: float
    n_max: int
    starts: list[float] = field(default_factory=list)

    @property
    def cluster(self) -> ClusterModel:
        return ClusterModel(self.emitters, self.readout_time, self.n_max)

    def to_dict(self) -> dict:
        return {
            "emitters": [e.to_dict() for e in self.emitters],
            "charge_weights": [float(w) for w in self.charge_weights],
            "nll": float(self.nll),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "readout_time": self.readout_time,
            "n_max": self.n_max,
            "start_nlls": [float(s) for s in self.starts],
        }


@dataclass(frozen=True)
class PowerSweepDataset:
    """Histograms recorded at several laser powers with a shared window."""

    powers: tuple[float, ...]
    histograms: tuple[Histogram, ...]
    readout_time: float

    def __post_init__(self):
        if len(self.powers) != len(self.histograms):
            raise ParameterError("one histogram per power required")
        if len(set(self.powers)) < 3:
            raise ParameterError("a power sweep needs at least 3 distinct powers")
        if any(p <= 0 for p in self.powers):
            raise ParameterError("laser powers must be > 0")
        if len({h.n_max for h in self.histograms}) != 1:
            raise ParameterError("sweep histograms must share n_max")

    @property
    def n_max(self) -> int:
        return self.histograms[0].n_max


@dataclass(frozen=True)
class PowerLaw:
    amplitude: float
    exponent: float
    amplitude_err: float
    exponent_err: float

    def __call__(self, power):
        return self.amplitude * np.asarray(power, dtype=float) ** self.exponent


@dataclass
class PowerScalingResult:
    laws: dict  # (emitter index, rate name) -> PowerLaw
    fits: list[FitResult]
    powers: tuple[float, ...]
    converged: bool

    def table_rows(self) -> list[dict]:
        rows = []
        for (i, name), law in sorted(self.laws.items()):
            rows.append({"emitter": i, "rate": name, "amplitude": law.amplitude,
                         "amplitude_err": law.amplitude_err, "exponent": law.exponent,
                         "exponent_err": law.exponent_err})
        return rows


class _Objective:
    """NLL as a function of the packed parameter vector."""

    def __init__(self, hist: Histogram, guess: Sequence[EmitterParams], T: float,
                 free: Sequence[str], tie_dark: bool,
                 ratio_source: Sequence[EmitterParams] | None = None,
                 weights: str = "free"):
        self.counts = hist.counts.astype(float)
        self.occupied = np.nonzero(self.counts)[0]
        self.n_max = hist.n_max
        self.M = spectral_size(self.n_max)
        self.T = T
        self.guess = tuple(guess)
        self.free = tuple(free)
        self.tie_dark = tie_dark
        self.n_emitters = len(guess)
        self.n_rates = len(self.free) * self.n_emitters
        if weights not in ("free", "steady"):
            raise ParameterError(f"weights must be 'free' or 'steady', got {weights!r}")
        self.weights_mode = weights
        self.n_weights = 2 ** self.n_emitters - 1 if weights == "free" else 0
        self.dark_ratio = [e.gamma_dark / e.gamma_bright if e.gamma_bright > 0 else 0.0
                           for e in (ratio_source or guess)]

    def unpack(self, x: np.ndarray) -> tuple[list[EmitterParams], np.ndarray]:
        rates = np.exp(x[: self.n_rates]).reshape(self.n_emitters, len(self.free))
        emitters = []
        for i, base in enumerate(self.guess):
            changes = dict(zip(self.free, rates[i].tolist()))
            if self.tie_dark and "gamma_dark" not in self.free:
                gb = changes.get("gamma_bright", base.gamma_bright)
                changes["gamma_dark"] = self.dark_ratio[i] * gb
            emitters.append(base.replace(**changes))
        if self.weights_mode == "steady":
            return emitters, independent_charge_weights([steady_state_neg(e) for e in emitters])
        logits = np.concatenate([[0.0], x[self.n_rates:]])
        w = np.exp(logits - logits.max())
        return emitters, w / w.sum()

    def pack(self, emitters: Sequence[EmitterParams], weights: np.ndarray) -> np.ndarray:
        rates = [math.log(getattr(e, name)) for e in emitters for name in self.free]
        if self.weights_mode == "steady":
            return np.array(rates)
        w = np.clip(np.asarray(weights, dtype=float), 1e-12, None)
        logits = np.log(w[1:]) - np.log(w[0])
        return np.concatenate([rates, logits])

    def mixture(self, emitters: Sequence[EmitterParams], weights: np.ndarray) -> np.ndarray:
        gens = [generating_function(e, self.T, self.M) for e in emitters]
        table = gens[0]
        for g in gens[1:]:
            table = (table[:, None, :] * g[None, :, :]).reshape(-1, self.M)
        return coefficients(weights @ table, self.n_max)

    def nll_of(self, emitters, weights) -> float:
        if sum(e.gamma_bright for e in emitters) * self.T > 0.45 * self.M:
            return math.inf
        pmf = self.mixture(emitters, weights)
        p = pmf[self.occupied]
        if np.any(p <= 0):
            p = np.clip(p, 1e-300, None)
        return float(-np.dot(self.counts[self.occupied], np.log(p)))

    def __call__(self, x: np.ndarray) -> float:
        emitters, w = self.unpack(x)
        return self.nll_of(emitters, w)


def _em_weights(objective: _Objective, emitters, n_iter: int = 200) -> np.ndarray:
    """Mixture weights maximizing the likelihood at fixed rates (EM updates)."""
    n_configs = 2 ** objective.n_emitters
    table = np.empty((n_configs, objective.n_max + 1))
    for j in range(n_configs):
        onehot = np.zeros(n_configs)
        onehot[j] = 1.0
        table[j] = np.clip(objective.mixture(emitters, onehot), 1e-300, None)
    occ = objective.occupied
    h = objective.counts[occ]
    t = table[:, occ]
    w = np.full(n_configs, 1.0 / n_configs)
    for _ in range(n_iter):
        mix = w @ t
        w = w * (t @ (h / mix)) / h.sum()
    return w


def nll(hist: Histogram, emitters: Sequence[EmitterParams], charge_weights,
        readout_time: float) -> float:
    """Multinomial negative log-likelihood (constant term dropped)."""
    obj = _Objective(hist, emitters, readout_time, DEFAULT_FREE, tie_dark=False)
    return obj.nll_of(list(emitters), np.asarray(charge_weights, dtype=float))


def canonical_order(emitters: Sequence[EmitterParams], weights: np.ndarray):
    """Sort emitters by gamma_bright descending and permute config weights to match."""
    n = len(emitters)
    perm = sorted(range(n), key=lambda i: -emitters[i].gamma_bright)
    w = np.asarray(weights).reshape((2,) * n).transpose(perm).ravel()
    return tuple(emitters[i] for i in perm), w


def _bounds(guess: Sequence[EmitterParams], free, T, user_bounds, n_weights):
    out = []
    for e in guess:
        for name in free:
            if user_bounds and name in user_bounds:
                lo, hi = user_bounds[name]
            else:
                value = getattr(e, name)
                scale = value if value > 0 else 1.0 / T
                span = DEFAULT_SPAN[name]
                lo, hi = scale / span, scale * span
            if not (0 < lo < hi):
                raise ParameterError(f"bounds for {name} must satisfy 0 < lo < hi")
            out.append((math.log(lo), math.log(hi)))
    out.extend([(-30.0, 30.0)] * n_weights)
    return out


def fit_histogram(hist: Histogram, template: ClusterModel, bounds: dict | None = None,
                  init_guess: Sequence[EmitterParams] | ClusterModel | None = None,
                  n_starts: int = 8, seed: SeedLike = 0,
                  free: Sequence[str] = DEFAULT_FREE, tie_dark: bool = True,
                  weights: str = "steady", max_evals: int = 10_000,
                  workers: int = 1) -> FitResult:
    """Fit emitter rates and initial-charge weights to a count histogram.

    Parameters not listed in ``free`` are held at their ``init_guess`` values
    (template values by default), except ``gamma_dark`` which follows the
    bright rate when ``tie_dark`` is set. ``bounds`` maps a rate name to a
    (low, high) pair applied to every emitter. Start 0 is the initial guess;
    the other starts jitter it log-normally. The best start is then
    restarted once. Emitters are reported brightest first.

    ``weights="steady"`` ties the initial charge weights to each emitter's
    stationary NV- occupancy, which is the right model for windows cut from
    continuous illumination. ``weights="free"`` fits all 2**N - 1 weights;
    the switching rates are then only weakly identified because both
    directions of switching fill the same inter-peak bridge.
    """
    if hist.total_shots < 1000:
        raise ParameterError("fitting needs at least 1000 shots")
    if np.count_nonzero(hist.counts) < 2:
        raise ParameterError("degenerate histogram: a single occupied bin carries no rate information")
    unknown = set(free) - set(RATE_NAMES)
    if unknown:
        raise ParameterError(f"unknown free parameters {sorted(unknown)}")
    if init_guess is None:
        guess = template.emitters
    elif isinstance(init_guess, ClusterModel):
        guess = init_guess.emitters
    else:
        guess = tuple(init_guess)
    if len(guess) != template.size:
        raise ParameterError("init_guess must have one entry per template emitter")
    for e in guess:
        for name in free:
            if getattr(e, name) <= 0:
                raise ParameterError(f"initial guess for free rate {name} must be > 0")

    T = template.readout_time
    obj = _Objective(hist, guess, T, free, tie_dark, ratio_source=template.emitters,
                     weights=weights)
    n_weights = obj.n_weights
    bnds = _bounds(guess, free, T, bounds, n_weights)
    lo = np.array([b[0] for b in bnds])
    hi = np.array([b[1] for b in bnds])

    rng = make_rng(seed)
    w0 = _em_weights(obj, list(guess)) if weights == "free" else None
    x_guess = np.clip(obj.pack(guess, w0), lo, hi)
    starts = [x_guess]
    for _ in range(max(0, n_starts - 1)):
        x = x_guess.copy()
        x[: obj.n_rates] += rng.normal(0.0, 0.3, obj.n_rates)
        if n_weights:
            x[obj.n_rates:] += rng.normal(0.0, 0.5, n_weights)
        starts.append(np.clip(x, lo, hi))

    f0 = obj(x_guess)
    fatol = 1e-9 * abs(f0) if math.isfinite(f0) else 1e-6
    options = {"maxfev": max_evals, "fatol": fatol, "xatol": 1e-7, "adaptive": True}

    def run(x0):
        return optimize.minimize(obj, x0, method="Nelder-Mead", bounds=bnds, options=options)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(x0) for x0 in starts]
    best = min(results, key=lambda r: r.fun)
    polish = run(best.x)
    if polish.fun <= best.fun:
        best = polish
    total_evals = sum(r.nfev for r in results) + polish.nfev
    converged = bool(polish.success)
    if not converged:
        log.warning("histogram fit did not converge after %d evaluations", total_evals)
    emitters, w = obj.unpack(best.x)
    emitters, w = canonical_order(emitters, w)
    return FitResult(emitters=emitters, charge_weights=w, nll=float(best.fun),
                     converged=converged, iterations=int(total_evals), readout_time=T,
                     n_max=hist.n_max, starts=[float(r.fun) for r in results])


def _power_law(powers: np.ndarray, values: np.ndarray) -> PowerLaw:
    x = np.log(powers)
    y = np.log(values)
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(1, len(x) - 2)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(A.T @ A)
    log_amp, exponent = coef
    amp = math.exp(log_amp)
    return PowerLaw(amplitude=amp, exponent=float(exponent),
                    amplitude_err=amp * math.sqrt(cov[0, 0]),
                    exponent_err=math.sqrt(cov[1, 1]))


def fit_power_scaling(sweep: PowerSweepDataset, template: ClusterModel,
                      seed: SeedLike = 0, rates: Sequence[str] = ("gamma_bright", "k_ion", "k_rec"),
                      **fit_kwargs) -> PowerScalingResult:
    """Fit every sweep histogram, then log-log least squares per emitter and rate.

    Each histogram is fitted with the previous power's result as initial guess
    (powers are visited in increasing order). The result is flagged
    non-converged if any histogram fit was.
    """
    order = np.argsort(sweep.powers)
    powers = np.asarray(sweep.powers, dtype=float)[order]
    rngs = spawn(seed, len(order))
    template = template.replace(readout_time=sweep.readout_time, n_max=sweep.n_max)
    fits = []
    guess = template.emitters
    for k, idx in enumerate(order):
        fit = fit_histogram(sweep.histograms[idx], template, init_guess=guess,
                            seed=rngs[k], **fit_kwargs)
        fits.append(fit)
        guess = fit.emitters
    laws = {}
    for i in range(template.size):
        for name in rates:
            values = np.array([getattr(f.emitters[i], name) for f in fits])
            laws[(i, name)] = _power_law(powers, values)
    return PowerScalingResult(laws=laws, fits=fits, powers=tuple(powers.tolist()),
                              converged=all(f.converged for f in fits))


def simulate_power_sweep(reference: ClusterModel, powers: Sequence[float], shots: int,
                         seed: SeedLike = None, exponents: dict | None = None,
                         reference_power: float = 1.0) -> PowerSweepDataset:
    """Continuous-readout histograms with rates scaled as (P / P_ref) ** exponent.

    Each shot starts in the stationary charge distribution of the scaled
    emitter, as for a window cut from a continuous time trace.
    """
    exps = {"gamma_bright": 1.0, "gamma_dark": 1.0, "k_ion": 2.0, "k_rec": 1.0}
    exps.update(exponents or {})
    rng = make_rng(seed)
    scaled_clusters = []
    for p in powers:
        f = p / reference_power
        scaled_clusters.append([e.replace(**{k: getattr(e, k) * f ** v for k, v in exps.items()})
                                for e in reference.emitters])
    upper = max(sum(e.gamma_bright for e in em) for em in scaled_clusters) * reference.readout_time
    n_max = default_n_max(upper)
    histograms = []
    for emitters in scaled_clusters:
        cluster = ClusterModel(tuple(emitters), reference.readout_time, n_max)
        init = np.column_stack([
            (rng.random(shots) >= steady_state_neg(e)).astype(np.int64) for e in emitters])
        counts = sample_cluster_counts(cluster, init, rng, shots=shots)
        histograms.append(Histogram.from_samples(counts, n_max))
    return PowerSweepDataset(tuple(float(p) for p in powers), tuple(histograms),
                             reference.readout_time)


def write_fit_report(result: FitResult | PowerScalingResult, path: Path, extra: dict | None = None):
    if isinstance(result, FitResult):
        doc = {"kind": "fit", **result.to_dict()}
    else:
        doc = {"kind": "power_scaling", "powers": list(result.powers),
               "converged": result.converged,
               "laws": result.table_rows(), "fits": [f.to_dict() for f in result.fits]}
    if extra:
        doc["provenance"] = extra
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
