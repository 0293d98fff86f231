"""Spin-to-charge conversion shot model and experiment generators.

A shot runs: charge reset (NV- with ``p_init_neg``), spin preparation, SCC
(an NV- emitter survives the ionization pulse with a spin-dependent
probability), then charge readout. Histograms of many shots are the input
to every readout method in this package.

Spin basis states are ordered lexicographically with emitter 0 as the most
significant digit: for two emitters ``00, 01, 10, 11``. Spin label 0 is
ms=0 (Sz eigenvalue +1/2), label 1 is ms=1 (Sz eigenvalue -1/2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from nvcluster.emitter import (
    Charge,
    ClusterModel,
    EmitterParams,
    Histogram,
    sample_cluster_counts,
)
from nvcluster.errors import ParameterError
from nvcluster.photon_stats import all_cluster_pmfs, cluster_conditional_pmfs
from nvcluster.rng import SeedLike, make_rng, spawn

IDEAL = "ideal"
RABI_THETAS = tuple(k * math.pi / 4 for k in range(5))
MEMORY_LIMIT = 50_000_000


def basis_labels(n_emitters: int) -> list[str]:
    return [format(j, f"0{n_emitters}b") for j in range(2 ** n_emitters)]


def _bits(n_emitters: int) -> np.ndarray:
    """(2**N, N) array of spin labels for each basis index."""
    j = np.arange(2 ** n_emitters)[:, None]
    shifts = np.arange(n_emitters - 1, -1, -1)[None, :]
    return (j >> shifts) & 1


@dataclass(frozen=True)
class SpinStateLabel:
    """Probability vector over the 2**N joint spin basis states."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        n = int(round(math.log2(p.size))) if p.size else 0
        if p.ndim != 1 or p.size < 2 or 2 ** n != p.size:
            raise ParameterError("label must have 2**N entries")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise ParameterError("label entries must lie in [0, 1]")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ParameterError(f"label must sum to 1, got {p.sum()!r}")
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n_emitters(self) -> int:
        return int(round(math.log2(self.probs.size)))

    @classmethod
    def basis(cls, spins: str | Sequence[int]) -> "SpinStateLabel":
        bits = [int(s) for s in spins]
        if any(b not in (0, 1) for b in bits):
            raise ParameterError("spin labels must be 0 or 1")
        p = np.zeros(2 ** len(bits))
        p[int("".join(map(str, bits)), 2)] = 1.0
        return cls(p)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(basis_labels(self.n_emitters), self.probs.tolist()))


@dataclass
class ExperimentRecord:
    label: SpinStateLabel
    histogram: Histogram
    metadata: dict = field(default_factory=dict)


def scc_survival(params: EmitterParams, spin: int) -> float:
    """Probability that an NV- emitter is still NV- after the SCC ionization pulse."""
    if spin not in (0, 1):
        raise ParameterError("spin must be 0 or 1")
    keep = 1.0 - params.eta_ionize
    if spin == 0:
        return keep
    return params.p_shelf + (1.0 - params.p_shelf) * keep


def readout_neg_probability(params: EmitterParams, spin: int) -> float:
    """P(NV- at charge readout | spin) including the charge reset yield."""
    return params.p_init_neg * scc_survival(params, spin)


def _label_array(label, n_emitters: int | None = None) -> np.ndarray:
    if isinstance(label, SpinStateLabel):
        arr = label.probs
    else:
        arr = np.asarray(label, dtype=float)
    if n_emitters is not None and arr.shape[-1] != 2 ** n_emitters:
        raise ParameterError(
            f"label has {arr.shape[-1]} entries, expected {2 ** n_emitters}")
    return arr


def charge_weights_for_labels(cluster: ClusterModel, labels) -> np.ndarray:
    """Weights over joint charge configs at readout for spin labels.

    ``labels`` is a single label or an array (K, 2**N); the result has the
    same leading shape. Each emitter maps spin to charge independently.
    """
    n = cluster.size
    arr = _label_array(labels, n)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    k = arr.shape[0]
    t = arr.reshape((k,) + (2,) * n)
    for i, e in enumerate(cluster.emitters):
        # rows: spin 0/1, columns: charge NEG/NEUTRAL
        m = np.array([[readout_neg_probability(e, s), 1.0 - readout_neg_probability(e, s)]
                      for s in (0, 1)])
        t = np.moveaxis(np.tensordot(t, m, axes=([i + 1], [0])), -1, i + 1)
    out = t.reshape(k, 2 ** n)
    return out[0] if single else out


class HistogramSampler:
    """Draws shot histograms for spin labels from the exact analytic pmf.

    Each shot is independent, so a histogram of S shots is multinomial over
    the mixture pmf. This is distributed identically to accumulating
    :func:`generate_shot` samples and much faster.
    """

    def __init__(self, cluster: ClusterModel, method: str = "rk4"):
        self.cluster = cluster
        self.n_max = cluster.n_max
        if 2 ** cluster.size * (cluster.n_max + 1) > MEMORY_LIMIT:
            raise ParameterError("cluster pmf table exceeds the memory bound")
        self.table = all_cluster_pmfs(cluster_conditional_pmfs(cluster, method=method))

    def pmfs(self, labels) -> np.ndarray:
        w = charge_weights_for_labels(self.cluster, labels)
        p = np.atleast_2d(w) @ self.table
        return p / p.sum(axis=1, keepdims=True)

    def sample(self, labels, shots: int, seed: SeedLike = None) -> np.ndarray:
        """Integer count histograms, shape (K, n_max + 1)."""
        rng = make_rng(seed)
        return rng.multinomial(int(shots), self.pmfs(labels))


def sample_charge_init(cluster: ClusterModel, shots: int, seed: SeedLike = None) -> np.ndarray:
    """Charge configs left by the reset pulse, shape (shots, N) of Charge values.

    Each emitter ends in NV- independently with probability ``p_init_neg``.
    """
    rng = make_rng(seed)
    p_init = np.array([e.p_init_neg for e in cluster.emitters])
    neg = rng.random((int(shots), cluster.size)) < p_init[None, :]
    return np.where(neg, int(Charge.NEG), int(Charge.NEUTRAL))


def generate_shots(cluster: ClusterModel, label, shots: int, seed: SeedLike = None) -> np.ndarray:
    """Monte Carlo photon counts of the full shot sequence.

    Spin configs are drawn from ``label``, then charge reset, SCC survival
    and the telegraph charge readout are simulated per shot.
    """
    rng = make_rng(seed)
    n = cluster.size
    probs = _label_array(label, n)
    idx = rng.choice(probs.size, size=int(shots), p=probs / probs.sum())
    spins = _bits(n)[idx]
    surv = np.array([[scc_survival(e, 0), scc_survival(e, 1)] for e in cluster.emitters])
    init_neg = sample_charge_init(cluster, int(shots), rng) == int(Charge.NEG)
    survive = rng.random((shots, n)) < surv[np.arange(n)[None, :], spins]
    neg = init_neg & survive
    charges = np.where(neg, int(Charge.NEG), int(Charge.NEUTRAL))
    return sample_cluster_counts(cluster, charges, rng, shots=int(shots))


def generate_shot(cluster: ClusterModel, label, seed: SeedLike = None) -> int:
    return int(generate_shots(cluster, label, 1, seed)[0])


def generate_histogram(cluster: ClusterModel, label, shots: int, seed: SeedLike = None,
                       method: str = "exact", sampler: HistogramSampler | None = None) -> Histogram:
    """Histogram of ``shots`` SCC shots for one spin label.

    ``method="exact"`` samples a multinomial from the analytic pmf;
    ``method="montecarlo"`` simulates every shot.
    """
    if method == "montecarlo":
        counts = generate_shots(cluster, label, shots, seed)
        return Histogram.from_samples(counts, cluster.n_max)
    if method != "exact":
        raise ParameterError(f"unknown histogram method {method!r}")
    sampler = sampler or HistogramSampler(cluster)
    return Histogram(sampler.sample(_label_array(label, cluster.size), shots, seed)[0])


def generate_basis_dataset(cluster: ClusterModel, shots_per_state: int, seed: SeedLike = None,
                           method: str = "exact") -> list[ExperimentRecord]:
    """One histogram per joint spin basis state."""
    if shots_per_state < 1000:
        raise ParameterError("shots_per_state must be >= 1000")
    n = cluster.size
    sampler = HistogramSampler(cluster) if method == "exact" else None
    rngs = spawn(seed, 2 ** n)
    records = []
    for j, name in enumerate(basis_labels(n)):
        label = SpinStateLabel.basis(name)
        hist = generate_histogram(cluster, label, shots_per_state, rngs[j], method=method,
                                  sampler=sampler)
        records.append(ExperimentRecord(label, hist, {"basis": name, "shots": shots_per_state,
                                                      "record_id": f"basis-{name}"}))
    return records


def rabi_probs(thetas) -> np.ndarray:
    """Product label(s) with p(spin=1) = sin^2(theta/2) per emitter.

    ``thetas`` has shape (N,) or (K, N); returns (2**N,) or (K, 2**N).
    """
    th = np.asarray(thetas, dtype=float)
    single = th.ndim == 1
    th = np.atleast_2d(th)
    p1 = np.sin(th / 2.0) ** 2
    out = np.ones((th.shape[0], 1))
    for i in range(th.shape[1]):
        pair = np.stack([1.0 - p1[:, i], p1[:, i]], axis=1)
        out = (out[:, :, None] * pair[:, None, :]).reshape(th.shape[0], -1)
    return out[0] if single else out


def rabi_label(theta_per_emitter) -> SpinStateLabel:
    return SpinStateLabel(rabi_probs(theta_per_emitter))


@dataclass(frozen=True)
class Expectations:
    sz: np.ndarray      # (..., N)
    szsz: np.ndarray    # (..., N, N); off-diagonal entries are pair correlators

    def pair(self, i: int = 0, j: int = 1):
        return self.szsz[..., i, j]


def expectations(label) -> Expectations:
    """<Sz_i> and <Sz_i Sz_j> for a label or a (K, 2**N) batch of labels."""
    arr = _label_array(label)
    n = int(round(math.log2(arr.shape[-1])))
    values = 0.5 - _bits(n).astype(float)       # +1/2 for spin 0, -1/2 for spin 1
    sz = arr @ values
    szsz = np.einsum("...j,ja,jb->...ab", arr, values, values)
    return Expectations(sz, szsz)


Readout = Callable[[np.ndarray], np.ndarray]


def _predict(readout, X: np.ndarray, truth: np.ndarray, n_emitters: int) -> np.ndarray:
    if isinstance(readout, str) and readout == IDEAL:
        return truth
    predict = getattr(readout, "predict", readout)
    out = np.asarray(predict(X))
    if out.shape != truth.shape:
        raise ParameterError(
            f"readout returned shape {out.shape}, expected {truth.shape} for "
            f"{n_emitters} emitters")
    return out


def _normalized(hists: np.ndarray) -> np.ndarray:
    return hists / hists.sum(axis=1, keepdims=True)


@dataclass
class TomographyTable:
    thetas: np.ndarray
    sz_mean: np.ndarray      # (n_theta, N)
    sz_std: np.ndarray
    parity_mean: np.ndarray  # (n_theta,) pair (0, 1)
    parity_std: np.ndarray

    def rows(self) -> list[dict]:
        out = []
        for k, th in enumerate(self.thetas):
            row = {"theta": float(th), "theta_over_pi": float(th / math.pi)}
            for i in range(self.sz_mean.shape[1]):
                row[f"sz{i + 1}"] = float(self.sz_mean[k, i])
                row[f"sz{i + 1}_std"] = float(self.sz_std[k, i])
            row["parity"] = float(self.parity_mean[k])
            row["parity_std"] = float(self.parity_std[k])
            out.append(row)
        return out


def run_rabi_tomography(cluster: ClusterModel, readout, thetas: Sequence[float] = RABI_THETAS,
                        histograms_per_theta: int = 64, shots: int = 10_000,
                        seed: SeedLike = None, sampler: HistogramSampler | None = None) -> TomographyTable:
    """Rotate every emitter by the same angle, read out, and average expectations.

    For each angle, ``histograms_per_theta`` histograms are measured and fed
    to ``readout``; means and standard deviations are taken over those
    histograms. Pass ``readout=IDEAL`` to use the true labels.
    """
    if cluster.size < 2:
        raise ParameterError("tomography needs at least two emitters")
    sampler = sampler or HistogramSampler(cluster)
    rngs = spawn(seed, len(thetas))
    n = cluster.size
    sz_m, sz_s, par_m, par_s = [], [], [], []
    for th, rng in zip(thetas, rngs):
        truth = np.tile(rabi_probs([th] * n), (histograms_per_theta, 1))
        X = _normalized(sampler.sample(truth, shots, rng))
        pred = _predict(readout, X, truth, n)
        ex = expectations(pred)
        sz_m.append(ex.sz.mean(axis=0))
        sz_s.append(ex.sz.std(axis=0))
        par_m.append(ex.pair(0, 1).mean())
        par_s.append(ex.pair(0, 1).std())
    return TomographyTable(np.asarray(thetas, dtype=float), np.array(sz_m), np.array(sz_s),
                           np.array(par_m), np.array(par_s))


@dataclass
class SensingResult:
    sz_mean: np.ndarray
    parity: float
    covariance: np.ndarray
    block_signals: np.ndarray
    block_sz: np.ndarray
    block_parity: np.ndarray

    def as_dict(self) -> dict:
        out = {f"sz{i + 1}": float(v) for i, v in enumerate(self.sz_mean)}
        out["parity"] = float(self.parity)
        out["covariance"] = float(self.covariance[0, 1])
        out["n_blocks"] = int(self.block_signals.size)
        return out


def run_correlated_sensing(cluster: ClusterModel, readout, n_histograms: int = 200,
                           shots: int = 10_000, seed: SeedLike = None, anti: bool = False,
                           sampler: HistogramSampler | None = None) -> SensingResult:
    """Random idle / pi-pulse signal applied jointly to all emitters.

    Each block draws the signal with probability 1/2 and measures one
    histogram. With ``anti=True`` odd-indexed emitters receive the opposite
    rotation. Reports mean single-spin expectations, mean block parity of
    emitters 0 and 1, and the covariance of block single-spin estimates.
    """
    if cluster.size < 2:
        raise ParameterError("correlated sensing needs at least two emitters")
    rng = make_rng(seed)
    n = cluster.size
    signals = rng.integers(0, 2, n_histograms)
    flip = np.array([(i % 2 == 1) and anti for i in range(n)])
    thetas = math.pi * np.where(flip[None, :], 1 - signals[:, None], signals[:, None])
    truth = rabi_probs(thetas)
    sampler = sampler or HistogramSampler(cluster)
    X = _normalized(sampler.sample(truth, shots, rng))
    pred = _predict(readout, X, truth, n)
    ex = expectations(pred)
    cov = np.atleast_2d(np.cov(ex.sz, rowvar=False))
    return SensingResult(sz_mean=ex.sz.mean(axis=0), parity=float(ex.pair(0, 1).mean()),
                         covariance=cov, block_signals=signals, block_sz=ex.sz,
                         block_parity=ex.pair(0, 1))


@dataclass(frozen=True)
class Resonance:
    center: float
    linewidth: float
    amplitude: float

    def flip_probability(self, freqs) -> np.ndarray:
        f = np.asarray(freqs, dtype=float)
        return self.amplitude / (1.0 + ((f - self.center) / (0.5 * self.linewidth)) ** 2)


@dataclass
class OdmrResult:
    freqs: np.ndarray
    peak_rates: np.ndarray          # (n_freq, 4) fraction of events per digitized peak
    thresholds: tuple[int, int, int]
    emitter_peak: dict              # emitter index -> peak index (1 or 2) of its lone-NV- peak
    occupancy: np.ndarray           # (n_freq, 2) demultiplexed P(NV-) per emitter

    @property
    def peak2(self) -> np.ndarray:
        return self.peak_rates[:, 1]

    @property
    def peak3(self) -> np.ndarray:
        return self.peak_rates[:, 2]

    def trace(self, emitter: int) -> np.ndarray:
        return self.peak_rates[:, self.emitter_peak[emitter]]


def odmr_thresholds(cluster: ClusterModel, sampler: HistogramSampler | None = None):
    """Valley positions of the equal-weight 4-peak pmf of a two-emitter cluster.

    Returns ``(thresholds, emitter_peak)``: counts ``< t0`` fall in peak 0,
    ``[t0, t1)`` in peak 1, ``[t1, t2)`` in peak 2 and the rest in peak 3.
    """
    if cluster.size != 2:
        raise ParameterError("demultiplexed ODMR is defined for two emitters")
    sampler = sampler or HistogramSampler(cluster)
    n = np.arange(cluster.n_max + 1)
    means = sampler.table @ n      # configs --, -0, 0-, 00
    variances = sampler.table @ (n ** 2) - means ** 2
    lone = {0: means[1], 1: means[2]}
    if abs(lone[0] - lone[1]) <= math.sqrt(variances[1]) + math.sqrt(variances[2]):
        raise ParameterError(
            "emitters are not distinguishable by brightness; use the neural-network "
            "readout instead of peak digitization")
    peak_configs = [int(c) for c in np.argsort(means)]
    peak_means = means[peak_configs]
    mix = sampler.table.mean(axis=0)
    thresholds = []
    for a, b in zip(peak_means[:-1], peak_means[1:]):
        lo, hi = int(math.ceil(a)), int(math.floor(b))
        if hi <= lo:
            raise ParameterError("histogram peaks overlap; cannot place thresholds")
        thresholds.append(lo + int(np.argmin(mix[lo:hi + 1])))
    emitter_peak = {0: peak_configs.index(1), 1: peak_configs.index(2)}
    return tuple(thresholds), emitter_peak


def run_odmr_demux(cluster: ClusterModel, resonances: Sequence[Resonance], freq_grid,
                   shots: int = 10_000, seed: SeedLike = None,
                   sampler: HistogramSampler | None = None) -> OdmrResult:
    """Pulsed ODMR read out by digitizing SCC histograms into four peaks.

    Each emitter flips to ms=1 with a Lorentzian probability around its own
    resonance. The middle two peaks (one emitter NV-, the other NV0) give one
    trace per emitter.
    """
    if len(resonances) != cluster.size:
        raise ParameterError("need one resonance per emitter")
    sampler = sampler or HistogramSampler(cluster)
    thresholds, emitter_peak = odmr_thresholds(cluster, sampler)
    freqs = np.asarray(freq_grid, dtype=float)
    thetas = np.column_stack([2.0 * np.arcsin(np.sqrt(np.clip(r.flip_probability(freqs), 0, 1)))
                              for r in resonances])
    hists = sampler.sample(rabi_probs(thetas), shots, seed)
    edges = [0, *thresholds, cluster.n_max + 1]
    rates = np.column_stack([hists[:, a:b].sum(axis=1) for a, b in zip(edges[:-1], edges[1:])])
    rates = rates / hists.sum(axis=1, keepdims=True)
    both = rates[:, 3]
    occupancy = np.column_stack([rates[:, emitter_peak[0]] + both,
                                 rates[:, emitter_peak[1]] + both])
    return OdmrResult(freqs, rates, thresholds, emitter_peak, occupancy)


def spread_cluster(base: EmitterParams, n_emitters: int, spread: float, readout_time: float,
                   seed: SeedLike = None, n_max: int | None = None) -> ClusterModel:
    """Cluster of emitters dispersed around ``base``.

    Brightness factors are geometric from ``1 + spread`` (emitter 0) down to
    1 (last emitter), so two emitters at spread 1 have the 2:1 brightness
    ratio. Switching rates get independent log-normal jitter of width
    ``spread / 2``.
    """
    if spread < 0:
        raise ParameterError("spread must be >= 0")
    rng = make_rng(seed)
    emitters = []
    for i in range(n_emitters):
        frac = (n_emitters - 1 - i) / (n_emitters - 1) if n_emitters > 1 else 0.0
        f = (1.0 + spread) ** frac
        jitter = np.exp(rng.normal(0.0, 0.5 * spread, 2)) if spread > 0 else np.ones(2)
        emitters.append(base.replace(gamma_bright=base.gamma_bright * f,
                                     gamma_dark=base.gamma_dark * f,
                                     k_ion=base.k_ion * jitter[0],
                                     k_rec=base.k_rec * jitter[1]))
    return ClusterModel(tuple(emitters), readout_time, n_max)


@dataclass
class LabeledHistograms:
    """Histograms (K, n_max + 1) with their true labels (K, 2**N) and ids."""

    counts: np.ndarray
    labels: np.ndarray
    thetas: np.ndarray
    ids: np.ndarray

    @property
    def X(self) -> np.ndarray:
        return _normalized(self.counts)

    def __len__(self) -> int:
        return self.counts.shape[0]


def rabi_grid_dataset(cluster: ClusterModel, n_histograms: int, shots: int,
                      seed: SeedLike = None, grid: Sequence[float] = RABI_THETAS,
                      sampler: HistogramSampler | None = None, id_prefix: str = "rabi",
                      full_grid: bool = False) -> LabeledHistograms:
    """Histograms of product Rabi states with angles from ``grid``.

    With ``full_grid=True`` every grid point of the N-dimensional Rabi grid
    gets ``n_histograms`` histograms; otherwise each of the ``n_histograms``
    histograms draws its angles independently and uniformly from ``grid``.
    """
    rng = make_rng(seed)
    n = cluster.size
    grid = np.asarray(grid, dtype=float)
    if full_grid:
        idx = np.array(np.meshgrid(*[np.arange(grid.size)] * n, indexing="ij")).reshape(n, -1).T
        idx = np.repeat(idx, n_histograms, axis=0)
    else:
        idx = rng.integers(0, grid.size, (n_histograms, n))
    thetas = grid[idx]
    labels = rabi_probs(thetas)
    sampler = sampler or HistogramSampler(cluster)
    counts = sampler.sample(labels, shots, rng)
    ids = np.array([f"{id_prefix}-{k:06d}" for k in range(len(labels))])
    return LabeledHistograms(counts, labels, thetas, ids)


@dataclass
class ScalingDataset:
    cluster: ClusterModel
    basis: list[ExperimentRecord]
    train: LabeledHistograms
    test: LabeledHistograms


def generate_scaling_datasets(n_emitters_list: Sequence[int], distinguishability_spread: float,
                              shots: int, seed: SeedLike = None,
                              base: EmitterParams | None = None, readout_time: float = 3e-4,
                              n_train: int = 1600, n_test: int = 400,
                              n_max: int | None = None) -> dict[int, ScalingDataset]:
    """Basis and Rabi-grid datasets for clusters of several sizes.

    Train and test histograms draw their Rabi angles independently, so for
    larger clusters most test states are unseen during training.
    """
    if distinguishability_spread < 0:
        raise ParameterError("spread must be >= 0")
    base = base or SCALING_BASE
    out = {}
    rngs = spawn(seed, len(n_emitters_list))
    for n, rng in zip(n_emitters_list, rngs):
        r_cluster, r_basis, r_train, r_test = spawn(rng, 4)
        probe = spread_cluster(base, n, distinguishability_spread, readout_time, r_cluster)
        if 2 ** n * (probe.n_max + 1) > MEMORY_LIMIT:
            suggested = MEMORY_LIMIT // 2 ** n - 1
            raise ParameterError(
                f"2**{n} configs x n_max={probe.n_max} exceeds the memory bound; "
                f"shorten the readout window so that n_max <= {suggested}")
        cluster = probe if n_max is None else probe.replace(n_max=n_max)
        sampler = HistogramSampler(cluster)
        basis = generate_basis_dataset(cluster, shots, r_basis)
        train = rabi_grid_dataset(cluster, n_train, shots, r_train, sampler=sampler,
                                  id_prefix=f"n{n}-train")
        test = rabi_grid_dataset(cluster, n_test, shots, r_test, sampler=sampler,
                                 id_prefix=f"n{n}-test")
        out[n] = ScalingDataset(cluster, basis, train, test)
    return out


PAPER_PAIR = (
    EmitterParams(gamma_bright=1e5, gamma_dark=1e3, k_ion=50.0, k_rec=10.0,
                  p_init_neg=0.63, p_shelf=0.3, eta_ionize=0.9),
    EmitterParams(gamma_bright=5e4, gamma_dark=5e2, k_ion=50.0, k_rec=10.0,
                  p_init_neg=0.63, p_shelf=0.3, eta_ionize=0.9),
)
PAPER_READOUT_TIME = 1e-3
SCALING_BASE = PAPER_PAIR[1]


def paper_pair_cluster() -> ClusterModel:
    """Two emitters with a 2:1 brightness ratio and ~30% shelving contrast."""
    return ClusterModel(PAPER_PAIR, PAPER_READOUT_TIME)
