"""Emitter and cluster domain types plus the Monte Carlo telegraph simulator.

Each emitter is a two-state (NV- / NV0) continuous-time Markov chain whose
photon emission rate depends on the current charge state. Monte Carlo
sampling here is the brute-force reference for the analytic pmfs in
:mod:`nvcluster.photon_stats`.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from nvcluster import _backend
from nvcluster.errors import ParameterError, TruncationError
from nvcluster.rng import SeedLike, make_rng

TAIL_LIMIT = 1e-6


class Charge(enum.IntEnum):
    NEG = 0
    NEUTRAL = 1

    @property
    def symbol(self) -> str:
        return "-" if self is Charge.NEG else "0"

    @classmethod
    def parse(cls, value) -> "Charge":
        if isinstance(value, Charge):
            return value
        if isinstance(value, str):
            key = value.strip().upper()
            aliases = {"-": cls.NEG, "NEG": cls.NEG, "NV-": cls.NEG,
                       "0": cls.NEUTRAL, "NEUTRAL": cls.NEUTRAL, "NV0": cls.NEUTRAL}
            if key in aliases:
                return aliases[key]
            raise ParameterError(f"unknown charge state {value!r}")
        return cls(int(value))


ChargeConfig = tuple  # tuple[Charge, ...], one entry per emitter


def charge_config(states, n_emitters: int | None = None) -> tuple[Charge, ...]:
    """Normalize ``states`` (e.g. ``"-0"`` or ``[Charge.NEG, 1]``) to a tuple of Charge."""
    config = tuple(Charge.parse(s) for s in states)
    if n_emitters is not None and len(config) != n_emitters:
        raise ParameterError(
            f"charge config has {len(config)} entries, cluster has {n_emitters} emitters")
    return config


def all_charge_configs(n_emitters: int) -> list[tuple[Charge, ...]]:
    """All joint charge configurations; index 0 is all-NEG, last is all-NEUTRAL.

    Emitter 0 is the most significant position, so the index of a config is
    its NEG=0/NEUTRAL=1 bit string read as a binary number.
    """
    return [tuple(c) for c in itertools.product((Charge.NEG, Charge.NEUTRAL), repeat=n_emitters)]


def config_index(config: Sequence[Charge]) -> int:
    idx = 0
    for c in config:
        idx = 2 * idx + int(c)
    return idx


def _check_finite_nonneg(name, value):
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value}")
    if value < 0:
        raise ParameterError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class EmitterParams:
    """Rates (1/s) and probabilities describing one blinking emitter.

    ``p_init_neg`` is the chance the charge-reset pulse leaves the emitter in
    NV-, ``p_shelf`` the chance an ms=1 spin sits in the metastable singlet
    when the ionization pulse arrives, and ``eta_ionize`` the chance that
    unprotected NV- population is ionized by that pulse.
    """

    gamma_bright: float
    gamma_dark: float = 0.0
    k_ion: float = 0.0
    k_rec: float = 0.0
    p_init_neg: float = 1.0
    p_shelf: float = 0.3
    eta_ionize: float = 0.9

    def __post_init__(self):
        for name in ("gamma_bright", "gamma_dark", "k_ion", "k_rec"):
            object.__setattr__(self, name, float(getattr(self, name)))
            _check_finite_nonneg(name, getattr(self, name))
        for name in ("p_init_neg", "p_shelf", "eta_ionize"):
            object.__setattr__(self, name, float(getattr(self, name)))
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ParameterError(f"{name} must lie in [0, 1], got {value}")
        if self.gamma_bright < self.gamma_dark:
            raise ParameterError("gamma_bright must be >= gamma_dark")

    def rate(self, charge: Charge) -> float:
        return self.gamma_bright if Charge.parse(charge) is Charge.NEG else self.gamma_dark

    def replace(self, **changes) -> "EmitterParams":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return EmitterParams(**values)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def poisson_tail(mean: float, n_max: int) -> float:
    """P(X > n_max) for X ~ Poisson(mean)."""
    if mean <= 0:
        return 0.0
    return float(stats.poisson.sf(n_max, mean))


def default_n_max(mean_upper: float, tail: float = 1e-8, factor: float = 1.5) -> int:
    """Smallest n with Poisson(mean_upper) tail below ``tail``, scaled by ``factor``."""
    if mean_upper <= 0:
        return 1
    n = int(stats.poisson.isf(tail, mean_upper))
    while n > 0 and stats.poisson.sf(n - 1, mean_upper) < tail:
        n -= 1
    while stats.poisson.sf(n, mean_upper) >= tail:
        n += 1
    return max(1, int(math.ceil(factor * n)))


@dataclass(frozen=True)
class ClusterModel:
    """Ordered emitters sharing one readout window of ``readout_time`` seconds.

    The photon count is stochastically dominated by Poisson(sum gamma_bright * T),
    so ``n_max`` is accepted only if that bound leaves less than 1e-6 mass above it.
    """

    emitters: tuple[EmitterParams, ...]
    readout_time: float
    n_max: int | None = None

    def __post_init__(self):
        emitters = tuple(self.emitters)
        if not emitters:
            raise ParameterError("a cluster needs at least one emitter")
        for e in emitters:
            if not isinstance(e, EmitterParams):
                raise ParameterError("emitters must be EmitterParams instances")
        object.__setattr__(self, "emitters", emitters)
        T = float(self.readout_time)
        if not (math.isfinite(T) and T > 0):
            raise ParameterError(f"readout_time must be > 0, got {self.readout_time}")
        object.__setattr__(self, "readout_time", T)
        upper = self.bright_mean
        if self.n_max is None:
            object.__setattr__(self, "n_max", default_n_max(upper))
        else:
            n_max = int(self.n_max)
            if n_max < 1:
                raise ParameterError("n_max must be >= 1")
            tail = poisson_tail(upper, n_max)
            if tail >= TAIL_LIMIT:
                raise TruncationError(
                    f"n_max={n_max} leaves tail mass {tail:.2e} >= {TAIL_LIMIT:g}; "
                    f"use n_max >= {default_n_max(upper, tail=TAIL_LIMIT, factor=1.0)}")
            object.__setattr__(self, "n_max", n_max)

    @property
    def size(self) -> int:
        return len(self.emitters)

    @property
    def bright_mean(self) -> float:
        return sum(e.gamma_bright for e in self.emitters) * self.readout_time

    def replace(self, **changes) -> "ClusterModel":
        values = {"emitters": self.emitters, "readout_time": self.readout_time,
                  "n_max": self.n_max}
        values.update(changes)
        return ClusterModel(**values)

    def to_dict(self) -> dict:
        return {
            "readout_time": self.readout_time,
            "n_max": self.n_max,
            "emitters": [e.to_dict() for e in self.emitters],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClusterModel":
        try:
            emitters = tuple(EmitterParams(**e) for e in data["emitters"])
            return cls(emitters, float(data["readout_time"]), data.get("n_max"))
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed cluster description: {exc}") from exc


@dataclass(frozen=True)
class Histogram:
    """Photon-count frequencies for counts 0..n_max."""

    counts: np.ndarray
    total_shots: int = field(default=-1)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size < 1:
            raise ParameterError("histogram counts must be a non-empty 1-D array")
        if not np.all(np.equal(np.mod(counts, 1), 0)) or np.any(counts < 0):
            raise ParameterError("histogram counts must be non-negative integers")
        counts = counts.astype(np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        total = int(counts.sum())
        if self.total_shots == -1:
            object.__setattr__(self, "total_shots", total)
        elif int(self.total_shots) != total:
            raise ParameterError(
                f"sum(counts)={total} does not match total_shots={self.total_shots}")

    @property
    def n_max(self) -> int:
        return self.counts.size - 1

    @classmethod
    def from_samples(cls, samples, n_max: int) -> "Histogram":
        samples = np.asarray(samples, dtype=np.int64)
        if samples.size and samples.max() > n_max:
            raise TruncationError(
                f"observed count {int(samples.max())} exceeds n_max={n_max}")
        return cls(np.bincount(samples, minlength=n_max + 1))

    def normalized(self) -> np.ndarray:
        if self.total_shots == 0:
            raise ParameterError("cannot normalize an empty histogram")
        return self.counts / self.total_shots

    def mean(self) -> float:
        return float(np.dot(np.arange(self.counts.size), self.counts) / self.total_shots)

    def to_text(self, header: dict | None = None) -> str:
        lines = [f"# {k}: {v}" for k, v in (header or {}).items()]
        lines.append("# count\tfrequency")
        lines.extend(f"{n}\t{c}" for n, c in enumerate(self.counts.tolist()))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Histogram":
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            n, c = line.split()
            rows.append((int(n), int(c)))
        if not rows:
            raise ParameterError("histogram file has no data rows")
        n_max = max(n for n, _ in rows)
        counts = np.zeros(n_max + 1, dtype=np.int64)
        for n, c in rows:
            counts[n] = c
        return cls(counts)


def _validate_T(T: float) -> float:
    T = float(T)
    if not math.isfinite(T) or T < 0:
        raise ParameterError(f"readout time must be finite and >= 0, got {T}")
    return T


def sample_charge_trajectory(params: EmitterParams, init, T: float,
                             seed: SeedLike = None) -> list[tuple[Charge, float]]:
    """Gillespie realization of the charge telegraph process on [0, T].

    Returns ``(state, dwell)`` segments whose dwell times sum to ``T``. The
    random draws are consumed in the same order as :func:`sample_counts`, so
    a trajectory and a count drawn from equal seeds describe the same shot.
    """
    T = _validate_T(T)
    if T <= 0:
        raise ParameterError("trajectory requires T > 0")
    rng = make_rng(seed)
    state = Charge.parse(init)
    segments = []
    t = 0.0
    while True:
        rate = params.k_ion if state is Charge.NEG else params.k_rec
        if rate <= 0.0:
            segments.append((state, T - t))
            break
        dwell = rng.standard_exponential() / rate
        if t + dwell >= T:
            segments.append((state, T - t))
            break
        segments.append((state, dwell))
        t += dwell
        state = Charge.NEUTRAL if state is Charge.NEG else Charge.NEG
    return segments


def _init_array(init, shots: int) -> np.ndarray:
    if isinstance(init, (Charge, str, int, np.integer)):
        c = Charge.parse(init)
        return np.full(shots, 1 if c is Charge.NEG else 0, dtype=np.uint8)
    arr = np.asarray(init)
    if arr.shape != (shots,):
        raise ParameterError("per-shot init array must have length equal to shots")
    return (arr == int(Charge.NEG)).astype(np.uint8)


def sample_counts(params: EmitterParams, init, T: float, seed: SeedLike = None,
                  shots: int | None = None):
    """Photon counts of one emitter: Poisson of the integrated emission rate.

    ``init`` is a Charge or, for batches, an integer array of Charge values.
    Returns an int for ``shots=None``, else an int64 array of length ``shots``.
    """
    T = _validate_T(T)
    rng = make_rng(seed)
    n = 1 if shots is None else int(shots)
    init_neg = _init_array(init, n)
    out = _backend.telegraph_counts(rng, params.gamma_bright, params.gamma_dark,
                                    params.k_ion, params.k_rec, T, init_neg)
    return int(out[0]) if shots is None else out


def sample_cluster_counts(cluster: ClusterModel, init, seed: SeedLike = None,
                          shots: int | None = None):
    """Sum of independent per-emitter counts.

    ``init`` is a ChargeConfig, or for batches an array of shape
    (shots, n_emitters) of Charge values. Emitters are sampled in order from
    one stream, all shots of emitter 0 first.
    """
    rng = make_rng(seed)
    n = 1 if shots is None else int(shots)
    if isinstance(init, np.ndarray) and init.ndim == 2:
        if init.shape != (n, cluster.size):
            raise ParameterError("per-shot init array must have shape (shots, n_emitters)")
        columns = [init[:, i] for i in range(cluster.size)]
    else:
        config = charge_config(init, cluster.size)
        columns = list(config)
    total = np.zeros(n, dtype=np.int64)
    for params, col in zip(cluster.emitters, columns):
        total += sample_counts(params, col, cluster.readout_time, rng, shots=n)
    return int(total[0]) if shots is None else total


def steady_state_neg(params: EmitterParams) -> float:
    """Stationary NV- occupancy under continuous illumination."""
    total = params.k_ion + params.k_rec
    if total == 0:
        return params.p_init_neg
    return params.k_rec / total


def relaxation_neg(params: EmitterParams, init, t: float) -> float:
    """P(NV- at time t) for the two-state chain started in ``init``."""
    total = params.k_ion + params.k_rec
    start = 1.0 if Charge.parse(init) is Charge.NEG else 0.0
    if total == 0:
        return start
    stationary = params.k_rec / total
    return stationary + (start - stationary) * math.exp(-total * t)


def independent_charge_weights(probs_neg: Iterable[float]) -> np.ndarray:
    """Product weights over :func:`all_charge_configs` for per-emitter P(NV-)."""
    w = np.ones(1)
    for p in probs_neg:
        w = np.outer(w, [p, 1.0 - p]).ravel()
    return w
