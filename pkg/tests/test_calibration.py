import numpy as np
import pytest

from nvcluster.calibration import (
    PowerSweepDataset,
    _power_law,
    canonical_order,
    fit_histogram,
    nll,
    simulate_power_sweep,
    write_fit_report,
)
from nvcluster.emitter import ClusterModel, EmitterParams, Histogram, sample_cluster_counts, steady_state_neg
from nvcluster.errors import ParameterError
from nvcluster.photon_stats import cluster_conditional_pmfs, mixture_pmf


def _steady_hist(cluster, shots, seed):
    rng = np.random.default_rng(seed)
    init = np.column_stack([(rng.random(shots) >= steady_state_neg(e)).astype(np.int64)
                            for e in cluster.emitters])
    return Histogram.from_samples(sample_cluster_counts(cluster, init, rng, shots=shots),
                                  cluster.n_max)


def test_power_law_exact():
    p = np.array([0.5, 1.0, 2.0, 4.0])
    law = _power_law(p, 3.0 * p ** 2)
    assert law.exponent == pytest.approx(2.0, abs=1e-12)
    assert law.amplitude == pytest.approx(3.0, rel=1e-12)
    assert law.exponent_err == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(law(p), 3.0 * p ** 2)


def test_canonical_order_permutes_weights():
    a = EmitterParams(gamma_bright=1e4)
    b = EmitterParams(gamma_bright=3e4)
    w = np.array([0.1, 0.2, 0.3, 0.4])  # (--, -0, 0-, 00) for (a, b)
    em, w2 = canonical_order([a, b], w)
    assert em == (b, a)
    assert w2.tolist() == [0.1, 0.3, 0.2, 0.4]


def test_nll_is_minimized_near_truth(pair):
    hist = _steady_hist(pair, 20_000, 1)
    w = np.outer(*[[steady_state_neg(e), 1 - steady_state_neg(e)] for e in pair.emitters]).ravel()
    at_truth = nll(hist, pair.emitters, w, pair.readout_time)
    off = [e.replace(gamma_bright=1.1 * e.gamma_bright, gamma_dark=1.1 * e.gamma_dark)
           for e in pair.emitters]
    assert nll(hist, off, w, pair.readout_time) > at_truth


def test_single_emitter_round_trip():
    truth = EmitterParams(gamma_bright=5e4, gamma_dark=1e3, k_ion=400.0, k_rec=200.0)
    cluster = ClusterModel((truth,), 1e-3)
    hist = _steady_hist(cluster, 100_000, 3)
    guess = truth.replace(gamma_bright=6e4, gamma_dark=1.2e3, k_ion=300.0, k_rec=260.0)
    fit = fit_histogram(hist, cluster, init_guess=[guess], n_starts=3, seed=0)
    assert fit.converged
    e = fit.emitters[0]
    assert e.gamma_bright == pytest.approx(5e4, rel=0.02)
    assert e.k_ion == pytest.approx(400.0, rel=0.1)
    assert e.k_rec == pytest.approx(200.0, rel=0.1)
    assert fit.charge_weights.sum() == pytest.approx(1.0)


def test_fit_is_seed_deterministic():
    truth = EmitterParams(gamma_bright=3e4, gamma_dark=1e3, k_ion=300.0, k_rec=300.0)
    cluster = ClusterModel((truth,), 1e-3)
    hist = _steady_hist(cluster, 5000, 4)
    a = fit_histogram(hist, cluster, n_starts=2, seed=7)
    b = fit_histogram(hist, cluster, n_starts=2, seed=7, workers=2)
    assert a.to_dict() == b.to_dict()


def test_fit_rejects_small_or_degenerate_histograms(pair):
    with pytest.raises(ParameterError):
        fit_histogram(Histogram(np.r_[500, 499, np.zeros(10, int)]), pair)
    with pytest.raises(ParameterError):
        fit_histogram(Histogram(np.r_[5000, np.zeros(10, int)]), pair)


def test_sweep_needs_three_powers(pair):
    h = _steady_hist(pair, 1000, 0)
    with pytest.raises(ParameterError):
        PowerSweepDataset((1.0, 2.0), (h, h), 1e-3)
    with pytest.raises(ParameterError):
        PowerSweepDataset((1.0, 2.0, -1.0), (h, h, h), 1e-3)


def test_simulated_sweep_mean_scales_with_power(pair):
    sweep = simulate_power_sweep(pair, [0.5, 1.0, 2.0], 20_000, seed=1)
    means = [h.mean() for h in sweep.histograms]
    assert means[0] < means[1] < means[2]
    pmf = mixture_pmf(cluster_conditional_pmfs(pair.replace(n_max=sweep.n_max)),
                      np.outer(*[[steady_state_neg(e), 1 - steady_state_neg(e)]
                                 for e in pair.emitters]).ravel())
    assert means[1] == pytest.approx(pmf @ np.arange(pmf.size), rel=0.01)


def test_fit_report_json(tmp_path):
    truth = EmitterParams(gamma_bright=3e4, gamma_dark=1e3, k_ion=300.0, k_rec=300.0)
    cluster = ClusterModel((truth,), 1e-3)
    fit = fit_histogram(_steady_hist(cluster, 5000, 4), cluster, n_starts=1)
    write_fit_report(fit, tmp_path / "r.json", {"seed": 1})
    text = (tmp_path / "r.json").read_text()
    assert '"kind": "fit"' in text and '"seed": 1' in text


def test_label_exchange_leaves_nll_unchanged(pair):
    hist = _steady_hist(pair, 5000, 2)
    w = np.array([0.4, 0.3, 0.2, 0.1])
    em, w2 = canonical_order(pair.emitters[::-1], w)
    a = nll(hist, pair.emitters[::-1], w, pair.readout_time)
    b = nll(hist, em, w2, pair.readout_time)
    assert a == pytest.approx(b, abs=1e-6)
