"""End-to-end acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line (shown in the terminal summary)
and then asserts. Tolerances are the stated ones; nothing is loosened here.
"""
import math
import time

import numpy as np
import pytest
import yaml
from scipy import stats

from nvcluster import scc
from nvcluster.calibration import fit_histogram, fit_power_scaling, simulate_power_sweep
from nvcluster.cli import main
from nvcluster.emitter import (
    Charge,
    ClusterModel,
    EmitterParams,
    Histogram,
    sample_cluster_counts,
    sample_counts,
    steady_state_neg,
)
from nvcluster.nn import (
    Architecture,
    TrainConfig,
    init_model,
    loss_and_grads,
    run_scaling_study,
    split_by_id,
    train,
)
from nvcluster.nn import layers
from nvcluster.photon_stats import (
    ConditionalPmf,
    cluster_conditional_pmfs,
    cluster_pmf,
    single_emitter_pmf,
    total_variation,
)

pytestmark = pytest.mark.slow


def _random_emitter(rng):
    gb = rng.uniform(1e4, 6e4)
    return EmitterParams(gamma_bright=gb, gamma_dark=gb * rng.uniform(0.0, 0.15),
                         k_ion=10 ** rng.uniform(1.5, 3.3), k_rec=10 ** rng.uniform(1.5, 3.3))


# 1 ---------------------------------------------------------------------------

def test_criterion_1_oracle_equivalence(acceptance):
    rng = np.random.default_rng(2024)
    T, shots = 1e-3, 1_000_000
    start = time.perf_counter()
    worst = 0.0
    for k in range(20):
        a, b = _random_emitter(rng), _random_emitter(rng)
        init = Charge(int(rng.integers(2)))
        single = ClusterModel((a,), T)
        p = single_emitter_pmf(a, T, single.n_max)[init]
        x = sample_counts(a, init, T, seed=rng, shots=shots)
        worst = max(worst, total_variation(np.bincount(x) / shots, p))
        cluster = ClusterModel((a, b), T)
        config = tuple(Charge(int(c)) for c in rng.integers(2, size=2))
        p = cluster_pmf(cluster_conditional_pmfs(cluster), config)
        x = sample_cluster_counts(cluster, config, rng, shots=shots)
        worst = max(worst, total_variation(np.bincount(x) / shots, p))
    elapsed = time.perf_counter() - start
    ok = worst < 0.01 and elapsed < 300
    acceptance(1, ok, f"max TV over 20 sets x (single, cluster) = {worst:.4f} (< 0.01), "
                      f"runtime {elapsed:.1f}s (< 300s)")
    assert ok


# 2 ---------------------------------------------------------------------------

def test_criterion_2_poisson_limits(acceptance):
    e = EmitterParams(gamma_bright=2.5e4, gamma_dark=4e3)
    n = np.arange(121)
    worst_single = 0.0
    for method in ("rk4", "spectral"):
        p = single_emitter_pmf(e, 1e-3, 120, method=method)
        worst_single = max(worst_single,
                           np.max(np.abs(p.neg - stats.poisson.pmf(n, 25.0))),
                           np.max(np.abs(p.neutral - stats.poisson.pmf(n, 4.0))))

    def exact(mean):
        row = stats.poisson.pmf(n, mean)
        return ConditionalPmf(np.vstack([row, row]), e, 1e-3, np.zeros(2))

    conv = cluster_pmf([exact(18.0), exact(23.0)], "--")
    worst_conv = float(np.max(np.abs(conv - stats.poisson.pmf(n, 41.0))))
    ok = worst_single < 1e-6 and worst_conv < 1e-9
    acceptance(2, ok, f"no-switching pmf vs Poisson {worst_single:.2e} (< 1e-6); "
                      f"convolved Poissons {worst_conv:.2e} (< 1e-9)")
    assert ok


# 3 ---------------------------------------------------------------------------

CAL_TRUTH = (EmitterParams(gamma_bright=1e5, gamma_dark=2e3, k_ion=300.0, k_rec=150.0),
             EmitterParams(gamma_bright=5e4, gamma_dark=1e3, k_ion=200.0, k_rec=100.0))


def test_criterion_3_calibration(acceptance):
    truth = ClusterModel(CAL_TRUTH, 1e-3)
    rng = np.random.default_rng(77)
    shots = 100_000
    init = np.column_stack([(rng.random(shots) >= steady_state_neg(e)).astype(np.int64)
                            for e in truth.emitters])
    hist = Histogram.from_samples(sample_cluster_counts(truth, init, rng, shots=shots), truth.n_max)
    guess = [e.replace(gamma_bright=e.gamma_bright * 1.15, gamma_dark=e.gamma_dark * 1.15,
                       k_ion=e.k_ion * 0.8, k_rec=e.k_rec * 1.25) for e in CAL_TRUTH]
    template = ClusterModel(tuple(guess), 1e-3, truth.n_max)
    fit = fit_histogram(hist, template, seed=1)
    errors = {f"{name}[{i}]": abs(getattr(f, name) / getattr(t, name) - 1)
              for i, (f, t) in enumerate(zip(fit.emitters, CAL_TRUTH))
              for name in ("gamma_bright", "k_ion", "k_rec")}
    worst_rate = max(errors.values())

    sweep = simulate_power_sweep(ClusterModel(CAL_TRUTH, 1e-3), [0.5, 0.75, 1.0, 1.5, 2.0],
                                 shots, seed=5)
    result = fit_power_scaling(sweep, template, seed=2)
    ion = [result.laws[(i, "k_ion")].exponent for i in range(2)]
    emis = [result.laws[(i, "gamma_bright")].exponent for i in range(2)]
    ok = (fit.converged and result.converged and worst_rate < 0.05
          and all(abs(x - 2.0) <= 0.1 for x in ion) and all(abs(x - 1.0) <= 0.05 for x in emis))
    acceptance(3, ok, f"max rate error {worst_rate:.3f} (< 0.05); ionization exponents "
                      f"{ion[0]:.3f}, {ion[1]:.3f} (2 +- 0.1); emission exponents "
                      f"{emis[0]:.3f}, {emis[1]:.3f} (1 +- 0.05)")
    assert ok


# 4 ---------------------------------------------------------------------------

def test_criterion_4_charge_init_yield(acceptance):
    cluster = ClusterModel(tuple(e.replace(p_init_neg=0.63) for e in CAL_TRUTH), 1e-3)
    init = scc.sample_charge_init(cluster, 200_000, seed=11)
    frac = float(np.mean(np.all(init == int(Charge.NEG), axis=1)))
    ok = abs(frac - 0.40) <= 0.01
    acceptance(4, ok, f"double-negative fraction {frac:.4f} (0.40 +- 0.01)")
    assert ok


# 5 ---------------------------------------------------------------------------

def _rel(a, b):
    d = np.linalg.norm(np.ravel(a)) + np.linalg.norm(np.ravel(b))
    return 0.0 if d == 0 else float(np.linalg.norm(np.ravel(a) - np.ravel(b)) / d)


def _numeric(f, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(x.size):
        old = x.flat[i]
        x.flat[i] = old + h
        fp = f()
        x.flat[i] = old - h
        fm = f()
        x.flat[i] = old
        g.flat[i] = (fp - fm) / (2 * h)
    return g


def test_criterion_5_gradient_suite(acceptance):
    rng = np.random.default_rng(5)
    worst = {}
    # conv
    x, W, b = rng.uniform(-1, 1, (2, 2, 13)), rng.uniform(-1, 1, (3, 2, 5)), rng.uniform(-1, 1, 3)
    out, cache = layers.conv1d_forward(x, W, b)
    proj = rng.uniform(-1, 1, out.shape)
    grads = layers.conv1d_backward(proj, cache)
    f = lambda: float(np.sum(layers.conv1d_forward(x, W, b)[0] * proj))  # noqa: E731
    worst["conv"] = max(_rel(_numeric(f, t), g) for t, g in zip((x, W, b), grads))
    # dense
    x, W, b = rng.uniform(-1, 1, (4, 7)), rng.uniform(-1, 1, (7, 5)), rng.uniform(-1, 1, 5)
    out, cache = layers.dense_forward(x, W, b)
    proj = rng.uniform(-1, 1, out.shape)
    grads = layers.dense_backward(proj, cache)
    f = lambda: float(np.sum(layers.dense_forward(x, W, b)[0] * proj))  # noqa: E731
    worst["dense"] = max(_rel(_numeric(f, t), g) for t, g in zip((x, W, b), grads))
    # conv -> relu -> pool path and loss with L2 through the whole model
    arch = Architecture(input_length=18, output_width=4, channels=3, dense=(6, 5))
    model = init_model(arch, 0)
    for k in model.params:
        model.params[k] = rng.uniform(-1, 1, model.params[k].shape)
    X, Y = rng.uniform(-1, 1, (3, 18)), rng.uniform(0, 1, (3, 4))
    _, g = loss_and_grads(model, X, Y, 1e-2)
    f = lambda: loss_and_grads(model, X, Y, 1e-2)[0]  # noqa: E731
    worst["pool path (conv weights)"] = max(_rel(_numeric(f, model.params[k]), g[k])
                                            for k in ("conv_W", "conv_b"))
    worst["loss incl. L2"] = max(_rel(_numeric(f, model.params[k]), g[k]) for k in model.params)
    ok = all(v < 1e-5 for v in worst.values())
    acceptance(5, ok, "max relative error " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
               + " (< 1e-5)")
    assert ok


# 6-8: readout network on the two-emitter paper-like pair ----------------------

@pytest.fixture(scope="module")
def pair_readout():
    cluster = scc.paper_pair_cluster()
    sampler = scc.HistogramSampler(cluster)
    data = scc.rabi_grid_dataset(cluster, 64, 10_000, seed=101, sampler=sampler,
                                 full_grid=True, id_prefix="train")
    test = scc.rabi_grid_dataset(cluster, 16, 10_000, seed=202, sampler=sampler,
                                 full_grid=True, id_prefix="test")
    idx_tr, idx_va = split_by_id(data.ids, 0.2, seed=0)
    start = time.perf_counter()
    model, report = train(init_model(Architecture(cluster.n_max + 1, 4), 0),
                          (data.X[idx_tr], data.labels[idx_tr]),
                          (data.X[idx_va], data.labels[idx_va]), TrainConfig(seed=0),
                          test_set=(test.X, test.labels),
                          train_ids=data.ids[idx_tr], validation_ids=data.ids[idx_va])
    elapsed = time.perf_counter() - start
    return cluster, sampler, model, report, elapsed


def test_criterion_6_pair_readout_quality(acceptance, pair_readout):
    _, _, _, report, elapsed = pair_readout
    ok = report.test_pearson > 0.9 and elapsed < 900
    acceptance(6, ok, f"held-out Pearson r = {report.test_pearson:.4f} (> 0.9), training "
                      f"{elapsed:.0f}s over {report.epochs_completed} epochs (< 900s)")
    assert ok


def test_criterion_7_tomography(acceptance, pair_readout):
    cluster, sampler, model, _, _ = pair_readout
    tab = scc.run_rabi_tomography(cluster, model, seed=303, sampler=sampler)
    ideal = np.cos(tab.thetas) ** 2 / 4
    dev = np.abs(tab.parity_mean - ideal)
    positive = bool(np.all(tab.parity_mean >= -tab.parity_std))
    mid = int(np.argmin(np.abs(tab.thetas - math.pi / 2)))
    zero = abs(tab.parity_mean[mid]) <= tab.parity_std[mid]
    ok = bool(np.all(dev <= 0.08)) and positive and zero
    acceptance(7, ok, f"max |parity - cos^2/4| = {dev.max():.4f} (<= 0.08); never below -std: "
                      f"{positive}; parity(pi/2) = {tab.parity_mean[mid]:.4f} "
                      f"+- {tab.parity_std[mid]:.4f} (zero within error)")
    assert ok


def test_criterion_8_correlated_sensing(acceptance, pair_readout):
    cluster, sampler, model, _, _ = pair_readout
    res = scc.run_correlated_sensing(cluster, model, n_histograms=200, seed=404, sampler=sampler)
    ok = bool(np.all(np.abs(res.sz_mean) < 0.08)) and res.parity > 0.12
    acceptance(8, ok, f"<Sz1> = {res.sz_mean[0]:+.4f}, <Sz2> = {res.sz_mean[1]:+.4f} "
                      f"(|.| < 0.08); <Sz1 Sz2> = {res.parity:.4f} (> 0.12)")
    assert ok


# 9 ---------------------------------------------------------------------------

SCALING_SEEDS = (0, 1, 2)
SCALING_N = (2, 3, 4, 5, 6)


def SCALING_CONFIG(seed):
    return TrainConfig(seed=seed)


def test_criterion_9_scaling(acceptance):
    per_n = {n: [] for n in SCALING_N}
    for seed in SCALING_SEEDS:
        datasets = scc.generate_scaling_datasets(SCALING_N, 1.0, 10_000, seed)
        for row in run_scaling_study(SCALING_N, datasets, SCALING_CONFIG(seed)):
            per_n[row.n_emitters].append(row.pearson if row.pearson is not None else math.nan)
    med = [float(np.median(per_n[n])) for n in SCALING_N]
    monotone = all(a >= b for a, b in zip(med, med[1:]))
    ok = monotone and med[0] > 0.9 and med[-1] < 0.3
    acceptance(9, ok, "median r per N " + ", ".join(f"{n}: {m:.3f}" for n, m in zip(SCALING_N, med))
               + f"; non-increasing {monotone}; r(2) > 0.9, r(6) < 0.3")
    assert ok


# 10 --------------------------------------------------------------------------

def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _run_all(cfg_path, out):
    c = ["--config", str(cfg_path), "--seed", "17"]
    codes = [main(["simulate", *c, "--out", str(out / "data")])]
    codes.append(main(["train", *c, "--data", str(out / "data"), "--out", str(out / "model")]))
    model = str(out / "model" / "model.json")
    codes.append(main(["predict", *c, "--model", model, "--data", str(out / "data"),
                       "--out", str(out / "predict")]))
    codes.append(main(["tomography", *c, "--model", model, "--out", str(out / "tomography")]))
    codes.append(main(["sense", *c, "--model", model, "--out", str(out / "sense")]))
    codes.append(main(["odmr", *c, "--out", str(out / "odmr")]))
    codes.append(main(["scale", *c, "--out", str(out / "scale")]))
    return codes


def test_criterion_10_cli_determinism(acceptance, tmp_path):
    pair = scc.paper_pair_cluster().to_dict()
    cfg = {
        "cluster": pair,
        "simulate": {"mode": "rabi-grid", "shots": 5000, "histograms_per_point": 4},
        "train": {"epochs": 4},
        "tomography": {"histograms_per_theta": 4, "shots": 5000},
        "sense": {"n_histograms": 20, "shots": 5000},
        "scale": {"n_list": [2, 3], "n_train": 40, "n_test": 20, "shots": 5000, "epochs": 3},
        "odmr": {"resonances": [{"center": 2.80, "linewidth": 0.01}, {"center": 2.85, "linewidth": 0.01}],
                 "freq_grid": {"start": 2.75, "stop": 2.90, "num": 7}, "shots": 5000},
        "fit": {"n_starts": 2},
    }
    cfg_path = tmp_path / "run.yaml"
    cfg_path.write_text(yaml.safe_dump(cfg))
    sweep_cfg = {"cluster": {"readout_time": 1e-3, "emitters": [CAL_TRUTH[0].to_dict()]},
                 "simulate": {"mode": "power-sweep", "shots": 5000, "powers": [0.5, 1.0, 2.0]},
                 "fit": {"n_starts": 2}}
    sweep_path = tmp_path / "sweep.yaml"
    sweep_path.write_text(yaml.safe_dump(sweep_cfg))
    snaps, codes = [], []
    for rep in ("a", "b"):
        out = tmp_path / rep
        codes.extend(_run_all(cfg_path, out))
        c = ["--config", str(sweep_path), "--seed", "17"]
        codes.append(main(["simulate", *c, "--out", str(out / "sweep")]))
        codes.append(main(["fit", *c, "--data", str(out / "sweep"), "--out", str(out / "fit")]))
        snaps.append(_snapshot(out))
    identical = snaps[0] == snaps[1]
    ok = identical and all(code in (0, 3) for code in codes) and len(snaps[0]) > 20
    acceptance(10, ok, f"{len(snaps[0])} output files from simulate, fit, train, predict, "
                       f"tomography, sense, odmr, scale; bit-identical on re-run: {identical}")
    assert ok
