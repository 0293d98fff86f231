import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvcluster.emitter import (
    Charge,
    ClusterModel,
    EmitterParams,
    Histogram,
    all_charge_configs,
    charge_config,
    config_index,
    default_n_max,
    independent_charge_weights,
    relaxation_neg,
    sample_charge_trajectory,
    sample_cluster_counts,
    sample_counts,
    steady_state_neg,
)
from nvcluster.errors import ParameterError, TruncationError


def test_charge_parse_accepts_common_spellings():
    for s in ("-", "NEG", "nv-", 0, Charge.NEG):
        assert Charge.parse(s) is Charge.NEG
    for s in ("0", "neutral", "NV0", 1):
        assert Charge.parse(s) is Charge.NEUTRAL
    with pytest.raises(ParameterError):
        Charge.parse("+")


def test_config_order_first_emitter_most_significant():
    configs = all_charge_configs(2)
    assert configs[0] == (Charge.NEG, Charge.NEG)
    assert configs[1] == (Charge.NEG, Charge.NEUTRAL)
    assert configs[3] == (Charge.NEUTRAL, Charge.NEUTRAL)
    assert [config_index(c) for c in configs] == [0, 1, 2, 3]
    assert charge_config("-0") == (Charge.NEG, Charge.NEUTRAL)


@pytest.mark.parametrize("kwargs", [
    dict(gamma_bright=-1.0),
    dict(gamma_bright=1.0, gamma_dark=2.0),
    dict(gamma_bright=1.0, k_ion=math.nan),
    dict(gamma_bright=1.0, p_init_neg=1.5),
    dict(gamma_bright=1.0, p_shelf=-0.1),
])
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ParameterError):
        EmitterParams(**kwargs)


def test_cluster_n_max_checks_tail():
    e = EmitterParams(gamma_bright=1e5)
    c = ClusterModel((e,), 1e-3)
    assert c.n_max >= default_n_max(100.0) - 1
    with pytest.raises(TruncationError):
        ClusterModel((e,), 1e-3, n_max=110)


def test_cluster_dict_round_trip(pair):
    assert ClusterModel.from_dict(pair.to_dict()) == pair


def test_histogram_text_round_trip():
    h = Histogram(np.array([3, 0, 5, 1]))
    back = Histogram.from_text(h.to_text({"seed": 1}))
    assert np.array_equal(back.counts, h.counts)
    assert back.total_shots == 9


def test_histogram_validation():
    with pytest.raises(ParameterError):
        Histogram(np.array([1.5, 2]))
    with pytest.raises(ParameterError):
        Histogram(np.array([1, 2]), total_shots=4)
    with pytest.raises(TruncationError):
        Histogram.from_samples([0, 5], n_max=3)
    h = Histogram.from_samples([0, 1, 1, 3], n_max=4)
    assert h.counts.tolist() == [1, 2, 0, 1, 0]
    assert h.mean() == pytest.approx(1.25)


def test_zero_window_gives_zero_counts(emitter):
    assert np.all(sample_counts(emitter, Charge.NEG, 0.0, seed=1, shots=100) == 0)


def test_trajectory_dwells_sum_to_window(emitter):
    traj = sample_charge_trajectory(emitter, "NEG", 5e-3, seed=3)
    assert traj[0][0] is Charge.NEG
    assert sum(d for _, d in traj) == pytest.approx(5e-3)
    assert all(a[0] != b[0] for a, b in zip(traj, traj[1:]))


def test_no_switching_counts_are_poisson():
    e = EmitterParams(gamma_bright=2e4)
    x = sample_counts(e, Charge.NEG, 1e-3, seed=9, shots=200_000)
    assert x.mean() == pytest.approx(20.0, rel=0.01)
    assert x.var() == pytest.approx(20.0, rel=0.02)


def test_sampling_is_seed_deterministic(pair):
    a = sample_cluster_counts(pair, ("-", "0"), seed=4, shots=1000)
    b = sample_cluster_counts(pair, ("-", "0"), seed=4, shots=1000)
    assert np.array_equal(a, b)


def test_steady_state_and_relaxation(emitter):
    p = steady_state_neg(emitter)
    assert p == pytest.approx(150 / 550)
    assert relaxation_neg(emitter, Charge.NEG, 0.0) == pytest.approx(1.0)
    assert relaxation_neg(emitter, Charge.NEUTRAL, 1.0) == pytest.approx(p)


def test_independent_weights_outer_product():
    w = independent_charge_weights([0.63, 0.63])
    assert w[0] == pytest.approx(0.63 ** 2)
    assert w.sum() == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(1e3, 1e5), st.floats(0, 1), st.floats(0, 1e3), st.floats(0, 1e3))
def test_sampled_counts_nonnegative_and_bounded_by_rate(gb, frac, ki, kr):
    e = EmitterParams(gamma_bright=gb, gamma_dark=gb * frac, k_ion=ki, k_rec=kr)
    x = sample_counts(e, Charge.NEG, 1e-4, seed=0, shots=50)
    assert x.dtype.kind == "i" and np.all(x >= 0)
