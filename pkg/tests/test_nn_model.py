import json

import numpy as np
import pytest

from nvcluster.errors import ModelFormatError, ParameterError, TrainingError
from nvcluster.nn import (
    Architecture,
    TrainConfig,
    calibrate,
    forward,
    init_model,
    load_model,
    loss,
    pearson,
    save_model,
    split_by_id,
    train,
)


@pytest.fixture
def arch():
    return Architecture(input_length=30, output_width=4)


def _toy_data(n, seed=0, length=30):
    """Histogram-like bumps whose position encodes the label."""
    rng = np.random.default_rng(seed)
    Y = rng.dirichlet(np.ones(4), n)
    grid = np.arange(length)
    centers = np.array([4, 11, 18, 25])
    X = Y @ np.exp(-0.5 * ((grid[None, :] - centers[:, None]) / 2.0) ** 2)
    X = X + rng.uniform(0, 0.02, X.shape)
    return X / X.sum(axis=1, keepdims=True), Y


def test_loss_examples():
    y = np.array([[0.0, 1.0, 0.0, 0.0]])
    assert loss(y, y, None, 0.0) == 0.0
    assert loss(np.array([[1.0, 0, 0, 0]]), y, None, 0.0) == 0.5
    params = {"a_W": np.array([1.0, 2.0]), "a_b": np.array([5.0])}
    assert loss(y, y, params, 0.1) == pytest.approx(0.5)
    assert loss(y, y, [np.array([3.0])], 0.1) == pytest.approx(0.9)
    with pytest.raises(ParameterError):
        loss(y, y[:, :2], None, 0.0)


def test_pearson_examples():
    y = np.random.default_rng(0).random((10, 4))
    assert pearson(y, y).r == pytest.approx(1.0)
    assert pearson(3.0 - y, y).r == pytest.approx(-1.0)
    res = pearson(np.full_like(y, 0.25), y)
    assert res.r == 0.0 and res.degenerate
    with pytest.raises(ParameterError):
        pearson([1.0], [1.0])


def test_calibrate_gives_probability_vectors():
    raw = np.array([[-0.5, 2.0, 0.3, 0.2], [-1, -1, -1, -1.0]])
    p = calibrate(raw)
    assert np.all(p >= 0)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(p[1], 0.25)


def test_zero_weights_output_is_bias(arch):
    model = init_model(arch, 0)
    for k in model.params:
        model.params[k][...] = 0.0
    model.params["out_b"][...] = [0.1, 0.2, 0.3, 0.6]
    raw, label = forward(model, np.full(30, 1 / 30))
    np.testing.assert_allclose(raw, [0.1, 0.2, 0.3, 0.6])
    assert label.probs.sum() == pytest.approx(1.0)


def test_forward_validates_input(arch):
    model = init_model(arch, 0)
    with pytest.raises(ParameterError):
        forward(model, np.full(29, 1 / 29))
    with pytest.raises(ParameterError):
        forward(model, np.full(30, 1.0))


def test_forward_deterministic(arch):
    model = init_model(arch, 1)
    x = _toy_data(1)[0][0]
    assert np.array_equal(forward(model, x)[0], forward(model, x)[0])


def test_memorizes_single_sample(arch):
    X, Y = _toy_data(1)
    X, Y = np.repeat(X, 8, axis=0), np.repeat(Y, 8, axis=0)
    _, rep = train(init_model(arch, 0), (X, Y), (X, Y),
                   TrainConfig(epochs=500, l2=0.0, batch_size=8, patience=500))
    assert min(rep.train_loss) < 1e-4


def test_training_learns_toy_problem(arch):
    X, Y = _toy_data(400, 1)
    Xt, Yt = _toy_data(100, 2)
    _, rep = train(init_model(arch, 0), (X[:320], Y[:320]), (X[320:], Y[320:]),
                   TrainConfig(epochs=60), test_set=(Xt, Yt))
    assert rep.test_pearson > 0.9
    assert len(rep.component_pearson) == 4
    assert len(rep.val_loss) == rep.epochs_completed


def test_training_is_deterministic(arch):
    X, Y = _toy_data(64, 3)
    cfg = TrainConfig(epochs=5, seed=11)
    a, ra = train(init_model(arch, 2), (X[:48], Y[:48]), (X[48:], Y[48:]), cfg)
    b, rb = train(init_model(arch, 2), (X[:48], Y[:48]), (X[48:], Y[48:]), cfg)
    assert ra.train_loss == rb.train_loss
    for k in a.params:
        assert np.array_equal(a.params[k], b.params[k])


def test_early_stopping_restores_best(arch):
    X, Y = _toy_data(64, 4)
    Xv, Yv = _toy_data(16, 5)
    Yv = Yv[::-1]  # unlearnable validation target
    model, rep = train(init_model(arch, 0), (X, Y), (Xv, Yv), TrainConfig(epochs=300, patience=5))
    assert rep.stopped_early
    assert rep.epochs_completed < 300
    assert rep.val_loss[rep.best_epoch - 1] == min(rep.val_loss)


def test_nan_loss_aborts(arch):
    X, Y = _toy_data(32, 6)
    with pytest.raises(TrainingError, match="learning rate"):
        train(init_model(arch, 0), (X, Y), (X, Y), TrainConfig(epochs=5, learning_rate=1e200))


def test_overlapping_ids_rejected(arch):
    X, Y = _toy_data(8)
    with pytest.raises(ParameterError):
        train(init_model(arch, 0), (X, Y), (X, Y), TrainConfig(epochs=1),
              train_ids=["a", "b"], validation_ids=["b"])


def test_split_by_id_disjoint():
    ids = [f"r{i}" for i in range(50)]
    tr, va = split_by_id(ids, 0.2, seed=1)
    assert len(va) == 10 and len(tr) == 40
    assert not set(tr) & set(va)
    with pytest.raises(ParameterError):
        split_by_id(["a", "a"], 0.5)


def test_train_config_validation():
    with pytest.raises(ParameterError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ParameterError):
        TrainConfig(l2=-1)


def test_architecture_validation():
    with pytest.raises(ParameterError):
        Architecture(input_length=30, output_width=3)
    with pytest.raises(ParameterError):
        Architecture(input_length=4, output_width=4)


def test_save_load_round_trip(tmp_path, arch):
    model = init_model(arch, 5)
    path = tmp_path / "m.json"
    save_model(model, path)
    back = load_model(path)
    X = _toy_data(5)[0]
    assert np.array_equal(model.predict(X), back.predict(X))
    assert back.arch == arch


def test_corrupted_model_rejected(tmp_path, arch):
    path = tmp_path / "m.json"
    save_model(init_model(arch, 5), path)
    doc = json.loads(path.read_text())
    doc["params"]["out_b"]["data"][0] = 1.0
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="checksum"):
        load_model(path)
    path.write_text("{not json")
    with pytest.raises(ModelFormatError):
        load_model(path)
    doc["version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="version"):
        load_model(path)


def test_l2_shrinks_weights():
    arch = Architecture(input_length=30, output_width=4, channels=4, dense=(16, 8))
    votes = 0
    for seed in range(3):
        X, Y = _toy_data(128, seed)
        norms = []
        for lam in (0.0, 1e-4, 1e-2):
            m, _ = train(init_model(arch, seed), (X[:96], Y[:96]), (X[96:], Y[96:]),
                         TrainConfig(epochs=30, l2=lam, seed=seed, patience=30))
            norms.append(sum(float(np.sum(m.params[k] ** 2)) for k in m.weight_names()))
        votes += norms[0] >= norms[1] >= norms[2]
    assert votes >= 2
