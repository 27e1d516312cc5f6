import numpy as np
import pytest

from annbn.benchmarks import f1d, gen_1d
from annbn.dataset import Dataset, normalize_targets
from annbn.deep import DeepConfig, deepen, predict_deep, stack_layers
from annbn.errors import ShapeMismatch, TooFewObservations
from annbn.sigmoid_net import SigmoidConfig, fit

pytestmark = pytest.mark.filterwarnings("ignore::annbn.errors.RankDeficientWarning")


def shallow_1d(seed=0):
    ds = gen_1d(100, seed=seed)
    return ds, fit(ds, SigmoidConfig(neurons=50, cluster="balanced", seed=seed))


def test_deepen_two_layers_close_to_shallow():
    ds, net = shallow_1d()
    shallow = np.mean(np.abs(net.predict(ds.X) - ds.y))
    deep = deepen(net, ds, 2)
    assert deep.depth == 2
    assert deep.info["train_mae"] <= 5 * shallow


def test_deepen_single_neuron_smoke():
    ds = gen_1d(30, seed=1)
    net = fit(ds, SigmoidConfig(neurons=1))
    deep = deepen(net, ds, 2)
    assert all(np.all(np.isfinite(W)) for W in deep.layers)
    assert np.all(np.isfinite(deep.v))
    assert deep.layers[1].shape == (2, 1)


def test_deepen_head_matches_its_own_fit():
    ds, net = shallow_1d(2)
    deep = deepen(net, ds, 2)
    H = deep.hidden(ds.X)
    O = np.hstack([H, np.ones((ds.m, 1))])
    np.testing.assert_allclose(deep.predict_scaled(ds.X), O @ deep.v, rtol=0, atol=1e-10)
    y_s, _ = normalize_targets(ds.y, 0.4, 0.6)
    g = O.T @ (O @ deep.v - y_s)
    assert np.max(np.abs(g)) <= 1e-8 * np.max(np.abs(O.T @ y_s))


def test_deepen_layer_shapes_and_determinism():
    ds, net = shallow_1d(3)
    a = deepen(net, ds, 4, DeepConfig(seed=5))
    b = deepen(net, ds, 4, DeepConfig(seed=5))
    assert [W.shape for W in a.layers] == [(2, 50)] + [(51, 50)] * 3
    for Wa, Wb in zip(a.layers, b.layers):
        np.testing.assert_array_equal(Wa, Wb)
    np.testing.assert_array_equal(a.v, b.v)
    with pytest.raises(ValueError):
        deepen(net, ds, 1)


def test_zero_head_and_single_row():
    ds, net = shallow_1d(4)
    deep = deepen(net, ds, 2)
    deep.v = np.zeros_like(deep.v)
    out = predict_deep(deep, ds.X)
    assert np.ptp(out) == 0.0
    assert predict_deep(deep, np.array([[0.3]])).shape == (1,)
    with pytest.raises(ShapeMismatch):
        deep.predict(np.zeros((2, 3)))


def test_stack_linear_data_exact():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(40, 1))
    ds = Dataset(X, 3 * X[:, 0] - 1)
    deep = stack_layers(ds, 2)
    assert deep.info["train_mae"] <= 1e-6


def test_stack_three_layers_against_shallow():
    ds = gen_1d(100, seed=0)
    xt = np.random.default_rng(10_000).uniform(ds.X.min(), ds.X.max(), 500)
    cfg = SigmoidConfig(neurons=50, cluster="balanced", seed=0)
    shallow = np.mean(np.abs(fit(ds, cfg).predict(xt[:, None]) - f1d(xt)))
    deep = stack_layers(ds, 3, cfg)
    pred = deep.predict(xt[:, None])
    assert np.all(np.isfinite(pred))
    assert np.mean(np.abs(pred - f1d(xt))) <= 10 * shallow


def test_stack_too_many_neurons():
    ds = gen_1d(20, seed=0)
    with pytest.raises(TooFewObservations):
        stack_layers(ds, 2, SigmoidConfig(neurons=5), neurons=[5, 30])
    with pytest.raises(ValueError):
        stack_layers(ds, 2, neurons=[5])


def test_deepen_mnist_digit_zero(mnist_path):
    from annbn.dataset import load_mnist_idx
    from annbn.sigmoid_net import binary_accuracy

    train = load_mnist_idx(mnist_path / "train-images-idx3-ubyte",
                           mnist_path / "train-labels-idx1-ubyte").take(np.arange(10_000))
    test = load_mnist_idx(mnist_path / "t10k-images-idx3-ubyte",
                          mnist_path / "t10k-labels-idx1-ubyte")
    ds = Dataset(train.X, (train.y == 0).astype(float))
    net = fit(ds, SigmoidConfig(neurons=1000, cluster="ascending", lo=0.01, hi=0.99))
    deep = deepen(net, ds, 10)
    assert deep.depth == 10
    assert binary_accuracy(deep, test.X, test.y, 0) >= 97.0
