import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annbn.clustering import ascending_partition, balance, default_neuron_count, kmeans
from annbn.errors import TooFewObservations

from oracles import MNIST_BLOCKS, MNIST_LAST_BLOCK, best_two_partition, wcss


def test_default_neuron_count():
    assert default_neuron_count(100, 1) == 50
    assert default_neuron_count(10, 9) == 1
    with pytest.raises(TooFewObservations):
        default_neuron_count(7, 9)


def test_two_blobs_match_brute_force():
    rng = np.random.default_rng(5)
    X = np.vstack([rng.normal(0, 0.3, (4, 2)), rng.normal(5, 0.3, (4, 2))])
    asg = kmeans(X, 2, seed=0)
    assert len(set(asg.labels[:4])) == 1 and len(set(asg.labels[4:])) == 1
    assert asg.labels[0] != asg.labels[4]
    assert wcss(X, asg.labels) == pytest.approx(best_two_partition(X), rel=1e-12)


def test_every_point_its_own_cluster():
    X = np.random.default_rng(0).normal(size=(12, 3))
    asg = kmeans(X, 12, seed=1)
    assert np.all(asg.sizes == 1)
    assert asg.inertia_history[-1] == pytest.approx(0.0, abs=1e-20)


def test_kmeans_is_bitwise_reproducible():
    X = np.random.default_rng(2).normal(size=(300, 4))
    a, b = kmeans(X, 7, seed=11), kmeans(X, 7, seed=11)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert a.centers.tobytes() == b.centers.tobytes()
    assert a.inertia_history == b.inertia_history


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 80), st.integers(1, 4), st.integers(0, 10_000), st.data())
def test_kmeans_invariants(m, n, seed, data):
    N = data.draw(st.integers(1, m))
    X = np.random.default_rng(seed).normal(size=(m, n))
    if data.draw(st.booleans()):
        X = np.round(X, 0)  # many duplicate points
    asg = kmeans(X, N, seed=seed, max_iter=50)
    assert np.all(asg.sizes >= 1) and asg.sizes.sum() == m
    np.testing.assert_array_equal(np.bincount(asg.labels, minlength=N), asg.sizes)
    h = np.array(asg.inertia_history)
    assert np.all(np.diff(h) <= 1e-9 * max(h[0], 1.0))


def test_ascending_partition_examples():
    np.testing.assert_array_equal(ascending_partition(10, 5).labels, [0] * 5 + [1] * 5)
    np.testing.assert_array_equal(ascending_partition(11, 5).sizes, [5, 6])
    big = ascending_partition(60000, 785)
    assert big.n_clusters == MNIST_BLOCKS
    assert big.sizes.sum() == 60000
    assert big.sizes[-1] == MNIST_LAST_BLOCK
    assert np.all(big.sizes[:-1] == 785)
    with pytest.raises(ValueError):
        ascending_partition(5, 6)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 500), st.data())
def test_ascending_partition_covers_once(m, data):
    size = data.draw(st.integers(1, m))
    asg = ascending_partition(m, size)
    assert np.all(np.diff(asg.labels) >= 0)
    assert sorted(np.concatenate(asg.groups()).tolist()) == list(range(m))
    assert np.all(asg.sizes >= size)


def test_balance_hits_target_size():
    X = np.random.default_rng(8).uniform(size=(63, 2))
    asg = balance(X, kmeans(X, 21, seed=0), 3)
    assert np.all(asg.sizes == 3)
    assert asg.centers.shape == (21, 2)


def test_groups_and_centers():
    X = np.arange(6.0).reshape(-1, 1)
    asg = ascending_partition(6, 3).with_centers(X)
    np.testing.assert_allclose(asg.centers.ravel(), [1.0, 4.0])
    assert [g.tolist() for g in asg.groups()] == [[0, 1, 2], [3, 4, 5]]
