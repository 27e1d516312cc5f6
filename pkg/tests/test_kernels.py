import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from annbn.errors import ShapeMismatch, UnsupportedDimension, UnsupportedOrder
from annbn.kernels import (
    KERNELS,
    Kernel,
    derivative_matrix,
    distance_sq,
    kernel_derivative,
    kernel_eval,
    kernel_matrix,
)

from oracles import central_difference, kernel_fd_mp, kernel_value


def test_distance_sq():
    assert distance_sq([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert distance_sq([0.0, 0.0], [3.0, 4.0]) == 25.0
    assert distance_sq([2.0], [5.0]) == 9.0
    with pytest.raises(ShapeMismatch):
        distance_sq([1.0], [1.0, 2.0])


def test_kernel_values():
    assert kernel_eval(Kernel("gaussian", 0.3), [0.2, 0.1], [0.2, 0.1]) == 1.0
    assert kernel_eval(Kernel("multiquadric", 2.0), [0.2], [0.2]) == 1.0
    assert kernel_eval(Kernel("quartic_polyharmonic"), [0.0, 0.0], [1.0, 1.0]) == -4.0
    for kind in KERNELS:
        k = Kernel(kind, 0.7)
        assert kernel_eval(k, [0.3], [-0.4]) == pytest.approx(kernel_value(kind, 0.7, [0.3], [-0.4]),
                                                             rel=1e-14)


def test_kernel_validation():
    with pytest.raises(ValueError):
        Kernel("thin_plate", 1.0)
    with pytest.raises(ValueError):
        Kernel("gaussian", 0.0)
    with pytest.raises(UnsupportedDimension):
        kernel_eval(Kernel("integrated_gaussian_2"), [0.0, 1.0], [1.0, 0.0])
    with pytest.raises(UnsupportedOrder):
        kernel_derivative(Kernel("gaussian"), [0.0], [1.0], 3, 0)
    with pytest.raises(UnsupportedDimension):
        kernel_derivative(Kernel("gaussian"), [0.0, 0.0], [1.0, 0.0], 1, 2)


def test_quartic_first_derivative_worked_example():
    # d = 1 here; the chain rule gives 2 (x_j1 - x_1) d^3 = +2
    val = kernel_derivative(Kernel("quartic_polyharmonic"), [1.0, 0.0], [0.0, 0.0], 1, 0)
    assert val == 2.0
    fd = kernel_fd_mp("quartic_polyharmonic", 1.0, [1.0, 0.0], [0.0, 0.0], 0, 1)
    assert val == pytest.approx(fd, rel=1e-9)


def test_quartic_second_derivative_formula():
    xj, x = [0.4, -0.2], [0.1, 0.3]
    d = distance_sq(xj, x)
    u = x[0] - xj[0]
    expected = -2 * d ** 3 - 12 * u * u * d ** 2
    assert kernel_derivative(Kernel("quartic_polyharmonic"), xj, x, 2, 0) == pytest.approx(expected)


@pytest.mark.parametrize("kind", ["gaussian", "multiquadric", "quartic_polyharmonic",
                                  "integrated_gaussian_2"])
def test_zero_slope_at_coincident_points(kind):
    n = 1 if kind == "integrated_gaussian_2" else 2
    assert kernel_derivative(Kernel(kind, 0.5), [0.3] * n, [0.3] * n, 1, 0) == 0.0


def test_gaussian_matches_plain_finite_difference():
    k = Kernel("gaussian", 0.5)
    f = lambda p: kernel_value("gaussian", 0.5, [0.1], p)
    fd = central_difference(f, [0.3], 0, 1, h=1e-5)
    assert kernel_derivative(k, [0.1], [0.3], 1, 0) == pytest.approx(fd, rel=1e-6)


def test_irbf_derivatives_recover_gaussian():
    k = Kernel("integrated_gaussian_2", 0.4)
    xs = np.linspace(-1, 1, 9)
    for x in xs:
        assert kernel_derivative(k, [0.2], [x], 2, 0) == pytest.approx(
            math.exp(-((x - 0.2) ** 2) / 0.16), rel=1e-14)
        assert kernel_derivative(k, [0.2], [x], 1, 0) == pytest.approx(
            0.5 * 0.4 * math.sqrt(math.pi) * math.erf((x - 0.2) / 0.4), rel=1e-14)


point = st.floats(-1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(KERNELS), st.integers(1, 3), st.floats(0.3, 2.0),
       st.lists(point, min_size=6, max_size=6), st.integers(1, 2), st.data())
def test_derivatives_match_finite_differences(kind, n, c, coords, order, data):
    if kind == "integrated_gaussian_2":
        n = 1
    xj, x = coords[:n], coords[3:3 + n]
    dim = data.draw(st.integers(0, n - 1))
    assume(distance_sq(xj, x) > 1e-4)  # away from the kernel centre
    analytic = kernel_derivative(Kernel(kind, c), xj, x, order, dim)
    fd = kernel_fd_mp(kind, c, xj, x, dim, order)
    assert abs(analytic - fd) <= 1e-5 * max(abs(fd), 1e-3)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(KERNELS), st.integers(1, 6), st.lists(point, min_size=12, max_size=12))
def test_kernel_symmetry(kind, n, coords):
    if kind == "integrated_gaussian_2":
        n = 1
    a, b = coords[:n], coords[6:6 + n]
    k = Kernel(kind, 0.8)
    assert kernel_eval(k, a, b) == kernel_eval(k, b, a)


def test_matrix_layout_and_derivative_matrix():
    rng = np.random.default_rng(0)
    C, P = rng.uniform(size=(4, 2)), rng.uniform(size=(3, 2))
    k = Kernel("multiquadric", 1.3)
    M = kernel_matrix(k, C, P)
    assert M.shape == (3, 4)
    assert M[2, 1] == pytest.approx(kernel_eval(k, C[1], P[2]), rel=1e-14)
    D = derivative_matrix(k, C, P, 2, 1)
    assert D[0, 3] == pytest.approx(kernel_derivative(k, C[3], P[0], 2, 1), rel=1e-14)
    np.testing.assert_array_equal(derivative_matrix(k, C, P, 0, 0), M)


def test_high_dimensional_distances_clipped_at_zero():
    X = np.random.default_rng(1).normal(size=(5, 50))
    M = kernel_matrix(Kernel("gaussian", 3.0), X, X)
    assert np.all(np.diag(M) <= 1.0) and np.all(np.diag(M) > 1 - 1e-12)
