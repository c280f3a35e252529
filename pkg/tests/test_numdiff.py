import itertools

import numpy as np
import pytest

from g2lab.numdiff import FDScheme, StencilError, contract, derivative, directional, partial_tensor


def poly(x):
    return x[0] ** 3 * x[1] + 2 * x[1] ** 2 * x[2] ** 2 - x[0] * x[1] * x[2] + x[2] ** 4


def poly_tensors(x):
    a, b, c = x
    g = np.array([3 * a * a * b - b * c, a ** 3 + 4 * b * c * c - a * c, 4 * b * b * c - a * b + 4 * c ** 3])
    H = np.array([[6 * a * b, 3 * a * a - c, -b],
                  [3 * a * a - c, 4 * c * c, 8 * b * c - a],
                  [-b, 8 * b * c - a, 4 * b * b + 12 * c * c]])
    T = np.zeros((3, 3, 3))
    third = {(0, 0, 0): 6 * b, (0, 0, 1): 6 * a, (0, 1, 2): -1.0,
             (1, 1, 2): 8 * c, (1, 2, 2): 8 * b, (2, 2, 2): 24 * c}
    for idx, v in third.items():
        for p in set(itertools.permutations(idx)):
            T[p] = v
    return g, H, T


class TestPolynomial:
    x = np.array([0.7, -1.1, 0.4])

    def test_orders_1_to_3(self):
        g, H, T = poly_tensors(self.x)
        np.testing.assert_allclose(partial_tensor(poly, self.x, 1), g, atol=1e-9)
        np.testing.assert_allclose(partial_tensor(poly, self.x, 2), H, atol=1e-8)
        np.testing.assert_allclose(partial_tensor(poly, self.x, 3), T, atol=1e-6)

    def test_fourth_order(self):
        F4 = partial_tensor(poly, self.x, 4)
        want = np.zeros((3,) * 4)
        for p in set(itertools.permutations((0, 0, 0, 1))):
            want[p] = 6
        for p in set(itertools.permutations((1, 1, 2, 2))):
            want[p] = 8
        want[2, 2, 2, 2] = 24
        np.testing.assert_allclose(F4, want, atol=1e-5)

    def test_symmetric(self):
        T = partial_tensor(poly, self.x, 3)
        for p in itertools.permutations(range(3)):
            np.testing.assert_array_equal(T, np.transpose(T, p))


def test_richardson_improves():
    f = lambda x: np.exp(np.sin(x[0]))
    x = np.array([0.3])
    exact = np.cos(0.3) * np.exp(np.sin(0.3))
    errs = [abs(partial_tensor(f, x, 1, FDScheme(0.1, L))[0] - exact) for L in range(3)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-9


def test_array_valued():
    f = lambda x: np.array([[x[0] * x[1], x[0] ** 2], [np.sin(x[1]), 1.0]])
    J = partial_tensor(f, np.array([0.5, 0.2]), 1)
    assert J.shape == (2, 2, 2)
    np.testing.assert_allclose(J[0], [[0.2, 1.0], [0.0, 0.0]], atol=1e-10)
    np.testing.assert_allclose(J[1], [[0.5, 0.0], [np.cos(0.2), 0.0]], atol=1e-10)


def test_vectorized_matches_loop():
    f = lambda x: np.sum(np.log(x))
    fv = lambda X: np.sum(np.log(X), axis=1)
    x = np.array([1.0, 2.0, 0.5])
    np.testing.assert_allclose(partial_tensor(f, x, 3), partial_tensor(fv, x, 3, vectorized=True), atol=1e-12)


def test_directional_matches_contraction(rng):
    x = np.array([0.7, -1.1, 0.4])
    vs = rng.standard_normal((3, 3))
    T = partial_tensor(poly, x, 3)
    assert directional(poly, x, vs) == pytest.approx(float(contract(T, vs)), rel=1e-6, abs=1e-6)


def test_scalar_derivative():
    assert derivative(np.sin, 0.4) == pytest.approx(np.cos(0.4), abs=1e-10)


def test_domain_escape_reports_point():
    def f(x):
        if np.any(x <= 0):
            raise ValueError("outside")
        return float(np.sum(np.log(x)))

    with pytest.raises(StencilError) as info:
        partial_tensor(f, np.array([0.05, 1.0]), 2, FDScheme(0.1, 1))
    assert np.any(info.value.point <= 0)


@pytest.mark.parametrize("step,levels", [(0.0, 1), (-1e-3, 1), (1e-2, 4), (1e-2, -1), (float("nan"), 1)])
def test_invalid_scheme(step, levels):
    with pytest.raises(ValueError):
        FDScheme(step, levels)


def test_info():
    _, info = partial_tensor(lambda x: x[0] ** 2, np.array([1.0]), 2, return_info=True)
    assert info["asymmetry"] == 0.0 and info["error_estimate"] < 1e-8
