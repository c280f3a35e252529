import numpy as np
import pytest

from g2lab import hessian as hs
from g2lab.models import FlatOrbifoldChart, FullTorusChart, T3K3Chart, sample_near


@pytest.fixture(scope="module")
def flat():
    return FlatOrbifoldChart()


@pytest.fixture(scope="module")
def t3():
    return T3K3Chart()


def diag_tensor(v, order):
    T = np.zeros((len(v),) * order)
    for i, x in enumerate(v):
        T[(i,) * order] = x
    return T


def barrier_hessian(chart, x):
    """Analytic Hessian of -log x0 - sum log Q(a_i, a_i)."""
    x0, parts = chart.split(x)
    blocks = [np.array([[1 / x0 ** 2]])]
    for a, Q in zip(parts, chart.Q):
        q = a @ Q @ a
        Qa = Q @ a
        blocks.append(-2 * Q / q + 4 * np.outer(Qa, Qa) / q ** 2)
    n = sum(b.shape[0] for b in blocks)
    H = np.zeros((n, n))
    k = 0
    for b in blocks:
        H[k:k + len(b), k:k + len(b)] = b
        k += len(b)
    return H


class TestFlatJet:

    def test_against_log_barrier(self, flat, rng):
        x = sample_near(flat, np.ones(7), 0.3, rng)
        j = hs.jet(flat, x)
        np.testing.assert_allclose(j.F1, -1 / x, atol=1e-10)
        np.testing.assert_allclose(j.F2, np.diag(1 / x ** 2), atol=1e-8)
        np.testing.assert_allclose(j.F3, diag_tensor(-2 / x ** 3, 3), atol=1e-5)
        np.testing.assert_allclose(j.F4, diag_tensor(6 / x ** 4, 4), atol=1e-4)
        assert j.provenance[4] == "finite_difference"

    def test_closed_forms(self, flat, rng):
        x = sample_near(flat, np.ones(7), 0.3, rng)
        np.testing.assert_allclose(hs.hessian_closed(flat, x), np.diag(1 / x ** 2), atol=1e-12)
        np.testing.assert_allclose(hs.third_closed(flat, x), diag_tensor(-2 / x ** 3, 3), atol=1e-12)
        np.testing.assert_allclose(hs.gradient_closed(flat, x), -1 / x, atol=1e-12)

    def test_fourth_rhs_at_base(self, flat):
        j = hs.closed_jet(flat, np.ones(7))
        assert hs.fourth_rhs(j)[0, 0, 0, 0] == pytest.approx(6.0)

    def test_flat_curvature(self, flat, rng):
        x = sample_near(flat, np.ones(7), 0.3, rng)
        assert np.abs(hs.geometry(hs.closed_jet(flat, x)).R).max() < 1e-12

    def test_euler(self, flat, rng):
        x = sample_near(flat, np.ones(7), 0.3, rng)
        ids = hs.euler_identities(hs.closed_jet(flat, x))
        assert max(ids.values()) < 1e-8


class TestT3K3:

    def test_hessian_vs_analytic(self, t3, rng):
        x = sample_near(t3, t3.base_point(), 0.3, rng)
        j = hs.jet(t3, x, orders=(2,))
        np.testing.assert_allclose(j.F2, barrier_hessian(t3, x), atol=1e-8)
        assert np.linalg.eigvalsh(j.F2)[0] > 0

    def test_closed_forms_unavailable(self, t3):
        with pytest.raises(hs.CapabilityError):
            hs.hessian_closed(t3, t3.base_point())

    def test_fourth_residual_and_identities(self, t3, rng):
        x = sample_near(t3, t3.base_point(), 0.3, rng)
        j = hs.jet(t3, x)
        res, nxi = hs.e_residual(j)
        assert np.abs(res).max() < 1e-4
        ids = hs.euler_identities(j)
        assert ids["x.F3"] < 1e-6 and ids["x.nabla_xi"] < 1e-6 and ids["G(x,x)"] < 1e-6

    def test_curvature(self, t3, rng):
        x = sample_near(t3, t3.base_point(), 0.3, rng)
        geo = hs.geometry(hs.jet(t3, x, orders=(1, 2, 3)))
        assert np.abs(geo.R).max() > 1e-2
        assert max(hs.curvature_symmetry_residuals(geo.R).values()) < 1e-8
        for _ in range(20):
            u, v = rng.standard_normal((2, t3.dim))
            assert hs.sectional_curvature(geo, u, v) < 1e-6

    def test_curvature_two_routes(self, t3, rng):
        x = sample_near(t3, t3.base_point(), 0.3, rng)
        geo = hs.geometry(hs.jet(t3, x, orders=(1, 2, 3)))
        R2 = hs.riemann_from_christoffel(t3, x)
        np.testing.assert_allclose(geo.R, R2, atol=1e-4)

    def test_two_dimensional_lattices_are_flat(self, rng):
        c = T3K3Chart(dims=(2, 2, 2))
        x = sample_near(c, c.base_point(), 0.2, rng)
        assert np.abs(hs.geometry(hs.jet(c, x, orders=(1, 2, 3))).R).max() < 1e-6

    @pytest.mark.slow
    def test_parallel_curvature(self, t3, rng):
        x = sample_near(t3, t3.base_point(), 0.3, rng)
        assert np.abs(hs.nabla_riemann(t3, x)).max() < 1e-3


def test_full35_signature():
    c = FullTorusChart()
    w = np.linalg.eigvalsh(hs.hessian_closed(c, c.base_point()))
    assert np.sum(w > 1e-9) == 28 and np.sum(w < -1e-9) == 7


def test_full35_has_no_third_closed_form():
    c = FullTorusChart()
    with pytest.raises(hs.CapabilityError, match="b1"):
        hs.third_closed(c, c.base_point())


def test_shima_formula_symmetries(rng):
    G = np.eye(4) + 0.1 * np.diag(rng.random(4))
    F3 = rng.standard_normal((4, 4, 4))
    F3 = sum(np.transpose(F3, p) for p in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)])
    R = hs.shima_curvature(G, F3)
    assert max(hs.curvature_symmetry_residuals(R).values()) < 1e-12
