"""Verification checks grouped into suites; each check returns a worst residual."""
from __future__ import annotations

import time
import zlib
from dataclasses import dataclass

import numpy as np

from . import exterior as ex
from . import g2form as g2
from . import hessian as hs
from . import period as pd
from .models import FlatOrbifoldChart, FullTorusChart, T3K3Chart, sample_near
from .numdiff import FDScheme, derivative

SUITES = ("kernel", "g2", "flat7", "full35", "t3k3", "period")


@dataclass
class Context:
    seed: int = 0
    tol_scale: float = 1.0
    scheme: FDScheme | None = None   # overrides the per-order jet defaults
    t3k3: T3K3Chart | None = None
    samples: int = 5

    def rng(self, check_id: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, zlib.crc32(check_id.encode())])

    def t3k3_chart(self) -> T3K3Chart:
        return self.t3k3 or T3K3Chart()


@dataclass
class CheckRecord:
    id: str
    paper_ref: str
    status: str
    max_residual: float | None
    tolerance: float
    sample_count: int
    runtime_ms: int

    def as_dict(self):
        return {"id": self.id, "paper_ref": self.paper_ref, "status": self.status,
                "max_residual": self.max_residual, "tolerance": self.tolerance,
                "sample_count": self.sample_count, "runtime_ms": self.runtime_ms}


_REGISTRY: dict = {s: [] for s in SUITES}


def check(suite, cid, ref, tol):
    def deco(fn):
        _REGISTRY[suite].append((cid, ref, tol, fn))
        return fn
    return deco


# -- random data -------------------------------------------------------------

def rand_form(rng, k):
    return ex.AltForm(k, rng.standard_normal(ex.comb(7, k)))


def rand_metric(rng):
    A = rng.standard_normal((7, 7))
    return A @ A.T / 7 + np.eye(7)


def g_symmetric(rng, g, traceless=False):
    S = rng.standard_normal((7, 7))
    h = np.linalg.solve(g, S + S.T)
    if traceless:
        h -= np.trace(h) / 7 * np.eye(7)
    return h


def g_antisymmetric(rng, g):
    S = rng.standard_normal((7, 7))
    return np.linalg.solve(g, S - S.T)


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.abs(a - b).max() / max(1.0, np.abs(b).max()))


# -- kernel ------------------------------------------------------------------

@check("kernel", "kernel.derivation", "delta_h is a degree-preserving derivation", 1e-10)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        h = rng.standard_normal((7, 7))
        p, q = rng.integers(1, 4, size=2)
        a, b = rand_form(rng, p), rand_form(rng, q)
        lhs = ex.delta_action(h, ex.wedge(a, b))
        rhs = ex.wedge(ex.delta_action(h, a), b) + ex.wedge(a, ex.delta_action(h, b))
        r = max(r, _rel(lhs.coeffs, rhs.coeffs))
    return r, n


@check("kernel", "kernel.commutator", "commutator of delta_h is minus delta of the bracket", 1e-10)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        h1, h2 = rng.standard_normal((2, 7, 7))
        a = rand_form(rng, int(rng.integers(1, 7)))
        lhs = ex.delta_action(h1, ex.delta_action(h2, a)) - ex.delta_action(h2, ex.delta_action(h1, a))
        rhs = -ex.delta_action(h1 @ h2 - h2 @ h1, a)
        r = max(r, _rel(lhs.coeffs, rhs.coeffs))
    return r, n


@check("kernel", "kernel.pullback_derivative", "delta_h is the derivative of the pullback", 1e-6)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        h = rng.standard_normal((7, 7))
        a = rand_form(rng, int(rng.integers(1, 7)))
        fd = derivative(lambda t: ex.pullback(np.eye(7) + t * h, a).coeffs, 0.0)
        r = max(r, _rel(fd, ex.delta_action(h, a).coeffs))
    return r, n


@check("kernel", "kernel.adjointness", "g-symmetric h is self-adjoint, g-antisymmetric h skew-adjoint", 1e-10)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        g = rand_metric(rng)
        k = int(rng.integers(1, 7))
        a, b = rand_form(rng, k), rand_form(rng, k)
        for h, s in ((g_symmetric(rng, g), 1.0), (g_antisymmetric(rng, g), -1.0)):
            lhs = ex.lambda_inner(g, ex.delta_action(h, a), b)
            rhs = s * ex.lambda_inner(g, a, ex.delta_action(h, b))
            r = max(r, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return r, n


def _metric_path(g, h):
    return lambda t: (np.eye(7) + t * h).T @ g @ (np.eye(7) + t * h)


@check("kernel", "kernel.metric_variation", "variations of inner product, Hodge star and volume", 1e-6)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        g = rand_metric(rng)
        h = rng.standard_normal((7, 7))
        k = int(rng.integers(1, 7))
        a, b = rand_form(rng, k), rand_form(rng, k)
        gt = _metric_path(g, h)
        d_in = derivative(lambda t: ex.lambda_inner(gt(t), a, b), 0.0)
        exp_in = -ex.lambda_inner(g, ex.delta_action(h, a), b) - ex.lambda_inner(g, a, ex.delta_action(h, b))
        d_star = derivative(lambda t: ex.hodge_star(gt(t), a).coeffs, 0.0)
        exp_star = ex.delta_action(h, ex.hodge_star(g, a)) - ex.hodge_star(g, ex.delta_action(h, a))
        d_vol = derivative(lambda t: np.sqrt(np.linalg.det(gt(t))), 0.0)
        r = max(r, _rel(d_in, exp_in), _rel(d_star, exp_star.coeffs),
                _rel(d_vol, np.trace(h) * np.sqrt(np.linalg.det(g))))
    return r, n


@check("kernel", "kernel.hodge_identity", "a ^ *b = <a, b> vol and ** = 1", 1e-10)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        g = rand_metric(rng)
        k = int(rng.integers(0, 8))
        a, b = rand_form(rng, k), rand_form(rng, k)
        lhs = ex.top_coeff(ex.wedge(a, ex.hodge_star(g, b)))
        rhs = ex.lambda_inner(g, a, b) * np.sqrt(np.linalg.det(g))
        r = max(r, abs(lhs - rhs) / max(1.0, abs(rhs)),
                _rel(ex.hodge_star(g, ex.hodge_star(g, a)).coeffs, a.coeffs))
    return r, n


# -- g2 pointwise --------------------------------------------------------------

@check("g2", "g2.standard_form", "standard 3-form induces the Euclidean metric", 1e-12)
def _(ctx, rng, n):
    fr = g2.frame_of(g2.PHI0)
    return max(float(np.abs(fr.metric - np.eye(7)).max()), abs(fr.volume_density - 1)), 1


@check("g2", "g2.norms", "|phi|^2 = 7 and phi ^ Theta = 7 vol", 1e-10)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        fr = g2.frame_of(g2.random_positive_form(rng))
        r = max(r, abs(fr.inner(fr.phi, fr.phi) - 7) / 7,
                abs(ex.top_coeff(ex.wedge(fr.phi, fr.theta)) / fr.volume_density - 7) / 7)
    return r, n


@check("g2", "g2.projectors", "type projectors are complementary self-adjoint idempotents", 1e-9)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        fr = g2.frame_of(g2.random_positive_form(rng))
        for table, M in ((fr.projectors3, fr.gram3), (fr.projectors2, fr.gram2)):
            for k, P in table.items():
                rank = np.linalg.matrix_rank(P, tol=1e-8)
                r = max(r, float(rank != k), float(np.abs(P @ P - P).max()), float(np.abs(M @ P - (M @ P).T).max()))
            r = max(r, float(np.abs(sum(table.values()) - np.eye(len(M))).max()))
    return r, n


@check("g2", "g2.solve_h", "h.phi = eta solved off the stabiliser", 1e-9)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        fr = g2.frame_of(g2.random_positive_form(rng))
        r = max(r, float(np.abs(g2.solve_h(fr, fr.phi) - np.eye(7) / 3).max()))
        eta = rand_form(rng, 3)
        h = g2.solve_h(fr, eta)
        r = max(r, _rel(ex.delta_action(h, fr.phi).coeffs, eta.coeffs))
        eta = eta - g2.project(fr, eta, 7)
        gh = fr.metric @ g2.solve_h(fr, eta)
        r = max(r, float(np.abs(gh - gh.T).max()) / max(1.0, float(np.abs(gh).max())))
    return r, n


@check("g2", "g2.stabilizer", "stabiliser of phi is 14-dimensional", 1e-9)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        fr = g2.frame_of(g2.random_positive_form(rng))
        J = np.array([ex.delta_action(E.reshape(7, 7), fr.phi).coeffs for E in np.eye(49)]).T
        r = max(r, float(49 - np.linalg.matrix_rank(J, tol=1e-9 * np.linalg.norm(J, 2)) != 14))
        for om in (fr.projectors2[14] @ rng.standard_normal((21, 3))).T:
            h = g2.two_form_to_endo(fr.metric, ex.AltForm(2, om))
            r = max(r, ex.delta_action(h, fr.phi).norm_inf())
    return r, n


@check("g2", "g2.theta_variation", "first variation of the dual 4-form", 1e-5)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        fr = g2.frame_of(g2.random_positive_form(rng))
        eta = 0.3 * rand_form(rng, 3)
        fd = derivative(lambda t: g2.frame_of(fr.phi + t * eta).theta.coeffs, 0.0)
        r = max(r, _rel(fd, g2.theta_first_variation(fr, eta).coeffs))
    return r, n


@check("g2", "g2.star_symmetry", "traceless symmetric h anticommutes with star, antisymmetric commutes", 1e-10)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        fr = g2.frame_of(g2.random_positive_form(rng))
        g = fr.metric
        k = int(rng.integers(1, 7))
        a = rand_form(rng, k)
        h = g_symmetric(rng, g, traceless=True)
        r = max(r, _rel(ex.delta_action(h, fr.star(a)).coeffs, -fr.star(ex.delta_action(h, a)).coeffs))
        h = g_antisymmetric(rng, g)
        r = max(r, _rel(ex.delta_action(h, fr.star(a)).coeffs, fr.star(ex.delta_action(h, a)).coeffs))
    return r, n


@check("g2", "g2.triple_symmetry", "<h3.h1.phi, h2.phi> is fully symmetric", 1e-10)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        fr = g2.frame_of(g2.random_positive_form(rng))
        H = [g_symmetric(rng, fr.metric) for _ in range(3)]
        val = lambda i, j, k: fr.inner(ex.delta_action(H[k], ex.delta_action(H[i], fr.phi)), ex.delta_action(H[j], fr.phi))
        base = val(0, 1, 2)
        for p in ((1, 0, 2), (2, 1, 0), (0, 2, 1), (1, 2, 0), (2, 0, 1)):
            r = max(r, abs(val(*p) - base) / max(1.0, abs(base)))
    return r, n


@check("g2", "g2.equivariance", "metric and volume transform naturally under pullback", 1e-10)
def _(ctx, rng, n):
    r = 0.0
    for _ in range(n):
        phi = g2.random_positive_form(rng)
        A = np.eye(7) + 0.3 * rng.standard_normal((7, 7))
        if np.linalg.det(A) < 0:
            A[0] *= -1
        f0, f1 = g2.frame_of(phi), g2.frame_of(ex.pullback(A, phi))
        r = max(r, _rel(f1.metric, A.T @ f0.metric @ A),
                abs(f1.volume_density - np.linalg.det(A) * f0.volume_density) / f1.volume_density)
    return r, n


# -- model charts --------------------------------------------------------------

def _jet(ctx, fam, x, orders=(1, 2, 3, 4)):
    return hs.jet(fam, x, scheme=ctx.scheme, orders=orders)


def _flat_points(ctx, rng, n, radius=0.3):
    c = FlatOrbifoldChart()
    return c, [sample_near(c, np.ones(7), radius, rng) for _ in range(n)]


@check("flat7", "flat7.volume", "closed volume (prod x)^(1/3) agrees with the B recipe", 1e-10)
def _(ctx, rng, n):
    c, pts = _flat_points(ctx, rng, 10 * n, radius=0.6)
    r = max(abs(c.volume(x) - c.volume(x, "recipe")) / c.volume(x) for x in pts)
    return r, len(pts)


@check("flat7", "flat7.hessian", "finite-difference Hessian agrees with the projection formula", 1e-6)
def _(ctx, rng, n):
    c, pts = _flat_points(ctx, rng, n)
    r = 0.0
    for x in pts:
        j = _jet(ctx, c, x, (2,))
        r = max(r, _rel(j.F2, j.closed[2]), _rel(j.F2, np.diag(1 / x ** 2)))
    return r, n


@check("flat7", "flat7.third", "finite-difference third derivative agrees with -2<h.eta, eta>", 1e-5)
def _(ctx, rng, n):
    c, pts = _flat_points(ctx, rng, n)
    r = 0.0
    for x in pts:
        j = _jet(ctx, c, x, (3,))
        r = max(r, _rel(j.F3, j.closed[3]))
    return r, n


@check("flat7", "flat7.fourth_residual", "F4 equals the quadratic expression in F3", 1e-4)
def _(ctx, rng, n):
    c, pts = _flat_points(ctx, rng, n)
    return max(float(np.abs(hs.e_residual(_jet(ctx, c, x))[0]).max()) for x in pts), n


@check("flat7", "flat7.euler", "homogeneity identities of F", 1e-6)
def _(ctx, rng, n):
    c, pts = _flat_points(ctx, rng, n)
    return max(max(hs.euler_identities(_jet(ctx, c, x)).values()) for x in pts), n


@check("flat7", "flat7.curvature", "Hessian metric of the flat chart is flat", 1e-6)
def _(ctx, rng, n):
    c, pts = _flat_points(ctx, rng, n)
    r = 0.0
    for x in pts:
        R = hs.geometry(_jet(ctx, c, x, (1, 2, 3))).R
        r = max(r, float(np.abs(R).max()), max(hs.curvature_symmetry_residuals(R).values()))
    return r, n


@check("flat7", "flat7.harmonic_frame", "frame endomorphisms are symmetric and preserve the monomial span", 1e-9)
def _(ctx, rng, n):
    c, pts = _flat_points(ctx, rng, n)
    E = np.array([e.coeffs for e in c.etas])
    r = 0.0
    for x in pts:
        hf = c.harmonic_frame(x)
        for h in hf.hs:
            gh = hf.frame.metric @ h
            r = max(r, float(np.abs(gh - gh.T).max()))
            for eta in hf.etas:
                v = ex.delta_action(h, eta).coeffs
                r = max(r, float(np.abs(v - (v @ E.T) @ E).max()))
    return r, n


@check("flat7", "flat7.sff", "image of the chart in S^2_+ is totally geodesic", 1e-4)
def _(ctx, rng, n):
    c, pts = _flat_points(ctx, rng, max(1, n // 3))
    return max(max(pd.sff_residual(c, x).values()) for x in pts), len(pts)


@check("full35", "full35.signature", "Hessian at the standard form has signature (28, 7)", 0.0)
def _(ctx, rng, n):
    c = FullTorusChart()
    w = np.linalg.eigvalsh(hs.hessian_closed(c, c.base_point()))
    return float(abs(np.sum(w > 1e-9) - 28) + abs(np.sum(w < -1e-9) - 7)), 1


@check("full35", "full35.hessian", "finite-difference Hessian and gradient agree with closed forms", 1e-6)
def _(ctx, rng, n):
    c = FullTorusChart()
    r = 0.0
    for _ in range(max(1, n // 3)):
        x = sample_near(c, c.base_point(), 0.2, rng)
        j = _jet(ctx, c, x, (1, 2))
        r = max(r, _rel(j.F2, j.closed[2]), _rel(j.F1, j.closed[1]))
    return r, max(1, n // 3)


def _t3_points(ctx, rng, n):
    c = ctx.t3k3_chart()
    return c, [sample_near(c, c.base_point(), 0.3, rng) for _ in range(n)]


@check("t3k3", "t3k3.volume", "closed volume, radius parametrisation and homogeneity", 1e-12)
def _(ctx, rng, n):
    c = ctx.t3k3_chart()
    r = 0.0
    if all(d == 2 for d in c.dims):
        r = abs(c.volume(np.array([2, 1, 0, 1, 0, 1, 0.0])) - 2 ** (1 / 3) / 2)
    for _ in range(n):
        t, v = rng.uniform(0.5, 2, 3), rng.uniform(0.5, 2)
        r = max(r, abs(c.volume(c.from_radii(t, v)) - np.prod(t) * v) / (np.prod(t) * v))
        x = sample_near(c, c.base_point(), 0.3, rng)
        s = rng.uniform(0.5, 2)
        r = max(r, abs(c.volume(s * x) / c.volume(x) - s ** (7 / 3)) / s ** (7 / 3),
                abs(c.potential(x) - c.potential_closed(x)))
    return r, n


@check("t3k3", "t3k3.hessian_pd", "Hessian metric is positive definite", 0.0)
def _(ctx, rng, n):
    c, pts = _t3_points(ctx, rng, n)
    return float(sum(np.linalg.eigvalsh(_jet(ctx, c, x, (2,)).F2)[0] <= 0 for x in pts)), n


@check("t3k3", "t3k3.fourth_residual", "F4 equals the quadratic expression in F3", 1e-4)
def _(ctx, rng, n):
    c, pts = _t3_points(ctx, rng, n)
    return max(float(np.abs(hs.e_residual(_jet(ctx, c, x))[0]).max()) for x in pts), n


@check("t3k3", "t3k3.euler", "homogeneity identities of F", 1e-6)
def _(ctx, rng, n):
    c, pts = _t3_points(ctx, rng, n)
    return max(max(hs.euler_identities(_jet(ctx, c, x)).values()) for x in pts), n


@check("t3k3", "t3k3.curvature_symmetry", "curvature has the algebraic symmetries", 1e-8)
def _(ctx, rng, n):
    c, pts = _t3_points(ctx, rng, n)
    return max(max(hs.curvature_symmetry_residuals(hs.geometry(_jet(ctx, c, x, (1, 2, 3))).R).values())
               for x in pts), n


@check("t3k3", "t3k3.curvature_nonzero", "curvature is bounded away from zero", 1e-2)
def _(ctx, rng, n):
    c, pts = _t3_points(ctx, rng, n)
    # residual is the shortfall below the threshold; passes while max|R| exceeds it
    m = min(float(np.abs(hs.geometry(_jet(ctx, c, x, (1, 2, 3))).R).max()) for x in pts)
    return (0.0 if m > 1e-2 else 1.0), n


@check("t3k3", "t3k3.sectional", "sectional curvatures are non-positive", 1e-6)
def _(ctx, rng, n):
    c, pts = _t3_points(ctx, rng, n)
    r = 0.0
    for x in pts:
        geo = hs.geometry(_jet(ctx, c, x, (1, 2, 3)))
        for _ in range(50):
            u, v = rng.standard_normal((2, c.dim))
            r = max(r, hs.sectional_curvature(geo, u, v))
    return max(r, 0.0), n


@check("t3k3", "t3k3.nabla_riemann", "curvature is parallel", 1e-3)
def _(ctx, rng, n):
    c, pts = _t3_points(ctx, rng, max(1, n // 5))
    return max(float(np.abs(hs.nabla_riemann(c, x)).max()) for x in pts), len(pts)


@check("t3k3", "t3k3.sff", "image of the chart in S^2_+ is totally geodesic", 1e-4)
def _(ctx, rng, n):
    c, pts = _t3_points(ctx, rng, max(1, n // 5))
    return max(max(pd.sff_residual(c, x).values()) for x in pts), len(pts)


# -- period domain ------------------------------------------------------------------

def _period(rng, n):
    c = FlatOrbifoldChart()
    pm = pd.FlatPeriodModel(c)
    return c, pm, [c.slice_point(0.3 * rng.standard_normal(6)) for _ in range(n)]


@check("period", "period.validate", "phi_map lands in the period domain", 1e-9)
def _(ctx, rng, n):
    c, pm, pts = _period(rng, n)
    r = 0.0
    for x in pts:
        rep = pd.validate_point(pm.space, pm.phi_map(x))
        r = max(r, rep.max_residual if rep.passed else float("inf"))
        w = pm.phi_map(x)[3][:, 0]
        r = max(r, abs(pm.space.form(pm.space.iota @ w, w) - 14) / 14)
    return r, n


@check("period", "period.pair_iso", "period points correspond to (line, inner product) pairs", 1e-9)
def _(ctx, rng, n):
    c, pm, pts = _period(rng, n)
    sp = pm.space
    r = 0.0
    for x in pts:
        P = pm.phi_map(x)
        ell, q = pd.pair_iso(sp, P)
        P2 = pd.point_from_pair(sp, ell, q)
        r = max(r, max(pd.subspace_gap(P[p], P2[p]) for p in pd.BLOCKS), _rel(q, pm.l2_gram(x)))
        ell2, q2 = pd.pair_iso(sp, pd.random_point(sp, rng))
        ell3, q3 = pd.pair_iso(sp, pd.point_from_pair(sp, ell2, q2))
        r = max(r, 1 - abs(ell2 @ ell3), _rel(q3, q2))
        r = max(r, pd.standard_basis_residual(sp, P, pd.standard_basis(sp, P)))
    return r, n


@check("period", "period.tangent_rank", "tangent space dimension (n+1)^2 - n(n-1)/2", 0.0)
def _(ctx, rng, n):
    c, pm, pts = _period(rng, 2)
    sp = pm.space
    return float(sum(pd.tangent_rank(sp, pm.phi_map(x)) != 49 - 15 for x in pts)), 2


def _slice_dphi(pm, c, x):
    B = c.slice_directions(x)
    return B, [pm.dphi(x, b) for b in B]


@check("period", "period.horizontal", "period map is horizontal and transverse", 1e-6)
def _(ctx, rng, n):
    c, pm, pts = _period(rng, n)
    r = 0.0
    for x in pts:
        P = pm.phi_map(x)
        _, slice_xis = _slice_dphi(pm, c, x)
        for xi in [pm.dphi(x, rng.standard_normal(7) * x)] + slice_xis:
            r = max(r, pd.classify(xi)["horizontal"], pd.block_criterion(P, xi)["horizontal"])
        for xi in slice_xis:
            r = max(r, pd.classify(xi)["transverse"])
    return r, n


@check("period", "period.differentials", "block maps of the differential match the harmonic formulas", 1e-5)
def _(ctx, rng, n):
    c, pm, pts = _period(rng, n)
    r = 0.0
    for x in pts:
        P = pm.phi_map(x)
        B = c.slice_directions(x)
        y, y2 = B.T @ rng.standard_normal(6), B.T @ rng.standard_normal(6)
        xi = pm.dphi(x, y)
        w3, w2, w1 = pm.sources(x, y2)
        r = max(r, _rel(pd.lower_part(P, xi, w3, 3), pm.closed_phi3(x, y)),
                _rel(pd.lower_part(P, xi, w2, 2), pm.closed_phi2(x, y, y2)),
                _rel(pd.lower_part(P, xi, w1, 1), pm.closed_phi1(x, y, y2)))
    return r, n


@check("period", "period.pullback_metric", "7 times the pulled-back period metric is the Hessian metric", 1e-5)
def _(ctx, rng, n):
    c, pm, pts = _period(rng, n)
    r = 0.0
    for x in pts:
        P = pm.phi_map(x)
        B, xis = _slice_dphi(pm, c, x)
        HD = np.array([[pd.h_D(pm.space, P, a, b) for b in xis] for a in xis])
        r = max(r, _rel(7 * HD, B @ hs.hessian_closed(c, x) @ B.T))
    return r, n


@check("period", "period.pullback_cubic", "7 times the pulled-back cubic form is Xi", 1e-4)
def _(ctx, rng, n):
    c, pm, pts = _period(rng, n)
    r = 0.0
    for x in pts:
        P = pm.phi_map(x)
        B, xis = _slice_dphi(pm, c, x)
        Xi = 0.5 * np.einsum("abc,ia,jb,kc->ijk", hs.third_closed(c, x), B, B, B)
        XD = np.array([[[pd.Xi_D(pm.space, P, a, b, d) for d in xis] for b in xis] for a in xis])
        r = max(r, _rel(7 * XD, Xi))
    return r, n


@check("period", "period.legendrian", "H^(3) curve is Legendrian and slice velocities are isotropic", 1e-6)
def _(ctx, rng, n):
    c, pm, pts = _period(rng, n)
    sp = pm.space
    r = 0.0
    for x in pts:
        sb = pd.standard_basis(sp, pm.phi_map(x))
        w = pm.phi_map(x)[3][:, 0]
        vel = [derivative(lambda s, b=b: pm.phi_map(x + s * b)[3][:, 0], 0.0) for b in c.slice_directions(x)]
        r = max(r, max(abs(pd.contact_alpha(sp, sb, w, v)) for v in vel),
                max(abs(pd.contact_dalpha(sp, sb, w, a, b)) for a in vel for b in vel))
    return r, n


@check("period", "period.metric_invariance", "period metric does not depend on the standard basis", 1e-10)
def _(ctx, rng, n):
    c, pm, pts = _period(rng, n)
    sp = pm.space
    r = 0.0
    for x in pts:
        sb = pd.standard_basis(sp, pm.phi_map(x))
        X = rng.standard_normal((7, 7))
        O, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        R = np.eye(7)
        R[1:, 1:] = O
        R[0, 0] = rng.choice([-1.0, 1.0])
        sb2 = pd.StandardBasis(sb.U @ R, sb.V @ R)
        a1 = pd.TangentRep(np.linalg.solve(sb.U, X @ sb.U), sb)
        a2 = pd.TangentRep(np.linalg.solve(sb2.U, X @ sb2.U), sb2)
        v1, v2 = pd.metric_gD(a1), pd.metric_gD(a2)
        r = max(r, abs(v1 - v2) / max(1.0, v1))
    return r, n


# -- runner --------------------------------------------------------------------

def checks_for(suite: str):
    names = SUITES if suite == "all" else (suite,)
    out = []
    for s in names:
        if s not in _REGISTRY:
            raise ValueError(f"unknown suite {s!r}")
        out.extend(_REGISTRY[s])
    return out


def run_suite(suite: str, ctx: Context) -> list:
    return run_suites([suite], ctx)


def run_suites(suites, ctx: Context) -> list:
    """Run every check of the named suites once; records are sorted by id."""
    seen, todo = set(), []
    for s in suites:
        for item in checks_for(s):
            if item[0] not in seen:
                seen.add(item[0])
                todo.append(item)
    records = []
    for cid, ref, tol, fn in todo:
        tol_eff = tol * ctx.tol_scale
        t0 = time.perf_counter()
        try:
            res, count = fn(ctx, ctx.rng(cid), ctx.samples)
            res = float(res)
            status = "pass" if np.isfinite(res) and res <= tol_eff else "fail"
            if not np.isfinite(res):
                res = None
        except (ValueError, np.linalg.LinAlgError):
            res, count, status = None, 0, "fail"
        records.append(CheckRecord(cid, ref, status, res, tol_eff, int(count),
                                   int(round(1000 * (time.perf_counter() - t0)))))
    return sorted(records, key=lambda r: r.id)
