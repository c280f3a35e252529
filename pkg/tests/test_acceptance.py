"""Acceptance criteria, each at its stated sample count and tolerance.

Every test prints a single ``criterion N: PASS|FAIL`` line listing the measured
quantities next to their bounds; the same lines are repeated in the pytest summary.
"""
import json
import os
import subprocess
import sys

import numpy as np

from conftest import ACCEPTANCE_LINES
from g2lab import exterior as ex
from g2lab import g2form as g2
from g2lab import hessian as hs
from g2lab import period as pd
from g2lab.models import FlatOrbifoldChart, FullTorusChart, T3K3Chart, sample_near
from g2lab.numdiff import derivative

SEED = 2718


class Criterion:
    """Collects (name, value, bound, sense) parts and reports once."""

    def __init__(self, number, title):
        self.number, self.title, self.parts = number, title, []

    def le(self, name, value, bound):
        self.parts.append((name, float(value), bound, "<="))

    def gt(self, name, value, bound):
        self.parts.append((name, float(value), bound, ">"))

    def eq(self, name, value, target):
        self.parts.append((name, value, target, "=="))

    def _ok(self, value, bound, sense):
        if sense == "<=":
            return np.isfinite(value) and value <= bound
        if sense == ">":
            return value > bound
        return value == bound

    def report(self):
        ok = all(self._ok(*p[1:]) for p in self.parts)
        body = "; ".join(f"{n}={v:.3g} {s} {b:g}" if isinstance(v, float) else f"{n}={v} {s} {b}"
                         for n, v, b, s in self.parts)
        line = f"criterion {self.number}: {'PASS' if ok else 'FAIL'} {self.title} | {body}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        bad = [p for p in self.parts if not self._ok(*p[1:])]
        assert not bad, line


def rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.abs(a - b).max() / max(1.0, np.abs(b).max()))


def rng_for(n):
    return np.random.default_rng([SEED, n])


def rand_form(rng, k):
    return ex.AltForm(k, rng.standard_normal(ex.comb(7, k)))


def rand_metric(rng):
    A = rng.standard_normal((7, 7))
    return A @ A.T / 7 + np.eye(7)


def sym_endo(rng, g, traceless=False):
    S = rng.standard_normal((7, 7))
    h = np.linalg.solve(g, S + S.T)
    return h - np.trace(h) / 7 * np.eye(7) if traceless else h


def skew_endo(rng, g):
    S = rng.standard_normal((7, 7))
    return np.linalg.solve(g, S - S.T)


def test_criterion_01_kernel_laws():
    rng = rng_for(1)
    c = Criterion(1, "derivation laws and first variations, 100 draws")
    r = dict.fromkeys(("derivation", "commutator", "adjoint", "var_inner", "var_star", "var_vol"), 0.0)
    for _ in range(100):
        g = rand_metric(rng)
        h, h2 = rng.standard_normal((2, 7, 7))
        p, q = rng.integers(1, 4, size=2)
        a, b = rand_form(rng, p), rand_form(rng, q)
        lhs = ex.delta_action(h, ex.wedge(a, b))
        rhs = ex.wedge(ex.delta_action(h, a), b) + ex.wedge(a, ex.delta_action(h, b))
        r["derivation"] = max(r["derivation"], rel(lhs.coeffs, rhs.coeffs))
        w = rand_form(rng, int(rng.integers(1, 7)))
        lhs = ex.delta_action(h, ex.delta_action(h2, w)) - ex.delta_action(h2, ex.delta_action(h, w))
        r["commutator"] = max(r["commutator"], rel(lhs.coeffs, -ex.delta_action(h @ h2 - h2 @ h, w).coeffs))
        k = int(rng.integers(1, 7))
        w, w2 = rand_form(rng, k), rand_form(rng, k)
        for e, s in ((sym_endo(rng, g), 1.0), (skew_endo(rng, g), -1.0)):
            x = ex.lambda_inner(g, ex.delta_action(e, w), w2)
            y = s * ex.lambda_inner(g, w, ex.delta_action(e, w2))
            r["adjoint"] = max(r["adjoint"], abs(x - y) / max(1.0, abs(y)))
        # g_t = (1 + t h)^T g (1 + t h) has first variation 2 g(h., .)
        gt = lambda t: (np.eye(7) + t * h).T @ g @ (np.eye(7) + t * h)
        fd = derivative(lambda t: ex.lambda_inner(gt(t), w, w2), 0.0)
        want = -ex.lambda_inner(g, ex.delta_action(h, w), w2) - ex.lambda_inner(g, w, ex.delta_action(h, w2))
        r["var_inner"] = max(r["var_inner"], rel(fd, want))
        fd = derivative(lambda t: ex.hodge_star(gt(t), w).coeffs, 0.0)
        want = ex.delta_action(h, ex.hodge_star(g, w)) - ex.hodge_star(g, ex.delta_action(h, w))
        r["var_star"] = max(r["var_star"], rel(fd, want.coeffs))
        fd = derivative(lambda t: ex.top_coeff(ex.volume_form(gt(t))), 0.0)
        r["var_vol"] = max(r["var_vol"], rel(fd, np.trace(h) * np.sqrt(np.linalg.det(g))))
    for k, v in r.items():
        c.le(k, v, 1e-6)
    c.report()


def test_criterion_02_star_and_triple_symmetry():
    rng = rng_for(2)
    c = Criterion(2, "star anticommutation and full symmetry, 100 draws")
    anti = comm = triple = 0.0
    for _ in range(100):
        fr = g2.frame_of(g2.random_positive_form(rng))
        g = fr.metric
        w = rand_form(rng, int(rng.integers(0, 8)))
        h = sym_endo(rng, g, traceless=True)
        anti = max(anti, rel(ex.delta_action(h, fr.star(w)).coeffs, -fr.star(ex.delta_action(h, w)).coeffs))
        h = skew_endo(rng, g)
        comm = max(comm, rel(ex.delta_action(h, fr.star(w)).coeffs, fr.star(ex.delta_action(h, w)).coeffs))
        H = [sym_endo(rng, g) for _ in range(3)]
        val = lambda i, j, k: fr.inner(ex.delta_action(H[k], ex.delta_action(H[i], fr.phi)),
                                       ex.delta_action(H[j], fr.phi))
        vals = [val(*p) for p in ((0, 1, 2), (1, 0, 2), (2, 1, 0), (0, 2, 1), (1, 2, 0), (2, 0, 1))]
        triple = max(triple, (max(vals) - min(vals)) / max(1.0, abs(vals[0])))
    c.le("anticommute", anti, 1e-10)
    c.le("commute", comm, 1e-10)
    c.le("triple", triple, 1e-10)
    c.report()


def test_criterion_03_frame_recipe():
    rng = rng_for(3)
    c = Criterion(3, "norm 7 and phi^Theta = 7 vol at 50 forms, Theta variation vs FD")
    f0 = g2.frame_of(g2.PHI0)
    # seven unit monomials, and the induced metric is Euclidean
    c.le("|phi0|^2-7", abs(f0.inner(g2.PHI0, g2.PHI0) - 7), 1e-10)
    c.le("|phi0|^2-7 coeffs", abs(float(g2.PHI0.coeffs @ g2.PHI0.coeffs) - 7), 1e-10)
    nrm = wedge = var = 0.0
    for i in range(50):
        fr = g2.frame_of(g2.random_positive_form(rng))
        nrm = max(nrm, abs(fr.inner(fr.phi, fr.phi) - 7) / 7)
        wedge = max(wedge, abs(ex.top_coeff(ex.wedge(fr.phi, fr.theta)) / fr.volume_density - 7) / 7)
        if i < 20:
            eta = 0.3 * rand_form(rng, 3)
            fd = derivative(lambda t: g2.frame_of(fr.phi + t * eta).theta.coeffs, 0.0)
            var = max(var, rel(fd, g2.theta_first_variation(fr, eta).coeffs))
    c.le("norm", nrm, 1e-10)
    c.le("phi^Theta", wedge, 1e-10)
    c.le("theta_var", var, 1e-5)
    c.report()


def test_criterion_04_flat_volume_and_hessian():
    rng = rng_for(4)
    ch = FlatOrbifoldChart()
    c = Criterion(4, "flat closed volume at 100 points, Hessian vs FD")
    pts = [sample_near(ch, np.ones(7), 0.6, rng) for _ in range(100)]
    vol = max(abs(ch.volume(x) - ch.volume(x, "recipe")) / ch.volume(x) for x in pts)
    pot = max(abs(hs.potential(ch, x) + np.sum(np.log(x))) for x in pts)
    fd = 0.0
    for x in pts[:20]:
        H = hs.jet(ch, x, orders=(2,), closed=False).F2
        fd = max(fd, rel(H, hs.hessian_closed(ch, x)), rel(H, np.diag(1 / x ** 2)))
    unit = rel(hs.hessian_closed(ch, np.ones(7)), np.eye(7))
    c.le("volume", vol, 1e-10)
    c.le("potential", pot, 1e-10)
    c.le("hessian_fd", fd, 1e-6)
    c.le("hessian_unit", unit, 1e-10)
    c.report()


def test_criterion_05_third_derivative():
    rng = rng_for(5)
    ch = FlatOrbifoldChart()
    c = Criterion(5, "third derivative closed form vs FD at 20 points")
    r = 0.0
    for _ in range(20):
        x = sample_near(ch, np.ones(7), 0.3, rng)
        F3 = hs.jet(ch, x, orders=(3,), closed=False).F3
        analytic = np.zeros((7, 7, 7))
        analytic[np.arange(7), np.arange(7), np.arange(7)] = -2 / x ** 3
        r = max(r, rel(F3, hs.third_closed(ch, x)), rel(F3, analytic))
    c.le("third", r, 1e-5)
    c.report()


def _jet_points(ch, base, rng, n):
    return [sample_near(ch, base, 0.3, rng) for _ in range(n)]


def test_criterion_06_fourth_derivative_and_identities():
    rng = rng_for(6)
    c = Criterion(6, "fourth derivative residual and homogeneity identities, 20 points each")
    for name, ch in (("flat7", FlatOrbifoldChart()), ("t3k3", T3K3Chart())):
        res = ident = nxi = 0.0
        for x in _jet_points(ch, ch.base_point(), rng, 20):
            j = hs.jet(ch, x)
            res = max(res, float(np.abs(hs.e_residual(j)[0]).max()))
            e = hs.euler_identities(j)
            ident = max(ident, e["x.F3"])
            nxi = max(nxi, e["x.nabla_xi"])
        c.le(f"{name}.F4", res, 1e-4)
        c.le(f"{name}.xF3", ident, 1e-6)
        c.le(f"{name}.x_nabla_xi", nxi, 1e-6)
    c.report()


def test_criterion_07_curvature():
    rng = rng_for(7)
    c = Criterion(7, "curvature symmetries, flatness, nonpositivity and parallelism")
    t3, fl = T3K3Chart(), FlatOrbifoldChart()
    sym = rmax_flat = sec = 0.0
    rmin_t3 = np.inf
    for x in _jet_points(fl, fl.base_point(), rng, 20):
        R = hs.geometry(hs.jet(fl, x, orders=(1, 2, 3))).R
        rmax_flat = max(rmax_flat, float(np.abs(R).max()))
        sym = max(sym, max(hs.curvature_symmetry_residuals(R).values()))
    t3_pts = _jet_points(t3, t3.base_point(), rng, 20)
    for x in t3_pts:
        geo = hs.geometry(hs.jet(t3, x, orders=(1, 2, 3)))
        sym = max(sym, max(hs.curvature_symmetry_residuals(geo.R).values()))
        rmin_t3 = min(rmin_t3, float(np.abs(geo.R).max()))
        for _ in range(50):
            u, v = rng.standard_normal((2, t3.dim))
            sec = max(sec, hs.sectional_curvature(geo, u, v))
    nab = max(float(np.abs(hs.nabla_riemann(t3, x)).max()) for x in t3_pts)
    c.le("symmetries", sym, 1e-8)
    c.le("flat7.|R|", rmax_flat, 1e-6)
    c.gt("t3k3.min|R|", rmin_t3, 1e-2)
    c.le("t3k3.max_sectional", sec, 1e-6)
    c.le("t3k3.|nabla R|", nab, 1e-3)
    c.report()


def test_criterion_08_signature():
    ch = FullTorusChart()
    c = Criterion(8, "full35 Hessian signature at the standard form")
    x0 = ch.base_point()
    w = np.linalg.eigvalsh(hs.hessian_closed(ch, x0))
    c.eq("closed(+,-)", (int(np.sum(w > 1e-9)), int(np.sum(w < -1e-9))), (28, 7))
    # finite-difference route, eigenvalues are O(1) so FD noise cannot flip a sign
    H = hs.jet(ch, x0, orders=(2,), closed=False).F2
    wf = np.linalg.eigvalsh(0.5 * (H + H.T))
    c.eq("fd(+,-)", (int(np.sum(wf > 1e-6)), int(np.sum(wf < -1e-6))), (28, 7))
    c.gt("min|eig|", float(np.abs(w).min()), 1e-3)
    c.report()


def _slice_points(rng, n):
    ch = FlatOrbifoldChart()
    return ch, pd.FlatPeriodModel(ch), [ch.slice_point(0.3 * rng.standard_normal(6)) for _ in range(n)]


def test_criterion_09_period_domain():
    rng = rng_for(9)
    ch, pm, pts = _slice_points(rng, 30)
    sp = pm.space
    c = Criterion(9, "period points valid at 30 chart points, round trips, Q(iota w, w) = 14")
    val = rt = q14 = 0.0
    fails = 0
    for x in pts:
        P = pm.phi_map(x)
        rep = pd.validate_point(sp, P)
        fails += not rep.passed
        val = max(val, rep.max_residual)
        ell, q = pd.pair_iso(sp, P)
        P2 = pd.point_from_pair(sp, ell, q)
        rt = max(rt, max(pd.subspace_gap(P[p], P2[p]) for p in pd.BLOCKS))
        ell2, q2 = pd.pair_iso(sp, P2)
        rt = max(rt, 1 - abs(ell @ ell2) / (np.linalg.norm(ell) * np.linalg.norm(ell2)), rel(q2, q))
        w = P[3][:, 0]
        q14 = max(q14, abs(sp.form(sp.iota @ w, w) - 14))
    c.eq("invalid_points", fails, 0)
    c.le("validate", val, 1e-9)
    c.le("round_trip", rt, 1e-9)
    c.le("|Q(iota w,w)-14|", q14, 1e-9)
    c.report()


def test_criterion_10_differential():
    rng = rng_for(10)
    ch, pm, pts = _slice_points(rng, 20)
    c = Criterion(10, "horizontal, transverse and closed-form block maps, 20 slice points")
    hor = trans = d3 = d2 = d1 = 0.0
    for x in pts:
        P = pm.phi_map(x)
        B = ch.slice_directions(x)
        for b in [rng.standard_normal(7) * x] + list(B):
            xi = pm.dphi(x, b)
            hor = max(hor, pd.classify(xi)["horizontal"], pd.block_criterion(P, xi)["horizontal"])
        y, y2 = B.T @ rng.standard_normal(6), B.T @ rng.standard_normal(6)
        xi = pm.dphi(x, y)
        trans = max(trans, pd.classify(xi)["transverse"])
        w3, w2, w1 = pm.sources(x, y2)
        d3 = max(d3, rel(pd.lower_part(P, xi, w3, 3), pm.closed_phi3(x, y)))
        d2 = max(d2, rel(pd.lower_part(P, xi, w2, 2), pm.closed_phi2(x, y, y2)))
        d1 = max(d1, rel(pd.lower_part(P, xi, w1, 1), pm.closed_phi1(x, y, y2)))
    c.le("horizontal", hor, 1e-6)
    c.le("transverse", trans, 1e-6)
    c.le("phi3", d3, 1e-5)
    c.le("phi2", d2, 1e-5)
    c.le("phi1", d1, 1e-5)
    c.report()


def test_criterion_11_pullbacks():
    rng = rng_for(11)
    ch, pm, pts = _slice_points(rng, 30)
    c = Criterion(11, "7 h_D and 7 Xi_D pull back to G and Xi at 30 slice points")
    rm = rx = 0.0
    for x in pts:
        P = pm.phi_map(x)
        B = ch.slice_directions(x)
        xis = [pm.dphi(x, b) for b in B]
        HD = np.array([[pd.h_D(pm.space, P, a, b) for b in xis] for a in xis])
        rm = max(rm, rel(7 * HD, B @ hs.hessian_closed(ch, x) @ B.T))
        Xi = 0.5 * np.einsum("abc,ia,jb,kc->ijk", hs.third_closed(ch, x), B, B, B)
        XD = np.array([[[pd.Xi_D(pm.space, P, a, b, d) for d in xis] for b in xis] for a in xis])
        rx = max(rx, rel(7 * XD, Xi))
    c.le("metric", rm, 1e-5)
    c.le("cubic", rx, 1e-4)
    c.report()


def test_criterion_12_totally_geodesic():
    rng = rng_for(12)
    c = Criterion(12, "second fundamental form identity and normal part, 20 points per model")
    for name, ch in (("flat7", FlatOrbifoldChart()), ("t3k3", T3K3Chart())):
        ident = normal = 0.0
        for x in _jet_points(ch, ch.base_point(), rng, 20):
            r = pd.sff_residual(ch, x)
            ident, normal = max(ident, r["identity"]), max(normal, r["normal"])
        c.le(f"{name}.identity", ident, 1e-4)
        c.le(f"{name}.normal", normal, 1e-4)
    c.report()


def test_criterion_13_legendrian():
    rng = rng_for(13)
    ch = FlatOrbifoldChart()
    pm = pd.FlatPeriodModel(ch)
    sp = pm.space
    c = Criterion(13, "alpha vanishes along slice curves, 20 curves x 5 times")
    r = 0.0
    for _ in range(20):
        u0, d = 0.3 * rng.standard_normal(6), rng.standard_normal(6)
        curve = lambda t: ch.slice_point(u0 + t * d)
        sb = pd.standard_basis(sp, pm.phi_map(curve(0.0)))
        for t in np.linspace(-0.2, 0.2, 5):
            w = pm.phi_map(curve(t))[3][:, 0]
            wd = derivative(lambda s: pm.phi_map(curve(s))[3][:, 0], t)
            r = max(r, abs(pd.contact_alpha(sp, sb, w, wd)))
    c.le("|alpha(wdot)|", r, 1e-6)
    c.report()


def _cli(tmp, *args):
    env = {k: v for k, v in os.environ.items() if k != "G2LAB_SEED"}
    return subprocess.run([sys.executable, "-m", "g2lab.cli", "verify", *args],
                          cwd=tmp, env=env, capture_output=True, text=True)


def test_criterion_14_determinism_and_exit_codes(tmp_path):
    c = Criterion(14, "equal seeds give identical reports, exit codes 0/1/2")
    args = ("--suite", "kernel,g2,period", "--seed", "123456789", "--samples", "2")
    a = _cli(tmp_path, *args, "--out", "a.json")
    b = _cli(tmp_path, *args, "--out", "b.json")
    ta, tb = (tmp_path / "a.json").read_text(), (tmp_path / "b.json").read_text()
    strip = lambda t: "\n".join(l for l in t.splitlines() if '"runtime_ms"' not in l)
    c.eq("identical", strip(ta) == strip(tb), True)
    c.eq("exit_pass", (a.returncode, b.returncode), (0, 0))
    bad = _cli(tmp_path, "--suite", "flat7", "--fd-step", "0.5", "--samples", "2", "--out", "c.json")
    c.eq("exit_fail", bad.returncode, 1)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"modle": "t3k3"}))
    err = _cli(tmp_path, "--config", str(cfg), "--out", "d.json")
    c.eq("exit_config", err.returncode, 2)
    c.eq("names_key", "modle" in err.stderr, True)
    c.eq("no_partial", (tmp_path / "d.json").exists(), False)
    io = _cli(tmp_path, "--suite", "kernel", "--out", str(tmp_path / "nope" / "r.json"))
    c.eq("exit_io", io.returncode, 2)
    c.report()
