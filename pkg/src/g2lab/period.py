"""Hodge-type decompositions of H = H^3 + H^4 and the period map of the flat orbifold chart.

Vectors of H are stored as 2N coordinates (N = n + 1): first the H^3 part,
then the H^4 part.  A point of the period domain is a splitting of H into
blocks H^(3), H^(2), H^(1), H^(0) of dimensions 1, n, n, 1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exterior import AltForm, top_coeff, wedge
from .g2form import frame_of, project, solve_h
from .exterior import delta_action
from .numdiff import FDScheme, default_scheme, derivative, partial_tensor

BLOCKS = (3, 2, 1, 0)


class PeriodError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SymplecticSpace:
    n: int
    Q: np.ndarray          # antisymmetric 2N x 2N, block form [[0, P], [-P^T, 0]]
    labels3: tuple = ()
    labels4: tuple = ()

    def __post_init__(self):
        N = self.n + 1
        Q = np.asarray(self.Q, dtype=float)
        if Q.shape != (2 * N, 2 * N) or not np.allclose(Q, -Q.T):
            raise PeriodError("Q must be an antisymmetric 2(n+1) square matrix")
        if np.abs(Q[:N, :N]).max() > 0 or np.abs(Q[N:, N:]).max() > 0:
            raise PeriodError("H^3 and H^4 must each be Q-isotropic")

    @property
    def N(self) -> int:
        return self.n + 1

    @property
    def pairing(self) -> np.ndarray:
        return np.asarray(self.Q)[:self.N, self.N:]

    @property
    def iota(self) -> np.ndarray:
        return np.diag(np.r_[np.ones(self.N), -np.ones(self.N)])

    @classmethod
    def darboux(cls, n: int, labels3=(), labels4=()):
        N = n + 1
        Q = np.zeros((2 * N, 2 * N))
        Q[:N, N:] = np.eye(N)
        Q[N:, :N] = -np.eye(N)
        return cls(n, Q, tuple(labels3), tuple(labels4))

    def form(self, a, b) -> float:
        return float(np.asarray(a) @ self.Q @ np.asarray(b))

    def iform(self, A, B) -> np.ndarray:
        """Matrix of Q(iota a, b) over columns of A and B."""
        return np.asarray(A).T @ self.iota @ self.Q @ np.asarray(B)


@dataclass(frozen=True, eq=False)
class HodgePoint:
    blocks: dict  # p -> (2N, dim_p) array

    def __getitem__(self, p):
        return self.blocks[p]

    @property
    def stacked(self) -> np.ndarray:
        return np.hstack([self.blocks[p] for p in BLOCKS])

    def decompose(self, y) -> dict:
        """Components of y (vector or matrix of columns) in each block."""
        C = np.linalg.solve(self.stacked, y)
        out, k = {}, 0
        for p in BLOCKS:
            d = self.blocks[p].shape[1]
            out[p] = self.blocks[p] @ C[k:k + d]
            k += d
        return out

    def to_json(self, space: SymplecticSpace | None = None) -> str:
        d = {f"H({p})": self.blocks[p].T.tolist() for p in BLOCKS}
        if space is not None:
            d["coordinates"] = list(space.labels3) + list(space.labels4)
        return json.dumps(d)


def _orth(A):
    q, _ = np.linalg.qr(np.asarray(A, dtype=float))
    return q


def subspace_gap(A, B) -> float:
    """Largest principal-angle sine between column spans of A and B (equal dimension)."""
    qa, qb = _orth(A), _orth(B)
    return float(np.linalg.norm(qa - qb @ (qb.T @ qa), 2))


@dataclass
class ValidationReport:
    residuals: dict
    margins: dict
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = (all(r <= self.tolerance for r in self.residuals.values())
                       and all(m > 0 for m in self.margins.values()))

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


def validate_point(space: SymplecticSpace, point: HodgePoint, tol: float = 1e-9) -> ValidationReport:
    """Check the block dimensions, the iota-swap, Q-orthogonality and the sign pattern."""
    n = space.n
    res, margins = {}, {}
    dims = tuple(point[p].shape[1] for p in BLOCKS)
    res["dims"] = 0.0 if dims == (1, n, n, 1) else float("inf")
    if res["dims"]:
        return ValidationReport(res, margins, tol)
    margins["span"] = float(np.linalg.svd(np.hstack([_orth(point[p]) for p in BLOCKS]), compute_uv=False)[-1]) - 1e-8
    iota = space.iota
    for p in BLOCKS:
        res[f"swap{p}"] = subspace_gap(iota @ point[p], point[3 - p])
    scale = np.linalg.norm(iota @ space.Q, 2)
    O = {p: _orth(point[p]) for p in BLOCKS}
    for p in BLOCKS:
        for q in BLOCKS:
            if p < q:
                res[f"orth{p}{q}"] = float(np.abs(space.iform(O[p], O[q])).max() / scale)
        S = (-1) ** (p + 1) * space.iform(O[p], O[p])
        S = 0.5 * (S + S.T)
        m = float(np.linalg.eigvalsh(S)[0] / scale)
        margins[f"sign{p}"] = m
        res[f"sign{p}"] = max(0.0, -m)
    return ValidationReport(res, margins, tol)


def pair_iso(space: SymplecticSpace, point: HodgePoint):
    """(ell, q): the line of H^(3)-projections to H^3 and the induced inner product on H^3."""
    N = space.N
    U = np.vstack([np.eye(N), np.zeros((N, N))])
    comp = point.decompose(U)
    Qm = space.Q
    q = 2 * comp[0].T @ Qm @ comp[3] - 2 * comp[1].T @ Qm @ comp[2]
    q = 0.5 * (q + q.T)
    w = point[3][:, 0]
    ell = (w + space.iota @ w)[:N]
    return ell / np.linalg.norm(ell), q


@dataclass(frozen=True, eq=False)
class StandardBasis:
    """u_j (columns, H^3 coordinates) and the Q-dual v_j (columns, H^4 coordinates)."""
    U: np.ndarray
    V: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        N = self.U.shape[0]
        S = np.zeros((2 * N, 2 * N))
        S[:N, :N] = self.U
        S[N:, N:] = self.V
        return S

    def block_vectors(self) -> dict:
        """Generators of the blocks of the point this basis is adapted to."""
        S = self.matrix
        N = self.U.shape[0]
        u, v = S[:, :N], S[:, N:]
        return {3: u[:, :1] + v[:, :1], 2: u[:, 1:] - v[:, 1:], 1: u[:, 1:] + v[:, 1:], 0: u[:, :1] - v[:, :1]}


def basis_from_pair(space: SymplecticSpace, ell, q) -> StandardBasis:
    """q-orthonormal u_0..u_n with u_0 along ell (same sign), and the Q-dual v_j."""
    ell = np.asarray(ell, dtype=float)
    q = np.asarray(q, dtype=float)
    N = space.N
    if ell.shape != (N,) or not np.any(ell):
        raise PeriodError("ell must be a nonzero vector of H^3")
    if not np.allclose(q, q.T) or np.linalg.eigvalsh(0.5 * (q + q.T))[0] <= 0:
        raise PeriodError("q must be positive definite")
    us = [ell / np.sqrt(ell @ q @ ell)]
    for i in range(N):
        w = np.eye(N)[i]
        for u in us:
            w = w - (u @ q @ w) * u
        nrm = np.sqrt(max(w @ q @ w, 0.0))
        if nrm > 1e-8:
            us.append(w / nrm)
        if len(us) == N:
            break
    U = np.array(us).T
    V = np.linalg.inv(U.T @ space.pairing)
    return StandardBasis(U=U, V=V)


def point_from_pair(space: SymplecticSpace, ell, q) -> HodgePoint:
    return HodgePoint(basis_from_pair(space, ell, q).block_vectors())


def standard_basis(space: SymplecticSpace, point: HodgePoint) -> StandardBasis:
    ell, q = pair_iso(space, point)
    return basis_from_pair(space, ell, q)


def standard_basis_residual(space, point, sb: StandardBasis) -> float:
    """How far the blocks of the point are from the spans prescribed by the basis."""
    bv = sb.block_vectors()
    r = max(subspace_gap(bv[p], point[p]) for p in BLOCKS)
    N = space.N
    S = sb.matrix
    duality = np.abs(S[:, :N].T @ space.Q @ S[:, N:] - np.eye(N)).max()
    return max(r, float(duality))


def act(space: SymplecticSpace, A, point: HodgePoint) -> HodgePoint:
    """GL(H^3) acting on H^3 by A and on H^4 by the Q-contragredient."""
    A = np.asarray(A, dtype=float)
    P = space.pairing
    N = space.N
    M = np.zeros((2 * N, 2 * N))
    M[:N, :N] = A
    M[N:, N:] = np.linalg.solve(P, np.linalg.inv(A).T @ P)
    return HodgePoint({p: M @ point[p] for p in BLOCKS})


def random_point(space: SymplecticSpace, rng) -> HodgePoint:
    N = space.N
    A = rng.standard_normal((N, N))
    return point_from_pair(space, rng.standard_normal(N), A @ A.T + 0.5 * np.eye(N))


# -- tangent vectors -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TangentRep:
    """Matrix a in the standard basis: a(u_j) = a_ij u_i, a(v_j) = -a_ji v_i."""
    a: np.ndarray
    basis: StandardBasis

    def to_p(self) -> "TangentRep":
        """Projection onto the complement p of the isotropy algebra."""
        a = self.a.copy()
        a[1:, 1:] = 0.5 * (a[1:, 1:] + a[1:, 1:].T)
        return TangentRep(a, self.basis)

    def endomorphism(self) -> np.ndarray:
        S = self.basis.matrix
        N = self.a.shape[0]
        D = np.zeros((2 * N, 2 * N))
        D[:N, :N] = self.a
        D[N:, N:] = -self.a.T
        return S @ D @ np.linalg.inv(S)

    def to_json(self) -> str:
        return json.dumps({"a": self.a.tolist()})


def classify(xi: TangentRep) -> dict:
    """Residuals of membership in the horizontal, vertical, transverse and l pieces."""
    a = xi.a
    s = max(1.0, float(np.abs(a).max()))
    hor = float(np.abs(a[0, 1:] - a[1:, 0]).max(initial=0.0)) / s
    low = a[1:, 1:]
    return {
        "horizontal": hor,
        "transverse": max(hor, abs(a[0, 0]) / s),
        "vertical": max(float(np.abs(a[0, 1:] + a[1:, 0]).max(initial=0.0)), abs(a[0, 0]),
                        float(np.abs(0.5 * (low + low.T)).max(initial=0.0))) / s,
        "ell": max(float(np.abs(a - np.diag(np.r_[a[0, 0], np.zeros(len(a) - 1)])).max()) / s, 0.0),
        "lower_sym": float(np.abs(low - low.T).max(initial=0.0)) / s,
    }


def lower_part(point: HodgePoint, xi: TangentRep, y, p: int) -> np.ndarray:
    """phi^(p)_xi(y): the action of xi on y in H^(p), keeping only blocks below p."""
    comp = point.decompose(xi.endomorphism() @ y)
    return sum(comp[q] for q in BLOCKS if q < p)


def block_criterion(point: HodgePoint, xi: TangentRep) -> dict:
    """Horizontality and transversality read off the block maps."""
    w = point[3]
    E = xi.endomorphism()
    c3 = point.decompose(E @ w)
    c2 = point.decompose(E @ point[2])
    s = max(1.0, float(np.abs(xi.a).max()))
    n3 = np.linalg.norm(w)
    # the H^(0) part of phi3 is the scaling direction, allowed for horizontal vectors
    hor = max(np.linalg.norm(c3[1]) / n3, np.linalg.norm(c2[0]) / np.linalg.norm(point[2])) / s
    return {"horizontal": float(hor), "transverse": float(max(hor, np.linalg.norm(c3[0]) / n3 / s))}


def _require_transverse(xi, tol=1e-6):
    r = classify(xi)["transverse"]
    if r > tol:
        raise PeriodError(f"tangent vector is not transverse (residual {r:.3e})")


def metric_gD(xi: TangentRep, eta: TangentRep | None = None) -> float:
    """Frobenius pairing on p."""
    a = xi.to_p().a
    b = a if eta is None else eta.to_p().a
    return float(np.sum(a * b))


def h_D(space: SymplecticSpace, point: HodgePoint, xi: TangentRep, eta: TangentRep | None = None) -> float:
    """-Q(iota phi3_xi w, phi3_eta w) / Q(iota w, w) on transverse vectors."""
    eta = xi if eta is None else eta
    _require_transverse(xi)
    _require_transverse(eta)
    w = point[3][:, 0]
    a = lower_part(point, xi, w, 3)
    b = lower_part(point, eta, w, 3)
    return -space.form(space.iota @ a, b) / space.form(space.iota @ w, w)


def Xi_D(space: SymplecticSpace, point: HodgePoint, xi1, xi2, xi3) -> float:
    """Scalar c with phi1_xi1 phi2_xi2 phi3_xi3 (w) = -c iota(w)."""
    for x in (xi1, xi2, xi3):
        _require_transverse(x)
    w = point[3][:, 0]
    y = lower_part(point, xi3, w, 3)
    y = lower_part(point, xi2, y, 2)
    y = lower_part(point, xi1, y, 1)
    iw = space.iota @ w
    return -float(iw @ y / (iw @ iw))


def tangent_rank(space: SymplecticSpace, point: HodgePoint, step: float = 1e-6) -> int:
    """Rank of the orbit map gl(H^3) -> T_point D, through the (ell, q) description."""
    N = space.N
    ell0, q0 = pair_iso(space, point)
    cols = []
    for i in range(N):
        for j in range(N):
            E = np.zeros((N, N))
            E[i, j] = 1.0

            def f(t):
                ell, q = pair_iso(space, act(space, np.eye(N) + t * E, point))
                ell = ell * np.sign(ell @ ell0)
                return np.r_[ell, q[np.triu_indices(N)]]

            cols.append((f(step) - f(-step)) / (2 * step))
    J = np.array(cols).T
    sv = np.linalg.svd(J, compute_uv=False)
    return int(np.sum(sv > 1e-6 * sv[0]))


# -- the flat orbifold chart ---------------------------------------------------

class FlatPeriodModel:
    """Cohomology bookkeeping and the period map for the flat orbifold chart."""

    def __init__(self, chart):
        self.chart = chart
        self.etas = chart.etas
        self.E = np.array([eta.coeffs for eta in self.etas])          # 7 x 35
        duals = []
        for eta in self.etas:
            j = int(np.flatnonzero(eta.coeffs)[0])
            comp = np.zeros(35)
            comp[34 - j] = 1.0  # complement monomial; the ordering of 3- and 4-indices is reversed
            nu = AltForm(4, comp)
            duals.append(nu / top_coeff(wedge(eta, nu)))
        self.duals = duals
        self.D = np.array([nu.coeffs for nu in duals])                 # 7 x 35
        self.space = SymplecticSpace.darboux(6, tuple(f"[{l}]" for l in _labels(self.etas)),
                                             tuple(f"[{l}]*" for l in _labels(self.etas)))

    def class3(self, form: AltForm, tol=1e-9) -> np.ndarray:
        c = self.E @ form.coeffs  # etas are signed unit monomials
        if np.abs(c @ self.E - form.coeffs).max() > tol * max(1.0, form.norm_inf()):
            raise PeriodError("3-form is not in the invariant span")
        return c

    def class4(self, form: AltForm, tol=1e-9) -> np.ndarray:
        c = np.array([top_coeff(wedge(eta, form)) for eta in self.etas])
        if np.abs(c @ self.D - form.coeffs).max() > tol * max(1.0, form.norm_inf()):
            raise PeriodError("4-form is not in the invariant span")
        return c

    def vector(self, form3: AltForm | None = None, form4: AltForm | None = None) -> np.ndarray:
        a = self.class3(form3) if form3 is not None else np.zeros(7)
        b = self.class4(form4) if form4 is not None else np.zeros(7)
        return np.r_[a, b]

    def form_of(self, y) -> AltForm:
        return AltForm(3, np.asarray(y) @ self.E)

    def l2_gram(self, x) -> np.ndarray:
        fr = frame_of(self.chart.form(x))
        return self.E @ fr.gram3 @ self.E.T * fr.volume_density

    def phi_map(self, x) -> HodgePoint:
        x = self.chart._check(x)
        fr = frame_of(self.chart.form(x))
        w3 = self.vector(fr.phi, fr.theta)[:, None]
        M = self.E @ fr.gram3 @ self.E.T
        _, _, vt = np.linalg.svd((M @ x)[None, :])
        Y = vt[1:].T  # L2-orthocomplement of x, 7 x 6
        cols = []
        for y in Y.T:
            eta = self.form_of(y)
            cols.append(self.vector(eta, -fr.star(eta)))
        w2 = np.array(cols).T
        iota = self.space.iota
        return HodgePoint({3: w3, 2: w2, 1: iota @ w2, 0: iota @ w3})

    def _basis_at(self, x, ref_ell=None) -> StandardBasis:
        ell, q = pair_iso(self.space, self.phi_map(x))
        if ref_ell is not None and ell @ ref_ell < 0:
            ell = -ell
        return basis_from_pair(self.space, ell, q)

    def dphi(self, x, direction, scheme: FDScheme | None = None) -> TangentRep:
        """Differential of the period map by finite differences, projected to p."""
        x = np.asarray(x, dtype=float)
        direction = np.asarray(direction, dtype=float)
        sb0 = self._basis_at(x)
        N = self.space.N
        U0inv = np.linalg.inv(sb0.U)
        ell0 = sb0.U[:, 0]

        def curve(t):
            return U0inv @ self._basis_at(x + t * direction, ell0).U

        adot = derivative(curve, 0.0, scheme or FDScheme(1e-3, 2))
        return TangentRep(adot, sb0).to_p()

    # closed-form differentials at unit-volume points
    def closed_phi3(self, x, y) -> np.ndarray:
        fr = frame_of(self.chart.form(x))
        eta = self.form_of(y)
        return self.vector(eta, -fr.star(eta))

    def closed_phi2(self, x, y, y2) -> np.ndarray:
        fr = frame_of(self.chart.form(x))
        h = solve_h(fr, self.form_of(y))
        z = project(fr, delta_action(h, self.form_of(y2)), 27)
        return self.vector(z, fr.star(z))

    def closed_phi1(self, x, y, y2) -> np.ndarray:
        fr = frame_of(self.chart.form(x))
        c = fr.inner(self.form_of(y2), self.form_of(y)) * fr.volume_density / 7.0
        return c * self.vector(fr.phi, -fr.theta)

    def sources(self, x, y2):
        """[phi]+[Theta], [eta']-[*eta'] and [eta']+[*eta'] at x."""
        fr = frame_of(self.chart.form(x))
        eta2 = self.form_of(y2)
        return (self.vector(fr.phi, fr.theta), self.vector(eta2, -fr.star(eta2)),
                self.vector(eta2, fr.star(eta2)))


def _labels(etas):
    from .exterior import basis, label
    return [label(basis(3)[int(np.flatnonzero(e.coeffs)[0])]) for e in etas]


# -- S^2_+ geometry and the second fundamental form ----------------------------

def s2plus_metric(q, A, B) -> float:
    qi = np.linalg.inv(q)
    return 0.25 * float(np.trace(qi @ A @ qi @ B))


def s2plus_covariant(q, qdot, qdot2) -> np.ndarray:
    """Christoffel term of the invariant metric: -1/2 (qdot q^-1 qdot2 + qdot2 q^-1 qdot)."""
    qi = np.linalg.inv(q)
    return -0.5 * (qdot @ qi @ qdot2 + qdot2 @ qi @ qdot)


def q_of(family, x, G=None) -> np.ndarray:
    """e^{-F/3} G = Vol * G."""
    from .hessian import hessian_closed
    if G is None:
        if family.has_pointwise_forms:
            G = hessian_closed(family, x)
        else:
            f = (lambda X: -3.0 * np.log(family.volume_batch(X)))
            G = partial_tensor(f, np.asarray(x, dtype=float), 2, default_scheme(2), vectorized=True)
    return family.volume(x) * G


def sff_residual(family, x, scheme: FDScheme | None = None) -> dict:
    """Residuals of the second-fundamental-form identity and of its normal part, over all (a, b)."""
    from .hessian import christoffel, e_residual, jet
    x = family._check(x)
    # q itself carries finite-difference noise on charts without closed forms, so a wider outer step
    scheme = scheme or FDScheme(3e-2, 2)
    qfun = lambda y: q_of(family, y)
    dq = partial_tensor(qfun, x, 1, scheme)     # [c, k, l]
    ddq = partial_tensor(qfun, x, 2, scheme)    # [a, b, k, l]
    j = jet(family, x)
    G = j.closed.get(2, j.F2)
    F3 = j.closed.get(3, j.F3)
    Gam = christoffel(G, F3)
    nxi = e_residual(j)[1]
    q = qfun(x)
    vol = family.volume(x)
    m = x.size
    Gs = np.array([[s2plus_metric(q, dq[c], dq[d]) for d in range(m)] for c in range(m)])
    ident, normal = 0.0, 0.0
    for a in range(m):
        for b in range(m):
            lhs = ddq[a, b] + s2plus_covariant(q, dq[a], dq[b])
            rhs = np.einsum("c,ckl->kl", Gam[:, a, b], dq) + 2 * vol * nxi[a, b]
            ident = max(ident, float(np.abs(lhs - rhs).max()))
            coef = np.linalg.solve(Gs, [s2plus_metric(q, dq[c], lhs) for c in range(m)])
            nv = lhs - np.einsum("c,ckl->kl", coef, dq)
            normal = max(normal, np.sqrt(max(s2plus_metric(q, nv, nv), 0.0)))
    return {"identity": ident, "normal": normal}


# -- contact structure -----------------------------------------------------------

def darboux_coordinates(space: SymplecticSpace, sb: StandardBasis, y):
    """(w^j, w_j): coordinates along (u_j+v_j)/sqrt2 and (u_j-v_j)/sqrt2."""
    N = space.N
    S = sb.matrix
    Pm = np.hstack([(S[:, :N] + S[:, N:]), (S[:, :N] - S[:, N:])]) / np.sqrt(2)
    c = np.linalg.solve(Pm, y)
    return c[:N], c[N:]


def _affine(space, sb, w, wdot):
    up, dn = darboux_coordinates(space, sb, w)
    dup, ddn = darboux_coordinates(space, sb, wdot)
    if abs(up[0]) < 1e-12:
        raise PeriodError("point outside the affine chart w^0 = 1")
    W = (up / up[0], dn / up[0])
    dW = ((dup * up[0] - up * dup[0]) / up[0] ** 2, (ddn * up[0] - dn * dup[0]) / up[0] ** 2)
    return W, dW


def contact_alpha(space: SymplecticSpace, sb: StandardBasis, w, wdot) -> float:
    """alpha = dw_0 + sum_{j>=1} (w^j dw_j - w_j dw^j) on the chart w^0 = 1."""
    (Wu, Wd), (dWu, dWd) = _affine(space, sb, w, wdot)
    return float(dWd[0] + np.sum(Wu[1:] * dWd[1:] - Wd[1:] * dWu[1:]))


def contact_alpha_invariant(space: SymplecticSpace, sb: StandardBasis, w, wdot) -> float:
    """Same form written as -Q(w, wdot) / (w^0)^2."""
    up, _ = darboux_coordinates(space, sb, w)
    return -space.form(w, wdot) / up[0] ** 2


def contact_dalpha(space: SymplecticSpace, sb: StandardBasis, w, X, Y) -> float:
    """d alpha = -2 sum_{j>=1} dw_j ^ dw^j evaluated on two velocities at w."""
    _, (xu, xd) = _affine(space, sb, w, X)
    _, (yu, yd) = _affine(space, sb, w, Y)
    return float(-2 * np.sum(xd[1:] * yu[1:] - xu[1:] * yd[1:]))
