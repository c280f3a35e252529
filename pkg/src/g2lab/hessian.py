"""Hessian geometry of the volume potential F = -3 log Vol on a moduli chart."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exterior import top_coeff, wedge
from .models import ModelFamily
from .numdiff import FDScheme, default_scheme, partial_tensor


class CapabilityError(ValueError):
    """The requested closed form needs data the family does not provide."""


def potential(family: ModelFamily, x) -> float:
    return family.potential(x)


def _potential_fn(family):
    if hasattr(family, "volume_batch"):
        return (lambda X: -3.0 * np.log(family.volume_batch(X))), True
    return family.potential, False


@dataclass(frozen=True, eq=False)
class PotentialJet:
    x: np.ndarray
    F: float
    derivs: dict                                   # order -> symmetric tensor
    provenance: dict                               # order -> "finite_difference" | "closed_form"
    closed: dict = field(default_factory=dict)     # order -> closed-form tensor when available
    error_estimate: dict = field(default_factory=dict)

    @property
    def F1(self):
        return self.derivs[1]

    @property
    def F2(self):
        return self.derivs[2]

    @property
    def F3(self):
        return self.derivs[3]

    @property
    def F4(self):
        return self.derivs.get(4)


def jet(family: ModelFamily, x, scheme: FDScheme | None = None, orders=(1, 2, 3, 4),
        closed: bool = True) -> PotentialJet:
    """Derivatives of F by finite differences, with closed forms alongside when available."""
    x = family._check(x)
    f, vec = _potential_fn(family)
    derivs, prov, errs = {}, {}, {}
    for k in orders:
        T, info = partial_tensor(f, x, k, scheme or default_scheme(k), vectorized=vec, return_info=True)
        derivs[k] = T
        prov[k] = "finite_difference"
        errs[k] = info["error_estimate"]
    cl = {}
    if closed and family.has_pointwise_forms:
        cl[1] = gradient_closed(family, x)
        cl[2] = hessian_closed(family, x)
        if getattr(family, "b1_zero", False):
            cl[3] = third_closed(family, x)
    return PotentialJet(x=x, F=family.potential(x), derivs=derivs, provenance=prov, closed=cl,
                        error_estimate=errs)


def closed_jet(family: ModelFamily, x) -> PotentialJet:
    """Jet of orders 1-3 built only from pointwise forms."""
    x = family._check(x)
    d = {1: gradient_closed(family, x), 2: hessian_closed(family, x), 3: third_closed(family, x)}
    return PotentialJet(x=x, F=family.potential(x), derivs=d, provenance={k: "closed_form" for k in d},
                        closed=dict(d))


def _require_forms(family):
    if not family.has_pointwise_forms:
        raise CapabilityError(f"{family.name} has no pointwise harmonic forms")


def gradient_closed(family, x) -> np.ndarray:
    """F_a = -(1/Vol) int eta_a ^ Theta, integrands constant on a unit torus."""
    _require_forms(family)
    from .g2form import frame_of
    fr = frame_of(family.form(x))
    return np.array([-top_coeff(wedge(eta, fr.theta)) for eta in family.etas]) / fr.volume_density


def hessian_closed(family, x) -> np.ndarray:
    """F_ab = <eta_a, pi_1 eta_b + pi_27 eta_b - pi_7 eta_b> (per unit volume)."""
    _require_forms(family)
    from .g2form import frame_of
    fr = frame_of(family.form(x))
    P = fr.projectors3
    E = np.array([eta.coeffs for eta in family.etas]).T  # 35 x n
    signed = (P[1] + P[27] - P[7]) @ E
    H = E.T @ fr.gram3 @ signed
    return 0.5 * (H + H.T)


def third_closed(family, x) -> np.ndarray:
    """F_abc = -2 <h_c.eta_a, eta_b>, with h_c.phi = eta_c (needs b1 = 0)."""
    _require_forms(family)
    if not getattr(family, "b1_zero", False):
        raise CapabilityError(f"{family.name}: third-derivative closed form needs b1 = 0")
    from .exterior import derivation_matrix
    hf = family.harmonic_frame(x)
    E = np.array([eta.coeffs for eta in hf.etas])  # n x 35
    M = hf.frame.gram3
    T = np.array([-2.0 * (E @ derivation_matrix(h, 3)) @ M @ E.T for h in hf.hs])  # [c, a, b]
    return np.transpose(T, (1, 2, 0))


def fourth_rhs(j: PotentialJet, F2=None, F3=None) -> np.ndarray:
    """1/2 G^{kl} (F_abk F_cdl + F_ack F_bdl + F_adk F_bcl)."""
    F2 = j.F2 if F2 is None else F2
    F3 = j.F3 if F3 is None else F3
    Gi = np.linalg.inv(F2)
    A = np.einsum("abk,kl,cdl->abcd", F3, Gi, F3)
    return 0.5 * (A + np.transpose(A, (0, 2, 1, 3)) + np.transpose(A, (0, 2, 3, 1)))


def e_residual(j: PotentialJet):
    """(F4 - fourth_rhs, nabla Xi = residual / 2)."""
    if j.F4 is None:
        raise ValueError("jet has no fourth derivatives")
    r = j.F4 - fourth_rhs(j)
    return r, 0.5 * r


def christoffel(G, F3) -> np.ndarray:
    """Gamma^k_ab = 1/2 G^{kl} F_abl, indexed [k, a, b]."""
    return 0.5 * np.einsum("kl,abl->kab", np.linalg.inv(G), F3)


def shima_curvature(G, F3) -> np.ndarray:
    """R_abcd = 1/4 G^{kl} (F_adk F_bcl - F_ack F_bdl)."""
    Gi = np.linalg.inv(G)
    A = np.einsum("adk,kl,bcl->abcd", F3, Gi, F3)
    return 0.25 * (A - np.transpose(A, (0, 1, 3, 2)))


def riemann_from_christoffel(family, x, scheme=None) -> np.ndarray:
    """Independent route: R^a_bcd from derivatives of Gamma, lowered with G."""
    x = family._check(x)
    f, vec = _potential_fn(family)

    def gamma(y):
        y = np.asarray(y)
        G = partial_tensor(f, y, 2, default_scheme(2), vectorized=vec)
        F3 = partial_tensor(f, y, 3, default_scheme(3), vectorized=vec)
        return christoffel(G, F3)

    dG = partial_tensor(gamma, x, 1, scheme or FDScheme(1e-2, 2))  # [c, k, a, b]
    G = partial_tensor(f, x, 2, default_scheme(2), vectorized=vec)
    Gam = gamma(x)
    # R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb
    Rup = (np.einsum("cadb->abcd", dG) - np.einsum("dacb->abcd", dG)
           + np.einsum("ace,edb->abcd", Gam, Gam) - np.einsum("ade,ecb->abcd", Gam, Gam))
    return np.einsum("ak,kbcd->abcd", G, Rup)


@dataclass(frozen=True, eq=False)
class HessianGeometry:
    G: np.ndarray
    Ginv: np.ndarray
    Gamma: np.ndarray
    Xi: np.ndarray
    nabla_xi: np.ndarray | None
    R: np.ndarray
    nabla_R: np.ndarray | None = None


def geometry(j: PotentialJet, nabla_R=None) -> HessianGeometry:
    G = j.F2
    nx = e_residual(j)[1] if j.F4 is not None else None
    return HessianGeometry(G=G, Ginv=np.linalg.inv(G), Gamma=christoffel(G, j.F3), Xi=0.5 * j.F3,
                           nabla_xi=nx, R=shima_curvature(G, j.F3), nabla_R=nabla_R)


def nabla_riemann(family: ModelFamily, x, scheme: FDScheme | None = None) -> np.ndarray:
    """nabla_e R_abcd from one finite-difference derivative of the Shima curvature."""
    x = family._check(x)
    f, vec = _potential_fn(family)

    def G_F3(y):
        return (partial_tensor(f, y, 2, default_scheme(2), vectorized=vec),
                partial_tensor(f, y, 3, default_scheme(3), vectorized=vec))

    dR = partial_tensor(lambda y: shima_curvature(*G_F3(y)), x, 1, scheme or FDScheme(1e-2, 2))
    G, F3 = G_F3(x)
    Gam = christoffel(G, F3)
    R = shima_curvature(G, F3)
    out = dR.copy()
    out -= np.einsum("kea,kbcd->eabcd", Gam, R)
    out -= np.einsum("keb,akcd->eabcd", Gam, R)
    out -= np.einsum("kec,abkd->eabcd", Gam, R)
    out -= np.einsum("ked,abck->eabcd", Gam, R)
    return out


def sectional_curvature(geom: HessianGeometry, u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    num = np.einsum("abcd,a,b,c,d->", geom.R, u, v, u, v)
    G = geom.G
    den = (u @ G @ u) * (v @ G @ v) - (u @ G @ v) ** 2
    return float(num / den)


def curvature_symmetry_residuals(R) -> dict:
    s = max(1.0, float(np.abs(R).max()))
    return {
        "antisym_ab": float(np.abs(R + np.transpose(R, (1, 0, 2, 3))).max() / s),
        "antisym_cd": float(np.abs(R + np.transpose(R, (0, 1, 3, 2))).max() / s),
        "pair_sym": float(np.abs(R - np.transpose(R, (2, 3, 0, 1))).max() / s),
        "bianchi": float(np.abs(R + np.transpose(R, (0, 2, 3, 1)) + np.transpose(R, (0, 3, 1, 2))).max() / s),
    }


def euler_identities(j: PotentialJet) -> dict:
    """Residuals of the identities forced by F(s x) = F(x) - 7 log s."""
    x = j.x
    out = {
        "x.F1": float(abs(x @ j.F1 + 7.0)),
        "x.F2": float(np.abs(j.F2 @ x + j.F1).max()),
        "x.F3": float(np.abs(np.einsum("abk,k->ab", j.F3, x) + 2.0 * j.F2).max()),
        "x.Xi": float(np.abs(np.einsum("abk,k->ab", 0.5 * j.F3, x) + j.F2).max()),
        "G(x,x)": float(abs(x @ j.F2 @ x - 7.0)),
    }
    if j.F4 is not None:
        res, _ = e_residual(j)
        out["x.nabla_xi"] = float(np.abs(np.einsum("abcd,d->abc", 0.5 * res, x)).max())
    return out
