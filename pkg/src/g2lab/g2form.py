"""Pointwise algebra of a positive 3-form: metric, volume, dual 4-form, type projections."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exterior import (
    DIM, AltForm, FormError, delta_action, gram_matrix, hodge_star,
    interior_tensor, wedge_tensor,
)

# standard positive 3-form, signed Fano monomials (1-based)
STANDARD_TERMS = (
    ((1, 2, 3), 1.0), ((1, 4, 5), 1.0), ((1, 6, 7), 1.0), ((2, 4, 6), 1.0),
    ((2, 5, 7), -1.0), ((3, 4, 7), -1.0), ((3, 5, 6), -1.0),
)


def standard_form() -> AltForm:
    out = AltForm.zero(3)
    for idx, s in STANDARD_TERMS:
        out = out + s * AltForm.monomial(*idx)
    return out


PHI0 = standard_form()

POSITIVITY_RTOL = 1e-10


class NotPositiveError(FormError):
    pass


def b_matrix(phi: AltForm) -> np.ndarray:
    """B_ij with (e_i -| phi) ^ (e_j -| phi) ^ phi = B_ij e^{1..7}."""
    if phi.degree != 3:
        raise FormError("positivity is defined for 3-forms")
    alpha = np.einsum("iak,a->ik", interior_tensor(3), phi.coeffs)      # 7 x 21
    psi = np.einsum("kl,l->k", wedge_tensor(4, 3)[:, :, 0], phi.coeffs)  # 4-form -> top coeff
    B = alpha @ np.einsum("abk,k->ab", wedge_tensor(2, 2), psi) @ alpha.T
    return 0.5 * (B + B.T)


def b_matrix_batch(coeffs) -> np.ndarray:
    """B matrices for a stack of 3-form coefficient vectors, shape (P, 35) -> (P, 7, 7)."""
    c = np.atleast_2d(np.asarray(coeffs, dtype=float))
    alpha = np.einsum("iak,pa->pik", interior_tensor(3), c)
    psi = c @ wedge_tensor(4, 3)[:, :, 0].T
    pair = psi @ wedge_tensor(2, 2).reshape(21 * 21, 35).T  # (P, 21*21)
    B = alpha @ pair.reshape(-1, 21, 21) @ np.transpose(alpha, (0, 2, 1))
    return 0.5 * (B + np.transpose(B, (0, 2, 1)))


def volume_density_batch(coeffs) -> np.ndarray:
    """Volume densities of a stack of 3-forms; raises NotPositiveError on the first bad one."""
    B = b_matrix_batch(coeffs)
    w = np.linalg.eigvalsh(B)
    scale = np.linalg.norm(B, axis=(1, 2))
    bad = ~(w[:, 0] > POSITIVITY_RTOL * scale)
    if np.any(bad):
        err = NotPositiveError("3-form is not positive")
        err.point = np.atleast_2d(coeffs)[np.argmax(bad)]
        raise err
    return (np.prod(w, axis=1) / 6.0 ** 7) ** (1.0 / 9.0)


def is_positive(phi: AltForm) -> bool:
    if phi.degree != 3:
        return False
    B = b_matrix(phi)
    scale = np.linalg.norm(B)
    if scale == 0.0:
        return False
    return bool(np.linalg.eigvalsh(B)[0] > POSITIVITY_RTOL * scale)


def _span_projector(V: np.ndarray, M: np.ndarray) -> np.ndarray:
    """M-orthogonal projector onto the column span of V (acting on column vectors)."""
    return V @ np.linalg.solve(V.T @ M @ V, V.T @ M)


@dataclass(frozen=True, eq=False)
class G2Frame:
    """Data induced by a positive 3-form.

    Projector matrices act on coefficient column vectors: ``P @ eta.coeffs``.
    """
    phi: AltForm
    b: np.ndarray
    metric: np.ndarray
    volume_density: float
    theta: AltForm

    @cached_property
    def gram3(self) -> np.ndarray:
        return gram_matrix(self.metric, 3)

    @cached_property
    def gram2(self) -> np.ndarray:
        return gram_matrix(self.metric, 2)

    @cached_property
    def projectors3(self) -> dict:
        M = self.gram3
        p = self.phi.coeffs
        P1 = np.outer(p, M @ p) / 7.0
        V = np.einsum("iak,a->ki", interior_tensor(4), self.theta.coeffs)
        P7 = _span_projector(V, M)
        return {1: P1, 7: P7, 27: np.eye(35) - P1 - P7}

    @cached_property
    def projectors2(self) -> dict:
        V = np.einsum("iak,a->ki", interior_tensor(3), self.phi.coeffs)
        Q7 = _span_projector(V, self.gram2)
        return {7: Q7, 14: np.eye(21) - Q7}

    def inner(self, a: AltForm, b: AltForm) -> float:
        if a.degree != b.degree:
            raise FormError("degree mismatch")
        return float(a.coeffs @ gram_matrix(self.metric, a.degree) @ b.coeffs)

    def star(self, a: AltForm) -> AltForm:
        return hodge_star(self.metric, a)

    def to_json(self) -> str:
        return json.dumps({
            "metric": self.metric.tolist(),
            "volume_density": self.volume_density,
            "theta": json.loads(self.theta.to_json()),
        })


def frame_of(phi: AltForm) -> G2Frame:
    """Metric, volume density and dual 4-form of a positive 3-form."""
    B = b_matrix(phi)
    scale = np.linalg.norm(B)
    w = np.linalg.eigvalsh(B)
    if scale == 0.0 or w[0] <= POSITIVITY_RTOL * scale:
        raise NotPositiveError(f"3-form is not positive (min eigenvalue {w[0]:.3e} of B)")
    vol = (np.linalg.det(B) / 6.0 ** 7) ** (1.0 / 9.0)
    g = B / (6.0 * vol)
    theta = hodge_star(g, phi)
    B.setflags(write=False)
    g.setflags(write=False)
    return G2Frame(phi=phi, b=B, metric=g, volume_density=float(vol), theta=theta)


def project(frame: G2Frame, a: AltForm, component: int) -> AltForm:
    """Type component of a 2- or 3-form (component in {1,7,27} or {7,14})."""
    table = {3: frame.projectors3, 2: frame.projectors2}.get(a.degree)
    if table is None or component not in table:
        raise FormError(f"no type component {component} in degree {a.degree}")
    return AltForm(a.degree, table[component] @ a.coeffs)


def two_form_to_endo(metric, omega: AltForm) -> np.ndarray:
    """Endomorphism h with g(h u, v) = omega(u, v)."""
    W = np.zeros((DIM, DIM))
    iu = np.triu_indices(DIM, 1)
    W[iu] = omega.coeffs  # lexicographic 2-indices match triu order
    W = W - W.T
    return np.linalg.solve(np.asarray(metric), W.T)


@dataclass(frozen=True, eq=False)
class _HBasis:
    endos: np.ndarray   # (35, 7, 7)
    images: np.ndarray  # (35, 35): column n is coeffs of endos[n].phi


def _h_basis(frame: G2Frame) -> _HBasis:
    g = frame.metric
    ginv = np.linalg.inv(g)
    endos = []
    for i in range(DIM):
        for j in range(i, DIM):
            S = np.zeros((DIM, DIM))
            S[i, j] = S[j, i] = 1.0
            endos.append(ginv @ S)
    alpha = np.einsum("iak,a->ik", interior_tensor(3), frame.phi.coeffs)
    for i in range(DIM):
        endos.append(two_form_to_endo(g, AltForm(2, alpha[i])))
    endos = np.array(endos)
    images = np.array([delta_action(h, frame.phi).coeffs for h in endos]).T
    return _HBasis(endos, images)


def solve_h(frame: G2Frame, eta: AltForm) -> np.ndarray:
    """Endomorphism h, orthogonal to the 14-dimensional stabiliser, with h.phi = eta."""
    if eta.degree != 3:
        raise FormError("solve_h expects a 3-form")
    hb = _h_basis(frame)
    c = np.linalg.solve(hb.images, eta.coeffs)
    return np.einsum("n,nij->ij", c, hb.endos)


def theta_first_variation(frame: G2Frame, eta: AltForm) -> AltForm:
    """Derivative of the dual 4-form along phi + t eta."""
    s = frame.star
    return (4.0 / 3.0) * s(project(frame, eta, 1)) + s(project(frame, eta, 7)) - s(project(frame, eta, 27))


def random_positive_form(rng: np.random.Generator, spread: float = 0.5, max_cond: float = 20.0) -> AltForm:
    """Pullback of the standard form by a random well-conditioned matrix of positive determinant."""
    while True:
        A = np.eye(DIM) + spread * rng.standard_normal((DIM, DIM))
        if np.linalg.cond(A) < max_cond:
            break
    if np.linalg.det(A) < 0:
        A[0] *= -1.0
    from .exterior import pullback
    return pullback(A, PHI0)
