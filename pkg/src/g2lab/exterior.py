"""Exterior algebra of the dual of R^7 in the dense monomial basis.

A k-form is stored as a vector of length C(7, k) whose entries are the
coefficients of e^{i1...ik}, i1 < ... < ik, in lexicographic order.
Indices are 0-based internally; labels such as ``"123"`` are 1-based.
"""
from __future__ import annotations

import itertools
import json
from functools import lru_cache
from math import comb

import numpy as np

DIM = 7


class FormError(ValueError):
    """Raised on degree or shape errors in form arithmetic."""


@lru_cache(maxsize=None)
def basis(k: int) -> tuple:
    """Sorted multi-indices of length k, lexicographic."""
    if not 0 <= k <= DIM:
        raise FormError(f"degree {k} outside 0..{DIM}")
    return tuple(itertools.combinations(range(DIM), k))


@lru_cache(maxsize=None)
def _position(k: int) -> dict:
    return {idx: n for n, idx in enumerate(basis(k))}


def _sort_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (0 if it has a repeat)."""
    seq = list(seq)
    if len(set(seq)) < len(seq):
        return 0
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inv % 2 else 1


def label(idx) -> str:
    return "".join(str(i + 1) for i in idx)


def parse_label(s: str) -> tuple:
    idx = tuple(int(c) - 1 for c in s)
    if any(not 0 <= i < DIM for i in idx) or list(idx) != sorted(set(idx)):
        raise FormError(f"bad multi-index label {s!r}")
    return idx


class AltForm:
    """Constant-coefficient k-form on R^7."""

    __slots__ = ("degree", "coeffs")

    def __init__(self, degree: int, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.shape != (comb(DIM, degree),):
            raise FormError(f"degree {degree} needs {comb(DIM, degree)} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        self.degree = degree
        self.coeffs = c

    @classmethod
    def zero(cls, k: int) -> "AltForm":
        return cls(k, np.zeros(comb(DIM, k)))

    @classmethod
    def monomial(cls, *indices, coeff: float = 1.0) -> "AltForm":
        """e^{i1...ik} from 1-based indices in any order (signed by sorting)."""
        idx = tuple(i - 1 for i in indices)
        s = _sort_sign(idx)
        k = len(idx)
        out = np.zeros(comb(DIM, k))
        if s:
            out[_position(k)[tuple(sorted(idx))]] = s * coeff
        return cls(k, out)

    def __add__(self, other):
        _same_degree(self, other)
        return AltForm(self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_degree(self, other)
        return AltForm(self.degree, self.coeffs - other.coeffs)

    def __neg__(self):
        return AltForm(self.degree, -self.coeffs)

    def __mul__(self, s):
        return AltForm(self.degree, float(s) * self.coeffs)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return AltForm(self.degree, self.coeffs / float(s))

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def allclose(self, other, atol=1e-12) -> bool:
        return self.degree == other.degree and np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol)

    def items(self):
        return [(label(idx), float(c)) for idx, c in zip(basis(self.degree), self.coeffs) if c != 0.0]

    def to_json(self) -> str:
        return json.dumps([{"index": i, "coeff": c} for i, c in self.items()])

    @classmethod
    def from_json(cls, text: str, degree: int | None = None) -> "AltForm":
        entries = json.loads(text)
        if not entries:
            if degree is None:
                raise FormError("empty form needs an explicit degree")
            return cls.zero(degree)
        k = len(entries[0]["index"])
        if degree is not None and degree != k:
            raise FormError(f"expected degree {degree}, found {k}")
        out = np.zeros(comb(DIM, k))
        for e in entries:
            idx = parse_label(e["index"])
            if len(idx) != k:
                raise FormError("mixed degrees in serialized form")
            out[_position(k)[idx]] = float(e["coeff"])
        return cls(k, out)

    def __repr__(self):
        terms = " ".join(f"{c:+.6g}*e{i}" for i, c in self.items())
        return f"AltForm({self.degree}: {terms or '0'})"


def e(*indices) -> AltForm:
    """Shorthand: ``e(1, 2, 3)`` is e^{123}."""
    return AltForm.monomial(*indices)


def _same_degree(a, b):
    if a.degree != b.degree:
        raise FormError(f"degree mismatch {a.degree} vs {b.degree}")


# -- structure tensors -------------------------------------------------------

@lru_cache(maxsize=None)
def wedge_tensor(p: int, q: int) -> np.ndarray:
    """W[I, J, K] with (e^I ^ e^J) = sum_K W[I,J,K] e^K."""
    if p + q > DIM:
        raise FormError(f"wedge degree {p}+{q} exceeds {DIM}")
    W = np.zeros((comb(DIM, p), comb(DIM, q), comb(DIM, p + q)))
    pos = _position(p + q)
    for a, I in enumerate(basis(p)):
        for b, J in enumerate(basis(q)):
            s = _sort_sign(I + J)
            if s:
                W[a, b, pos[tuple(sorted(I + J))]] = s
    W.setflags(write=False)
    return W


@lru_cache(maxsize=None)
def interior_tensor(k: int) -> np.ndarray:
    """T[i, I, K] with e_i -| e^I = sum_K T[i,I,K] e^K."""
    if k < 1:
        raise FormError("cannot contract a 0-form")
    T = np.zeros((DIM, comb(DIM, k), comb(DIM, k - 1)))
    pos = _position(k - 1)
    for a, I in enumerate(basis(k)):
        for s, i in enumerate(I):
            T[i, a, pos[I[:s] + I[s + 1:]]] = (-1) ** s
    T.setflags(write=False)
    return T


@lru_cache(maxsize=None)
def derivation_tensor(k: int) -> np.ndarray:
    """D[i, j, I, K]: coefficient of h_ij in the e^K part of h.e^I."""
    D = np.zeros((DIM, DIM, comb(DIM, k), comb(DIM, k)))
    pos = _position(k)
    for a, I in enumerate(basis(k)):
        for s, i in enumerate(I):
            for j in range(DIM):
                J = I[:s] + (j,) + I[s + 1:]
                sg = _sort_sign(J)
                if sg:
                    D[i, j, a, pos[tuple(sorted(J))]] += sg
    D.setflags(write=False)
    return D


@lru_cache(maxsize=None)
def _complement_sign(k: int) -> tuple:
    """(perm, signs): e^I ^ e^{I^c} = sign * e^{1..7}."""
    pos = _position(DIM - k)
    perm = np.empty(comb(DIM, k), dtype=int)
    signs = np.empty(comb(DIM, k))
    for a, I in enumerate(basis(k)):
        Ic = tuple(i for i in range(DIM) if i not in I)
        perm[a] = pos[Ic]
        signs[a] = _sort_sign(I + Ic)
    return perm, signs


def compound(A, k: int) -> np.ndarray:
    """k-th compound matrix C[I, J] = det A[I, J]."""
    A = np.asarray(A, dtype=float)
    if k == 0:
        return np.ones((1, 1))
    idx = np.array(basis(k))
    sub = A[idx[:, None, :, None], idx[None, :, None, :]]
    return np.linalg.det(sub)


# -- operations --------------------------------------------------------------

def wedge(a: AltForm, b: AltForm) -> AltForm:
    W = wedge_tensor(a.degree, b.degree)
    return AltForm(a.degree + b.degree, np.einsum("i,j,ijk->k", a.coeffs, b.coeffs, W))


def interior(v, a: AltForm) -> AltForm:
    """Contraction v -| a in the first slot."""
    v = np.asarray(v, dtype=float)
    if v.shape != (DIM,):
        raise FormError("vector must have 7 components")
    return AltForm(a.degree - 1, np.einsum("i,iak,a->k", v, interior_tensor(a.degree), a.coeffs))


def derivation_matrix(h, k: int) -> np.ndarray:
    """Matrix M with coeffs(h.a) = coeffs(a) @ M on k-forms."""
    h = _endo(h)
    if k == 0:
        return np.zeros((1, 1))
    return np.einsum("ij,ijab->ab", h, derivation_tensor(k))


def delta_action(h, a: AltForm) -> AltForm:
    """Infinitesimal action of gl(7): d/dt (exp(t h))^* a at t = 0."""
    return AltForm(a.degree, a.coeffs @ derivation_matrix(h, a.degree))


def pullback(A, a: AltForm) -> AltForm:
    """(A^* a)(v_1, ..., v_k) = a(A v_1, ..., A v_k)."""
    A = _endo(A)
    return AltForm(a.degree, a.coeffs @ compound(A, a.degree))


def _endo(h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != (DIM, DIM):
        raise FormError("endomorphism must be 7x7")
    return h


def check_metric(g) -> np.ndarray:
    """Return g as an array after checking it is symmetric positive definite."""
    g = np.asarray(g, dtype=float)
    if g.shape != (DIM, DIM):
        raise FormError("metric must be 7x7")
    if not np.allclose(g, g.T, rtol=0, atol=1e-12 * max(1.0, np.abs(g).max())):
        raise FormError("metric is not symmetric")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise FormError("metric is not positive definite") from None
    return 0.5 * (g + g.T)


def euclidean_star_matrix(k: int) -> np.ndarray:
    """Hodge star of the standard metric as a matrix acting on row vectors."""
    perm, signs = _complement_sign(k)
    S = np.zeros((comb(DIM, k), comb(DIM, DIM - k)))
    S[np.arange(comb(DIM, k)), perm] = signs
    return S


def star_matrix(g, k: int) -> np.ndarray:
    """Hodge star of g on k-forms, built in a Cholesky orthonormal coframe."""
    g = check_metric(g)
    L = np.linalg.cholesky(g)
    A = L.T  # coframe theta = A^* e is g-orthonormal
    to_frame = compound(np.linalg.inv(A), k)
    back = compound(A, DIM - k)
    return to_frame @ euclidean_star_matrix(k) @ back


def hodge_star(g, a: AltForm) -> AltForm:
    return AltForm(DIM - a.degree, a.coeffs @ star_matrix(g, a.degree))


def gram_matrix(g, k: int) -> np.ndarray:
    """Induced inner product on k-forms: Gram determinants of g^{-1}."""
    g = check_metric(g)
    return compound(np.linalg.inv(g), k)


def lambda_inner(g, a: AltForm, b: AltForm) -> float:
    _same_degree(a, b)
    return float(a.coeffs @ gram_matrix(g, a.degree) @ b.coeffs)


def volume_form(g) -> AltForm:
    g = check_metric(g)
    return AltForm(DIM, [np.sqrt(np.linalg.det(g))])


def top_coeff(a: AltForm) -> float:
    """Coefficient of e^{1..7} of a top-degree form."""
    if a.degree != DIM:
        raise FormError("not a top-degree form")
    return float(a.coeffs[0])
