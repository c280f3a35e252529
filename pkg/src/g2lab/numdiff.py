"""Central finite differences with Richardson extrapolation.

Mixed partials use product stencils built from 1-D central stencils, so the
truncation error expands in even powers of the step and each Richardson level
removes one more power of h^2.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

# 1-D central stencils for d^n/dx^n at unit step: {offset: weight}
_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}


class StencilError(ValueError):
    """A stencil point fell outside the domain of the function."""

    def __init__(self, point, cause):
        self.point = np.asarray(point)
        super().__init__(f"stencil point {np.array2string(self.point, precision=6)} left the domain: {cause}")


@dataclass(frozen=True)
class FDScheme:
    step: float = 1e-2
    levels: int = 2

    def __post_init__(self):
        if not (np.isfinite(self.step) and self.step > 0):
            raise ValueError(f"finite-difference step must be positive, got {self.step}")
        if int(self.levels) != self.levels or not 0 <= self.levels <= 3:
            raise ValueError(f"Richardson levels must be 0..3, got {self.levels}")


def default_scheme(order: int) -> FDScheme:
    if order <= 2:
        return FDScheme(1e-2, 2)
    if order == 3:
        return FDScheme(2e-2, 2)
    # wider base step so the finest Richardson level is not swamped by rounding
    return FDScheme(8e-2, 3)


def step_size(x, scheme: FDScheme) -> float:
    """Absolute step: relative step times the coordinate magnitude."""
    mag = float(np.max(np.abs(x))) if np.size(x) else 1.0
    return scheme.step * (mag if mag > 0 else 1.0)


def _product_stencil(multiset):
    """List of (offset dict {axis: k}, weight) for the mixed partial of a multiset of axes."""
    counts = {}
    for a in multiset:
        counts[a] = counts.get(a, 0) + 1
    axes = sorted(counts)
    for a in axes:
        if counts[a] not in _STENCILS:
            raise ValueError(f"derivative multiplicity {counts[a]} not supported")
    out = []
    for combo in itertools.product(*[list(_STENCILS[counts[a]].items()) for a in axes]):
        w = 1.0
        off = {}
        for a, (k, wk) in zip(axes, combo):
            w *= wk
            if k:
                off[a] = k
        out.append((off, w))
    return out


class _Evaluator:
    """Caches function values at x + h * (integer offsets along given directions)."""

    def __init__(self, f, x, directions, vectorized):
        self.f = f
        self.x = np.asarray(x, dtype=float)
        self.dirs = np.asarray(directions, dtype=float)
        self.vectorized = vectorized
        self.keys = {}

    def request(self, h, off):
        key = (h, tuple(sorted(off.items())))
        if key not in self.keys:
            self.keys[key] = None
        return key

    def point(self, key):
        h, off = key
        p = self.x.copy()
        for a, k in off:
            p = p + h * k * self.dirs[a]
        return p

    def run(self):
        keys = list(self.keys)
        pts = np.array([self.point(k) for k in keys])
        if self.vectorized:
            try:
                vals = np.asarray(self.f(pts), dtype=float)
            except ValueError as exc:
                bad = getattr(exc, "point", None)
                raise StencilError(pts[0] if bad is None else bad, exc) from None
            for k, v in zip(keys, vals):
                self.keys[k] = v
        else:
            for k, p in zip(keys, pts):
                try:
                    self.keys[k] = np.asarray(self.f(p), dtype=float)
                except ValueError as exc:
                    raise StencilError(p, exc) from None


def _richardson(seq):
    """Extrapolate estimates at h, h/2, ... ; returns (value, error estimate)."""
    table = [list(seq)]
    for k in range(1, len(seq)):
        prev = table[-1]
        table.append([prev[j] + (prev[j] - prev[j - 1]) / (4.0 ** k - 1.0) for j in range(1, len(prev))])
    best = table[-1][-1]
    err = np.abs(best - table[-2][-1]) if len(table) > 1 else np.full(np.shape(best), np.nan)
    return best, err


def _mixed(ev: _Evaluator, multisets, h0, levels):
    plans = []
    for ms in multisets:
        stencil = _product_stencil(ms)
        per_level = []
        for L in range(levels + 1):
            h = h0 / 2 ** L
            per_level.append((h, [(ev.request(h, off), w) for off, w in stencil]))
        plans.append(per_level)
    ev.run()
    results = []
    for ms, per_level in zip(multisets, plans):
        ests = []
        for h, terms in per_level:
            acc = sum(w * ev.keys[k] for k, w in terms)
            ests.append(acc / h ** len(ms))
        results.append(_richardson(ests))
    return results


def partial_tensor(f, x, order: int, scheme: FDScheme | None = None, vectorized: bool = False,
                   return_info: bool = False):
    """Symmetric tensor of partial derivatives of f at x.

    f may be scalar- or array-valued; the result has shape (m,)*order + value shape.
    With ``vectorized`` f receives a (P, m) array of points.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    scheme = scheme or default_scheme(order)
    x = np.asarray(x, dtype=float)
    m = x.size
    h0 = step_size(x, scheme)
    ev = _Evaluator(f, x, np.eye(m), vectorized)
    multisets = list(itertools.combinations_with_replacement(range(m), order))
    res = _mixed(ev, multisets, h0, scheme.levels)
    vshape = np.shape(res[0][0])
    T = np.zeros((m,) * order + vshape)
    E = np.zeros_like(T)
    for ms, (val, err) in zip(multisets, res):
        for perm in set(itertools.permutations(ms)):
            T[perm] = val
            E[perm] = err
    if return_info:
        # stencils are permutation invariant, so there is no asymmetry to average away
        return T, {"error_estimate": float(np.nanmax(E)) if E.size else 0.0, "asymmetry": 0.0,
                   "step": h0, "levels": scheme.levels, "evaluations": len(ev.keys)}
    return T


def directional(f, x, directions, scheme: FDScheme | None = None):
    """Mixed directional derivative d/dt1 ... d/dtk f(x + sum t_i v_i) at t = 0."""
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    k = directions.shape[0]
    scheme = scheme or default_scheme(k)
    x = np.asarray(x, dtype=float)
    ev = _Evaluator(f, x, directions, False)
    (val, _), = _mixed(ev, [tuple(range(k))], step_size(x, scheme), scheme.levels)
    return val


def contract(T, directions) -> np.ndarray:
    """Contract the leading indices of a tensor with the given vectors."""
    out = np.asarray(T)
    for v in directions:
        out = np.tensordot(np.asarray(v, dtype=float), out, axes=([0], [0]))
    return out


def derivative(f, x, scheme: FDScheme | None = None):
    """First derivative of f (possibly array-valued) along a scalar parameter at x."""
    return partial_tensor(lambda t: f(float(t[0])), np.array([float(x)]), 1,
                          scheme or default_scheme(1))[0]
