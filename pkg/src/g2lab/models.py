"""Model moduli charts: flat orbifold chart, full flat torus chart, and T3 x K3-type chart."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exterior import AltForm
from .g2form import STANDARD_TERMS, G2Frame, frame_of, is_positive, solve_h


class DomainError(ValueError):
    """Point lies outside the chart domain."""


class ModelFamily:
    """A moduli chart: coordinates x in an open set of R^dim and a volume function."""
    name = "model"
    dim = 0
    has_pointwise_forms = False
    b1_zero = False
    positive_definite = True

    def contains(self, x) -> bool:
        raise NotImplementedError

    def volume(self, x) -> float:
        raise NotImplementedError

    def potential(self, x) -> float:
        """F = -3 log Vol."""
        return -3.0 * np.log(self.volume(x))

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DomainError(f"{self.name}: expected {self.dim} coordinates, got shape {x.shape}")
        if not self.contains(x):
            raise DomainError(f"{self.name}: point {np.array2string(x, precision=6)} outside chart domain")
        return x

    def base_point(self) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class HarmonicFrame:
    frame: G2Frame
    etas: list
    hs: np.ndarray  # (n, 7, 7), hs[a].phi = etas[a]


class FlatOrbifoldChart(ModelFamily):
    """Invariant 3-forms sum_a x^a s_a e^{I_a} on the orbifold T^7 / Z_2^3."""
    name = "flat7"
    dim = 7
    has_pointwise_forms = True
    b1_zero = True

    def __init__(self):
        self.etas = [s * AltForm.monomial(*idx) for idx, s in STANDARD_TERMS]
        self._basis = np.array([m.coeffs for m in self.etas])  # (7, 35)

    def form(self, x) -> AltForm:
        return AltForm(3, np.asarray(x, dtype=float) @ self._basis)

    def contains(self, x) -> bool:
        # the chart is the component of positive forms with every x^a > 0
        x = np.asarray(x, dtype=float)
        return bool(np.all(x > 0) and is_positive(self.form(x)))

    def volume(self, x, method: str = "closed") -> float:
        x = self._check(x)
        if method == "closed":
            return float(np.prod(x) ** (1.0 / 3.0))
        if method == "recipe":
            return frame_of(self.form(x)).volume_density
        raise ValueError(f"unknown method {method!r}")

    def volume_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        if np.any(X <= 0):
            bad = X[np.any(X <= 0, axis=1)][0]
            raise DomainError(f"flat7: point {np.array2string(bad, precision=6)} outside chart domain")
        return np.prod(X, axis=1) ** (1.0 / 3.0)

    def base_point(self):
        return np.ones(7)

    def harmonic_frame(self, x) -> HarmonicFrame:
        x = self._check(x)
        fr = frame_of(self.form(x))
        hs = np.array([solve_h(fr, eta) for eta in self.etas])
        return HarmonicFrame(fr, list(self.etas), hs)

    def unit_slice_basis(self) -> np.ndarray:
        """Orthonormal basis (7 x 6) of trace-free log directions."""
        q, _ = np.linalg.qr(np.vstack([np.ones(7), np.eye(7)[:6]]).T)
        return q[:, 1:]

    def slice_point(self, u) -> np.ndarray:
        """exp of a trace-free log vector: a point with prod x = 1 (unit volume)."""
        return np.exp(self.unit_slice_basis() @ np.asarray(u, dtype=float))

    def slice_directions(self, x) -> np.ndarray:
        """Tangent vectors (6 x 7) to the unit-volume slice at x."""
        return (np.asarray(x)[:, None] * self.unit_slice_basis()).T


def vol_flat(chart: FlatOrbifoldChart, x, method: str = "recipe") -> float:
    return chart.volume(x, method=method)


class FullTorusChart(ModelFamily):
    """All constant 3-forms on T^7 = R^7 / Z^7, coordinates = the 35 coefficients."""
    name = "full35"
    dim = 35
    has_pointwise_forms = True
    b1_zero = False
    positive_definite = False

    def __init__(self):
        self.etas = [AltForm(3, row) for row in np.eye(35)]

    def form(self, x) -> AltForm:
        return AltForm(3, x)

    def contains(self, x) -> bool:
        return is_positive(AltForm(3, np.asarray(x, dtype=float)))

    def volume(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (35,):
            raise DomainError("full35: expected 35 coordinates")
        try:
            return frame_of(AltForm(3, x)).volume_density
        except ValueError:
            raise DomainError(f"full35: point outside positive cone") from None

    def volume_batch(self, X) -> np.ndarray:
        from .g2form import volume_density_batch
        try:
            return volume_density_batch(X)
        except ValueError as exc:
            err = DomainError(f"full35: point outside positive cone")
            err.point = getattr(exc, "point", None)
            raise err from None

    def base_point(self):
        from .g2form import PHI0
        return PHI0.coeffs.copy()

    def harmonic_frame(self, x) -> HarmonicFrame:
        fr = frame_of(AltForm(3, x))
        hs = np.array([solve_h(fr, eta) for eta in self.etas])
        return HarmonicFrame(fr, list(self.etas), hs)


def vol_full_torus(x) -> float:
    return FullTorusChart().volume(x)


def _lorentz(d: int) -> np.ndarray:
    return np.diag([1.0] + [-1.0] * (d - 1))


@dataclass
class T3K3Chart(ModelFamily):
    """Coordinates (x0, a1, a2, a3) with Vol = x0^(1/3) (q1 q2 q3)^(1/3) / 2, q_i = Q_i(a_i, a_i)."""
    dims: tuple = (3, 3, 3)
    Q: list = None
    reference: list = None  # timelike vectors selecting the positive component
    name: str = field(default="t3k3", init=False)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 3 or min(self.dims) < 2:
            raise ValueError("t3k3 needs three lattice dimensions, each >= 2")
        self.Q = [np.asarray(q, dtype=float) for q in (self.Q or [_lorentz(d) for d in self.dims])]
        for d, q in zip(self.dims, self.Q):
            if q.shape != (d, d) or not np.allclose(q, q.T):
                raise ValueError("each Q_i must be a symmetric d_i x d_i matrix")
            w = np.linalg.eigvalsh(q)
            if np.sum(w > 0) != 1 or np.sum(w < 0) != d - 1:
                raise ValueError(f"Q of dimension {d} must have signature (1, {d - 1})")
        if self.reference is None:
            self.reference = []
            for q in self.Q:
                w, V = np.linalg.eigh(q)
                self.reference.append(V[:, -1] * np.sign(V[np.argmax(np.abs(V[:, -1])), -1]))
        self.reference = [np.asarray(r, dtype=float) for r in self.reference]
        self.dim = 1 + sum(self.dims)
        self._cuts = np.cumsum((1,) + self.dims)

    def split(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 0], [x[..., self._cuts[i]:self._cuts[i + 1]] for i in range(3)]

    def _qs(self, parts):
        return [np.einsum("...i,ij,...j->...", a, q, a) for a, q in zip(parts, self.Q)]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            return False
        x0, parts = self.split(x)
        if x0 <= 0:
            return False
        for a, q, r, qa in zip(parts, self.Q, self.reference, self._qs(parts)):
            if qa <= 0 or a @ q @ r <= 0:
                return False
        return True

    def volume(self, x) -> float:
        x = self._check(x)
        x0, parts = self.split(x)
        return float(x0 ** (1 / 3) * np.prod(self._qs(parts)) ** (1 / 3) / 2)

    def volume_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        x0, parts = self.split(X)
        qs = self._qs(parts)
        ok = (x0 > 0) & np.all([qa > 0 for qa in qs], axis=0)
        for a, q, r in zip(parts, self.Q, self.reference):
            ok &= (a @ q @ r) > 0
        if not np.all(ok):
            bad = X[~ok][0]
            raise DomainError(f"t3k3: point {np.array2string(bad, precision=6)} outside chart domain")
        return x0 ** (1 / 3) * np.prod(qs, axis=0) ** (1 / 3) / 2

    def potential_closed(self, x) -> float:
        x = self._check(x)
        x0, parts = self.split(x)
        return float(-np.log(x0) - sum(np.log(self._qs(parts))) + 3 * np.log(2))

    def base_point(self):
        return np.concatenate([[1.0]] + [r / np.sqrt(r @ q @ r) for r, q in zip(self.reference, self.Q)])

    def from_radii(self, t, v: float = 1.0, directions=None) -> np.ndarray:
        """Point with x0 = t1 t2 t3 and q_i = 2 v t_i^2, hence Vol = t1 t2 t3 v."""
        t = np.asarray(t, dtype=float)
        dirs = directions or self.reference
        parts = []
        for ti, r, q in zip(t, dirs, self.Q):
            r = np.asarray(r, dtype=float)
            parts.append(r * np.sqrt(2 * v) * ti / np.sqrt(r @ q @ r))
        return np.concatenate([[np.prod(t)]] + parts)


def vol_t3k3(chart: T3K3Chart, x0, a1, a2, a3) -> float:
    return chart.volume(np.concatenate([[x0], a1, a2, a3]))


def sample_near(family: ModelFamily, base, radius: float, seed, max_tries: int = 1000) -> np.ndarray:
    """Uniform sample from the Euclidean ball around base, rejected until in the domain."""
    base = np.asarray(base, dtype=float)
    if radius == 0:
        return family._check(base)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = base.size
    for _ in range(max_tries):
        d = rng.standard_normal(n)
        d *= radius * rng.random() ** (1.0 / n) / np.linalg.norm(d)
        x = base + d
        if family.contains(x):
            return x
    raise DomainError(f"{family.name}: no domain point found within radius {radius} after {max_tries} draws")


def make_family(name: str, t3k3: dict | None = None) -> ModelFamily:
    if name == "flat7":
        return FlatOrbifoldChart()
    if name == "full35":
        return FullTorusChart()
    if name == "t3k3":
        cfg = t3k3 or {}
        return T3K3Chart(dims=tuple(cfg.get("dims", (3, 3, 3))), Q=cfg.get("Q"))
    raise ValueError(f"unknown model {name!r}")
