"""Radial model geometries and radial potentials.

Everything is written in the variable ``s = log|z|^2``.  A potential ``u`` is
encoded by ``phi(s)`` and the Kähler potential of ``omega_u`` by
``h = h0 + phi``; Monge-Ampère masses are pushed forward to the s-axis as
``d(h'^n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import interpolate, optimize, special

from .errors import ConvexityViolated, DivergentMoment, DivergentZeta, DomainError
from .logconcave import GridMeasure

__all__ = [
    "ModelGeometry",
    "Ball",
    "Proj",
    "RadialPotential",
    "DivergenceCertificate",
    "TwistedRicci",
    "DpProxy",
    "zero_potential",
    "constant_potential",
    "monomial_potential",
    "capped_monomial",
    "proj_translate",
    "random_potential",
    "radial_corpus",
    "ma_density",
    "ma_atoms",
    "ma_pushforward",
    "zeta_eval",
    "log_zeta",
    "mu_moment",
    "twisted_ricci",
    "energy",
    "dp_proxy",
    "ding",
    "check_admissible",
]

CONVEXITY_TOL = 1e-10
LELONG_TOL = 1e-6
_GL_ORDER = 8


def _sigmoid(x):
    return special.expit(x)


def _softplus(x):
    return np.logaddexp(0.0, x)


@dataclass(frozen=True)
class ModelGeometry:
    """Ball B_1 in C^n (h0 = 0) or P^n with the Fubini-Study reference.

    ``twist`` (P^n only) replaces the volume form by one proportional to
    ``exp(-twist * sigmoid(s)) * rho0``; the default keeps dV_X = omega^n.
    """

    kind: str
    n: int
    s_min: float = -40.0
    s_max: float | None = None
    step: float = 0.02
    twist: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("ball", "proj"):
            raise DomainError(f"unknown geometry kind {self.kind!r}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("dimension must be a positive integer")
        if self.s_max is None:
            object.__setattr__(self, "s_max", 0.0 if self.kind == "ball" else 40.0)
        if self.kind == "ball" and self.s_max != 0.0:
            raise DomainError("the ball model lives on s <= 0")
        if self.kind == "ball" and self.twist:
            raise DomainError("twist is only defined for projective space")
        if not self.s_min < self.s_max or self.step <= 0:
            raise DomainError("invalid s-grid")

    def __str__(self) -> str:
        return f"{'Ball' if self.kind == 'ball' else 'Proj'} n={self.n}"

    # reference potential ------------------------------------------------------
    def h0(self, s):
        s = np.asarray(s, dtype=float)
        return np.zeros_like(s) if self.kind == "ball" else _softplus(s)

    def dh0(self, s):
        s = np.asarray(s, dtype=float)
        return np.zeros_like(s) if self.kind == "ball" else _sigmoid(s)

    def d2h0(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "ball":
            return np.zeros_like(s)
        return _sigmoid(s) * _sigmoid(-s)

    def log_rho0(self, s):
        """log density of d(h0'^n)/ds for P^n, of normalized Lebesgue for the ball."""
        s = np.asarray(s, dtype=float)
        n = self.n
        if self.kind == "ball":
            return math.log(n) + n * s
        return math.log(n) - n * _softplus(-s) - _softplus(s)

    @cached_property
    def _twist_log_norm(self) -> float:
        if not self.twist:
            return 0.0
        x, w = self.nodes_weights
        return float(special.logsumexp(self.log_rho0(x) - self.twist * _sigmoid(x), b=w))

    def log_rho(self, s):
        """log density of the volume form dV_X pushed to the s-axis."""
        base = self.log_rho0(s)
        if not self.twist:
            return base
        return base - self.twist * _sigmoid(np.asarray(s, dtype=float)) - self._twist_log_norm

    def rho(self, s):
        return np.exp(self.log_rho(s))

    @property
    def left_rate(self) -> float:
        return float(self.n)

    @property
    def right_rate(self) -> float | None:
        return None if self.kind == "ball" else 1.0

    @cached_property
    def edges(self) -> np.ndarray:
        k = int(round((self.s_max - self.s_min) / self.step))
        return np.linspace(self.s_min, self.s_max, k + 1)

    @cached_property
    def nodes_weights(self) -> tuple[np.ndarray, np.ndarray]:
        xg, wg = np.polynomial.legendre.leggauss(_GL_ORDER)
        a, b = self.edges[:-1], self.edges[1:]
        mid, half = (a + b) / 2, (b - a) / 2
        x = (mid[:, None] + half[:, None] * xg).ravel()
        w = (half[:, None] * wg).ravel()
        return x, w


def Ball(n: int, **kw) -> ModelGeometry:
    return ModelGeometry("ball", n, **kw)


def Proj(n: int, **kw) -> ModelGeometry:
    return ModelGeometry("proj", n, **kw)


@dataclass(frozen=True)
class DivergenceCertificate:
    side: str
    rate: float
    boundary: float
    reason: str


def _fd2(s: np.ndarray, f: np.ndarray) -> np.ndarray:
    h = np.diff(s)
    if f.size >= 5 and np.allclose(h, h[0], rtol=1e-9, atol=0):
        out = np.gradient(f, s, edge_order=2)
        out[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h[0])
        return out
    return np.gradient(f, s, edge_order=2)


@dataclass(frozen=True, eq=False)
class RadialPotential:
    """Samples of phi, phi' (and optionally phi'') on an increasing s-grid.

    Between samples phi is a quintic Hermite interpolant; outside the grid it
    is continued linearly.  ``funcs`` may carry exact callables which are
    then used inside the grid.
    """

    geometry: ModelGeometry
    s: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray | None = None
    label: str = ""
    funcs: tuple[Callable, Callable, Callable] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 1 or s.size < 2 or np.any(np.diff(s) <= 0):
            raise ValueError("s must be strictly increasing with at least two samples")
        phi = np.asarray(self.phi, dtype=float)
        dphi = np.asarray(self.dphi, dtype=float)
        if phi.shape != s.shape or dphi.shape != s.shape:
            raise ValueError("sample arrays must match the grid")
        d2 = _fd2(s, dphi) if self.d2phi is None else np.asarray(self.d2phi, dtype=float)
        for name, val in (("s", s), ("phi", phi), ("dphi", dphi), ("d2phi", d2)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def from_functions(cls, geometry: ModelGeometry, f, df, d2f, label: str = "",
                       s: np.ndarray | None = None) -> "RadialPotential":
        grid = geometry.edges if s is None else np.asarray(s, dtype=float)
        return cls(geometry, grid, f(grid), df(grid), d2f(grid), label, (f, df, d2f))

    @cached_property
    def _interp(self):
        y = np.stack([self.phi, self.dphi, self.d2phi], axis=1)
        return interpolate.BPoly.from_derivatives(self.s, y)

    @property
    def left_slope(self) -> float:
        return float(self.dphi[0])

    @property
    def right_slope(self) -> float:
        return float(self.dphi[-1])

    @cached_property
    def sup(self) -> float:
        """Supremum of phi over the domain, including limits at infinity."""
        if self.left_slope < -LELONG_TOL:
            return math.inf
        if self.geometry.kind == "proj" and self.right_slope > LELONG_TOL:
            return math.inf
        cand = [float(self.phi[0]), float(self.phi[-1])]
        j = int(np.argmax(self.phi))
        lo, hi = self.s[max(j - 1, 0)], self.s[min(j + 1, self.s.size - 1)]
        res = optimize.minimize_scalar(lambda x: -float(self.evaluate(np.array([x]))[0][0]),
                                       bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        cand += [float(self.phi[j]), -float(res.fun)]
        return max(cand)

    @property
    def normalized(self) -> bool:
        return abs(self.sup) <= 1e-12

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """phi, phi', phi'' at x with linear continuation outside the grid."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.s[0], self.s[-1]
        inside = (x >= lo) & (x <= hi)
        xi = np.clip(x, lo, hi)
        if self.funcs is not None:
            f, df, d2f = self.funcs
            p, dp, d2p = f(xi), df(xi), d2f(xi)
        else:
            ip = self._interp
            p, dp, d2p = ip(xi), ip.derivative(1)(xi), ip.derivative(2)(xi)
            # exact samples at the nodes (the Bernstein form loses digits in phi'')
            j = np.clip(np.searchsorted(self.s, xi), 0, self.s.size - 1)
            hit = self.s[j] == xi
            if np.any(hit):
                p = np.where(hit, self.phi[j], p)
                dp = np.where(hit, self.dphi[j], dp)
                d2p = np.where(hit, self.d2phi[j], d2p)
        p = np.asarray(p, dtype=float) + np.where(inside, 0.0, np.asarray(dp, dtype=float) * (x - xi))
        dp = np.broadcast_to(np.asarray(dp, dtype=float), x.shape).copy()
        d2p = np.where(inside, d2p, 0.0)
        return p, dp, d2p

    def shifted(self, c: float) -> "RadialPotential":
        funcs = None
        if self.funcs is not None:
            f, df, d2f = self.funcs
            funcs = (lambda x: f(x) + c, df, d2f)
        return RadialPotential(self.geometry, self.s, self.phi + c, self.dphi, self.d2phi,
                               self.label, funcs)

    def to_csv(self) -> str:
        g = self.geometry
        head = f"# geometry={'Ball' if g.kind == 'ball' else 'Proj'} n={g.n}"
        rows = [head, "s,phi,phi_prime"]
        rows += [f"{a!r},{b!r},{c!r}" for a, b, c in zip(self.s.tolist(), self.phi.tolist(), self.dphi.tolist())]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str, geometry: ModelGeometry | None = None) -> "RadialPotential":
        data = []
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("# geometry=") and geometry is None:
                kind, ndim = line[len("# geometry="):].split()
                geometry = ModelGeometry(kind.lower(), int(ndim.split("=")[1]))
            elif line and not line.startswith("#") and line != "s,phi,phi_prime":
                data.append([float(v) for v in line.split(",")])
        if geometry is None:
            raise ValueError("missing geometry header")
        arr = np.asarray(data)
        return cls(geometry, arr[:, 0], arr[:, 1], arr[:, 2])


# -- corpus -----------------------------------------------------------------------------
def zero_potential(geometry: ModelGeometry) -> RadialPotential:
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
    return RadialPotential.from_functions(geometry, z, z, z, "zero")


def constant_potential(geometry: ModelGeometry, c: float) -> RadialPotential:
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
    return RadialPotential.from_functions(geometry, lambda x: z(x) + c, z, z, f"const({c:g})")


def monomial_potential(geometry: ModelGeometry, a: float) -> RadialPotential:
    """u = a log|z|^2 on the ball, u = a log(|z|^2/(1+|z|^2)) on P^n."""
    if a < 0:
        raise DomainError("monomial exponent must be nonnegative")
    if geometry.kind == "ball":
        return RadialPotential.from_functions(
            geometry, lambda x: a * np.asarray(x, dtype=float),
            lambda x: np.full_like(np.asarray(x, dtype=float), a),
            lambda x: np.zeros_like(np.asarray(x, dtype=float)), f"mono({a:g})")
    if a > 1:
        raise DomainError("on P^n the exponent must be <= 1 for positivity")
    return RadialPotential.from_functions(
        geometry, lambda x: -a * _softplus(-np.asarray(x, dtype=float)),
        lambda x: a * (1 - _sigmoid(x)),
        lambda x: -a * _sigmoid(x) * (1 - _sigmoid(x)), f"mono({a:g})")


def capped_monomial(geometry: ModelGeometry, a: float, cap: float, beta: float = 4.0) -> RadialPotential:
    """Smooth version of max(u_mono, -cap) normalized to sup = 0."""
    if cap <= 0 or beta <= 0:
        raise DomainError("cap and beta must be positive")
    if geometry.kind == "proj" and not 0 < a <= 1:
        raise DomainError("on P^n the exponent must lie in (0, 1]")

    def g(x):
        return np.logaddexp(beta * x, -beta * cap) / beta

    def g1(x):
        return _sigmoid(beta * (x + cap))

    def g2(x):
        e = g1(x)
        return beta * e * (1 - e)

    g0 = float(g(0.0))
    if geometry.kind == "ball":
        f = lambda x: g(a * np.asarray(x, dtype=float)) - g0  # noqa: E731
        df = lambda x: a * g1(a * np.asarray(x, dtype=float))  # noqa: E731
        d2f = lambda x: a * a * g2(a * np.asarray(x, dtype=float))  # noqa: E731
    else:
        def inner(x):
            x = np.asarray(x, dtype=float)
            return -a * _softplus(-x), a * (1 - _sigmoid(x)), -a * _sigmoid(x) * (1 - _sigmoid(x))

        def f(x):
            y, _, _ = inner(x)
            return g(y) - g0

        def df(x):
            y, y1, _ = inner(x)
            return g1(y) * y1

        def d2f(x):
            y, y1, y2 = inner(x)
            return g2(y) * y1 * y1 + g1(y) * y2
    return RadialPotential.from_functions(geometry, f, df, d2f, f"capped({a:g},{cap:g})")


def proj_translate(geometry: ModelGeometry, c: float) -> RadialPotential:
    """phi = log(1+e^{s-c}) - log(1+e^s): the reference moved by c."""
    if geometry.kind != "proj":
        raise DomainError("translates are defined on P^n")

    def f(x):
        x = np.asarray(x, dtype=float)
        return _softplus(x - c) - _softplus(x)

    def df(x):
        return _sigmoid(np.asarray(x) - c) - _sigmoid(x)

    def d2f(x):
        a, b = _sigmoid(np.asarray(x) - c), _sigmoid(x)
        return a * (1 - a) - b * (1 - b)

    return RadialPotential.from_functions(geometry, f, df, d2f, f"translate({c:g})")


def random_potential(geometry: ModelGeometry, seed: int, n_terms: int = 3,
                     lelong: bool = False) -> RadialPotential:
    """Sum of softplus bumps, normalized to sup = 0.

    On the ball phi is convex and nondecreasing; on P^n, h = h0 + phi is a
    convex combination of softplus profiles, so h' stays in [0, 1].
    """
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.2, 1.0, n_terms)
    beta = rng.uniform(1.0, 3.0, n_terms)
    ctr = rng.uniform(-5.0, 1.0 if geometry.kind == "ball" else 5.0, n_terms)
    if geometry.kind == "proj":
        w = w / w.sum()
        a0 = 0.0
    else:
        w = w * rng.uniform(0.3, 1.5) / w.sum()
        a0 = rng.uniform(0.05, 0.4) if lelong else 0.0

    def bumps(x, order):
        x = np.asarray(x, dtype=float)[..., None]
        z = beta * (x - ctr)
        if order == 0:
            v = _softplus(z) / beta
        elif order == 1:
            v = _sigmoid(z)
        else:
            e = _sigmoid(z)
            v = beta * e * (1 - e)
        return (w * v).sum(axis=-1)

    if geometry.kind == "ball":
        off = float(bumps(0.0, 0))
        f = lambda x: a0 * np.asarray(x, dtype=float) + bumps(x, 0) - off  # noqa: E731
        df = lambda x: a0 + bumps(x, 1)  # noqa: E731
        d2f = lambda x: bumps(x, 2)  # noqa: E731
        return RadialPotential.from_functions(geometry, f, df, d2f, f"random({seed})")

    raw = lambda x: bumps(x, 0) - geometry.h0(x)  # noqa: E731
    grid = geometry.edges
    vals = raw(grid)
    j = int(np.argmax(vals))
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda x: -float(raw(x)), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    sup = max(-res.fun, float(vals.max()), 0.0, float(-(w * ctr).sum()))
    f = lambda x: raw(x) - sup  # noqa: E731
    df = lambda x: bumps(x, 1) - geometry.dh0(x)  # noqa: E731
    d2f = lambda x: bumps(x, 2) - geometry.d2h0(x)  # noqa: E731
    return RadialPotential.from_functions(geometry, f, df, d2f, f"random({seed})")


def radial_corpus(geometry: ModelGeometry, n_random: int = 4, seed: int = 0) -> list[RadialPotential]:
    """Deterministic corpus of normalized, bounded potentials."""
    out = [zero_potential(geometry)]
    if geometry.kind == "ball":
        out += [capped_monomial(geometry, 2.0, 3.0), capped_monomial(geometry, 1.0, 5.0, beta=2.0)]
    else:
        out += [capped_monomial(geometry, 1.0, 3.0), capped_monomial(geometry, 0.5, 4.0, beta=2.0)]
    out += [random_potential(geometry, seed + k) for k in range(n_random)]
    return out


# -- admissibility ------------------------------------------------------------------
def check_admissible(u: RadialPotential, tol: float = CONVEXITY_TOL) -> None:
    g = u.geometry
    x, _ = g.nodes_weights
    _, dp, d2p = u.evaluate(x)
    hp = g.dh0(x) + dp
    hpp = g.d2h0(x) + d2p
    j = int(np.argmin(hpp))
    if hpp[j] < -tol:
        raise ConvexityViolated(f"h'' = {hpp[j]:.3g} < 0 at s = {x[j]:.6g}")
    if np.min(hp) < -tol:
        k = int(np.argmin(hp))
        raise ConvexityViolated(f"h' = {hp[k]:.3g} < 0 at s = {x[k]:.6g}")
    if g.kind == "proj" and np.max(hp) > 1 + tol:
        k = int(np.argmax(hp))
        raise ConvexityViolated(f"h' = {hp[k]:.3g} > 1 at s = {x[k]:.6g}")


# -- quadrature core ---------------------------------------------------------------
_LAG_X, _LAG_W = np.polynomial.laguerre.laggauss(64)


def _tail(fun, start: float, direction: int, rate: float) -> float:
    """int_0^inf fun(start + direction*y) dy by fixed Gauss-Laguerre in z = rate*y.

    A fixed rule keeps every integral an analytic function of its parameters,
    which finite differences in gamma rely on.
    """
    r = max(rate, 1e-300)
    y = _LAG_X / r
    vals = fun(start + direction * y) * np.exp(_LAG_X)
    return float(np.dot(vals, _LAG_W)) / r


def _integrate(u: RadialPotential, fun, rate_left: float, rate_right: float | None = None) -> float:
    """int fun(s) ds over the whole radial domain."""
    g = u.geometry
    x, w = g.nodes_weights
    total = float(np.dot(fun(x), w))
    total += _tail(fun, g.s_min, -1, rate_left)
    if g.kind == "proj":
        total += _tail(fun, g.s_max, 1, rate_right if rate_right is not None else 1.0)
    return total


def _zeta_rates(u: RadialPotential, gamma: float) -> tuple[float, float | None]:
    g = u.geometry
    left = g.left_rate - gamma * u.left_slope
    right = None if g.kind == "ball" else g.right_rate + gamma * u.right_slope
    return left, right


def _zeta_certificate(u: RadialPotential, gamma: float) -> DivergenceCertificate | None:
    left, right = _zeta_rates(u, gamma)
    g = u.geometry
    if left <= 0:
        return DivergenceCertificate("left", left, g.s_min,
                                     "e^(-gamma phi) rho does not decay as s -> -inf")
    if right is not None and right <= 0:
        return DivergenceCertificate("right", right, g.s_max,
                                     "e^(-gamma phi) rho does not decay as s -> +inf")
    return None


def _shift(u: RadialPotential, gamma: float) -> float:
    # stabilizing offset so exp never overflows
    return float(np.min(gamma * u.phi))


def log_zeta(u: RadialPotential, gamma: float) -> float:
    """log Z_u(gamma); +inf past the complex singularity exponent.

    Negative gamma is allowed (the integrand stays bounded when u is bounded
    above) so that difference stencils can straddle gamma = 0.
    """
    if _zeta_certificate(u, gamma) is not None:
        return math.inf
    g = u.geometry
    c = -_shift(u, gamma)
    left, right = _zeta_rates(u, gamma)

    def fun(s):
        p, _, _ = u.evaluate(s)
        return np.exp(-gamma * p + g.log_rho(s) - c)

    return math.log(_integrate(u, fun, left, right)) + c


def zeta_eval(u: RadialPotential, gamma: float, with_certificate: bool = False):
    """Z_u(gamma) = int e^{-gamma u} dV_X, or +inf with a certificate."""
    lz = log_zeta(u, gamma)
    val = math.exp(lz) if math.isfinite(lz) else math.inf
    if with_certificate:
        return val, _zeta_certificate(u, gamma)
    return val


def mu_moment(u: RadialPotential, gamma: float, p: float, signed: bool = False) -> float:
    """int (-u)^p d mu_{gamma u} (|u|^p unless ``signed``), mu = e^{-gamma u}dV/Z."""
    if _zeta_certificate(u, gamma) is not None:
        raise DivergentZeta(f"Z_u({gamma}) diverges")
    g = u.geometry
    lz = log_zeta(u, gamma)
    left, right = _zeta_rates(u, gamma)

    def fun(s):
        ph, _, _ = u.evaluate(s)
        base = (-ph) ** p if signed else np.abs(ph) ** p
        return base * np.exp(-gamma * ph + g.log_rho(s) - lz)

    return _integrate(u, fun, left, right)


# -- Monge-Ampère --------------------------------------------------------------------
def ma_density(u: RadialPotential, s) -> np.ndarray:
    """Density of the pushforward of omega_u^n: n h'^{n-1} h''."""
    g = u.geometry
    _, dp, d2p = u.evaluate(s)
    hp = g.dh0(s) + dp
    hpp = g.d2h0(s) + d2p
    return g.n * np.clip(hp, 0.0, None) ** (g.n - 1) * np.clip(hpp, 0.0, None)


def ma_atoms(u: RadialPotential) -> tuple[float, float]:
    """Masses at s = -inf and s = +inf of the Monge-Ampère pushforward."""
    g = u.geometry
    left = max(u.left_slope, 0.0) ** g.n
    right = 0.0
    if g.kind == "proj":
        right = 1.0 - min(max(1.0 + u.right_slope, 0.0), 1.0) ** g.n
    return left, right


def ma_pushforward(u: RadialPotential, step: float = 2e-4) -> GridMeasure:
    """Pushforward of omega_u^n / V to the s-axis on a uniform grid.

    Masses escaping to s = -inf (Lelong mass at the origin) or s = +inf are
    placed as atoms at the grid ends.
    """
    check_admissible(u)
    g = u.geometry
    k = int(math.ceil((g.s_max - g.s_min) / step))
    s = np.linspace(g.s_min, g.s_max, k + 1)
    dens = ma_density(u, s)
    left, right = ma_atoms(u)
    atoms = []
    if left > 0:
        atoms.append((g.s_min, left))
    if right > 1e-15:
        atoms.append((g.s_max, right))
    if not np.any(dens > 0) and not atoms:
        raise DomainError("omega_u^n has zero mass")
    return GridMeasure(s, dens, tuple(atoms))


def _mixed_density(u: RadialPotential, s, j: int) -> np.ndarray:
    """Density of d(h'^j h0'^{n-j})/ds."""
    g = u.geometry
    n = g.n
    _, dp, d2p = u.evaluate(s)
    hp = np.clip(g.dh0(s) + dp, 0.0, None)
    hpp = np.clip(g.d2h0(s) + d2p, 0.0, None)
    h0p, h0pp = g.dh0(s), g.d2h0(s)
    out = np.zeros_like(hp)
    if j > 0:
        out += j * hp ** (j - 1) * hpp * h0p ** (n - j)
    if n - j > 0:
        out += (n - j) * hp**j * h0p ** (n - j - 1) * h0pp
    return out


def _mixed_atoms(u: RadialPotential, j: int) -> tuple[float, float]:
    g = u.geometry
    n = g.n
    left = max(u.left_slope, 0.0) ** n if j == n else 0.0
    right = 0.0
    if g.kind == "proj":
        right = 1.0 - min(max(1.0 + u.right_slope, 0.0), 1.0) ** j
    return left, right


def _integrate_against_mixed(u: RadialPotential, weight, j: int) -> float:
    """int weight(phi) d(h'^j h0'^{n-j}); inf if mass sits where u = -inf.

    End masses with slope below ``LELONG_TOL`` are treated as ordinary mass
    in the far tail, carried at the boundary value of phi.
    """
    left, right = _mixed_atoms(u, j)
    total = 0.0
    if left > 0:
        if u.left_slope > LELONG_TOL:
            return math.inf
        total += float(weight(np.array([u.phi[0]]))[0]) * left
    if right > 1e-15:
        if -u.right_slope > LELONG_TOL:
            return math.inf
        total += float(weight(np.array([u.phi[-1]]))[0]) * right

    def fun(s):
        ph, _, _ = u.evaluate(s)
        return weight(ph) * _mixed_density(u, s, j)

    return total + _integrate(u, fun, u.geometry.left_rate, 1.0)


def energy(u: RadialPotential) -> float:
    """Monge-Ampère energy (1/(n+1)) sum_j int u omega_u^j ^ omega^{n-j} / V.

    Normalized so that the energy of a constant c is c on P^n.  Returns -inf
    when u carries Monge-Ampère mass where it is unbounded below.
    """
    check_admissible(u)
    n = u.geometry.n
    js = range(n + 1) if u.geometry.kind == "proj" else [n]
    total = 0.0
    for j in js:
        val = _integrate_against_mixed(u, lambda ph: -ph, j)
        if math.isinf(val):
            return -math.inf
        total -= val
    return total / (n + 1)


@dataclass(frozen=True)
class DpProxy:
    p: float
    two_sided: float
    ma_side: float
    ref_side: float


def dp_proxy(u: RadialPotential, p: float) -> DpProxy:
    """L^p integrals of |u| against omega_u^n/V and omega^n/V."""
    if p < 1:
        raise DomainError("p must be >= 1")
    check_admissible(u)
    n = u.geometry.n
    ma = _integrate_against_mixed(u, lambda ph: np.abs(ph) ** p, n)
    if math.isinf(ma):
        raise DivergentMoment("Monge-Ampère mass sits where u = -inf")
    ref = 0.0
    if u.geometry.kind == "proj":
        ref = _integrate_against_mixed(u, lambda ph: np.abs(ph) ** p, 0)
        if math.isinf(ref):
            raise DivergentMoment("u is unbounded on the reference measure support")
    return DpProxy(p, (ma + ref) ** (1 / p), ma ** (1 / p), ref ** (1 / p))


def ding(u: RadialPotential, t: float) -> float:
    """Twisted Ding functional; the t = 0 value is the limit -E(u) + int u dV."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    e = energy(u)
    if t == 0:
        g = u.geometry

        def fun(s):
            ph, _, _ = u.evaluate(s)
            return ph * np.exp(g.log_rho(s))

        return -e + _integrate(u, fun, g.left_rate, 1.0)
    lz = log_zeta(u, t)
    if not math.isfinite(lz):
        raise DivergentZeta(f"Z_u({t}) diverges")
    return -e - lz / t


# -- twisted Ricci potential --------------------------------------------------------
@dataclass(frozen=True)
class TwistedRicci:
    s: np.ndarray
    rho: np.ndarray
    sup: float
    inf: float
    normalization: float
    support_mismatch: bool
    certificate: str = ""


def twisted_ricci(u: RadialPotential, gamma: float, s: np.ndarray | None = None,
                  floor: float = 1e-250) -> TwistedRicci:
    """rho = log(e^{-gamma u} dV_X / (Z omega_u^n/V)) on the common support."""
    check_admissible(u)
    g = u.geometry
    lz = log_zeta(u, gamma)
    if not math.isfinite(lz):
        raise DivergentZeta(f"Z_u({gamma}) diverges")
    x = g.edges if s is None else np.asarray(s, dtype=float)
    ph, _, _ = u.evaluate(x)
    log_mu = -gamma * ph + g.log_rho(x) - lz
    ma = ma_density(u, x)
    # normalization: int e^rho dMA = mu-mass of the region where MA has density
    xq, wq = g.nodes_weights
    phq, _, _ = u.evaluate(xq)
    maq = ma_density(u, xq)
    muq = np.exp(-gamma * phq + g.log_rho(xq) - lz)
    norm = float(np.dot(np.where(maq > floor, muq, 0.0), wq))
    mismatch = bool(np.any((ma <= floor) & (log_mu > math.log(floor))))
    left_atom, right_atom = ma_atoms(u)
    mismatch = mismatch or left_atom > 1e-15 or right_atom > 1e-15
    ok = ma > floor
    with np.errstate(divide="ignore"):
        rho = np.where(ok, log_mu - np.log(np.where(ok, ma, 1.0)), np.nan)
    if mismatch:
        return TwistedRicci(x, rho, math.inf, float(np.nanmin(rho)) if ok.any() else -math.inf,
                            norm, True, "omega_u^n vanishes where mu_{gamma u} has mass")
    # restrict to the region where both densities are numerically meaningful
    sig = log_mu > math.log(1e-200)
    vals = rho[sig & ok]
    return TwistedRicci(x, rho, float(vals.max()), float(vals.min()), norm, False)
