"""Derivatives of log Z, moment recursions, effective openness and pole
estimation for zeta integrals Z_u(gamma) = int e^{-gamma u} dV."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import optimize

from .errors import DivergentZeta, DomainError, NearPole, OrderUnsupported, PoleNotBracketed
from .model import ModelGeometry, RadialPotential, capped_monomial, log_zeta, mu_moment, random_potential

__all__ = [
    "MonomialDivisor",
    "RadialSource",
    "ZetaProfile",
    "MomentRecord",
    "OpennessRecord",
    "NotApplicable",
    "PoleEstimate",
    "monomial_zeta",
    "log_derivatives",
    "partial_bell",
    "bell_moment",
    "moments_from_derivatives",
    "moment_bound_check",
    "fit_moment_constants",
    "envelope_change",
    "moment_corpus",
    "openness_bound_check",
    "fit_corollary_b",
    "estimate_cu",
    "build_profile",
    "ode_consistency",
    "MAX_BELL_ORDER",
]

MAX_BELL_ORDER = 5


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class MonomialDivisor:
    """u = sum_i a_i log|z_i|^2 on the unit polydisk with normalized area."""

    exponents: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        ex = tuple(_frac(a) for a in self.exponents)
        if not ex or any(a <= 0 for a in ex):
            raise DomainError("exponents must be positive")
        object.__setattr__(self, "exponents", ex)

    @classmethod
    def parse(cls, text: str) -> "MonomialDivisor":
        return cls(tuple(Fraction(p.strip()) for p in text.split(",") if p.strip()))

    @property
    def c_u(self) -> Fraction:
        return 1 / max(self.exponents)

    @property
    def m(self) -> int:
        top = max(self.exponents)
        return sum(1 for a in self.exponents if a == top)

    def zeta(self, gamma) -> float:
        return monomial_zeta(self, gamma)

    def log_zeta(self, gamma: float) -> float:
        if gamma >= self.c_u:
            return math.inf
        return -sum(math.log1p(-gamma * float(a)) for a in self.exponents)

    def exact_log_derivative(self, gamma: float, k: int) -> float:
        """(d/dgamma)^k log Z = (k-1)! sum a^k / (1 - gamma a)^k."""
        if k < 1:
            raise DomainError("derivative order must be >= 1")
        if gamma >= self.c_u:
            return math.inf
        return math.factorial(k - 1) * sum(float(a) ** k / (1 - gamma * float(a)) ** k
                                           for a in self.exponents)

    def __str__(self) -> str:
        return "(" + ",".join(str(a) for a in self.exponents) + ")"


def monomial_zeta(d: MonomialDivisor, gamma) -> float:
    """prod_i 1/(1 - gamma a_i); +inf at or past the pole."""
    if gamma >= d.c_u:
        return math.inf
    if isinstance(gamma, Fraction):
        val = Fraction(1)
        for a in d.exponents:
            val /= 1 - gamma * a
        return float(val)
    return math.exp(d.log_zeta(gamma))


@dataclass(frozen=True)
class RadialSource:
    """Zeta source backed by a radial potential."""

    u: RadialPotential
    c_u: float = math.inf

    def log_zeta(self, gamma: float) -> float:
        return log_zeta(self.u, gamma)

    def zeta(self, gamma: float) -> float:
        lz = self.log_zeta(gamma)
        return math.exp(lz) if math.isfinite(lz) else math.inf

    @classmethod
    def of(cls, u: RadialPotential) -> "RadialSource":
        # exponent from the asymptotic slope of the linear continuation
        g = u.geometry
        c = g.left_rate / u.left_slope if u.left_slope > 1e-12 else math.inf
        if g.kind == "proj" and u.right_slope < -1e-12:
            c = min(c, g.right_rate / -u.right_slope)
        return cls(u, c)


# -- finite differences -------------------------------------------------------------
def _central_weights(k: int) -> tuple[np.ndarray, np.ndarray]:
    m = (k + 1) // 2
    j = np.arange(-m, m + 1, dtype=float)
    A = np.array([j**i / math.factorial(i) for i in range(2 * m + 1)])
    rhs = np.zeros(2 * m + 1)
    rhs[k] = 1.0
    return j, np.linalg.solve(A, rhs)


def _richardson(f: Callable[[float], float], x: float, k: int, h: float, levels: int = 6) -> float:
    """Richardson tableau over steps h, h/2, ...; returns the entry whose
    change against its neighbours is smallest (truncation vs round-off)."""
    j, c = _central_weights(k)
    cache: dict[float, float] = {}

    def fv(y: float) -> float:
        if y not in cache:
            cache[y] = f(y)
        return cache[y]

    rows = []
    for lev in range(levels):
        hh = h / 2**lev
        row = [float(np.dot(c, [fv(x + jj * hh) for jj in j])) / hh**k]
        # central stencils have even error expansions: eliminate h^2, h^4, ...
        for col in range(1, lev + 1):
            row.append((4**col * row[col - 1] - rows[-1][col - 1]) / (4**col - 1))
        rows.append(row)
    best, best_err = rows[0][0], math.inf
    for i in range(1, levels):
        for col in range(1, i + 1):
            err = abs(rows[i][col] - rows[i][col - 1]) + abs(rows[i][col] - rows[i - 1][col - 1])
            if err < best_err:
                best, best_err = rows[i][col], err
    return best


def log_derivatives(source, gamma: float, order: int, h: float = 0.4,
                    method: str = "auto", pole: float | None = None, h_min: float = 1e-3) -> np.ndarray:
    """Derivatives 1..order of log Z at gamma.

    ``method='auto'`` uses exact closed forms for monomial sources and
    Richardson-extrapolated central differences otherwise.  The step is
    shrunk so the stencil stays at least 10 steps below the pole; if that
    forces it below ``h_min`` the point is declared too close.
    """
    if not 1 <= order <= MAX_BELL_ORDER:
        raise OrderUnsupported(f"order must be between 1 and {MAX_BELL_ORDER}")
    if method == "auto":
        method = "exact" if isinstance(source, MonomialDivisor) else "richardson"
    if method == "exact":
        if not isinstance(source, MonomialDivisor):
            raise DomainError("exact derivatives need a monomial source")
        return np.array([source.exact_log_derivative(gamma, k) for k in range(1, order + 1)])
    c = pole if pole is not None else float(getattr(source, "c_u", math.inf))
    m = (order + 1) // 2
    if math.isfinite(c):
        if gamma >= c:
            raise DivergentZeta(f"gamma = {gamma} is at or past the pole {c}")
        h = min(h, (c - gamma) / (m + 10))
        if h < h_min:
            raise NearPole(f"gamma = {gamma} lies within 10 steps of the pole at {c}")
    f = source.log_zeta
    return np.array([_richardson(f, gamma, k, h) for k in range(1, order + 1)])


# -- Bell recursion -----------------------------------------------------------------
def _bell_table(nmax: int) -> dict[tuple[int, int], dict[tuple[int, ...], int]]:
    """Partial Bell polynomials B_{n,k} as {sorted index tuple: coefficient}."""
    table: dict[tuple[int, int], dict[tuple[int, ...], int]] = {(0, 0): {(): 1}}
    for n in range(1, nmax + 1):
        table[(n, 0)] = {}
        for k in range(1, n + 1):
            acc: dict[tuple[int, ...], int] = {}
            for i in range(1, n - k + 2):
                prev = table.get((n - i, k - 1), {})
                for mono, coef in prev.items():
                    key = tuple(sorted(mono + (i,)))
                    acc[key] = acc.get(key, 0) + math.comb(n - 1, i - 1) * coef
            table[(n, k)] = acc
    return table


_BELL = _bell_table(MAX_BELL_ORDER)
# m_p = kappa_p + sum over monomials in lower moments
_MOMENT_RECURSION: dict[int, dict[tuple[int, ...], int]] = {}
for _p in range(1, MAX_BELL_ORDER + 1):
    _acc: dict[tuple[int, ...], int] = {}
    for _k in range(2, _p + 1):
        for _mono, _c in _BELL[(_p, _k)].items():
            _acc[_mono] = _acc.get(_mono, 0) + (-1) ** _k * math.factorial(_k - 1) * _c
    _MOMENT_RECURSION[_p] = {k: v for k, v in _acc.items() if v}


def partial_bell(n: int, k: int, x: Sequence[float]) -> float:
    """B_{n,k}(x_1, ..., x_{n-k+1}) for n <= 5."""
    if n > MAX_BELL_ORDER or n < 0 or k < 0:
        raise OrderUnsupported(f"table covers n <= {MAX_BELL_ORDER}")
    poly = _BELL.get((n, k), {})
    return float(sum(c * math.prod(x[i - 1] for i in mono) for mono, c in poly.items()))


def bell_moment(derivs: Sequence[float], lower_moments: Sequence[float], p: int) -> float:
    """<f^p> from (log Z)^{(1..p)} and <f^j>, j < p, with f = -u."""
    if not 1 <= p <= MAX_BELL_ORDER:
        raise OrderUnsupported(f"p must be between 1 and {MAX_BELL_ORDER}")
    if len(derivs) < p or len(lower_moments) < p - 1:
        raise DomainError("not enough derivatives or lower moments")
    val = float(derivs[p - 1])
    for mono, c in _MOMENT_RECURSION[p].items():
        val += c * math.prod(lower_moments[i - 1] for i in mono)
    return val


def moments_from_derivatives(derivs: Sequence[float]) -> np.ndarray:
    out: list[float] = []
    for p in range(1, len(derivs) + 1):
        out.append(bell_moment(derivs, out, p))
    return np.array(out)


# -- moment bounds --------------------------------------------------------------
@dataclass(frozen=True)
class MomentRecord:
    gamma: float
    p: float
    lhs: float
    m1: float
    weight: float
    label: str = ""


def moment_bound_check(u: RadialPotential, gamma: float, p: float) -> MomentRecord:
    """LHS = (int (-u)^p mu)^{1/p}, M1 = int (-u) mu for mu = e^{-gamma u}dV/Z."""
    if not 0 < gamma < 1:
        raise DomainError("gamma must lie in (0, 1)")
    if u.sup > 1e-9:
        raise DomainError("moment bounds need sup u <= 0")
    lhs = mu_moment(u, gamma, p) ** (1.0 / p)
    m1 = mu_moment(u, gamma, 1.0)
    return MomentRecord(gamma, p, lhs, m1, 1.0 / gamma + 1.0 / (1.0 - gamma), u.label)


def moment_corpus(geometry: ModelGeometry, size: int, seed: int = 0) -> list[RadialPotential]:
    """Alternating capped monomials (random slope, depth, smoothing) and
    random bumps; prefixes of a larger corpus coincide with smaller ones."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(size):
        if k % 2 == 0:
            a = rng.uniform(0.5, 3.0) if geometry.kind == "ball" else rng.uniform(0.2, 1.0)
            out.append(capped_monomial(geometry, a, rng.uniform(0.5, 30.0), rng.uniform(1.0, 4.0)))
        else:
            out.append(random_potential(geometry, int(rng.integers(1_000_000))))
    return out


def fit_moment_constants(records: Iterable[MomentRecord]) -> tuple[float, float]:
    """Tightest envelope lhs <= A m1 + B w with A, B >= 0.

    The LP minimizes the mean envelope A mean(m1) + B mean(w), i.e. the
    total slack over the corpus, which makes the fit scale-aware.
    """
    recs = list(records)
    M = np.array([r.m1 for r in recs])
    W = np.array([r.weight for r in recs])
    L = np.array([r.lhs for r in recs])
    res = optimize.linprog([M.mean(), W.mean()], A_ub=-np.stack([M, W], axis=1), b_ub=-L,
                           bounds=[(0, None), (0, None)], method="highs")
    if not res.success:
        raise RuntimeError(f"constant fit failed: {res.message}")
    A, B = (float(v) for v in res.x)
    # guard against solver round-off so every fitted record is satisfied
    slack = max(0.0, float(np.max((L - A * M - B * W) / W)))
    return A, B + slack


def envelope_change(fit_a: tuple[float, float], fit_b: tuple[float, float],
                    records: Iterable[MomentRecord]) -> float:
    """Largest relative difference of two fitted envelopes over the records."""
    recs = list(records)
    M = np.array([r.m1 for r in recs])
    W = np.array([r.weight for r in recs])
    ea = fit_a[0] * M + fit_a[1] * W
    eb = fit_b[0] * M + fit_b[1] * W
    return float(np.max(np.abs(ea - eb) / np.maximum(eb, 1e-300)))


# -- effective openness ----------------------------------------------------------------
@dataclass(frozen=True)
class NotApplicable:
    reason: str


@dataclass(frozen=True)
class OpennessRecord:
    gamma: float
    Z: float
    g: float
    rhs: float
    margin: float
    cor_rhs: float
    cor_margin: float


def openness_bound_check(source, gamma: float, A: float = 16.0, B: float = 1.0,
                         b: float = 0.0, c_u: float | None = None):
    """g(gamma) against (1/A)/(c_u - gamma) - B (gamma^-2 + (1 - c_u)^-2),
    plus the integrated bound Z >= exp(-b(1/gamma + gamma/delta^2)) / (c_u - gamma)^{1/A}."""
    c = float(c_u if c_u is not None else getattr(source, "c_u", math.inf))
    if not c < 1:
        return NotApplicable(f"complex singularity exponent {c} is not below 1")
    if not 0 < gamma < c:
        raise DomainError("gamma must lie in (0, c_u)")
    g = float(log_derivatives(source, gamma, 1, pole=c)[0])
    rhs = (1.0 / A) / (c - gamma) - B * (gamma**-2 + (1.0 - c) ** -2)
    lz = source.log_zeta(gamma)
    delta = 1.0 - c
    log_cor = -b * (1.0 / gamma + gamma / delta**2) - math.log(c - gamma) / A
    return OpennessRecord(gamma, math.exp(lz), g, rhs, g - rhs, math.exp(log_cor), lz - log_cor)


def fit_corollary_b(sources: Iterable, gammas_for: Callable, A: float = 16.0) -> float:
    """Smallest b >= 0 making the integrated bound hold on all sampled points."""
    b = 0.0
    for src in sources:
        c = float(src.c_u)
        delta = 1.0 - c
        for gamma in gammas_for(src):
            need = -src.log_zeta(gamma) - math.log(c - gamma) / A
            b = max(b, need / (1.0 / gamma + gamma / delta**2))
    return b


# -- pole estimation ----------------------------------------------------------------
@dataclass(frozen=True)
class PoleEstimate:
    c_u: float
    m: int | None
    slope: float
    residual: float
    warning: str = ""


def estimate_cu(evaluator: Callable[[float], float], interval: tuple[float, float],
                tol: float = 1e-9, decade: tuple[float, float] = (1e-4, 1e-3)) -> PoleEstimate:
    """Locate the first gamma where Z becomes infinite and fit its order.

    A source that stays finite on the whole interval reports c_u = +inf.
    """
    lo, hi = interval
    if not math.isfinite(evaluator(lo)):
        raise PoleNotBracketed(f"Z is already infinite at the left end {lo}")
    if math.isfinite(evaluator(hi)):
        return PoleEstimate(math.inf, None, math.nan, math.nan, "no pole in the search interval")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if math.isfinite(evaluator(mid)):
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    d = np.geomspace(decade[1], decade[0], 24)
    d = d[d > 10 * tol]
    x = -np.log(d)
    y = np.log([evaluator(c - dd) for dd in d])
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(abs(slope - round(slope)))
    m = int(round(slope)) if resid < 0.05 and round(slope) >= 1 else None
    warn = "" if m is not None else f"fitted order {slope:.4f} is not close to an integer"
    return PoleEstimate(c, m, float(slope), resid, warn)


# -- profiles ----------------------------------------------------------------------
@dataclass(frozen=True)
class ZetaProfile:
    gammas: np.ndarray
    Z: np.ndarray
    g: np.ndarray
    c_u_hat: float
    m_hat: int | None

    def convexity_defect(self) -> float:
        lz = np.log(self.Z)
        return float(-np.min(np.diff(lz, 2))) if lz.size > 2 else 0.0

    def monotonicity_defect(self) -> float:
        return float(-np.min(np.diff(self.g))) if self.g.size > 1 else 0.0


def build_profile(source, gammas: Sequence[float], interval: tuple[float, float] | None = None) -> ZetaProfile:
    gam = np.asarray(gammas, dtype=float)
    Z = np.array([source.zeta(float(x)) for x in gam])
    c = float(getattr(source, "c_u", math.inf))
    g = np.array([log_derivatives(source, float(x), 1, pole=c)[0] for x in gam])
    est = estimate_cu(source.zeta, interval) if interval else PoleEstimate(c, getattr(source, "m", None), math.nan, math.nan)
    return ZetaProfile(gam, Z, g, est.c_u, est.m)


def ode_consistency(gammas: np.ndarray, g: np.ndarray, b0: float = 0.0, c2: float = 2.0) -> float:
    """max of dg/dgamma - (2 c2 + 1)^2 g^2 over sub-intervals where g >= b0."""
    gam = np.asarray(gammas, dtype=float)
    g = np.asarray(g, dtype=float)
    dg = np.diff(g) / np.diff(gam)
    gm = np.maximum(g[:-1], g[1:])
    mask = np.minimum(g[:-1], g[1:]) >= b0
    if not mask.any():
        return -math.inf
    return float(np.max(dg[mask] - (2 * c2 + 1) ** 2 * gm[mask] ** 2))
