"""The measure nu0 obtained by lifting a radial potential to the total space
of the canonical bundle, and the factorization Z_u(gamma) = G(gamma) * int e^{-gamma t} nu0.

For psi = u + log r^2 with fiber weight e^{-r^2}, the fiber volume of
{psi < t} is F(t - u) where F(tau) = (1 - exp(-e^tau)) / 2.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, interpolate, special

from .errors import DomainError, GridTooCoarse, QuadratureFailure
from .logconcave import GridMeasure, is_log_concave, laplace, moment_p, tilt
from .model import RadialPotential, mu_moment, zeta_eval

__all__ = [
    "TGridSpec",
    "LiftReport",
    "ChiReport",
    "fiber_cdf",
    "fiber_density",
    "nu0",
    "nu0_derivative",
    "G0",
    "C_gamma",
    "verify_factorization",
    "stieltjes_laplace",
    "chi_values",
    "chi_check",
]


def fiber_cdf(tau):
    """F(tau) = int_0^{e^{tau/2}} e^{-r^2} r dr."""
    tau = np.asarray(tau, dtype=float)
    return -0.5 * np.expm1(-np.exp(tau))


def fiber_density(tau):
    """F'(tau) = e^tau exp(-e^tau) / 2."""
    tau = np.asarray(tau, dtype=float)
    return 0.5 * np.exp(tau - np.exp(tau))


@dataclass(frozen=True)
class TGridSpec:
    """t-grid for nu0: exact values on ``coarse_nodes`` points, spline-refined
    to spacing ``fine_step`` for the piecewise-linear representation."""

    coarse_nodes: int = 4000
    fine_step: float = 0.0025
    left_margin: float = 30.0
    t_max: float = 25.0
    s_segment: float = 0.1

    def __post_init__(self) -> None:
        if self.coarse_nodes < 100 or self.fine_step <= 0 or self.left_margin <= 0:
            raise DomainError("invalid t-grid specification")


def _s_quadrature(u: RadialPotential, t_min: float, seg: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes in s and weights times dV_X density."""
    g = u.geometry
    a = u.left_slope
    phi_lo = float(u.phi[0])
    # extend far enough that {u < t_min} and the e^{ns} tail are both resolved
    reach = 70.0 / g.n
    if a > 1e-12:
        reach += min(max(phi_lo - t_min, 0.0) / a, 2000.0)
    lo = g.s_min - reach
    xg, wg = np.polynomial.legendre.leggauss(8)
    edges = np.concatenate([
        np.linspace(lo, g.s_min, max(2, int(math.ceil((g.s_min - lo) / (2.5 * seg)))) + 1)[:-1],
        np.linspace(g.s_min, g.s_max, max(2, int(math.ceil((g.s_max - g.s_min) / seg))) + 1),
    ])
    aa, bb = edges[:-1], edges[1:]
    mid, half = (aa + bb) / 2, (bb - aa) / 2
    x = (mid[:, None] + half[:, None] * xg).ravel()
    w = (half[:, None] * wg).ravel() * g.rho(x)
    return x, w


def _fiber_integral(u: RadialPotential, t: np.ndarray, kernel, spec: TGridSpec, t_min: float) -> np.ndarray:
    x, w = _s_quadrature(u, t_min, spec.s_segment)
    keep = w > 0
    x, w = x[keep], w[keep]
    ph, _, _ = u.evaluate(x)
    out = np.empty_like(t)
    chunk = max(1, 2_000_000 // x.size)
    for i in range(0, t.size, chunk):
        tt = t[i:i + chunk]
        out[i:i + chunk] = kernel(tt[:, None] - ph[None, :]) @ w
    return out


def _t_range(u: RadialPotential, spec: TGridSpec) -> tuple[float, float]:
    t_min = float(np.min(u.phi)) - spec.left_margin
    return t_min, spec.t_max


def nu0(u: RadialPotential, spec: TGridSpec | None = None) -> GridMeasure:
    """Density V(t) = int_X F(t - u) dV_X as a grid measure.

    The left tail is continued exponentially with the terminal log-slope, the
    right tail with rate 0 (V tends to the total fiber mass 1/2), so the
    measure has infinite mass while every e^{-gamma t}-moment with
    0 < gamma < left rate is finite.
    """
    spec = spec or TGridSpec()
    t_min, t_max = _t_range(u, spec)
    tc = np.linspace(t_min, t_max, spec.coarse_nodes)
    V = _fiber_integral(u, tc, fiber_cdf, spec, t_min)
    dv = np.diff(V)
    if np.any(dv < -1e-12 * np.maximum(V[1:], 1e-300)) or np.any(V <= 0):
        j = int(np.argmin(dv))
        raise GridTooCoarse(f"V(t) is not monotone near t = {tc[j]:.6g}")
    spline = interpolate.CubicSpline(tc, np.log(V))
    k = int(math.ceil((t_max - t_min) / spec.fine_step))
    tf = np.linspace(t_min, t_max, k + 1)
    Vf = np.exp(spline(tf))
    left_rate = float(spline(t_min, 1))
    return GridMeasure(tf, Vf, (), left_rate, 0.0)


def nu0_derivative(u: RadialPotential, spec: TGridSpec | None = None) -> tuple[np.ndarray, np.ndarray]:
    """V'(t) = int_X F'(t - u) dV_X on the coarse grid (the density of psi_* dV_Y)."""
    spec = spec or TGridSpec()
    t_min, t_max = _t_range(u, spec)
    tc = np.linspace(t_min, t_max, spec.coarse_nodes)
    return tc, _fiber_integral(u, tc, fiber_density, spec, t_min)


def stieltjes_laplace(u: RadialPotential, gamma: float, spec: TGridSpec | None = None) -> float:
    """int e^{-gamma t} dV(t) from V' alone, independent of the grid measure."""
    tc, dV = nu0_derivative(u, spec)
    pos = dV > 1e-300
    tc, dV = tc[pos], dV[pos]
    spline = interpolate.CubicSpline(tc, np.log(dV))
    xg, wg = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(tc[0], tc[-1], 4 * tc.size)
    a, b = edges[:-1], edges[1:]
    mid, half = (a + b) / 2, (b - a) / 2
    x = (mid[:, None] + half[:, None] * xg).ravel()
    w = (half[:, None] * wg).ravel()
    body = float(np.sum(np.exp(spline(x) - gamma * x) * w))
    rate = float(spline(tc[0], 1))
    if rate <= gamma:
        return math.inf
    left = math.exp(spline(tc[0]) - gamma * tc[0]) / (rate - gamma)
    return body + left


def G0(gamma: float) -> float:
    """2 gamma / Gamma(1 - gamma)."""
    if not 0 <= gamma < 1:
        raise DomainError("G0 requires 0 <= gamma < 1")
    return float(2.0 * gamma * special.rgamma(1.0 - gamma))


def _c_gamma_parts(gamma: float, method: str) -> tuple[float, float]:
    a = -gamma
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if method == "weighted":
                # x^a (-log x) on (0, 1) handled by the algebraic-log weight
                lo, _ = integrate.quad(lambda x: math.exp(-x), 0.0, 1.0, weight="alg-loga",
                                       wvar=(a, 0.0), epsabs=0.0, epsrel=1e-13)
                hi, _ = integrate.quad(lambda x: math.exp(-x) * math.log(x) * x**a, 1.0, math.inf,
                                       epsabs=0.0, epsrel=1e-13)
                num = -lo + hi
                den, _ = integrate.quad(lambda x: math.exp(-x), 0.0, 1.0, weight="alg",
                                        wvar=(a, 0.0), epsabs=0.0, epsrel=1e-13)
                den2, _ = integrate.quad(lambda x: math.exp(-x) * x**a, 1.0, math.inf,
                                         epsabs=0.0, epsrel=1e-13)
                den += den2
            elif method == "exponential":
                # x = e^y turns both integrals into smooth ones over the line
                def f(y, k):
                    if y > 6.5:
                        return 0.0
                    return math.exp((1 + a) * y - math.exp(y)) * abs(y) ** k

                num = sum(integrate.quad(f, lo_, hi_, args=(1,), epsabs=0.0, epsrel=1e-13, limit=200)[0]
                          for lo_, hi_ in ((-math.inf, 0.0), (0.0, math.inf)))
                den = sum(integrate.quad(f, lo_, hi_, args=(0,), epsabs=0.0, epsrel=1e-13, limit=200)[0]
                          for lo_, hi_ in ((-math.inf, 0.0), (0.0, math.inf)))
            else:
                raise DomainError(f"unknown method {method!r}")
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    return num / 2.0, den / 2.0


def C_gamma(gamma: float, method: str = "weighted") -> float:
    """int e^{-r^2}|log r^2| r^{1-2gamma} dr / int e^{-r^2} r^{1-2gamma} dr."""
    if not 0 < gamma < 1:
        raise DomainError("C_gamma requires 0 < gamma < 1")
    num, den = _c_gamma_parts(gamma, method)
    ref = math.gamma(1.0 - gamma) / 2.0
    if abs(den - ref) > 1e-10 * ref:
        raise QuadratureFailure(f"denominator {den!r} differs from Gamma(1-gamma)/2 = {ref!r}")
    return num / den


@dataclass(frozen=True)
class LiftReport:
    gamma: float
    lhs: float
    rhs: float
    rel_error: float
    nu0_logconcave: bool
    first_moment_lhs: float
    first_moment_rhs: float
    success: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self), allow_nan=True)


def verify_factorization(u: RadialPotential, gamma: float, tol: float = 1e-5,
                         nu: GridMeasure | None = None, spec: TGridSpec | None = None) -> LiftReport:
    """Compare Z_u(gamma) with G(gamma) * int e^{-gamma t} nu0 and check the
    first-moment bound int|t| nu_gamma <= g(gamma) + 1/gamma + C_gamma."""
    if not 0 < gamma < 1:
        raise DomainError("gamma must lie in (0, 1)")
    nu = nu if nu is not None else nu0(u, spec)
    lhs = zeta_eval(u, gamma)
    rhs = G0(gamma) * laplace(nu, gamma)
    rel = abs(lhs - rhs) / abs(lhs)
    flag, _, _ = is_log_concave(nu, 1e-6)
    m_lhs = moment_p(tilt(nu, gamma), 1.0)
    g = mu_moment(u, gamma, 1.0, signed=True)
    m_rhs = g + 1.0 / gamma + C_gamma(gamma)
    ok = rel <= tol and m_lhs <= m_rhs + tol
    return LiftReport(float(gamma), float(lhs), float(rhs), float(rel), bool(flag), float(m_lhs), float(m_rhs),
                      bool(ok))


# -- chi transform ------------------------------------------------------------------
def _chi_phi(s):
    return math.exp(s) - s


def chi_values(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """chi(v) = -log int_{s < -v} e^{-phi} ds and chi'(v) = e^{-phi(-v)} / int_{s<-v} e^{-phi},
    for phi(s) = e^s - s, by quadrature."""
    v = np.asarray(v, dtype=float)
    chi = np.empty_like(v)
    dchi = np.empty_like(v)
    for i, vi in enumerate(v):
        top = -vi
        # integrand e^{s - e^s} peaks at s = 0; scale by its max on the range
        ref = -_chi_phi(min(top, 0.0))

        def f(s):
            return math.exp(-_chi_phi(s) - ref)

        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                pieces = [(top - 60.0, top)] if top < 3 else [(top - 60.0, 0.0), (0.0, top)]
                val = sum(integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=200)[0] for a, b in pieces)
            except integrate.IntegrationWarning as exc:
                raise QuadratureFailure(f"chi quadrature failed at v = {vi}: {exc}") from exc
        if top - 60.0 > -700:
            val += math.exp(-_chi_phi(top - 60.0) - ref)  # e^{s} tail below the window
        chi[i] = -(math.log(val) + ref)
        dchi[i] = math.exp(-_chi_phi(top) - ref) / val
    return chi, dchi


@dataclass(frozen=True)
class ChiReport:
    v_min: float
    v_max: float
    min_second_difference: float
    slope_min: float
    slope_max: float
    slope_at_end: float
    passed: bool


def chi_check(v: np.ndarray, tol: float = 1e-8, end_tol: float = 1e-4) -> ChiReport:
    v = np.asarray(v, dtype=float)
    chi, dchi = chi_values(v)
    first = np.diff(chi) / np.diff(v)
    second = np.diff(chi, 2)
    slopes = np.concatenate([first, dchi])
    passed = bool(second.min() >= -tol and slopes.min() >= -tol and slopes.max() <= 1 + tol
                  and abs(dchi[-1] - 1.0) <= end_tol)
    return ChiReport(float(v[0]), float(v[-1]), float(second.min()), float(slopes.min()),
                     float(slopes.max()), float(dchi[-1]), passed)
