"""Radial solutions of Aubin's Monge-Ampère equation.

Ball: d/ds (phi'^n) = c e^{-gamma phi} e^{ns} on s <= 0 with phi(0) = 0 and
phi'(0) = 1 (unit Monge-Ampère mass).  The equation is invariant under
s -> s + a, phi -> phi + b (with c rescaled), so a single initial value
problem started deep in the left tail produces every solution after a shift.

P^n: d/ds (h'^n) = e^{-t phi} rho with h = h0 + phi and int e^{-t phi} dV = 1,
solved by fixed-point iteration on the distribution function h'^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, NoConvergence
from .model import (
    ModelGeometry, Ball, Proj, RadialPotential, ding, dp_proxy, energy, log_zeta,
    twisted_ricci, zeta_eval,
)

__all__ = [
    "AubinSolution",
    "SlopeFit",
    "HarnackFit",
    "DingReport",
    "solve_ball",
    "ball_energy",
    "blowup_slope",
    "solve_proj",
    "aubin_path",
    "ode_defect",
    "weak_harnack_fit",
    "harnack_and_ding_report",
]


@dataclass(frozen=True)
class AubinSolution:
    geometry: ModelGeometry
    param: float
    potential: RadialPotential
    residual: float
    normalization: str
    constant: float
    mass_error: float
    iterations: int = 0
    extras: dict = field(default_factory=dict)


def ode_defect(sol: AubinSolution) -> float:
    """max |d/ds(h'^n) - rhs| / max rhs at the midpoints of the sample grid."""
    u = sol.potential
    g = u.geometry
    n = g.n
    x = 0.5 * (u.s[1:] + u.s[:-1])
    ph, dph, d2ph = u.evaluate(x)
    hp = g.dh0(x) + dph
    hpp = g.d2h0(x) + d2ph
    lhs = n * hp ** (n - 1) * hpp
    rhs = sol.constant * np.exp(-sol.param * ph + g.log_rho(x))
    return float(np.max(np.abs(lhs - rhs)) / np.max(rhs))


# -- ball ------------------------------------------------------------------------
def _ball_rhs(gamma: float, n: int):
    def f(s, y):
        psi, L, _ = y
        src = math.exp(-gamma * psi + n * s)
        return [math.exp(L / n), src * math.exp(-L), psi * src]
    return f


def solve_ball(n: int, gamma: float, rtol: float = 1e-13, atol: float = 1e-300,
               s_start: float = -90.0, geometry: ModelGeometry | None = None,
               tol: float = 1e-7) -> AubinSolution:
    """Rotation-invariant solution u_gamma on the unit ball.

    Returns the solution with its midpoint ODE defect as ``residual``;
    ``constant`` is c_gamma expressed against the normalized-volume density
    n e^{ns}.
    """
    if not 0 < gamma < n + 1:
        raise DomainError(f"gamma must lie in (0, {n + 1})")
    geom = geometry or Ball(n)
    f = _ball_rhs(gamma, n)
    a = n ** (-1.0 / n)
    y0 = [a * math.exp(s_start), n * s_start - math.log(n), a * math.exp((n + 1) * s_start) / (n + 1)]

    def hit(s, y):
        return y[1]

    hit.terminal, hit.direction = True, 1
    first = integrate.solve_ivp(f, (s_start, 200.0), y0, method="DOP853", rtol=rtol, atol=atol,
                                events=hit)
    if first.status != 1 or not first.t_events[0].size:
        raise NoConvergence("shooting never reached unit Monge-Ampère mass",
                            {"gamma": gamma, "n": n, "message": first.message})
    s_star = float(first.t_events[0][0])
    grid = geom.edges
    if grid[0] + s_star <= s_start:
        raise NoConvergence("left start too shallow for the requested grid", {"s_star": s_star})
    second = integrate.solve_ivp(f, (s_start, s_star), y0, method="DOP853", rtol=rtol, atol=atol,
                                 t_eval=np.append(grid[:-1] + s_star, s_star))
    if not second.success:
        raise NoConvergence("integration failed", {"message": second.message})
    psi, L, J = second.y
    psi_star, L_star, J_star = psi[-1], L[-1], J[-1]
    phi = psi - psi_star
    dphi = np.exp(L / n)
    src = np.exp(-gamma * psi + n * (grid + s_star))
    d2phi = src * np.exp(-L) * dphi / n
    # c e^{-gamma phi} n e^{ns} = src  =>  c = e^{n s* - gamma psi*} / n
    c = math.exp(n * s_star - gamma * psi_star) / n
    u = RadialPotential(geom, grid, phi, dphi, d2phi, f"ball-aubin(n={n},gamma={gamma})")
    mass = c * zeta_eval(u, gamma)
    # int (-phi) d(phi'^n) = psi* w* - J*  with w* = e^{L*}
    integral = psi_star * math.exp(L_star) - J_star
    sol = AubinSolution(geom, gamma, u, 0.0, "boundary zero", c, abs(mass - 1.0),
                        extras={"s_star": s_star, "ma_integral": integral, "endpoint_slope": dphi[-1]})
    res = ode_defect(sol)
    sol = AubinSolution(geom, gamma, u, res, "boundary zero", c, abs(mass - 1.0), extras=sol.extras)
    if not res <= tol:
        raise NoConvergence(f"defect {res:.3e} exceeds tolerance {tol:.1e}",
                            {"gamma": gamma, "n": n, "residual": res})
    return sol


def ball_energy(sol: AubinSolution, kind: str = "pluricomplex") -> float:
    """Energy int(-phi) d(phi'^n) scaled by n/(n+1) ('pluricomplex') or by
    1/(n+1) ('local')."""
    n = sol.geometry.n
    I = sol.extras["ma_integral"]
    if kind == "pluricomplex":
        return n / (n + 1) * I
    if kind == "local":
        return I / (n + 1)
    raise DomainError(f"unknown energy kind {kind!r}")


@dataclass(frozen=True)
class SlopeFit:
    n: int
    slope: float
    intercept: float
    r2: float
    gammas: np.ndarray
    energies: np.ndarray
    residuals: np.ndarray
    accepted: np.ndarray
    target: float
    kind: str

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.target) / self.target

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "target": self.target, "relative_error": self.relative_error,
                "energy": self.kind, "accepted": int(self.accepted.sum())}


def blowup_slope(n: int, gammas: Sequence[float], energy: str = "pluricomplex",
                 accept: float = 1e-6) -> SlopeFit:
    """Least-squares slope of E(u_gamma) against log(1/(n+1-gamma)).

    Points whose solver defect exceeds ``accept`` (or that fail to solve)
    are dropped from the fit.
    """
    gam = np.asarray(gammas, dtype=float)
    E = np.full(gam.shape, np.nan)
    R = np.full(gam.shape, np.inf)
    for i, g in enumerate(gam):
        try:
            sol = solve_ball(n, float(g), tol=math.inf)
        except NoConvergence:
            continue
        E[i] = ball_energy(sol, energy)
        R[i] = sol.residual
    ok = np.isfinite(E) & (R <= accept)
    if ok.sum() < 2:
        raise NoConvergence("fewer than two accepted points", {"residuals": R.tolist()})
    x = np.log(1.0 / (n + 1 - gam[ok]))
    slope, icpt = np.polyfit(x, E[ok], 1)
    pred = slope * x + icpt
    ss = float(np.sum((E[ok] - E[ok].mean()) ** 2))
    r2 = 1.0 - float(np.sum((E[ok] - pred) ** 2)) / ss if ss > 0 else 1.0
    target = n / (n + 1) if energy == "pluricomplex" else 1.0 / (n + 1)
    return SlopeFit(n, float(slope), float(icpt), r2, gam, E, R, ok, target, energy)


# -- projective space ---------------------------------------------------------------
def _trapezoid_hermite(f: np.ndarray, df: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Cumulative integral from nodal values and derivatives (corrected trapezoid)."""
    h = np.diff(s)
    seg = 0.5 * h * (f[1:] + f[:-1]) + h * h * (df[:-1] - df[1:]) / 12.0
    return np.concatenate([[0.0], np.cumsum(seg)])


def _quintic_matrix(xi: np.ndarray) -> np.ndarray:
    """Rows map (f0, h f0', h^2 f0'', f1, h f1', h^2 f1'') to f at local points xi."""
    V = np.array([[1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 2, 0, 0, 0],
                  [1, 1, 1, 1, 1, 1], [0, 1, 2, 3, 4, 5], [0, 0, 2, 6, 12, 20]], dtype=float)
    coef = np.linalg.inv(V)  # monomial coefficients from the six data
    powers = np.vander(xi, 6, increasing=True)
    return powers @ coef


def _phi_at_quadrature(phi, dphi, d2phi, s, xi_mat):
    h = np.diff(s)[:, None]
    data = np.stack([phi[:-1], h[:, 0] * dphi[:-1], h[:, 0] ** 2 * d2phi[:-1],
                     phi[1:], h[:, 0] * dphi[1:], h[:, 0] ** 2 * d2phi[1:]], axis=1)
    return (data @ xi_mat.T).ravel()


def solve_proj(n: int, t: float, twist: float = 0.0, tol: float = 1e-13, max_iter: int = 2000,
               geometry: ModelGeometry | None = None, accept: float = 1e-7) -> AubinSolution:
    """Radial solution of omega_u^n / V = e^{-t u} dV_X on P^n.

    The distribution function F = h'^n is rebuilt from the current iterate
    by Gauss-Legendre quadrature of its interpolant and written as sigma^n
    plus a correction, so the untwisted fixed point phi = 0 is reproduced
    exactly.
    """
    if not 0 <= t <= 1:
        raise DomainError("t must lie in [0, 1]")
    geom = geometry or Proj(n, twist=twist)
    if geom.kind != "proj":
        raise DomainError("solve_proj needs a projective geometry")
    s = geom.edges
    nseg = s.size - 1
    xq, wq = geom.nodes_weights
    xi = (xq[: xq.size // nseg] - s[0]) / (s[1] - s[0])
    Q = _quintic_matrix(xi)
    sig = special.expit(s)
    rho0q = np.exp(geom.log_rho0(xq))
    ratioq = geom.log_rho(xq) - geom.log_rho0(xq)
    rho0 = np.exp(geom.log_rho0(s))
    ratio = geom.log_rho(s) - geom.log_rho0(s)
    left_mass0 = sig[0] ** n
    right_mass0 = -np.expm1(n * np.log(sig[-1]))

    def correction(u: RadialPotential):
        """cumulative int (e^{-t phi} rho/rho0 - 1) rho0 plus both tails."""
        ph = _phi_at_quadrature(u.phi, u.dphi, u.d2phi, s, Q)
        seg = ((np.exp(-t * ph + ratioq) - 1.0) * rho0q * wq).reshape(nseg, -1).sum(axis=1)
        body = np.concatenate([[0.0], np.cumsum(seg)])
        e0 = math.exp(-t * u.phi[0] + ratio[0])
        eN = math.exp(-t * u.phi[-1] + ratio[-1])
        lt = e0 * rho0[0] / (n - t * u.dphi[0]) - left_mass0
        rt = eN * rho0[-1] / (1.0 + t * u.dphi[-1]) - right_mass0
        return body, lt, rt

    u = RadialPotential(geom, s, np.zeros_like(s), np.zeros_like(s), np.zeros_like(s))
    it, change = 0, math.inf
    for it in range(1, max_iter + 1):
        body, lt, rt = correction(u)
        Z = 1.0 + body[-1] + lt + rt
        F = (sig**n + lt + body) / Z
        dens = np.exp(-t * u.phi + ratio) * rho0 / Z
        dphi = F ** (1.0 / n) - sig
        d2phi = F ** (1.0 / n - 1.0) * dens / n - special.expit(s) * special.expit(-s)
        shape = RadialPotential(geom, s, _trapezoid_hermite(dphi, d2phi, s), dphi, d2phi)
        if t > 0:
            # constant from int e^{-t phi} dV = 1
            b2, l2, r2 = correction(shape)
            C = math.log1p(b2[-1] + l2 + r2) / t
        else:
            # Calabi-Yau case: only omega_u^n = dV_X matters; centre with int u dV = 0
            ph = _phi_at_quadrature(shape.phi, shape.dphi, shape.d2phi, s, Q)
            C = -float(np.dot(ph * rho0q * np.exp(ratioq), wq))
        new = shape.shifted(C)
        change = float(np.max(np.abs(new.phi - u.phi)))
        u = new
        if change <= tol:
            break
    else:
        raise NoConvergence(f"fixed point did not settle (last change {change:.2e})",
                            {"t": t, "n": n, "iterations": max_iter})
    u = RadialPotential(geom, s, u.phi, u.dphi, u.d2phi, f"proj-aubin(n={n},t={t},twist={geom.twist})")
    lz = log_zeta(u, t) if t > 0 else 0.0
    mass = math.exp(lz)
    sol = AubinSolution(geom, t, u, 0.0, "exp integral is one" if t > 0 else "mean zero", 1.0, abs(mass - 1.0), it,
                        {"last_change": change})
    res = ode_defect(sol)
    sol = AubinSolution(geom, t, u, res, sol.normalization, 1.0, abs(mass - 1.0), it, sol.extras)
    if not res <= accept:
        raise NoConvergence(f"defect {res:.3e} exceeds tolerance {accept:.1e}", {"t": t, "residual": res})
    return sol


def aubin_path(n: int, ts: Sequence[float], twist: float = 0.0, **kw) -> list[AubinSolution]:
    return [solve_proj(n, float(t), twist=twist, **kw) for t in ts]


# -- Harnack and Ding ----------------------------------------------------------------
@dataclass(frozen=True)
class HarnackFit:
    p: float
    a: float
    b: float
    lhs: np.ndarray
    sups: np.ndarray
    weights: np.ndarray

    def bound(self, sup: float, w: float, n: int) -> float:
        return self.a * (n + 1) * sup + self.b * w


def weak_harnack_fit(sols: Sequence[AubinSolution], p: float) -> HarnackFit:
    """Smallest a + b (a, b >= 0) with L^p(omega_u^n) |u_t| <= a (n+1) sup u_t + b w(t)."""
    n = sols[0].geometry.n
    lhs = np.array([dp_proxy(s.potential, p).ma_side for s in sols])
    sups = np.array([s.potential.sup for s in sols])
    ts = np.array([s.param for s in sols])
    with np.errstate(divide="ignore"):
        w = np.where(ts < 1, 1.0 / ts + 1.0 / np.where(ts < 1, 1 - ts, 1.0), np.inf)
    use = np.isfinite(w)
    if not np.any(lhs[use] > 0):
        return HarnackFit(p, 0.0, 0.0, lhs, sups, w)
    A_ub = -np.stack([(n + 1) * sups[use], w[use]], axis=1)
    res = optimize.linprog([1.0, 1.0], A_ub=A_ub, b_ub=-lhs[use], bounds=[(0, None)] * 2, method="highs")
    if not res.success:
        raise NoConvergence("weak Harnack fit failed", {"message": res.message})
    a, b = (float(v) for v in res.x)
    slack = max(0.0, float(np.max(lhs[use] - a * (n + 1) * sups[use] - b * w[use]) / np.min(w[use])))
    return HarnackFit(p, a, b + slack, lhs, sups, w)


@dataclass(frozen=True)
class DingReport:
    ts: np.ndarray
    ding_solution: np.ndarray      # D_t(u_t) = -E(u_t)
    ding_base: np.ndarray          # D_t(u_0)
    ding_base0: float              # D_0(u_0)
    chain_ok: bool
    fixed_ding: np.ndarray         # D_t(u_fixed) along ts
    monotone_defect: float
    jensen_ok: bool
    harnack: HarnackFit | None

    def to_dict(self) -> dict:
        return {
            "t": self.ts.tolist(), "ding_solution": self.ding_solution.tolist(),
            "ding_base": self.ding_base.tolist(), "ding_base0": self.ding_base0,
            "chain_ok": self.chain_ok, "monotone_defect": self.monotone_defect,
            "jensen_ok": self.jensen_ok,
            "harnack": None if self.harnack is None else {"p": self.harnack.p, "a": self.harnack.a,
                                                           "b": self.harnack.b},
        }


def harnack_and_ding_report(sols: Sequence[AubinSolution], p: float = 2.0,
                            base: RadialPotential | None = None,
                            fixed: RadialPotential | None = None, tol: float = 1e-10) -> DingReport:
    """Ding chain D_t(u_t) <= D_t(u_0) <= D_0(u_0), monotonicity of t -> D_t(u)
    for a fixed u, Jensen's sup u_t >= 0 and the weak Harnack fit."""
    geom = sols[0].geometry
    if base is None:
        # u_0 solves omega_u^n = dV_X; for the untwisted reference this is 0
        base = solve_proj(geom.n, 0.0, geometry=geom).potential if geom.twist else _zero(geom)
    ts = np.array([s.param for s in sols])
    dsol = np.array([-energy(s.potential) for s in sols])
    dbase = np.array([ding(base, float(t)) for t in ts])
    d0 = ding(base, 0.0)
    chain = bool(np.all(dsol <= dbase + tol) and np.all(dbase <= d0 + tol))
    u_fix = fixed if fixed is not None else sols[len(sols) // 2].potential
    fixed_vals = np.array([ding(u_fix, float(t)) for t in ts])
    mono = float(max(0.0, np.max(np.diff(fixed_vals)))) if ts.size > 1 else 0.0
    jensen = bool(all(s.potential.sup >= -tol for s in sols))
    harn = weak_harnack_fit(sols, p)
    return DingReport(ts, dsol, dbase, d0, chain, fixed_vals, mono, jensen, harn)


def _zero(geom: ModelGeometry) -> RadialPotential:
    s = geom.edges
    z = np.zeros_like(s)
    return RadialPotential(geom, s, z, z, z, "zero")
