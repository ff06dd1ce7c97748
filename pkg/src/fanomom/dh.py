"""Duistermaat-Heckman measures of toric test configurations.

Convex bodies and piecewise-linear data are kept in exact rational
arithmetic; only section volumes and densities are floating point.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull

from .errors import DegenerateBody, DomainError, MixedRepresentation, NonIntegralWeights
from .logconcave import GridMeasure, is_log_concave, moment_p

__all__ = [
    "ConvexBodySpec",
    "AffineMap",
    "TCFunctionSpec",
    "DHData",
    "NormRecord",
    "ReverseHolderRow",
    "NormalConeReport",
    "okounkov_pushforward",
    "toric_tc_weights",
    "tc_norms",
    "reverse_holder_report",
    "tail_root_defect",
    "kk_envelope",
    "normal_cone_weights",
    "normal_cone_limit",
    "PRESETS",
    "preset",
]

Vec = tuple[Fraction, ...]


def _q(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x)) if isinstance(x, (str, float)) else Fraction(x)


# -- exact linear algebra ------------------------------------------------------------
def _solve(M: list[list[Fraction]], r: list[Fraction]) -> list[Fraction] | None:
    """Gaussian elimination over Q; None when M is singular."""
    n = len(M)
    A = [row[:] + [r[i]] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((i for i in range(col, n) if A[i][col] != 0), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        for i in range(n):
            if i != col and A[i][col] != 0:
                f = A[i][col] / A[col][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[col])]
    return [A[i][n] / A[i][i] for i in range(n)]


def _rank(rows: list[list[Fraction]]) -> int:
    A = [r[:] for r in rows]
    rank, ncol = 0, len(A[0]) if A else 0
    for col in range(ncol):
        piv = next((i for i in range(rank, len(A)) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        for i in range(len(A)):
            if i != rank and A[i][col] != 0:
                f = A[i][col] / A[rank][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[rank])]
        rank += 1
    return rank


def _normal(points: Sequence[Vec]) -> Vec | None:
    """Normal to the affine hull of n points in Q^n (None if degenerate)."""
    n = len(points[0])
    diffs = [[p[i] - points[0][i] for i in range(n)] for p in points[1:]]
    if n == 1:
        return (Fraction(1),)
    for free in range(n):
        M = [[row[j] for j in range(n) if j != free] for row in diffs]
        rhs = [-row[free] for row in diffs]
        sol = _solve(M, rhs)
        if sol is not None:
            v = list(sol)
            v.insert(free, Fraction(1))
            return tuple(v)
    return None


def _primitive(v: Sequence[Fraction], c: Fraction) -> tuple[Vec, Fraction]:
    den = math.lcm(*(x.denominator for x in (*v, c)))
    ints = [int(x * den) for x in (*v, c)]
    g = math.gcd(*ints) or 1
    return tuple(Fraction(x // g) for x in ints[:-1]), Fraction(ints[-1] // g)


def _halfspaces(vertices: Sequence[Vec]) -> list[tuple[Vec, Fraction]]:
    """Facet inequalities a.x <= c of conv(vertices), full-dimensional case."""
    n = len(vertices[0])
    out: set[tuple[Vec, Fraction]] = set()
    for combo in itertools.combinations(vertices, n):
        nv = _normal(combo)
        if nv is None:
            continue
        c = sum(a * b for a, b in zip(nv, combo[0]))
        vals = [sum(a * b for a, b in zip(nv, v)) - c for v in vertices]
        if all(x <= 0 for x in vals):
            out.add(_primitive(nv, c))
        elif all(x >= 0 for x in vals):
            out.add(_primitive(tuple(-a for a in nv), -c))
    return sorted(out)


def _vertices(halfspaces: Sequence[tuple[Vec, Fraction]], n: int) -> list[Vec]:
    """Vertices of {a.x <= c}; assumes a bounded region."""
    pts: set[Vec] = set()
    for combo in itertools.combinations(halfspaces, n):
        sol = _solve([list(a) for a, _ in combo], [c for _, c in combo])
        if sol is None:
            continue
        if all(sum(a * x for a, x in zip(h, sol)) <= c for h, c in halfspaces):
            pts.add(tuple(sol))
    return sorted(pts)


def _volume(points: Sequence[Vec], dim: int) -> float:
    if len(points) <= dim:
        return 0.0
    P = np.array([[float(x) for x in p] for p in points])
    if dim == 0:
        return 1.0
    if dim == 1:
        return float(P[:, 0].max() - P[:, 0].min())
    try:
        return float(ConvexHull(P).volume)
    except Exception:  # flat or degenerate point cloud
        return 0.0


# -- specs -----------------------------------------------------------------------
@dataclass(frozen=True)
class ConvexBodySpec:
    """Full-dimensional rational polytope given by its vertices."""

    vertices: tuple[Vec, ...]
    name: str = ""
    facets: tuple[tuple[Vec, Fraction], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        verts = tuple(sorted({tuple(_q(x) for x in v) for v in self.vertices}))
        if not verts:
            raise DegenerateBody("no vertices")
        n = len(verts[0])
        if any(len(v) != n for v in verts) or n < 1:
            raise DegenerateBody("inconsistent vertex dimensions")
        diffs = [[a - b for a, b in zip(v, verts[0])] for v in verts[1:]]
        if not diffs or _rank(diffs) < n:
            raise DegenerateBody("body has empty interior")
        object.__setattr__(self, "vertices", verts)
        hs = _halfspaces(verts)
        object.__setattr__(self, "facets", tuple(hs))
        # keep only extreme points
        extreme = tuple(v for v in _vertices(hs, n))
        object.__setattr__(self, "vertices", extreme)

    @property
    def n(self) -> int:
        return len(self.vertices[0])

    @property
    def volume(self) -> float:
        return _volume(self.vertices, self.n)

    def contains(self, x: Sequence[Fraction]) -> bool:
        return all(sum(a * xi for a, xi in zip(h, x)) <= c for h, c in self.facets)

    @classmethod
    def segment(cls) -> "ConvexBodySpec":
        return cls(((Fraction(0),), (Fraction(1),)), "segment")

    @classmethod
    def simplex(cls, n: int) -> "ConvexBodySpec":
        verts = [tuple(Fraction(0) for _ in range(n))]
        for i in range(n):
            verts.append(tuple(Fraction(int(i == j)) for j in range(n)))
        return cls(tuple(verts), f"simplex{n}")

    @classmethod
    def cube(cls, n: int) -> "ConvexBodySpec":
        verts = tuple(tuple(Fraction(b) for b in bits) for bits in itertools.product((0, 1), repeat=n))
        return cls(verts, f"cube{n}")

    @classmethod
    def from_json(cls, doc: dict) -> "ConvexBodySpec":
        return cls(tuple(tuple(Fraction(str(x)) for x in v) for v in doc["vertices"]), doc.get("name", ""))


@dataclass(frozen=True)
class AffineMap:
    """x -> coeffs . x + const with rational data."""

    coeffs: Vec
    const: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(_q(a) for a in self.coeffs))
        object.__setattr__(self, "const", _q(self.const))

    def __call__(self, x: Sequence[Fraction]) -> Fraction:
        return sum((a * xi for a, xi in zip(self.coeffs, x)), self.const)

    @property
    def is_constant(self) -> bool:
        return all(a == 0 for a in self.coeffs)

    @classmethod
    def parse(cls, doc) -> "AffineMap":
        if isinstance(doc, dict):
            return cls(tuple(Fraction(str(a)) for a in doc["coeffs"]), Fraction(str(doc.get("const", 0))))
        *a, c = doc
        return cls(tuple(Fraction(str(x)) for x in a), Fraction(str(c)))


@dataclass(frozen=True)
class TCFunctionSpec:
    """Concave PL function f = min of affine pieces on a polytope."""

    body: ConvexBodySpec
    pieces: tuple[AffineMap, ...]
    nonnegative: bool = False
    name: str = ""

    def __post_init__(self) -> None:
        if not self.pieces:
            raise DomainError("need at least one affine piece")
        if any(len(p.coeffs) != self.body.n for p in self.pieces):
            raise DomainError("affine pieces do not match the body dimension")
        if self.nonnegative and min(self(v) for v in self.body.vertices) < 0:
            raise DomainError("f is negative at a vertex")

    def __call__(self, x: Sequence[Fraction]) -> Fraction:
        return min(p(x) for p in self.pieces)

    @property
    def denominator(self) -> int:
        return math.lcm(*(x.denominator for p in self.pieces for x in (*p.coeffs, p.const)))

    @classmethod
    def from_json(cls, doc: dict) -> "TCFunctionSpec":
        """{"body": {"vertices": [...]}, "pieces": [{"coeffs": [...], "const": "1/2"}], "nonnegative": bool}"""
        unknown = set(doc) - {"body", "pieces", "nonnegative", "name"}
        if unknown:
            raise DomainError(f"unknown keys {sorted(unknown)}")
        return cls(ConvexBodySpec.from_json(doc["body"]), tuple(AffineMap.parse(x) for x in doc["pieces"]),
                   bool(doc.get("nonnegative", False)), doc.get("name", ""))


PRESETS = {
    "p1-linear": lambda: TCFunctionSpec(ConvexBodySpec.segment(), (AffineMap((Fraction(1),)),),
                                        True, "p1-linear"),
    "p1-trivial": lambda: TCFunctionSpec(ConvexBodySpec.segment(), (AffineMap((Fraction(0),)),),
                                         True, "p1-trivial"),
    "p2-linear": lambda: TCFunctionSpec(ConvexBodySpec.simplex(2), (AffineMap((Fraction(1), Fraction(0))),),
                                        True, "p2-linear"),
    "p1xp1-sum": lambda: TCFunctionSpec(ConvexBodySpec.cube(2), (AffineMap((Fraction(1), Fraction(1))),),
                                        True, "p1xp1-sum"),
    "p2-tent": lambda: TCFunctionSpec(
        ConvexBodySpec.simplex(2),
        (AffineMap((Fraction(1), Fraction(1))), AffineMap((Fraction(0), Fraction(0)), Fraction(1, 2))),
        True, "p2-tent"),
    "p3-linear": lambda: TCFunctionSpec(ConvexBodySpec.simplex(3),
                                        (AffineMap((Fraction(1), Fraction(0), Fraction(0))),),
                                        True, "p3-linear"),
}


def preset(name: str) -> TCFunctionSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# -- pushforwards ----------------------------------------------------------------
def _section_volumes(vertices: Sequence[Vec], fn: AffineMap, ts: np.ndarray) -> np.ndarray:
    """(n-1)-volume of {fn = t} inside conv(vertices), measured in the
    coordinates that make the density come out as section / |grad fn|."""
    V = np.array([[float(x) for x in v] for v in vertices])
    a = np.array([float(x) for x in fn.coeffs])
    vals = V @ a + float(fn.const)
    n = V.shape[1]
    norm = float(np.linalg.norm(a))
    # orthonormal basis of the hyperplane directions
    basis = np.linalg.svd(a[None, :])[2][1:] if n > 1 else np.zeros((0, 1))
    out = np.zeros_like(ts, dtype=float)
    for idx, t in enumerate(ts):
        pts = [V[i] for i in range(len(V)) if abs(vals[i] - t) <= 1e-14]
        for i, j in itertools.combinations(range(len(V)), 2):
            if (vals[i] - t) * (vals[j] - t) < 0:
                lam = (t - vals[i]) / (vals[j] - vals[i])
                pts.append(V[i] + lam * (V[j] - V[i]))
        if not pts:
            continue
        if n == 1:
            out[idx] = 1.0
            continue
        proj = np.array(pts) @ basis.T
        if n == 2:
            out[idx] = float(proj[:, 0].max() - proj[:, 0].min())
        elif len(proj) > n - 1:
            try:
                out[idx] = float(ConvexHull(proj).volume)
            except Exception:
                out[idx] = 0.0
    return out / norm


def okounkov_pushforward(body: ConvexBodySpec, functional: AffineMap, resolution: int = 2001) -> GridMeasure:
    """Pushforward of normalized Lebesgue measure on ``body`` under an affine map.

    The density at t is the section volume of {functional = t} divided by
    |grad functional| and the volume of the body, sampled on ``resolution``
    equispaced nodes and renormalized to unit mass.
    """
    if resolution < 100:
        raise DomainError("resolution must be at least 100")
    if len(functional.coeffs) != body.n:
        raise DomainError("functional does not match the body dimension")
    if functional.is_constant:
        return GridMeasure.dirac(float(functional.const))
    vals = [float(functional(v)) for v in body.vertices]
    lo, hi = min(vals), max(vals)
    ts = np.linspace(lo, hi, resolution)
    if body.n == 1:
        dens = np.full(resolution, 1.0 / (hi - lo))
    else:
        dens = _section_volumes(body.vertices, functional, ts) / body.volume
    return GridMeasure(ts, dens).normalized()


def _regions(spec: TCFunctionSpec) -> list[tuple[AffineMap, list[Vec]]]:
    """Polytopes where each affine piece realizes the minimum."""
    n = spec.body.n
    out = []
    for i, p in enumerate(spec.pieces):
        hs = list(spec.body.facets)
        for j, q in enumerate(spec.pieces):
            if i != j:
                # p(x) <= q(x)
                hs.append((tuple(a - b for a, b in zip(p.coeffs, q.coeffs)), q.const - p.const))
        verts = _vertices(hs, n)
        if len(verts) > n and _volume(verts, n) > 1e-14:
            out.append((p, verts))
    return out


def dh_limit(spec: TCFunctionSpec, resolution: int = 2001) -> GridMeasure:
    """f_* of normalized Lebesgue measure on the polytope."""
    body = spec.body
    total = body.volume
    regions = _regions(spec)
    atoms: dict[float, float] = {}
    dense = [(p, v) for p, v in regions if not p.is_constant]
    for p, v in regions:
        if p.is_constant:
            loc = float(p.const)
            atoms[loc] = atoms.get(loc, 0.0) + _volume(v, body.n) / total
    if not dense:
        return GridMeasure(np.array([]), np.array([]), tuple(sorted(atoms.items())))
    vals = [float(spec(v)) for v in body.vertices]
    ts = np.linspace(min(vals), max(vals), resolution)
    dens = np.zeros(resolution)
    for p, v in dense:
        if body.n == 1:
            lo, hi = sorted(float(p(x)) for x in v)
            dens += np.where((ts >= lo) & (ts <= hi), 1.0 / abs(float(p.coeffs[0])), 0.0) / total
        else:
            dens += _section_volumes(v, p, ts) / total
    dense_mass = 1.0 - sum(atoms.values())
    m = GridMeasure(ts, dens)
    m = m.scaled(dense_mass / m.mass)
    if atoms:
        # density plus atoms: store both (the representation allows it)
        m = GridMeasure(m.nodes, m.densities, tuple(sorted(atoms.items())))
    return m


# -- lattice enumeration ----------------------------------------------------------------
@dataclass(frozen=True)
class DHData:
    k: int
    weights: tuple[int, ...]
    empirical: GridMeasure
    limit: GridMeasure | None

    @property
    def N_k(self) -> int:
        return len(self.weights)

    def histogram(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for w in self.weights:
            out[w] = out.get(w, 0) + 1
        return dict(sorted(out.items()))


def _atomic(hist: dict[Fraction, int], total: int) -> GridMeasure:
    return GridMeasure(np.array([]), np.array([]),
                       tuple((float(loc), c / total) for loc, c in sorted(hist.items())))


def _lattice_points(body: ConvexBodySpec, k: int):
    lo = [min(v[i] for v in body.vertices) * k for i in range(body.n)]
    hi = [max(v[i] for v in body.vertices) * k for i in range(body.n)]
    ranges = [range(math.ceil(a), math.floor(b) + 1) for a, b in zip(lo, hi)]
    kk = Fraction(k)
    for m in itertools.product(*ranges):
        x = tuple(Fraction(mi) / kk for mi in m)
        if body.contains(x):
            yield m, x


def toric_tc_weights(spec: TCFunctionSpec, k: int, resolution: int = 2001) -> DHData:
    """Weights lambda_m = k f(m/k) over lattice points m of kP."""
    if k < 1:
        raise DomainError("k must be a positive integer")
    weights = []
    for m, x in _lattice_points(spec.body, k):
        lam = k * spec(x)
        if lam.denominator != 1:
            raise NonIntegralWeights(f"k f(m/k) = {lam} is not an integer at m = {m}; "
                                     f"use k divisible by {spec.denominator}")
        weights.append(int(lam))
    weights.sort()
    hist: dict[Fraction, int] = {}
    for w in weights:
        key = Fraction(w, k)
        hist[key] = hist.get(key, 0) + 1
    return DHData(k, tuple(weights), _atomic(hist, len(weights)), dh_limit(spec, resolution))


# -- norms and reverse Hoelder -------------------------------------------------------------
@dataclass(frozen=True)
class NormRecord:
    p: float
    uncentered: float
    centered: float
    barycenter: float


def tc_norms(m: GridMeasure, p: float) -> NormRecord:
    """(int |t|^p dm)^{1/p}, (int |t - c|^p dm)^{1/p} and c = int t dm."""
    if p < 1:
        raise DomainError("p must be >= 1")
    mm = m.normalized()
    c = mm.barycenter()
    unc = moment_p(mm, p) ** (1.0 / p)
    cen = moment_p(mm.shifted(c), p) ** (1.0 / p)
    return NormRecord(p, unc, cen, c)


def kk_envelope(p: float) -> float:
    """(p!)^{1/p} of the exponential law scaled so the p = 2 value is 2."""
    return math.sqrt(2.0) * math.gamma(p + 1.0) ** (1.0 / p)


def _support(m: GridMeasure) -> tuple[float, float]:
    pts = [a for a, w in m.atoms if w > 0]
    if m.nodes.size:
        pos = np.flatnonzero(m.densities > 0)
        if pos.size:
            pts += [float(m.nodes[max(pos[0] - 1, 0)]), float(m.nodes[min(pos[-1] + 1, m.nodes.size - 1)])]
    return min(pts), max(pts)


def _inclusive_tail(m: GridMeasure, t: np.ndarray) -> np.ndarray:
    """mu([t, oo)) for a compactly supported normalized measure."""
    mm = m.normalized()
    out = np.zeros_like(t)
    if mm.nodes.size:
        x, d = mm.nodes, mm.densities
        h = np.diff(x)
        seg = 0.5 * (d[1:] + d[:-1]) * h
        right = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        j = np.clip(np.searchsorted(x, t, side="right") - 1, 0, x.size - 2)
        s = np.clip(t - x[j], 0.0, h[j])
        part = s * d[j] + s * s * (d[j + 1] - d[j]) / (2 * h[j])
        out += np.where(t <= x[0], right[0], np.where(t >= x[-1], 0.0, right[j] - part))
    for loc, w in mm.atoms:
        out += np.where(loc >= t - 1e-12, w, 0.0)
    return out


def tail_root_defect(m: GridMeasure, n: int, samples: int = 2001) -> float:
    """Largest concavity violation of t -> mu([t, oo))^{1/n} on the support,
    measured as a discrete second difference."""
    lo, hi = _support(m)
    if hi - lo <= 0:
        return 0.0
    t = np.linspace(lo, hi, samples)
    T = np.clip(_inclusive_tail(m, t), 0.0, None) ** (1.0 / n)
    return float(max(0.0, np.max(T[2:] - 2 * T[1:-1] + T[:-2])))


@dataclass(frozen=True)
class ReverseHolderRow:
    p: float
    uncentered: float
    centered: float
    ratio: float
    centered_ratio: float
    envelope: float
    flag_nplus1: bool | None
    flag_logconcave: bool | None


@dataclass(frozen=True)
class ReverseHolderReport:
    n: int
    nonneg_support: bool
    tail_defect: float
    tail_concave: bool
    logconcave: bool
    rows: tuple[ReverseHolderRow, ...]

    @property
    def ok(self) -> bool:
        return all(r.flag_nplus1 is not False and r.flag_logconcave is not False for r in self.rows)


def _log_concave_flag(m: GridMeasure, tol: float) -> bool:
    try:
        return bool(is_log_concave(m, tol)[0])
    except MixedRepresentation:
        # an atom next to a nontrivial density is never log-concave
        return False


def reverse_holder_report(m: GridMeasure, n: int, p_list: Sequence[float],
                          tail_tol: float = 1e-4, lc_tol: float = 1e-8) -> ReverseHolderReport:
    """Reverse Hoelder ratios and the two flags:
    (n+1)-bound under nonnegative support with concave n-th root tail, and
    the log-concave envelope bound."""
    mm = m.normalized()
    lo, _ = _support(mm)
    nonneg = lo >= -1e-12
    defect = tail_root_defect(mm, n)
    tail_ok = defect <= tail_tol
    lc = _log_concave_flag(mm, lc_tol)
    base = tc_norms(mm, 1.0)
    rows = []
    for p in p_list:
        rec = tc_norms(mm, p)
        ratio = rec.uncentered / base.uncentered if base.uncentered > 0 else 0.0
        cratio = rec.centered / base.centered if base.centered > 0 else 0.0
        env = kk_envelope(p)
        f1 = (ratio <= n + 1 + 1e-9) if (nonneg and tail_ok) else None
        f2 = (max(ratio, cratio) <= env + 1e-9) if lc else None
        rows.append(ReverseHolderRow(p, rec.uncentered, rec.centered, ratio, cratio, env, f1, f2))
    return ReverseHolderReport(n, nonneg, defect, tail_ok, lc, tuple(rows))


# -- deformation to the normal cone ---------------------------------------------------------
@dataclass(frozen=True)
class NormalConeReport:
    data: DHData
    n: int
    epsilon: Fraction
    logconcave: bool
    p_list: tuple[float, ...]
    centered_ratios: tuple[float, ...]
    uncentered_ratios: tuple[float, ...]
    threshold: float

    @property
    def increasing(self) -> bool:
        r = self.centered_ratios
        return all(b > a for a, b in zip(r, r[1:]))

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n, "epsilon": str(self.epsilon), "k": self.data.k, "N_k": self.data.N_k,
            "logconcave": self.logconcave, "p": list(self.p_list),
            "centered_ratios": list(self.centered_ratios),
            "uncentered_ratios": list(self.uncentered_ratios), "threshold": self.threshold,
        })


def normal_cone_limit(n: int, epsilon: float, resolution: int = 2001) -> GridMeasure:
    """Density n s^{n-1} on [0, eps] plus an atom 1 - eps^n at eps."""
    eps = float(epsilon)
    s = np.linspace(0.0, eps, resolution)
    return GridMeasure(s, n * s ** (n - 1), ((eps, 1.0 - eps**n),))


def normal_cone_weights(n: int, epsilon, k: int, p_list: Sequence[float] = (1, 2, 3, 4, 8)) -> NormalConeReport:
    """Weight measure of the deformation of P^n to the normal cone of a fixed point.

    In the affine chart at the point, the degree-k sections are monomials of
    degree d <= k in n variables and d is the vanishing order.  The
    filtration by vanishing order, truncated at k*eps by the exceptional
    divisor, gives each such monomial the weight min(d, k eps).
    """
    if n < 2:
        raise DomainError("n must be >= 2")
    eps = _q(epsilon)
    if not 0 < eps < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    cap = k * eps
    if cap.denominator != 1:
        raise NonIntegralWeights(f"k * eps = {cap} must be an integer")
    cap = int(cap)
    weights: list[int] = []
    for d in range(k + 1):
        weights += [min(d, cap)] * math.comb(d + n - 1, n - 1)
    hist: dict[Fraction, int] = {}
    for w in weights:
        key = Fraction(w, k)
        hist[key] = hist.get(key, 0) + 1
    data = DHData(k, tuple(weights), _atomic(hist, len(weights)), normal_cone_limit(n, float(eps)))
    emp = data.empirical
    lc = _log_concave_flag(emp, 1e-10)
    n1 = tc_norms(emp, 1.0)
    cr, ur = [], []
    for p in p_list:
        rec = tc_norms(emp, p)
        cr.append(rec.centered / n1.centered)
        ur.append(rec.uncentered / n1.uncentered)
    return NormalConeReport(data, n, eps, lc, tuple(float(p) for p in p_list), tuple(cr), tuple(ur), n / (n - 1))
