"""Jensen radii of a weight.

M_r is the geometric mean of |m| on |z| = r.  Jensen's formula gives the
same number from the zeros:

    M_r = |c| r^N0 prod_{0 < |a_k| <= r} r/|a_k|,    m(z) = z^N0 (c + ...).

M_1 = sup_{r<1} M_r and M* is the geometric mean of the boundary modulus.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import MissingBoundaryData, PhaseAmbiguity, PreconditionError, ZerosUnavailable
from .series import eval_circle
from .weights import Weight

DEFAULT_R_GRID = (0.5, 0.9, 0.99, 0.999)
DEFAULT_K = 4096
MSTAR_K = 2**16
MAX_K = 2**20
QUAD_TOL = 1e-10
NUDGE = 1e-6

EXACT_ZERO_FREE = "exact-zero-free"
ZERO_PRODUCT = "zero-product"
SUP_OVER_GRID = "sup-over-grid"
EXTRAPOLATED = "extrapolated"
UNAVAILABLE = "unavailable"


def _samples(m: Weight, r: float, K: int, offset: float = 0.0) -> np.ndarray:
    t = 2 * np.pi * (np.arange(K) + offset) / K
    if m.func is not None:
        return m.func(r * np.exp(1j * t))
    if offset:
        raise PreconditionError("offset nodes need an exact evaluator")
    return eval_circle(m.series, r, K)


def _log_samples(m: Weight, r: float, K: int) -> np.ndarray:
    t = 2 * np.pi * np.arange(K) / K
    if m.log_abs is not None:
        return np.asarray(m.log_abs(r * np.exp(1j * t)), dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(eval_circle(m.series, r, K)))


def _near_zero_radius(m: Weight, r: float, gap: float = 1e-8) -> bool:
    if not m.zeros:
        return False
    return any(abs(abs(z) - r) < gap for z, _ in m.zeros)


@dataclass(frozen=True)
class QuadInfo:
    value: float
    r_used: float
    nodes: int
    nudged: bool
    converged: bool


def m_r_quadrature_info(m: Weight, r: float, K: int = DEFAULT_K, tol: float = QUAD_TOL,
                        max_nodes: int = MAX_K) -> QuadInfo:
    """Trapezoid mean of log|m| on |z| = r, doubling K until two values agree."""
    if not 0 < r < 1:
        raise PreconditionError("radius must lie in (0, 1)")
    nudged = False
    if _near_zero_radius(m, r):
        r = r + NUDGE if r + NUDGE < 1 else r - NUDGE
        nudged = True
    prev = None
    k = K
    while True:
        vals = _log_samples(m, r, k)
        if np.all(np.isneginf(vals)):
            raise PreconditionError("the weight vanishes on every sample")
        if np.any(np.isneginf(vals)):
            r = r + NUDGE if r + NUDGE < 1 else r - NUDGE
            nudged = True
            prev = None
            continue
        mean = float(np.mean(vals))
        if prev is not None and abs(mean - prev) <= tol * max(1.0, abs(mean)):
            return QuadInfo(math.exp(mean), r, k, nudged, True)
        if k >= max_nodes:
            return QuadInfo(math.exp(mean), r, k, nudged, False)
        prev = mean
        k *= 2


def m_r_quadrature(m: Weight, r: float, K: int = DEFAULT_K) -> float:
    return m_r_quadrature_info(m, r, K).value


def _vanishing_order(m: Weight) -> int:
    if m.zeros:
        for z, k in m.zeros:
            if z == 0:
                return int(k)
    return 0


def m_r_zeros(m: Weight, r: float) -> float:
    if m.zeros is None:
        raise ZerosUnavailable(f"no zero list for weight {m.name!r}")
    n0 = _vanishing_order(m)
    lead = abs(complex(m.series.coeffs[n0]))
    val = lead * r**n0
    for z, k in m.zeros:
        if z != 0 and abs(z) <= r:
            val *= (r / abs(z)) ** k
    return float(val)


def count_zeros(m: Weight, r: float, K: int = 1024, refinements: int = 3) -> int:
    """Winding number of m around |z| = r from phase increments.

    Adjacent samples whose phase differs by more than pi/2 trigger a doubling
    of K; after `refinements` doublings the count is declared ambiguous.
    """
    if not 0 < r < 1:
        raise PreconditionError("radius must lie in (0, 1)")
    k = K
    for _ in range(refinements + 1):
        v = _samples(m, r, k)
        mag = np.abs(v)
        if mag.min() <= 1e-14 * max(mag.max(), 1e-300):
            raise PhaseAmbiguity(f"weight (nearly) vanishes on |z| = {r}")
        steps = np.angle(np.roll(v, -1) / v)
        if np.max(np.abs(steps)) <= math.pi / 2:
            return int(round(float(np.sum(steps)) / (2 * math.pi)))
        k *= 2
    raise PhaseAmbiguity(f"phase jumps unresolved at K = {k // 2}")


def zero_count_inside(m: Weight, r: float) -> Optional[int]:
    if m.zeros is not None:
        return int(sum(k for z, k in m.zeros if abs(z) < r))
    try:
        return count_zeros(m, r)
    except PhaseAmbiguity:
        return None


def m_star(m: Weight, K: int = MSTAR_K) -> float:
    """Geometric mean of the boundary modulus on half-offset nodes."""
    if m.boundary_log is None and m.boundary_modulus is None:
        raise MissingBoundaryData(f"no boundary evaluator for weight {m.name!r}")
    t = 2 * np.pi * (np.arange(K) + 0.5) / K
    if m.boundary_log is not None:
        vals = np.asarray(m.boundary_log(t), dtype=float)
    else:
        with np.errstate(divide="ignore"):
            vals = np.log(np.asarray(m.boundary_modulus(t), dtype=float))
    if np.any(np.isneginf(vals)):
        raise PreconditionError("a boundary node hits a zero of the weight")
    return float(math.exp(np.mean(vals)))


@dataclass(frozen=True)
class M1Result:
    value: float
    method: str
    zero_free: Optional[bool]
    note: str = ""


def _zero_free_certificate(m: Weight, r_grid: Sequence[float]) -> Optional[bool]:
    """True when the disc is certified zero-free, False when a zero is seen."""
    if m.zeros is not None:
        return len(m.zeros) == 0
    try:
        for r in r_grid:
            if count_zeros(m, r) != 0:
                return False
            v = np.abs(_samples(m, r, 1024))
            n = np.arange(1, m.order)
            deriv = float(np.sum(n * np.abs(m.series.coeffs[1:]) * r ** (n - 1)))
            if v.min() <= math.pi * r / 1024 * deriv:
                return None
    except PhaseAmbiguity:
        return None
    return True


def _series_reliable(m: Weight, r: float, tol: float = 1e-8) -> bool:
    """Whether the truncated series represents m on |z| = r."""
    if m.func is not None:
        return True
    c = np.abs(m.series.coeffs)
    n = np.arange(c.size)
    half = c.size // 2
    with np.errstate(under="ignore"):
        tail = float(np.sum(c[half:] * r ** n[half:]))
        head = float(np.sum(c * r**n))
    return tail <= tol * max(head, 1e-300)


def m_one(m: Weight, r_grid: Sequence[float] = DEFAULT_R_GRID, K: int = DEFAULT_K,
          quad_values: Optional[dict] = None) -> M1Result:
    """M_1 = sup_{r<1} M_r with a method tag.

    Zero-free certificate: M_1 = |m(0)|.  A known finite zero list: the
    r -> 1 limit of the product formula.  Otherwise the grid sup, extended by
    Richardson extrapolation in h = 1 - r over the last two reliable radii;
    three successive growth ratios above 1.5 give +inf (heuristic).
    """
    grid = sorted(r_grid)
    zf = _zero_free_certificate(m, grid)
    if zf:
        return M1Result(abs(m.m0), EXACT_ZERO_FREE, True)
    if m.zeros is not None:
        n0 = _vanishing_order(m)
        val = abs(complex(m.series.coeffs[n0]))
        for z, k in m.zeros:
            if z != 0:
                val /= abs(z) ** k
        return M1Result(float(val), ZERO_PRODUCT, False)
    rows = []
    for r in grid:
        if not _series_reliable(m, r):
            continue
        v = quad_values[r] if quad_values and r in quad_values else m_r_quadrature(m, r, K)
        rows.append((r, v))
    if not rows:
        return M1Result(math.nan, UNAVAILABLE, zf, "no grid radius is resolved by the series")
    vals = [v for _, v in rows]
    ratios = [b / a for a, b in zip(vals, vals[1:]) if a > 0]
    run = 0
    for q in ratios:
        run = run + 1 if q > 1.5 else 0
        if run >= 3:
            return M1Result(math.inf, EXTRAPOLATED, zf, "grid growth suggests a divergent product")
    best = max(vals)
    if len(rows) >= 2:
        (r1, v1), (r2, v2) = rows[-2], rows[-1]
        h1, h2 = 1 - r1, 1 - r2
        extra = v2 + (v2 - v1) * h2 / (h1 - h2)
        if extra > best:
            return M1Result(float(extra), EXTRAPOLATED, zf, "Richardson in 1 - r")
    return M1Result(float(best), SUP_OVER_GRID, zf)


@dataclass
class JensenRow:
    r: float
    m_r_quad: float
    m_r_zeros: Optional[float]
    zero_count: Optional[int]
    nudged: bool = False
    reliable: bool = True


@dataclass
class JensenProfile:
    rows: List[JensenRow]
    m1: float
    m1_method: str
    zero_free: Optional[bool]
    mstar: Optional[float]
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rows": [{"r": x.r, "M_r_quad": x.m_r_quad, "M_r_zeros": x.m_r_zeros,
                      "zero_count": x.zero_count, "nudged": x.nudged, "reliable": x.reliable}
                     for x in self.rows],
            "M1": self.m1, "M1_method": self.m1_method, "zero_free": self.zero_free,
            "Mstar": self.mstar, "notes": list(self.notes),
        }

    def csv_rows(self) -> list:
        out = [["r", "M_r_quad", "M_r_zeros", "zero_count"]]
        for x in self.rows:
            out.append([repr(x.r), repr(x.m_r_quad), "" if x.m_r_zeros is None else repr(x.m_r_zeros),
                        "" if x.zero_count is None else str(x.zero_count)])
        return out


def jensen_profile(m: Weight, r_grid: Sequence[float] = DEFAULT_R_GRID, K: int = DEFAULT_K,
                   mstar: bool = True, mstar_K: int = MSTAR_K, threads: int = 1) -> JensenProfile:
    """Rows of M_r by both routes, M_1 and (when boundary data exist) M*."""
    grid = sorted(float(r) for r in r_grid)

    def row(r):
        info = m_r_quadrature_info(m, r, K)
        mz = m_r_zeros(m, info.r_used) if m.zeros is not None else None
        return JensenRow(r, info.value, mz, zero_count_inside(m, info.r_used), info.nudged,
                         _series_reliable(m, r))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, grid))
    else:
        rows = [row(r) for r in grid]
    res = m_one(m, grid, K, quad_values={x.r: x.m_r_quad for x in rows})
    notes = []
    if res.note:
        notes.append(res.note)
    ms = None
    if mstar:
        if m.boundary_log is not None or m.boundary_modulus is not None:
            ms = m_star(m, mstar_K)
        else:
            notes.append("M* absent: no boundary evaluator")
    if any(not x.reliable for x in rows):
        notes.append("some radii are not resolved by the truncated series")
    return JensenProfile(rows, res.value, res.method, res.zero_free, ms, notes)
