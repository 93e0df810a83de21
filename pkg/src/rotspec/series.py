"""Truncated power series in complex double precision.

A TruncatedSeries holds the Taylor coefficients c_0..c_{N-1} of a function
holomorphic near 0.  Values are immutable; every operation returns a new
series and never changes the order silently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import (NonFiniteCoefficient, NonUnimodular, OrderMismatch,
                     PreconditionError, SeriesOverflow, ZeroConstantTerm)

DEFAULT_ORDER = 256
MAX_ORDER = 8192
ZERO_FLOOR = 1e-300
RADIUS_FLOOR = 1e-280
RADIUS_BAND = 0.05
MIN_FIT_POINTS = 8
UNIT_TOL = 1e-12

CONVERGENT = "Convergent"
DIVERGENT = "Divergent"
BORDERLINE = "Borderline"


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    """Coefficients c_0..c_{N-1}; order N is the array length."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128).ravel()
        if c.size < 1:
            raise PreconditionError("a series needs order >= 1")
        if not np.all(np.isfinite(c)):
            raise NonFiniteCoefficient("series has a non-finite coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # constructors
    @classmethod
    def zeros(cls, order: int) -> "TruncatedSeries":
        return cls(np.zeros(order, dtype=complex))

    @classmethod
    def constant(cls, value: complex, order: int) -> "TruncatedSeries":
        c = np.zeros(order, dtype=complex)
        c[0] = value
        return cls(c)

    @classmethod
    def monomial(cls, k: int, order: int, value: complex = 1.0) -> "TruncatedSeries":
        if not 0 <= k < order:
            raise PreconditionError(f"monomial degree {k} outside order {order}")
        c = np.zeros(order, dtype=complex)
        c[k] = value
        return cls(c)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]], order: Optional[int] = None) -> "TruncatedSeries":
        """Build from [re, im] pairs; pads with zeros up to `order`."""
        c = [complex(p[0], p[1]) for p in pairs]
        if order is not None:
            if len(c) > order:
                raise OrderMismatch(f"{len(c)} coefficients exceed order {order}")
            c = c + [0j] * (order - len(c))
        return cls(np.array(c, dtype=complex))

    def to_pairs(self) -> list:
        return [[float(z.real), float(z.imag)] for z in self.coeffs]

    # basic protocol
    @property
    def order(self) -> int:
        return int(self.coeffs.size)

    def __len__(self):
        return self.order

    def __getitem__(self, idx):
        return self.coeffs[idx]

    def __repr__(self):
        head = ", ".join(f"{z:.4g}" for z in self.coeffs[:4])
        more = ", ..." if self.order > 4 else ""
        return f"TruncatedSeries(N={self.order}, [{head}{more}])"

    def __call__(self, z):
        return evaluate(self, z)

    def truncate(self, order: int) -> "TruncatedSeries":
        if not 1 <= order <= self.order:
            raise PreconditionError(f"cannot truncate order {self.order} to {order}")
        return TruncatedSeries(self.coeffs[:order])

    def pad(self, order: int) -> "TruncatedSeries":
        if order < self.order:
            raise PreconditionError("pad cannot shrink a series")
        c = np.zeros(order, dtype=complex)
        c[: self.order] = self.coeffs
        return TruncatedSeries(c)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    # operators
    def __add__(self, other):
        if isinstance(other, TruncatedSeries):
            return add(self, other)
        return add(self, TruncatedSeries.constant(other, self.order))

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__


def _pair(f: TruncatedSeries, g: TruncatedSeries, retruncate: bool):
    if f.order == g.order:
        return f.coeffs, g.coeffs
    if not retruncate:
        raise OrderMismatch(f"orders differ: {f.order} vs {g.order}")
    n = min(f.order, g.order)
    return f.coeffs[:n], g.coeffs[:n]


def add(f: TruncatedSeries, g: TruncatedSeries, retruncate: bool = False) -> TruncatedSeries:
    a, b = _pair(f, g, retruncate)
    return TruncatedSeries(a + b)


def scale(f: TruncatedSeries, c: complex) -> TruncatedSeries:
    return TruncatedSeries(f.coeffs * complex(c))


def mul(f: TruncatedSeries, g: TruncatedSeries, retruncate: bool = False) -> TruncatedSeries:
    """Cauchy product truncated to the common order."""
    a, b = _pair(f, g, retruncate)
    n = a.size
    return TruncatedSeries(np.convolve(a, b)[:n])


def exp_series(f: TruncatedSeries) -> TruncatedSeries:
    """Formal exponential via n*g_n = sum_{k=1..n} k*f_k*g_{n-k}."""
    c = f.coeffs
    n_tot = c.size
    if c[0].real > 709.0:
        raise SeriesOverflow(f"exp of constant term overflows (Re f_0 = {c[0].real:.6g})")
    g = np.zeros(n_tot, dtype=complex)
    g[0] = np.exp(c[0])
    kf = np.arange(n_tot) * c
    for n in range(1, n_tot):
        g[n] = np.dot(kf[1 : n + 1], g[n - 1 :: -1]) / n
        if not np.isfinite(g[n]):
            raise SeriesOverflow(f"exp series overflows at index {n}")
    return TruncatedSeries(g)


def log_series(f: TruncatedSeries, zero_floor: float = ZERO_FLOOR) -> TruncatedSeries:
    """Formal logarithm with the principal branch at the constant term."""
    c = f.coeffs
    f0 = c[0]
    if abs(f0) <= zero_floor:
        raise ZeroConstantTerm("constant term vanishes; log undefined")
    n_tot = c.size
    g = np.zeros(n_tot, dtype=complex)
    g[0] = np.log(f0)
    kg = np.zeros(n_tot, dtype=complex)
    for n in range(1, n_tot):
        acc = np.dot(kg[1:n], c[n - 1 : 0 : -1]) if n > 1 else 0.0
        g[n] = (c[n] - acc / n) / f0
        kg[n] = n * g[n]
        if not np.isfinite(g[n]):
            raise SeriesOverflow(f"log series overflows at index {n}")
    return TruncatedSeries(g)


def rotation_powers(beta: complex, order: int) -> np.ndarray:
    beta = complex(beta)
    if abs(abs(beta) - 1.0) > UNIT_TOL:
        raise NonUnimodular(f"|beta| = {abs(beta)!r} is not 1")
    return np.exp(1j * math.atan2(beta.imag, beta.real) * np.arange(order))


def compose_rotation(f: TruncatedSeries, beta) -> TruncatedSeries:
    """f(beta z).  `beta` is a unit complex or a precomputed array of powers."""
    if np.ndim(beta) == 0:
        powers = rotation_powers(beta, f.order)
    else:
        powers = np.asarray(beta, dtype=complex)
        if powers.size < f.order:
            raise OrderMismatch("power table shorter than the series")
        powers = powers[: f.order]
    return TruncatedSeries(f.coeffs * powers)


def mobius_series(alpha: complex, order: int) -> TruncatedSeries:
    """Taylor coefficients of (alpha - z)/(1 - conj(alpha) z)."""
    alpha = complex(alpha)
    if abs(alpha) >= 1:
        raise PreconditionError("|alpha| must be < 1")
    c = np.zeros(order, dtype=complex)
    c[0] = alpha
    if order > 1:
        ac = alpha.conjugate()
        k = np.arange(1, order)
        with np.errstate(under="ignore"):
            c[1:] = ac ** (k - 1) * (abs(alpha) ** 2 - 1)
    return TruncatedSeries(c)


def compose_mobius(f: TruncatedSeries, alpha: complex) -> TruncatedSeries:
    """Coefficients of f(Psi_alpha(z)) by Horner's scheme.

    Multiplying a truncated series h by the truncated expansion of Psi_alpha
    equals (alpha*h - z*h) / (1 - conj(alpha) z) truncated, so each Horner
    step is an O(N) filter instead of a full convolution.
    """
    alpha = complex(alpha)
    if abs(alpha) >= 1:
        raise PreconditionError("|alpha| must be < 1")
    c = f.coeffs
    n = c.size
    den = [1.0, -alpha.conjugate()]
    acc = np.zeros(n, dtype=complex)
    acc[0] = c[-1]
    for k in range(n - 2, -1, -1):
        num = alpha * acc
        num[1:] -= acc[:-1]
        acc = lfilter([1.0], den, num)
        acc[0] += c[k]
    return TruncatedSeries(acc)


def shift_up(f: TruncatedSeries) -> TruncatedSeries:
    """Multiply by z; the order grows by one."""
    return TruncatedSeries(np.concatenate(([0j], f.coeffs)))


def shift_down(f: TruncatedSeries, zero_floor: float = ZERO_FLOOR) -> TruncatedSeries:
    """Divide by z; requires f(0) = 0 and order >= 2."""
    if abs(f.coeffs[0]) > zero_floor:
        raise PreconditionError("shift_down needs a vanishing constant term")
    if f.order < 2:
        raise PreconditionError("shift_down needs order >= 2")
    return TruncatedSeries(f.coeffs[1:])


def evaluate(f: TruncatedSeries, z):
    """Horner evaluation at points of the open unit disc."""
    zz = np.asarray(z, dtype=complex)
    if np.any(np.abs(zz) >= 1):
        raise PreconditionError("evaluation point outside the open unit disc")
    out = np.zeros_like(zz)
    for c in f.coeffs[::-1]:
        out = out * zz + c
    return complex(out) if out.ndim == 0 else out


def _check_nodes(K: int):
    if K < 1 or K & (K - 1):
        raise PreconditionError(f"K = {K} is not a power of two")


def eval_circle(f: TruncatedSeries, r: float, K: int) -> np.ndarray:
    """Samples f(r e^{2 pi i j/K}) for j = 0..K-1 via an aliased inverse FFT."""
    _check_nodes(K)
    if not 0 < r < 1:
        raise PreconditionError("radius must lie in (0, 1)")
    n = np.arange(f.order)
    with np.errstate(under="ignore"):
        scaled = f.coeffs * r**n
    folded = np.zeros(K, dtype=complex)
    np.add.at(folded, n % K, scaled)
    return np.fft.ifft(folded) * K


@dataclass(frozen=True)
class RadiusEstimate:
    value: float
    slope_window: tuple
    confidence: str
    reason: str = ""

    def to_dict(self) -> dict:
        return {"value": self.value, "slope_window": list(self.slope_window),
                "confidence": self.confidence, "reason": self.reason}


def classify_radius(value: float, band: float = RADIUS_BAND) -> str:
    if abs(value - 1.0) <= band:
        return BORDERLINE
    return CONVERGENT if value > 1.0 else DIVERGENT


def radius_estimate(f, window: Optional[tuple] = None, floor: float = RADIUS_FLOOR,
                    band: float = RADIUS_BAND, min_points: int = MIN_FIT_POINTS) -> RadiusEstimate:
    """Least-squares fit of log|a_n| against n; radius = exp(-slope).

    Default window is the last half of the index range.  If that window holds
    too few coefficients above `floor` (sparse, lacunary input), the fit falls
    back to the whole range [1, N) before giving up.
    """
    c = f.coeffs if isinstance(f, TruncatedSeries) else np.asarray(f, dtype=complex)
    n_tot = c.size
    explicit = window is not None
    lo, hi = window if explicit else (n_tot // 2, n_tot)
    if not 0 <= lo < hi <= n_tot:
        raise PreconditionError(f"window {(lo, hi)} outside [0, {n_tot})")
    mags = np.abs(c)

    def usable(a, b):
        idx = np.arange(a, b)
        return idx[mags[a:b] >= floor]

    idx = usable(lo, hi)
    if idx.size == 0:
        return RadiusEstimate(math.inf, (lo, hi), CONVERGENT, "tail below floor")
    if idx.size < min_points and not explicit:
        lo2 = 1 if n_tot > 1 else 0
        idx2 = usable(lo2, n_tot)
        if idx2.size >= min_points:
            lo, hi, idx = lo2, n_tot, idx2
    short = idx.size < min_points
    if idx.size < 2:
        return RadiusEstimate(1.0, (lo, hi), BORDERLINE,
                              f"window too short ({idx.size} usable points)")
    x = idx.astype(float)
    y = np.log(mags[idx])
    slope = float(np.polyfit(x, y, 1)[0])
    value = math.exp(-slope) if -slope < 700 else math.inf
    if short:
        return RadiusEstimate(value, (lo, hi), BORDERLINE,
                              f"window too short ({idx.size} usable points)")
    return RadiusEstimate(value, (lo, hi), classify_radius(value, band))
