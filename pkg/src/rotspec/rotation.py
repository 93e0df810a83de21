"""Rotation numbers: periodic p/q or aperiodic xi held in fixed point.

An aperiodic xi is stored as the integer X = floor(xi * 2**prec).  Then
frac(k*xi) = ((k*X) mod 2**prec) / 2**prec up to k * 2**-prec, which keeps
beta**k accurate to double precision far beyond k = 10**6.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import mpmath
import numpy as np

from .errors import PrecisionExhausted, PreconditionError

log = logging.getLogger(__name__)

DEFAULT_PREC = 256
DEFAULT_Q_CHECK = 10**6
HUGE_QUOTIENT_BITS = 32
NAMED_XI = {
    "golden": lambda: (mpmath.sqrt(5) - 1) / 2,
    "sqrt2m1": lambda: mpmath.sqrt(2) - 1,
}

_QUARTER = {0.0: 1 + 0j, 0.25: 1j, 0.5: -1 + 0j, 0.75: -1j}


def _unit(fracs: np.ndarray) -> np.ndarray:
    """e^{2 pi i x}, exact at quarter turns."""
    out = np.exp(2j * np.pi * fracs)
    for x, v in _QUARTER.items():
        out[fracs == x] = v
    return out


@dataclass(frozen=True)
class DiophantineParams:
    tau: float
    gamma: float
    q_check: int
    argmin_q: int


@dataclass(frozen=True, eq=False)
class Rotation:
    """beta = e^{2 pi i p/q} (periodic) or e^{2 pi i xi} (aperiodic)."""

    kind: str
    p: int = 0
    q: int = 0
    xi_fixed: int = 0
    prec: int = DEFAULT_PREC
    label: str = ""
    dioph: Optional[DiophantineParams] = None
    limited_precision: bool = False
    warnings: tuple = field(default_factory=tuple)

    # constructors
    @classmethod
    def periodic(cls, p: int, q: int) -> "Rotation":
        if q < 2 or not 0 < p < q:
            raise PreconditionError("periodic rotation needs 0 < p < q, q >= 2")
        if math.gcd(p, q) != 1:
            raise PreconditionError(f"{p}/{q} is not in lowest terms")
        return cls("periodic", p=p, q=q, label=f"{p}/{q}")

    @classmethod
    def aperiodic(cls, xi: Union[str, float, "mpmath.mpf"], tau: Optional[float] = None,
                  q_check: int = DEFAULT_Q_CHECK, prec: int = DEFAULT_PREC) -> "Rotation":
        label = xi if isinstance(xi, str) else repr(xi)
        with mpmath.workprec(prec + 64):
            if isinstance(xi, str) and xi in NAMED_XI:
                val = NAMED_XI[xi]()
            else:
                val = mpmath.mpf(xi)
            if not 0 < val < 1:
                raise PreconditionError("xi must lie in (0, 1)")
            fixed = int(mpmath.floor(val * mpmath.mpf(2) ** prec))
        warnings = []
        cf = continued_fraction_fixed(fixed, prec, depth=64)
        if cf.rational:
            msg = f"xi = {label} looks rational or near-rational: {cf.warnings}"
            log.warning(msg)
            warnings.append(msg)
        dioph = None
        if tau is not None:
            dioph = estimate_gamma_fixed(fixed, prec, float(tau), q_check)
            if dioph.gamma <= 0:
                raise PreconditionError("no positive gamma found; xi is not diophantine here")
        return cls("aperiodic", xi_fixed=fixed, prec=prec, label=label, dioph=dioph,
                   warnings=tuple(warnings))

    @classmethod
    def parse(cls, text: str, tau: Optional[float] = None,
              q_check: int = DEFAULT_Q_CHECK) -> "Rotation":
        """'p/q' gives a periodic rotation, anything else an aperiodic xi."""
        text = text.strip()
        if "/" in text:
            a, b = text.split("/", 1)
            return cls.periodic(int(a), int(b))
        return cls.aperiodic(text, tau=tau, q_check=q_check)

    @classmethod
    def from_complex(cls, beta: complex, max_q: int = 64, tol: float = 1e-12) -> "Rotation":
        """Rotation from a double-precision unit complex.

        Roots of unity of order <= max_q are recognised; otherwise the angle is
        taken as an aperiodic xi with only 53 significant bits.
        """
        beta = complex(beta)
        if abs(abs(beta) - 1) > 1e-9:
            raise PreconditionError("rotation parameter is not unimodular")
        x = (math.atan2(beta.imag, beta.real) / (2 * math.pi)) % 1.0
        for q in range(1, max_q + 1):
            p = round(x * q)
            if abs(x * q - p) <= tol * q:
                p %= q
                if p == 0:
                    raise PreconditionError("beta = 1 is not a rotation of the disc")
                g = math.gcd(p, q)
                return cls.periodic(p // g, q // g)
        rot = cls.aperiodic(repr(x))
        return cls("aperiodic", xi_fixed=rot.xi_fixed, prec=rot.prec, label=repr(x),
                   limited_precision=True, warnings=rot.warnings)

    # queries
    @property
    def is_periodic(self) -> bool:
        return self.kind == "periodic"

    @property
    def key(self) -> tuple:
        if self.is_periodic:
            return ("P", self.p, self.q)
        return ("A", self.xi_fixed, self.prec)

    @property
    def xi(self):
        if self.is_periodic:
            return Fraction(self.p, self.q)
        with mpmath.workprec(self.prec + 8):
            return mpmath.mpf(self.xi_fixed) / mpmath.mpf(2) ** self.prec

    @property
    def beta(self) -> complex:
        return beta_power(self, 1)

    def fractions(self, ks) -> np.ndarray:
        """frac(k*xi) for nonnegative integers k, as doubles."""
        ks = np.asarray(ks, dtype=np.int64)
        if np.any(ks < 0):
            raise PreconditionError("powers need k >= 0")
        if self.is_periodic:
            return ((ks * self.p) % self.q) / self.q
        return _fixed_fracs(self.xi_fixed, self.prec, ks.ravel()).reshape(ks.shape)

    def powers(self, n: int) -> np.ndarray:
        """beta**k for k = 0..n-1 (read-only, cached)."""
        return _power_table(self.key, n)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "label": self.label}
        if self.is_periodic:
            d.update(p=self.p, q=self.q)
        else:
            d.update(xi=mpmath.nstr(self.xi, 30), prec_bits=self.prec,
                     limited_precision=self.limited_precision)
            if self.dioph is not None:
                d["diophantine"] = {"tau": self.dioph.tau, "gamma": self.dioph.gamma,
                                    "q_check": self.dioph.q_check, "argmin_q": self.dioph.argmin_q}
        if self.warnings:
            d["warnings"] = list(self.warnings)
        return d


def _fixed_fracs(fixed: int, prec: int, ks: np.ndarray) -> np.ndarray:
    mask = (1 << prec) - 1
    shift = prec - 64
    scale = 2.0**-64
    return np.fromiter((float(((int(k) * fixed) & mask) >> shift) * scale for k in ks),
                       dtype=np.float64, count=ks.size)


@lru_cache(maxsize=64)
def _power_table(key: tuple, n: int) -> np.ndarray:
    ks = np.arange(n, dtype=np.int64)
    if key[0] == "P":
        fr = ((ks * key[1]) % key[2]) / key[2]
    else:
        fr = _fixed_fracs(key[1], key[2], ks)
    out = _unit(fr)
    out.setflags(write=False)
    return out


def beta_power(rot: Rotation, k: int) -> complex:
    if k < 0:
        raise PreconditionError("beta_power needs k >= 0")
    return complex(_unit(rot.fractions(np.array([k])))[0])


def beta_powers(rot: Rotation, ks) -> np.ndarray:
    return _unit(rot.fractions(ks))


# continued fractions

@dataclass(frozen=True)
class ContinuedFraction:
    quotients: list
    convergents: list
    rational: bool
    exhausted: bool
    achieved_depth: int
    warnings: list


def _cf_exact(num: int, den: int, depth: int) -> list:
    out = []
    while den and len(out) < depth:
        a, rem = divmod(num, den)
        out.append(a)
        num, den = den, rem
    return out


def _convergents(quotients: Sequence[int]) -> list:
    p2, p1 = 0, 1
    q2, q1 = 1, 0
    out = []
    for a in quotients:
        p2, p1 = p1, a * p1 + p2
        q2, q1 = q1, a * q1 + q2
        out.append((p1, q1))
    return out


def continued_fraction_fixed(fixed: int, prec: int, depth: int = 64) -> ContinuedFraction:
    """CF of xi known only to lie in [X/2^prec, (X+1)/2^prec).

    Partial quotients are kept while both interval ends agree, so every
    reported quotient is certain.
    """
    if depth > 64:
        raise PreconditionError("depth is limited to 64")
    lo = _cf_exact(fixed, 1 << prec, depth + 1)
    hi = _cf_exact(fixed + 1, 1 << prec, depth + 1)
    common = []
    for a, b in zip(lo, hi):
        if a != b:
            break
        common.append(a)
    quotients = common[:depth]
    warnings = []
    rational = False
    exhausted = len(quotients) < depth
    nxt = min(lo[len(common)] if len(lo) > len(common) else 0,
              hi[len(common)] if len(hi) > len(common) else 0)
    if exhausted and nxt.bit_length() > HUGE_QUOTIENT_BITS:
        rational = True
        warnings.append(f"partial quotient of {nxt.bit_length()} bits after depth {len(common)}")
    if not rational:
        big = [a for a in quotients[1:] if a.bit_length() > HUGE_QUOTIENT_BITS]
        if big:
            rational = True
            warnings.append("huge partial quotient")
    return ContinuedFraction(quotients, _convergents(quotients), rational, exhausted,
                             len(quotients), warnings)


def continued_fraction(xi, depth: int = 64, prec: int = DEFAULT_PREC,
                       strict: bool = False) -> ContinuedFraction:
    """CF expansion of xi (Fraction, name, decimal string or mpf)."""
    if depth > 64:
        raise PreconditionError("depth is limited to 64")
    if isinstance(xi, Rotation):
        if xi.is_periodic:
            xi = Fraction(xi.p, xi.q)
        else:
            prec = xi.prec
            xi = xi.xi_fixed
            res = continued_fraction_fixed(xi, prec, depth)
            if strict and res.exhausted and not res.rational:
                raise PrecisionExhausted(res.achieved_depth)
            return res
    if isinstance(xi, Fraction):
        q = _cf_exact(xi.numerator, xi.denominator, depth)
        rational = len(q) < depth or xi.denominator == 1
        return ContinuedFraction(q, _convergents(q), True, False, len(q),
                                 ["terminates: rational input"] if rational else [])
    with mpmath.workprec(prec + 64):
        val = NAMED_XI[xi]() if isinstance(xi, str) and xi in NAMED_XI else mpmath.mpf(xi)
        fixed = int(mpmath.floor(val * mpmath.mpf(2) ** prec))
    res = continued_fraction_fixed(fixed, prec, depth)
    if strict and res.exhausted and not res.rational:
        raise PrecisionExhausted(res.achieved_depth)
    return res


# diophantine quality

@lru_cache(maxsize=16)
def estimate_gamma_fixed(fixed: int, prec: int, tau: float, q_check: int) -> DiophantineParams:
    """Empirical gamma = min over q <= q_check of q^(tau-1) * dist(q*xi, Z).

    This is the largest gamma with |xi - p/q| >= gamma q^-tau for all checked q.
    """
    if tau <= 2:
        raise PreconditionError("tau must exceed 2")
    mod = 1 << prec
    mask = mod - 1
    half = mod >> 1
    acc = 0
    dists = np.empty(q_check, dtype=np.float64)
    inv = 2.0**-prec
    for i in range(q_check):
        acc = (acc + fixed) & mask
        d = acc if acc <= half else mod - acc
        dists[i] = float(d) * inv
    qs = np.arange(1, q_check + 1, dtype=np.float64)
    vals = qs ** (tau - 1) * dists
    j = int(np.argmin(vals))
    return DiophantineParams(tau=tau, gamma=float(vals[j]), q_check=q_check, argmin_q=j + 1)


@dataclass
class DiophantineReport:
    lam: complex
    r: Fraction
    convergents: list
    gamma_hat: Optional[float]
    tau: Optional[float]
    inverse_distances: np.ndarray
    growth_roots: np.ndarray
    bound_constant: Optional[float]
    violations: list
    max_root: float
    argmax_root: int
    tail_max_root: float

    def to_dict(self, full: bool = False) -> dict:
        d = {
            "lambda": [self.lam.real, self.lam.imag],
            "r": f"{self.r.numerator}/{self.r.denominator}",
            "convergents": [[int(p), int(q)] for p, q in self.convergents],
            "gamma_hat": self.gamma_hat,
            "tau": self.tau,
            "bound_constant": self.bound_constant,
            "violations": list(self.violations),
            "K": int(self.inverse_distances.size),
            "max_root": self.max_root,
            "argmax_root": self.argmax_root,
            "tail_max_root": self.tail_max_root,
            "max_inverse_distance": float(self.inverse_distances.max()),
        }
        if full:
            d["inverse_distances"] = self.inverse_distances.tolist()
            d["growth_roots"] = self.growth_roots.tolist()
        return d


def resolvent_growth(rot: Rotation, r, K: int, cf_depth: int = 24) -> DiophantineReport:
    """1/|beta^k - lambda| for k = 1..K with lambda = e^{2 pi i r}, r rational.

    With diophantine parameters the bound (q0^tau / (4 gamma)) k^(tau-1) is
    checked at every k; the check needs gamma valid for q up to K*q0.
    """
    if rot.is_periodic:
        raise PreconditionError("growth is unbounded for periodic rotations")
    if K < 1 or K > 10**6:
        raise PreconditionError("K must lie in [1, 10**6]")
    r = Fraction(r)
    r = r - math.floor(r)
    if r == 0:
        raise PreconditionError("lambda = 1 is excluded")
    p0, q0 = r.numerator, r.denominator
    prec = rot.prec
    mod = q0 << prec
    mask = (1 << prec) - 1
    shift_p = p0 << prec
    half = mod >> 1
    dist = np.empty(K, dtype=np.float64)
    fmod = float(mod)
    acc = 0
    for i in range(K):
        acc = (acc + rot.xi_fixed) & mask
        t = (acc * q0 - shift_p) % mod
        d = t if t <= half else mod - t
        dist[i] = float(d) / fmod
    chord = 2.0 * np.sin(np.pi * dist)
    with np.errstate(divide="ignore"):
        inv = 1.0 / chord
    ks = np.arange(1, K + 1, dtype=np.float64)
    roots = inv ** (1.0 / ks)
    lam = complex(np.exp(2j * np.pi * float(r)))
    bound_c = None
    violations: list = []
    gamma = tau = None
    if rot.dioph is not None:
        gamma, tau = rot.dioph.gamma, rot.dioph.tau
        if K * q0 > rot.dioph.q_check:
            log.warning("gamma verified only up to q = %d < K*q0 = %d", rot.dioph.q_check, K * q0)
        bound_c = q0**tau / (4.0 * gamma)
        bound = bound_c * ks ** (tau - 1)
        violations = (np.nonzero(inv > bound * (1 + 1e-12))[0] + 1).tolist()
    cf = continued_fraction_fixed(rot.xi_fixed, prec, cf_depth)
    j = int(np.argmax(roots))
    tail = roots[K // 2:] if K >= 2 else roots
    return DiophantineReport(lam=lam, r=r, convergents=cf.convergents, gamma_hat=gamma, tau=tau,
                             inverse_distances=inv, growth_roots=roots, bound_constant=bound_c,
                             violations=violations, max_root=float(roots[j]), argmax_root=j + 1,
                             tail_max_root=float(tail.max()))


def check_g_condition(rot: Optional[Rotation], g: Union[Callable, Sequence[float]], q0: int,
                      kmax: int = 1000, band: float = 0.05) -> tuple:
    """Empirical liminf of g(q0*k)^(1/k) over the tail window k in [kmax/2, kmax].

    `g` is a callable on integer arrays or a table indexed by q.  Returns
    (verdict, evidence) with verdict true when the estimate is >= 1 - band.
    """
    ks = np.arange(1, kmax + 1)
    qs = q0 * ks
    if callable(g):
        vals = np.asarray(g(qs), dtype=float)
    else:
        table = np.asarray(g, dtype=float)
        if table.size <= qs[-1]:
            raise PreconditionError("g table does not cover q0*kmax")
        vals = table[qs]
    if np.any(vals < 0):
        raise PreconditionError("g must be nonnegative")
    with np.errstate(divide="ignore"):
        logs = np.log(vals) / ks
    roots = np.exp(logs)
    lo = kmax // 2
    est = float(roots[lo:].min())
    evidence = {"liminf_estimate": est, "window": [int(lo + 1), int(kmax)], "q0": q0,
                "band": band, "rotation": rot.label if rot is not None else None}
    return est >= 1 - band, evidence
