"""Pointwise spectral classification of T f(z) = m(z) f(beta z).

Decision tree:

* periodic beta of order q: lambda is spectral iff lambda^q lies in
  m_q(D), tested by the winding number of m_q - lambda^q around a circle of
  radius 1 - eps.  When log m has no coefficients on multiples of q, m_q is
  constant and the spectrum is the q points m(0) beta^k, all eigenvalues.
* aperiodic beta, zero-free m: the Waelbroeck spectrum is the circle
  |lambda| = |m(0)|; the points m(0) beta^n are always spectral and are
  eigenvalues when a_n/(1 - beta^n) has no geometric growth.
* aperiodic beta, m with a zero: the Waelbroeck spectrum is the closed disc
  of radius M_1; interior points are upgraded to spectral when a resolvent
  probe diverges.
* constant m = c with diophantine xi: c e^{2 pi i r} for rational r is a
  resolvent point that is not in the Waelbroeck resolvent set.

Points too close to a threshold are reported as Undetermined.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import PhaseAmbiguity, PreconditionError, SpectralError, ZeroConstantTerm
from .jensen import DEFAULT_R_GRID, EXACT_ZERO_FREE, UNAVAILABLE, JensenProfile, jensen_profile
from .operator import OperatorHandle
from .resolvent import OUTSIDE_HOL, eigen_periodic, eigenfunction, solve_many
from .rotation import Rotation
from .series import (BORDERLINE, CONVERGENT, DIVERGENT, RadiusEstimate, TruncatedSeries,
                     log_series, radius_estimate)
from .weights import Weight

EIGENVALUE = "Eigenvalue"
IN_SPECTRUM = "InSpectrum"
IN_WAELBROECK = "InWaelbroeckSpectrum_NotKnownInSpectrum"
WAELBROECK_RESOLVENT = "WaelbroeckResolvent"
RESOLVENT_NOT_WAELBROECK = "Resolvent_NotWaelbroeck"
UNDETERMINED = "Undetermined"
CLASSES = (EIGENVALUE, IN_SPECTRUM, IN_WAELBROECK, WAELBROECK_RESOLVENT,
           RESOLVENT_NOT_WAELBROECK, UNDETERMINED)
CODES = {c: i for i, c in enumerate(CLASSES)}


@dataclass(frozen=True)
class ClassifierConfig:
    band_abs: float = 1e-3
    band_rel: float = 0.02
    snap_tol: float = 1e-9
    pole_tol: float = 1e-9
    eps_periodic: float = 1e-3
    periodic_nodes: int = 4096
    quad_k: int = 4096
    r_grid: tuple = DEFAULT_R_GRID
    eigen_tol: float = 1e-9
    probe: bool = True
    probe_basis: tuple = (0, 1)
    constant_tol: float = 1e-14
    rational_qmax: int = 1000
    structural_tol: float = 1e-10

    def band(self, radius: float) -> float:
        return max(self.band_abs, self.band_rel * radius)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class SpectralVerdict:
    lam: complex
    cls: str
    rule: str
    certificate: dict = field(default_factory=dict)

    @property
    def code(self) -> int:
        return CODES[self.cls]

    @property
    def scalar(self) -> float:
        c = self.certificate
        for key in ("eigen_residual", "radius", "margin", "distance"):
            if key in c and isinstance(c[key], (int, float)):
                return float(c[key])
        return math.nan

    def to_dict(self) -> dict:
        return {"lambda": [self.lam.real, self.lam.imag], "class": self.cls, "code": self.code,
                "rule": self.rule, "certificate": self.certificate}


# criteria on the logarithm of the weight

def _weight_and_rotation(m, rot):
    if isinstance(m, OperatorHandle):
        return m.weight, m.rotation
    if rot is None:
        raise PreconditionError("a rotation is required")
    return m, rot


def log_weight(T: OperatorHandle) -> TruncatedSeries:
    """m_1 with m = exp(m_1): exact when the weight was built from it."""
    w = T.weight
    if w.log_coeffs is not None and w.log_coeffs.order == T.order:
        return w.log_coeffs
    return log_series(T.m)


def structural_test_periodic(m: Union[Weight, TruncatedSeries], q: int, tol: float = 1e-10) -> bool:
    """True iff log m has (numerically) no coefficients at indices q, 2q, ... < N."""
    if isinstance(m, Weight):
        series, logc = m.series, m.log_coeffs
    else:
        series, logc = m, None
    try:
        a = logc.coeffs if logc is not None else log_series(series).coeffs
    except ZeroConstantTerm:
        return False
    idx = np.arange(q, a.size, q)
    return bool(np.all(np.abs(a[idx]) < tol)) if idx.size else True


def condition_31(m, rot: Optional[Rotation] = None) -> RadiusEstimate:
    """Radius of sum_n a_n/(1 - beta^n) z^n where m = exp(sum_n a_n z^n)."""
    w, rot = _weight_and_rotation(m, rot)
    if rot.is_periodic:
        raise PreconditionError("the coefficient condition is for aperiodic rotations")
    T = m if isinstance(m, OperatorHandle) else OperatorHandle(w, rot, w.order)
    a = log_weight(T).coeffs
    c = np.zeros(T.order, dtype=complex)
    c[1:] = a[1:] / (1.0 - T.powers[1:])
    return radius_estimate(c)


def condition_31_from_log(log_coeffs, rot: Rotation) -> RadiusEstimate:
    """Same test for a user-supplied m_1 (which need not define a weight)."""
    a = np.asarray(log_coeffs, dtype=complex)
    p = rot.powers(a.size)
    c = np.zeros(a.size, dtype=complex)
    c[1:] = a[1:] / (1.0 - p[1:])
    return radius_estimate(c)


# precomputed context

@dataclass
class SpectralContext:
    T: OperatorHandle
    config: ClassifierConfig
    profile: Optional[JensenProfile] = None
    zero_free: Optional[bool] = None
    m1: float = math.nan
    m1_method: str = UNAVAILABLE
    constant: Optional[complex] = None
    structural: Optional[bool] = None
    mq_samples: Optional[np.ndarray] = None
    notes: list = field(default_factory=list)
    _cond31: Optional[RadiusEstimate] = None
    _eigen_cache: dict = field(default_factory=dict)

    def cond31(self) -> Optional[RadiusEstimate]:
        if self._cond31 is None and abs(self.T.m0) > 0 and not self.T.rotation.is_periodic:
            try:
                self._cond31 = condition_31(self.T)
            except SpectralError:
                return None
        return self._cond31

    def to_dict(self) -> dict:
        d = {"zero_free": self.zero_free, "M1": self.m1, "M1_method": self.m1_method,
             "structural_test": self.structural, "notes": list(self.notes)}
        if self.constant is not None:
            d["constant_weight"] = [self.constant.real, self.constant.imag]
        if self.profile is not None:
            d["jensen"] = self.profile.to_dict()
        if self._cond31 is not None:
            d["condition_radius"] = self._cond31.to_dict()
        return d


def _iterated_values(T: OperatorHandle, z: np.ndarray, q: int) -> np.ndarray:
    w = T.weight
    bp = T.rotation.powers(q)
    out = np.ones_like(z)
    for j in range(q):
        out = out * w.evaluate(bp[j] * z)
    return out


def prepare(T: OperatorHandle, config: Optional[ClassifierConfig] = None,
            threads: int = 1, mstar: bool = False) -> SpectralContext:
    """Everything classify needs that does not depend on lambda."""
    cfg = config or ClassifierConfig()
    ctx = SpectralContext(T, cfg)
    c = T.m.coeffs
    if np.all(np.abs(c[1:]) <= cfg.constant_tol * abs(c[0])):
        ctx.constant = complex(c[0])
    if T.rotation.is_periodic:
        q = T.rotation.q
        ctx.structural = structural_test_periodic(T.weight, q, cfg.structural_tol) \
            if abs(T.m0) > 0 else False
        r = 1.0 - cfg.eps_periodic
        t = 2 * np.pi * np.arange(cfg.periodic_nodes) / cfg.periodic_nodes
        ctx.mq_samples = _iterated_values(T, r * np.exp(1j * t), q)
        if T.weight.func is None:
            ctx.notes.append("m_q sampled from the truncated series")
        return ctx
    prof = jensen_profile(T.weight, cfg.r_grid, cfg.quad_k, mstar=mstar, threads=threads)
    ctx.profile = prof
    ctx.m1, ctx.m1_method, ctx.zero_free = prof.m1, prof.m1_method, prof.zero_free
    if abs(T.m0) == 0:
        ctx.zero_free = False
    return ctx


# classification

def _forced_index(T: OperatorHandle, lam: complex, tol: float) -> Optional[int]:
    d = np.abs(lam - T.m0 * T.powers)
    n = int(np.argmin(d))
    return n if d[n] <= tol else None


def _rational_angle(x: float, qmax: int, tol: float) -> Optional[Fraction]:
    fr = Fraction(x % 1.0).limit_denominator(qmax)
    if abs(float(fr) - (x % 1.0)) <= tol and fr.denominator <= qmax:
        return fr % 1
    return None


def _classify_periodic(ctx: SpectralContext, lam: complex) -> SpectralVerdict:
    T, cfg = ctx.T, ctx.config
    q = T.rotation.q
    if ctx.structural:
        pts = T.m0 * T.rotation.powers(q)
        d = np.abs(lam - pts)
        k = int(np.argmin(d))
        if d[k] <= cfg.snap_tol:
            if k not in ctx._eigen_cache:
                ctx._eigen_cache[k] = eigen_periodic(T, k, dims=2)
            es = ctx._eigen_cache[k]
            res = max(p.residual for p in es.pairs)
            cert = {"k": k, "eigen_residual": res, "rank": es.rank}
            if res < cfg.eigen_tol:
                return SpectralVerdict(lam, EIGENVALUE, "periodic-eigen-lacunary-log", cert)
            return SpectralVerdict(lam, IN_SPECTRUM, "periodic-power-image", cert)
        return SpectralVerdict(lam, WAELBROECK_RESOLVENT, "periodic-power-image",
                               {"distance": float(d[k]), "spectrum": "finite"})
    w = lam**q
    v = ctx.mq_samples - w
    mag = np.abs(v)
    dist = float(mag.min())
    band = cfg.band(abs(w))
    steps = np.angle(np.roll(v, -1) / np.where(mag == 0, 1, v))
    if mag.min() == 0 or np.max(np.abs(steps)) > math.pi / 2:
        return SpectralVerdict(lam, UNDETERMINED, "periodic-power-image",
                               {"distance": dist, "reason": "phase ambiguity"})
    wind = int(round(float(np.sum(steps)) / (2 * math.pi)))
    cert = {"winding": wind, "distance": dist, "band": band}
    if wind > 0:
        return SpectralVerdict(lam, IN_SPECTRUM, "periodic-power-image", cert)
    if wind == 0 and dist > band:
        return SpectralVerdict(lam, WAELBROECK_RESOLVENT, "periodic-power-image", cert)
    return SpectralVerdict(lam, UNDETERMINED, "periodic-power-image", cert)


def _eigen_verdict(ctx: SpectralContext, lam: complex, n: int) -> SpectralVerdict:
    T, cfg = ctx.T, ctx.config
    cond = ctx.cond31()
    if cond is None:
        return SpectralVerdict(lam, IN_SPECTRUM, "forced-point", {"n": n})
    cert = {"n": n, "radius": cond.value, "condition": cond.confidence}
    if cond.confidence == CONVERGENT:
        if n not in ctx._eigen_cache:
            ctx._eigen_cache[n] = eigenfunction(T, n)
        pair = ctx._eigen_cache[n]
        cert["eigen_residual"] = pair.residual
        if pair.residual < cfg.eigen_tol:
            return SpectralVerdict(lam, EIGENVALUE, "point-spectrum-exp-log", cert)
        return SpectralVerdict(lam, IN_SPECTRUM, "forced-point", cert)
    rule = "forced-point" if cond.confidence == BORDERLINE else "eigen-condition-fails"
    return SpectralVerdict(lam, IN_SPECTRUM, rule, cert)


def _diophantine_verdict(ctx: SpectralContext, lam: complex) -> Optional[SpectralVerdict]:
    T, cfg = ctx.T, ctx.config
    if ctx.constant is None:
        return None
    u = lam / ctx.constant
    if abs(abs(u) - 1) > cfg.snap_tol:
        return None
    x = math.atan2(u.imag, u.real) / (2 * math.pi)
    r = _rational_angle(x, cfg.rational_qmax, cfg.snap_tol)
    if r is None or r == 0:
        return None
    cert = {"r": f"{r.numerator}/{r.denominator}"}
    if T.rotation.dioph is None:
        cert["reason"] = "no verified diophantine parameters"
        return SpectralVerdict(lam, UNDETERMINED, "diophantine-params-missing", cert)
    cert.update(tau=T.rotation.dioph.tau, gamma=T.rotation.dioph.gamma,
                bound_constant=r.denominator ** T.rotation.dioph.tau / (4 * T.rotation.dioph.gamma))
    return SpectralVerdict(lam, RESOLVENT_NOT_WAELBROECK, "diophantine-rational-resolvent", cert)


def _probe(ctx: SpectralContext, lam: complex) -> Optional[dict]:
    T = ctx.T
    rhs = np.zeros((len(ctx.config.probe_basis), T.order), dtype=complex)
    for i, k in enumerate(ctx.config.probe_basis):
        rhs[i, k] = 1.0
    sols = solve_many(T, np.full(len(rhs), lam), rhs, pole_tol=ctx.config.pole_tol)
    for k, s in zip(ctx.config.probe_basis, sols):
        if s.verdict == OUTSIDE_HOL:
            return {"probe": f"e_{k}", "radius": s.radius.value, "confidence": s.radius.confidence,
                    "overflow_at": s.overflow_at}
    return None


def _classify_aperiodic(ctx: SpectralContext, lam: complex, probe: bool) -> SpectralVerdict:
    T, cfg = ctx.T, ctx.config
    n = _forced_index(T, lam, cfg.snap_tol)
    if ctx.zero_free:
        if n is not None:
            return _eigen_verdict(ctx, lam, n)
        r0 = abs(T.m0)
        band = cfg.band(r0)
        margin = abs(lam) - r0
        if abs(margin) > band:
            return SpectralVerdict(lam, WAELBROECK_RESOLVENT, "zero-free-circle",
                                   {"margin": margin, "band": band, "M1": r0})
        dv = _diophantine_verdict(ctx, lam)
        if dv is not None:
            return dv
        return SpectralVerdict(lam, UNDETERMINED, "circle-open-question",
                               {"margin": margin, "band": band})
    if n is not None:
        return SpectralVerdict(lam, IN_SPECTRUM, "forced-point", {"n": n})
    if ctx.zero_free is None or not (ctx.m1 == ctx.m1):
        return SpectralVerdict(lam, UNDETERMINED, "profile-unavailable",
                               {"M1_method": ctx.m1_method})
    if lam == 0:
        return SpectralVerdict(lam, IN_SPECTRUM, "zero-not-invertible", {})
    m1 = ctx.m1
    if math.isinf(m1):
        band, margin = math.inf, -math.inf
    else:
        band = cfg.band(m1)
        margin = abs(lam) - m1
    cert = {"margin": margin, "band": band, "M1": m1, "M1_method": ctx.m1_method}
    if margin > band:
        return SpectralVerdict(lam, WAELBROECK_RESOLVENT, "jensen-disc-exterior", cert)
    if margin < -band:
        if probe and cfg.probe:
            hit = _probe(ctx, lam)
            if hit is not None:
                cert.update(hit)
                return SpectralVerdict(lam, IN_SPECTRUM, "divergent-probe", cert)
        return SpectralVerdict(lam, IN_WAELBROECK, "jensen-disc-interior", cert)
    return SpectralVerdict(lam, UNDETERMINED, "jensen-band", cert)


def classify(T: OperatorHandle, lam: complex, ctx: Optional[SpectralContext] = None,
             probe: bool = True) -> SpectralVerdict:
    lam = complex(lam)
    if ctx is None:
        ctx = prepare(T)
    elif ctx.T is not T:
        raise PreconditionError("context was prepared for a different operator")
    if T.rotation.is_periodic:
        return _classify_periodic(ctx, lam)
    return _classify_aperiodic(ctx, lam, probe)


# grids

@dataclass(frozen=True)
class GridSpec:
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    n: int

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        parts = text.split(",")
        if len(parts) != 5:
            raise PreconditionError("grid needs xmin,xmax,ymin,ymax,n")
        g = cls(*(float(p) for p in parts[:4]), int(parts[4]))
        if not 1 <= g.n <= 2048:
            raise PreconditionError("grid resolution must lie in [1, 2048]")
        return g

    def points(self) -> np.ndarray:
        xs = np.linspace(self.xmin, self.xmax, self.n)
        ys = np.linspace(self.ymin, self.ymax, self.n)
        return (xs[None, :] + 1j * ys[:, None]).ravel()


@dataclass
class PortraitGrid:
    grid: GridSpec
    verdicts: List[SpectralVerdict]

    def codes(self) -> np.ndarray:
        return np.array([v.code for v in self.verdicts]).reshape(self.grid.n, self.grid.n)

    def counts(self) -> dict:
        out = {c: 0 for c in CLASSES}
        for v in self.verdicts:
            out[v.cls] += 1
        return out

    def csv_rows(self) -> list:
        rows = [["re", "im", "class", "rule", "certificate_scalar"]]
        for v in self.verdicts:
            rows.append([repr(v.lam.real), repr(v.lam.imag), str(v.code), v.rule, repr(v.scalar)])
        return rows

    def to_dict(self) -> dict:
        g = self.grid
        return {"grid": {"xmin": g.xmin, "xmax": g.xmax, "ymin": g.ymin, "ymax": g.ymax, "n": g.n},
                "counts": self.counts(), "codes": self.codes().tolist(),
                "class_order": list(CLASSES)}


def portrait(T: OperatorHandle, grid: GridSpec, ctx: Optional[SpectralContext] = None,
             threads: int = 1, probe: bool = True) -> PortraitGrid:
    """Classify every grid node (row-major, rows of constant imaginary part)."""
    if grid.n > 2048:
        raise PreconditionError("grid resolution must be <= 2048")
    ctx = ctx or prepare(T, threads=threads)
    pts = grid.points()
    if threads > 1:
        def work(chunk):
            local = SpectralContext(**{**ctx.__dict__, "_eigen_cache": {}})
            return [classify(T, lam, local, probe) for lam in chunk]

        chunks = np.array_split(pts, max(1, threads * 4))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
        verdicts = [v for part in parts for v in part]
    else:
        verdicts = [classify(T, lam, ctx, probe) for lam in pts]
    return PortraitGrid(grid, verdicts)
