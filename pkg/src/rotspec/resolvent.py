"""Resolvent equation (lambda - T) f = g, eigenfunctions and contour projections.

Comparing coefficients of z^n in lambda f(z) - m(z) f(beta z) = g(z) gives the
lower-triangular recurrence

    (lambda - m_0 beta^n) f_n = g_n + sum_{k<n} m_{n-k} beta^k f_k,

so the truncated system is solved exactly up to rounding.  Whether the
solution is holomorphic on the disc is then read off its coefficient decay.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import (ConditionFails, ContourRejected, NearPole, PreconditionError,
                     StructuralTestFailed, ZeroAtOrigin)
from .operator import OperatorHandle, apply
from .rotation import beta_power
from .series import (BORDERLINE, CONVERGENT, DIVERGENT, RADIUS_BAND, RadiusEstimate,
                     TruncatedSeries, exp_series, radius_estimate, shift_down, shift_up)

POLE_TOL = 1e-9
OVERFLOW = 1e250

IN_RESOLVENT = "InResolvent"
OUTSIDE_HOL = "OutsideHol"
NEAR_POLE = "NearPole"
BORDERLINE_VERDICT = "Borderline"

_RANK = {IN_RESOLVENT: 0, BORDERLINE_VERDICT: 1, OUTSIDE_HOL: 2, NEAR_POLE: 3}


@dataclass(frozen=True)
class ResolventSolution:
    """Solution of (lambda - T) f = g.

    `residual` is max |(lambda - T) f - g| relative to max(1, max |f_n|);
    `abs_residual` is the same without the normalisation.  When the
    coefficients overflow, `f` is the prefix computed before overflow.
    """

    lam: complex
    f: TruncatedSeries
    radius: RadiusEstimate
    residual: float
    abs_residual: float
    verdict: str
    overflow_at: Optional[int] = None
    pole_distance: float = math.inf

    def to_dict(self, coeffs: bool = True) -> dict:
        d = {"lambda": [self.lam.real, self.lam.imag], "radius": self.radius.to_dict(),
             "verdict": self.verdict, "residual": self.residual,
             "abs_residual": self.abs_residual, "overflow_at": self.overflow_at,
             "pole_distance": self.pole_distance}
        if coeffs:
            d["coeffs"] = self.f.to_pairs()
        return d


def pole_distances(T: OperatorHandle, lams) -> tuple:
    """min_n |lambda - m0 beta^n| over n < N, with the minimising n."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    d = np.abs(lams[:, None] - T.m0 * T.powers[None, :])
    idx = np.argmin(d, axis=1)
    return d[np.arange(lams.size), idx], idx


def _recurrence(T: OperatorHandle, lams: np.ndarray, G: np.ndarray, overflow: float):
    m = T.m.coeffs
    powers = T.powers
    B, N = G.shape
    F = np.zeros((B, N), dtype=complex)
    W = np.zeros((B, N), dtype=complex)
    den = lams[:, None] - m[0] * powers[None, :]
    stop = np.full(B, N)
    alive = np.ones(B, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(N):
            s = G[:, n].copy()
            if n:
                s += W[:, :n] @ m[n:0:-1]
            col = s / den[:, n]
            bad = alive & ~(np.abs(col) <= overflow)
            if bad.any():
                stop[bad] = n
                alive &= ~bad
            col[~alive] = 0
            F[:, n] = col
            W[:, n] = col * powers[n]
    return F, stop


def _residual(T: OperatorHandle, lam: complex, f: np.ndarray, g: np.ndarray) -> float:
    n = f.size
    tf = np.convolve(T.m.coeffs[:n], f * T.powers[:n])[:n]
    return float(np.max(np.abs(lam * f - tf - g[:n])))


def _finish(T, lam, f, g, stop, band, pole_dist) -> ResolventSolution:
    N = f.size
    prefix = f[:stop] if stop < N else f
    if prefix.size == 0:
        prefix = np.zeros(1, dtype=complex)
    series = TruncatedSeries(prefix)
    absres = _residual(T, lam, prefix, g)
    scale = max(1.0, float(np.max(np.abs(prefix))))
    if stop < N:
        window = (stop // 2, stop) if stop >= 2 else (0, max(stop, 1))
        try:
            rad = radius_estimate(series, window=window, band=band)
        except PreconditionError:
            rad = RadiusEstimate(0.0, window, DIVERGENT, "overflow")
        rad = RadiusEstimate(min(rad.value, 1.0), rad.slope_window, DIVERGENT,
                             f"coefficients overflow at n = {stop}")
        verdict = OUTSIDE_HOL
        over = int(stop)
    else:
        rad = radius_estimate(series, band=band)
        verdict = {CONVERGENT: IN_RESOLVENT, DIVERGENT: OUTSIDE_HOL,
                   BORDERLINE: BORDERLINE_VERDICT}[rad.confidence]
        over = None
    return ResolventSolution(complex(lam), series, rad, absres / scale, absres, verdict, over,
                             float(pole_dist))


def _as_rhs(T: OperatorHandle, g) -> np.ndarray:
    if isinstance(g, TruncatedSeries):
        if g.order != T.order:
            raise PreconditionError(f"rhs order {g.order} differs from operator order {T.order}")
        return g.coeffs
    arr = np.asarray(g, dtype=complex)
    if arr.shape[-1] != T.order:
        raise PreconditionError("rhs length differs from operator order")
    return arr


def solve(T: OperatorHandle, lam: complex, g, pole_tol: float = POLE_TOL,
          band: float = RADIUS_BAND, overflow: float = OVERFLOW) -> ResolventSolution:
    """Unique formal solution of (lambda - T) f = g to order N."""
    lam = complex(lam)
    gc = _as_rhs(T, g)
    dist, idx = pole_distances(T, lam)
    if dist[0] <= pole_tol:
        raise NearPole(int(idx[0]), float(dist[0]))
    F, stop = _recurrence(T, np.array([lam]), gc[None, :], overflow)
    return _finish(T, lam, F[0], gc, int(stop[0]), band, dist[0])


def solve_many(T: OperatorHandle, lams: Sequence[complex], g, pole_tol: float = POLE_TOL,
               band: float = RADIUS_BAND, overflow: float = OVERFLOW, threads: int = 1,
               chunk: int = 256) -> List[ResolventSolution]:
    """Batched solve; nodes on a pole get a NearPole verdict instead of raising.

    `g` is one right-hand side shared by all nodes or one row per node.
    Chunks run on a thread pool (numpy releases the GIL in the inner
    products); results keep the input order.
    """
    lams = np.asarray(lams, dtype=complex).ravel()
    G = _as_rhs(T, g)
    if G.ndim == 1:
        G = np.broadcast_to(G, (lams.size, T.order))
    dist, idx = pole_distances(T, lams)
    ok = dist > pole_tol
    out: List[Optional[ResolventSolution]] = [None] * lams.size
    for i in np.nonzero(~ok)[0]:
        out[i] = ResolventSolution(complex(lams[i]), TruncatedSeries.zeros(1),
                                   RadiusEstimate(0.0, (0, 0), BORDERLINE, "pole"),
                                   math.inf, math.inf, NEAR_POLE, None, float(dist[i]))
    good = np.nonzero(ok)[0]
    chunks = [good[i : i + chunk] for i in range(0, good.size, chunk)]

    def run(sel):
        F, stop = _recurrence(T, lams[sel], np.ascontiguousarray(G[sel]), overflow)
        return [(int(i), _finish(T, lams[i], F[j], G[i], int(stop[j]), band, dist[i]))
                for j, i in enumerate(sel)]

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    for part in results:
        for i, sol in part:
            out[i] = sol
    return out  # type: ignore[return-value]


def rotate_resolvent(T: OperatorHandle, mu: complex, g: TruncatedSeries,
                     pole_tol: float = POLE_TOL) -> TruncatedSeries:
    """R_{beta mu} g assembled from solves at mu only.

    Write g = g(0) + z g1.  The shifted part uses
        R_{beta mu}(z g1) = z R_mu(conj(beta) g1),
    and the constant part uses
        R_{beta mu} 1 = 1/(beta mu - m0) + R_{beta mu} h,  h = (m - m0)/(beta mu - m0),
    where h has zero constant term so the first identity applies to it too.
    """
    mu = complex(mu)
    bmu = T.beta * mu
    if abs(bmu - T.m0) <= pole_tol:
        raise PreconditionError("beta*mu equals m(0); the constant-part formula is singular")
    N = T.order
    g = g if isinstance(g, TruncatedSeries) else TruncatedSeries(g)
    if g.order != N:
        raise PreconditionError("rhs order differs from operator order")
    g0 = complex(g.coeffs[0])
    bbar = T.beta.conjugate()

    def shifted_part(h: TruncatedSeries) -> np.ndarray:
        h1 = shift_down(TruncatedSeries(np.concatenate(([0j], h.coeffs[1:]))))
        rhs = np.concatenate((bbar * h1.coeffs, [0j]))
        sol = solve(T, mu, rhs, pole_tol=pole_tol)
        if sol.overflow_at is not None:
            raise PreconditionError("solve at mu overflowed")
        return shift_up(sol.f.truncate(N - 1)).coeffs.copy()

    out = shifted_part(g)
    if g0 != 0:
        h = TruncatedSeries(np.concatenate(([0j], T.m.coeffs[1:])) / (bmu - T.m0))
        const = shifted_part(h)
        const[0] += 1.0 / (bmu - T.m0)
        out = out + g0 * const
    return TruncatedSeries(out)


@dataclass(frozen=True)
class EigenPair:
    lam: complex
    M: int
    f: TruncatedSeries
    residual: float
    condition: Optional[RadiusEstimate] = None

    def to_dict(self, coeffs: bool = True) -> dict:
        d = {"lambda": [self.lam.real, self.lam.imag], "M": self.M, "residual": self.residual}
        if self.condition is not None:
            d["condition_radius"] = self.condition.to_dict()
        if coeffs:
            d["coeffs"] = self.f.to_pairs()
        return d


def eigen_residual(T: OperatorHandle, lam: complex, f: TruncatedSeries) -> float:
    return float(np.max(np.abs(apply(T, f).coeffs - lam * f.coeffs)))


def _shifted_exp(g1: np.ndarray, M: int, N: int) -> TruncatedSeries:
    e = exp_series(TruncatedSeries(g1)).coeffs
    f = np.zeros(N, dtype=complex)
    if M < N:
        f[M:] = e[: N - M]
    return TruncatedSeries(f)


def eigenfunction(T: OperatorHandle, M: int, allow_borderline: bool = False) -> EigenPair:
    """f = z^M exp(g1) with g1_n = a_n/(1 - beta^n), where m = exp(sum a_n z^n).

    Then T f = m(0) beta^M f exactly.  Raises ZeroAtOrigin when m(0) = 0 and
    ConditionFails when the coefficients a_n/(1 - beta^n) grow geometrically.
    """
    from .classifier import condition_31, log_weight

    if T.rotation.is_periodic:
        raise PreconditionError("use eigen_periodic for periodic rotations")
    if M < 0 or M >= T.order:
        raise PreconditionError("M must lie in [0, N)")
    if abs(T.m0) <= 1e-300:
        raise ZeroAtOrigin("m(0) = 0: no eigenvalues")
    cond = condition_31(T)
    if cond.confidence == DIVERGENT or (cond.confidence == BORDERLINE and not allow_borderline):
        raise ConditionFails(f"coefficient condition not met: radius {cond.value:.4g} ({cond.confidence})")
    m1 = log_weight(T).coeffs
    g1 = np.zeros(T.order, dtype=complex)
    g1[1:] = m1[1:] / (1.0 - T.powers[1:])
    f = _shifted_exp(g1, M, T.order)
    lam = T.m0 * beta_power(T.rotation, M)
    return EigenPair(lam, M, f, eigen_residual(T, lam, f), cond)


@dataclass(frozen=True)
class PeriodicEigenspace:
    lam: complex
    k: int
    q: int
    pairs: list
    rank: int
    description: str

    def to_dict(self, coeffs: bool = False) -> dict:
        return {"lambda": [self.lam.real, self.lam.imag], "k": self.k, "q": self.q,
                "rank": self.rank, "description": self.description,
                "eigenfunctions": [p.to_dict(coeffs=coeffs) for p in self.pairs]}


def eigen_periodic(T: OperatorHandle, k: int, dims: int = 2,
                   free: Optional[Dict[int, complex]] = None, tol: float = 1e-10) -> PeriodicEigenspace:
    """Sample eigenfunctions for the eigenvalue m(0) beta^k, beta of order q.

    g1_n = a_n/(1 - beta^n) off the multiples of q; on the multiples the
    coefficient is free.  The first sample uses `free` (default all zero);
    each further sample adds z^{q d} to g1, giving independent functions.
    """
    from .classifier import log_weight, structural_test_periodic

    rot = T.rotation
    if not rot.is_periodic:
        raise PreconditionError("eigen_periodic needs a periodic rotation")
    q = rot.q
    if not structural_test_periodic(T.weight, q):
        raise StructuralTestFailed("log m has coefficients on multiples of q: no eigenvalues")
    if k < 0:
        raise PreconditionError("k must be >= 0")
    N = T.order
    m1 = log_weight(T).coeffs
    g1 = np.zeros(N, dtype=complex)
    n = np.arange(N)
    off = (n % q) != 0
    g1[off] = m1[off] / (1.0 - T.powers[off])
    for idx, val in (free or {}).items():
        if idx % q or idx <= 0 or idx >= N:
            raise PreconditionError(f"free coefficient index {idx} is not a positive multiple of q")
        g1[idx] = complex(val)
    lam = T.m0 * beta_power(rot, k)
    pairs = []
    for d in range(dims):
        g = g1.copy()
        if d and q * d < N:
            g[q * d] += 1.0
        f = _shifted_exp(g, k, N)
        pairs.append(EigenPair(lam, k, f, eigen_residual(T, lam, f)))
    mat = np.array([p.f.coeffs for p in pairs])
    rank = int(np.linalg.matrix_rank(mat, tol=1e-8 * max(1.0, np.abs(mat).max())))
    desc = (f"eigenvalue m(0) beta^{k}; eigenfunctions z^{k} exp(g1) with g1 fixed off multiples "
            f"of {q} and free on them, so the eigenspace is infinite-dimensional")
    return PeriodicEigenspace(lam, k, q, pairs, rank, desc)


@dataclass(frozen=True)
class ProjectionResult:
    series: TruncatedSeries
    weakest: str
    min_pole_distance: float
    nodes: int


def spectral_projection(T: OperatorHandle, r0: float, f: TruncatedSeries, kquad: int = 1024,
                        certify: bool = True, certify_samples: int = 16, threads: int = 1,
                        pole_tol: float = POLE_TOL) -> ProjectionResult:
    """Pf = (1/2 pi i) contour integral of R_lambda f over |lambda| = r0.

    Trapezoid rule on nodes lambda_j = r0 e^{2 pi i j/K}:
        Pf = (1/K) sum_j lambda_j R_{lambda_j} f,
    summed in node order.  With `certify`, sampled contour points must be
    classified as Waelbroeck-resolvent points first.
    """
    if r0 <= 0:
        raise PreconditionError("contour radius must be positive")
    if certify:
        from .classifier import WAELBROECK_RESOLVENT, classify, prepare

        ctx = prepare(T)
        for j in range(certify_samples):
            lam = r0 * np.exp(2j * np.pi * (j + 0.5) / certify_samples)
            v = classify(T, lam, ctx=ctx)
            if v.cls != WAELBROECK_RESOLVENT:
                raise ContourRejected(f"contour point {lam:.4g} classified {v.cls}")
    lams = r0 * np.exp(2j * np.pi * np.arange(kquad) / kquad)
    sols = solve_many(T, lams, f, pole_tol=pole_tol, threads=threads)
    worst = max(sols, key=lambda s: _RANK[s.verdict])
    if worst.verdict in (NEAR_POLE, OUTSIDE_HOL):
        raise ContourRejected(f"node {worst.lam:.4g} has verdict {worst.verdict}")
    acc = np.zeros(T.order, dtype=complex)
    for lam, s in zip(lams, sols):
        acc += lam * s.f.coeffs
    weakest = CONVERGENT if worst.verdict == IN_RESOLVENT else BORDERLINE
    return ProjectionResult(TruncatedSeries(acc / kquad), weakest,
                            float(min(s.pole_distance for s in sols)), kquad)


def resolvent_blowup(T: OperatorHandle, lams: Sequence[complex], kmax: int) -> np.ndarray:
    """sup over k <= kmax of max_n |(R_lambda e_k)_n| for each lambda.

    Needs order N > kmax.  Each e_k is a separate right-hand side.
    """
    if kmax >= T.order:
        raise PreconditionError("kmax must be below the order")
    out = []
    basis = np.eye(T.order, dtype=complex)[: kmax + 1]
    for lam in lams:
        dist, idx = pole_distances(T, lam)
        if dist[0] <= POLE_TOL:
            raise NearPole(int(idx[0]), float(dist[0]))
        F, _ = _recurrence(T, np.full(kmax + 1, complex(lam)), basis, OVERFLOW)
        out.append(float(np.abs(F).max()))
    return np.array(out)
