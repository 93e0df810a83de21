"""The operator T f(z) = m(z) f(beta z) on truncated series."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .errors import MissingBoundaryData, OrderMismatch, PreconditionError
from .rotation import Rotation, beta_powers
from .series import MAX_ORDER, TruncatedSeries, compose_rotation, eval_circle, mul
from .weights import Weight

DEFAULT_CIRCLE_NODES = 4096


@dataclass(frozen=True, eq=False)
class OperatorHandle:
    weight: Weight
    rotation: Rotation
    order: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weight.series.order != self.order:
            raise OrderMismatch(f"weight has order {self.weight.series.order}, handle {self.order}")
        if not 1 <= self.order <= MAX_ORDER:
            raise PreconditionError(f"order must lie in [1, {MAX_ORDER}]")

    @classmethod
    def build(cls, weight: Weight, rotation: Rotation, order: Optional[int] = None) -> "OperatorHandle":
        order = order or weight.order
        return cls(weight.at_order(order), rotation, order)

    @property
    def m(self) -> TruncatedSeries:
        return self.weight.series

    @property
    def m0(self) -> complex:
        return self.weight.m0

    @property
    def beta(self) -> complex:
        return self.rotation.beta

    @cached_property
    def powers(self) -> np.ndarray:
        """beta**k for k < N."""
        return self.rotation.powers(self.order)

    def step_powers(self, n: int) -> np.ndarray:
        """beta**(n k) for k < N, i.e. the coefficient factors of f(beta^n z)."""
        if n == 1:
            return self.powers
        return beta_powers(self.rotation, n * np.arange(self.order, dtype=np.int64))

    def to_dict(self) -> dict:
        d = {"weight": self.weight.to_dict(), "rotation": self.rotation.to_dict(),
             "order": self.order}
        if self.meta:
            d["meta"] = self.meta
        return d


def _check(T: OperatorHandle, f: TruncatedSeries):
    if f.order != T.order:
        raise OrderMismatch(f"series order {f.order} differs from operator order {T.order}")


def apply(T: OperatorHandle, f: TruncatedSeries) -> TruncatedSeries:
    _check(T, f)
    return mul(T.m, compose_rotation(f, T.powers))


def iterated_weight(T: OperatorHandle, n: int) -> TruncatedSeries:
    """m(z) m(beta z) ... m(beta^{n-1} z), multiplied left to right."""
    if n < 1:
        raise PreconditionError("iterated_weight needs n >= 1")
    acc = T.m
    for j in range(1, n):
        acc = mul(acc, compose_rotation(T.m, T.step_powers(j)))
    return acc


def apply_power(T: OperatorHandle, n: int, f: TruncatedSeries) -> TruncatedSeries:
    """T^n f = m_n(z) f(beta^n z)."""
    _check(T, f)
    if n < 0:
        raise PreconditionError("apply_power needs n >= 0")
    if n == 0:
        return f
    return mul(iterated_weight(T, n), compose_rotation(f, T.step_powers(n)))


def _lipschitz_pad(f: TruncatedSeries, r: float, K: int) -> float:
    """Half node spacing times a bound on |f'| over the circle."""
    n = np.arange(1, f.order)
    with np.errstate(under="ignore"):
        deriv = float(np.sum(n * np.abs(f.coeffs[1:]) * r ** (n - 1)))
    return math.pi * r / K * deriv


def sup_circle(f: Union[TruncatedSeries, Weight], r: float, K: int = DEFAULT_CIRCLE_NODES,
               with_error: bool = False):
    """max |f| over K uniform samples of |z| = r.

    A Weight is sampled with its exact evaluator when present; r = 1 needs a
    boundary evaluator.  `with_error` also returns a Lipschitz padding term
    bounding how far the sampled max can sit below the true sup.
    """
    if not 0 < r <= 1:
        raise PreconditionError("radius must lie in (0, 1]")
    series = f.series if isinstance(f, Weight) else f
    t = 2 * np.pi * np.arange(K) / K
    if r == 1:
        if not isinstance(f, Weight) or f.boundary_modulus is None:
            raise MissingBoundaryData("r = 1 needs a boundary evaluator")
        vals = np.asarray(f.boundary_modulus(t))
        pad = math.pi / K * float(np.sum(np.arange(series.order) * np.abs(series.coeffs)))
    elif isinstance(f, Weight) and f.func is not None:
        vals = np.abs(f.func(r * np.exp(1j * t)))
        pad = _lipschitz_pad(series, r, K)
    else:
        vals = np.abs(eval_circle(series, r, K))
        pad = _lipschitz_pad(series, r, K)
    value = float(vals.max())
    return (value, pad) if with_error else value


def spectral_radius_banach(T: OperatorHandle, n_max: int, r: float = 1.0,
                           K: int = DEFAULT_CIRCLE_NODES) -> np.ndarray:
    """sup_{|z|=r} |m_n(z)|^{1/n} for n = 1..n_max.

    m_n is accumulated by repeated multiplication of sampled values; the
    running product is renormalised each step so it neither overflows nor
    underflows, and the scale is carried separately.
    """
    if not 1 <= n_max <= 512:
        raise PreconditionError("n_max must lie in [1, 512]")
    if not 0 < r <= 1:
        raise PreconditionError("radius must lie in (0, 1]")
    w = T.weight
    t = 2 * np.pi * (np.arange(K) + 0.5) / K
    if r == 1:
        if w.boundary_modulus is None:
            raise MissingBoundaryData("r = 1 needs a boundary evaluator")
        fr = T.rotation.fractions(np.arange(n_max))

        def factor(j):
            return np.asarray(w.boundary_modulus(t + 2 * np.pi * fr[j]), dtype=float)
    else:
        z = r * np.exp(1j * t)
        bp = beta_powers(T.rotation, np.arange(n_max))

        def factor(j):
            return np.abs(w.evaluate(bp[j] * z))

    prod = np.ones(K)
    log_scale = 0.0
    out = np.empty(n_max)
    for j in range(n_max):
        prod = prod * factor(j)
        top = float(prod.max())
        if top == 0.0:
            out[j:] = 0.0
            break
        prod /= top
        log_scale += math.log(top)
        out[j] = math.exp(log_scale / (j + 1))
    return out
