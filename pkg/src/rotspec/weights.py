"""Weights m for the operator f -> m(z) f(beta z).

A Weight always carries its Taylor series at the working order.  Polynomial,
exponential and builtin weights also carry exact interior and boundary
evaluators and a zero list, which the Jensen-radius code prefers over the
truncated series.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import PreconditionError
from .series import TruncatedSeries, evaluate, exp_series

BUILTINS = ("one", "monomial", "example76", "shifted")


def _polyval(coeffs: np.ndarray, z):
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    for c in coeffs[::-1]:
        out = out * z + c
    return out


def _parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise PreconditionError(f"expected [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


def polynomial_zeros(coeffs, newton_steps: int = 3, cluster_tol: float = 1e-4) -> list:
    """Zeros of a polynomial in the open unit disc as (location, multiplicity).

    Companion-matrix roots, polished by Newton steps, then clustered to read off
    multiplicities (a k-fold root splits by about eps**(1/k), hence the loose
    cluster tolerance).  The zero at the origin is counted exactly from the
    vanishing low-order coefficients.
    """
    c = np.asarray(coeffs, dtype=complex)
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        raise PreconditionError("the zero polynomial has no zero list")
    low, high = int(nz[0]), int(nz[-1])
    out = []
    if low:
        out.append((0j, low))
    core = c[low : high + 1]
    if core.size <= 1:
        return out
    roots = [complex(z) for z in np.roots(core[::-1])]
    clusters: list = []
    for z in sorted(roots, key=lambda w: (round(abs(w), 9), math.atan2(w.imag, w.real))):
        for cl in clusters:
            if abs(np.mean(cl) - z) < cluster_tol:
                cl.append(z)
                break
        else:
            clusters.append([z])
    pc = core[::-1]
    d = np.polyder(pc)
    for members in clusters:
        z = complex(np.mean(members))
        if len(members) == 1:
            for _ in range(newton_steps):
                dv = np.polyval(d, z)
                if dv == 0:
                    break
                step = np.polyval(pc, z) / dv
                if not np.isfinite(step) or abs(step) > 1e-3 * max(1.0, abs(z)):
                    break
                z = complex(z - step)
        edge = 1e-12 if len(members) == 1 else cluster_tol
        if 0 < abs(z) < 1 - edge:
            out.append((z, len(members)))
    return out


@dataclass(frozen=True, eq=False)
class Weight:
    kind: str
    name: str
    series: TruncatedSeries
    func: Optional[Callable] = None
    log_abs: Optional[Callable] = None
    boundary_modulus: Optional[Callable] = None
    boundary_log: Optional[Callable] = None
    zeros: Optional[tuple] = None
    log_coeffs: Optional[TruncatedSeries] = None
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.any(self.series.coeffs != 0):
            raise PreconditionError("the weight must not vanish identically")

    # constructors
    @classmethod
    def poly(cls, coeffs, order: int, name: str = "poly", kind: str = "poly",
             spec: Optional[dict] = None) -> "Weight":
        c = np.array([_parse_complex(v) for v in coeffs], dtype=complex)
        nz = np.nonzero(c)[0]
        if nz.size == 0:
            raise PreconditionError("the weight must not vanish identically")
        c = c[: int(nz[-1]) + 1]
        if c.size > order:
            raise PreconditionError(f"polynomial degree {c.size - 1} does not fit order {order}")
        series = TruncatedSeries(np.concatenate([c, np.zeros(order - c.size, complex)]))

        def func(z, c=c):
            return _polyval(c, z)

        def log_abs(z, c=c):
            with np.errstate(divide="ignore"):
                return np.log(np.abs(_polyval(c, z)))

        def bmod(t, c=c):
            return np.abs(_polyval(c, np.exp(1j * np.asarray(t, dtype=float))))

        def blog(t, c=c):
            with np.errstate(divide="ignore"):
                return np.log(bmod(t))

        zeros = tuple(polynomial_zeros(c))
        spec = spec or {"type": "poly", "coeffs": [[v.real, v.imag] for v in c]}
        return cls(kind, name, series, func, log_abs, bmod, blog, zeros, None, spec)

    @classmethod
    def exponential(cls, log_coeffs, order: int, name: str = "exp") -> "Weight":
        """m = exp(m1) for a polynomial m1; zero-free by construction."""
        a = np.array([_parse_complex(v) for v in log_coeffs], dtype=complex)
        if a.size > order:
            raise PreconditionError("exponent degree does not fit the order")
        m1 = TruncatedSeries(np.concatenate([a, np.zeros(order - a.size, complex)]))
        series = exp_series(m1)

        def func(z, a=a):
            return np.exp(_polyval(a, z))

        def log_abs(z, a=a):
            return np.real(_polyval(a, z))

        def blog(t, a=a):
            return np.real(_polyval(a, np.exp(1j * np.asarray(t, dtype=float))))

        def bmod(t):
            return np.exp(blog(t))

        spec = {"type": "exp", "coeffs": [[v.real, v.imag] for v in a]}
        return cls("exp", name, series, func, log_abs, bmod, blog, (), m1, spec)

    @classmethod
    def from_series(cls, coeffs, order: int, name: str = "series", spec: Optional[dict] = None) -> "Weight":
        if isinstance(coeffs, TruncatedSeries):
            s = coeffs
        else:
            c = np.array([_parse_complex(v) for v in coeffs], dtype=complex)
            if c.size < order:
                c = np.concatenate([c, np.zeros(order - c.size, complex)])
            s = TruncatedSeries(c[:order])
        if s.order != order:
            s = s.pad(order) if s.order < order else s.truncate(order)
        return cls("series", name, s, spec=spec or {"type": "series"})

    @classmethod
    def one(cls, order: int) -> "Weight":
        return cls.poly([1.0], order, name="one", kind="builtin",
                        spec={"type": "builtin", "name": "one"})

    @classmethod
    def monomial(cls, k: int, order: int) -> "Weight":
        if k < 0:
            raise PreconditionError("monomial degree must be >= 0")
        return cls.poly([0.0] * k + [1.0], order, name=f"monomial({k})", kind="builtin",
                        spec={"type": "builtin", "name": "monomial", "k": k})

    @classmethod
    def shifted(cls, a: complex, order: int) -> "Weight":
        """m(z) = z - a."""
        a = complex(a)
        return cls.poly([-a, 1.0], order, name=f"shifted({a})", kind="builtin",
                        spec={"type": "builtin", "name": "shifted", "alpha": [a.real, a.imag]})

    @classmethod
    def example76(cls, order: int) -> "Weight":
        """m(z) = (1 - z) exp(-(1 + z)/(1 - z)).

        Zero-free in the disc with an essential singularity at z = 1.  Taylor
        coefficients are e^{-1} L_n^{(-2)}(2), generated by the three-term
        Laguerre recurrence.
        """
        lag = np.zeros(order)
        lag[0] = 1.0
        if order > 1:
            lag[1] = -3.0
        for n in range(1, order - 1):
            lag[n + 1] = ((2 * n - 3) * lag[n] - (n - 2) * lag[n - 1]) / (n + 1)
        series = TruncatedSeries(lag * math.exp(-1.0))

        def func(z):
            z = np.asarray(z, dtype=complex)
            return (1 - z) * np.exp(-(1 + z) / (1 - z))

        def log_abs(z):
            z = np.asarray(z, dtype=complex)
            with np.errstate(divide="ignore"):
                return np.log(np.abs(1 - z)) - np.real((1 + z) / (1 - z))

        def bmod(t):
            return 2.0 * np.abs(np.sin(np.asarray(t, dtype=float) / 2))

        def blog(t):
            with np.errstate(divide="ignore"):
                return np.log(bmod(t))

        return cls("builtin", "example76", series, func, log_abs, bmod, blog, (), None,
                   {"type": "builtin", "name": "example76"})

    @classmethod
    def builtin(cls, name: str, order: int, **params) -> "Weight":
        if name == "one":
            return cls.one(order)
        if name == "monomial":
            return cls.monomial(int(params.get("k", 1)), order)
        if name == "example76":
            return cls.example76(order)
        if name == "shifted":
            return cls.shifted(_parse_complex(params.get("alpha", 0.5)), order)
        raise PreconditionError(f"unknown builtin weight {name!r}; choose from {BUILTINS}")

    @classmethod
    def from_json(cls, obj, order: int, base_dir: Optional[Path] = None) -> "Weight":
        """Parse the weight schema: poly, exp, series (inline or path) or builtin."""
        if isinstance(obj, str):
            try:
                obj = json.loads(obj)
            except json.JSONDecodeError as exc:
                raise PreconditionError(f"malformed weight JSON: {exc}") from None
        if not isinstance(obj, dict) or "type" not in obj:
            raise PreconditionError("weight JSON needs a 'type' field")
        kind = obj["type"]
        if kind == "poly":
            return cls.poly(obj["coeffs"], order)
        if kind == "exp":
            return cls.exponential(obj["coeffs"], order)
        if kind == "builtin":
            params = {k: v for k, v in obj.items() if k not in ("type", "name")}
            return cls.builtin(obj.get("name", ""), order, **params)
        if kind == "series":
            if "coeffs" in obj:
                pairs = obj["coeffs"]
            elif "path" in obj:
                path = Path(obj["path"])
                if not path.is_absolute() and base_dir is not None:
                    path = Path(base_dir) / path
                try:
                    pairs = json.loads(path.read_text())
                except (OSError, json.JSONDecodeError) as exc:
                    raise PreconditionError(f"cannot read series file {path}: {exc}") from None
            else:
                raise PreconditionError("series weight needs 'path' or 'coeffs'")
            return cls.from_series(pairs, order, name=str(obj.get("path", "series")),
                                   spec=dict(obj))
        raise PreconditionError(f"unknown weight type {kind!r}")

    # queries
    @property
    def order(self) -> int:
        return self.series.order

    @property
    def m0(self) -> complex:
        return complex(self.series.coeffs[0])

    @property
    def has_exact(self) -> bool:
        return self.func is not None

    def at_order(self, order: int) -> "Weight":
        if order == self.order:
            return self
        if self.spec.get("type") in ("poly", "exp", "builtin") or (
                self.spec.get("type") == "series" and ("path" in self.spec or "coeffs" in self.spec)):
            return Weight.from_json(self.spec, order)
        raise PreconditionError("this weight cannot be re-materialised at another order")

    def evaluate(self, z):
        """m(z) for |z| < 1, exact when available, else from the series."""
        if self.func is not None:
            return self.func(z)
        return evaluate(self.series, z)

    def log_modulus(self, z):
        if self.log_abs is not None:
            return self.log_abs(z)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.evaluate(z)))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "name": self.name, "spec": self.spec,
             "m0": [self.m0.real, self.m0.imag], "order": self.order,
             "has_boundary": self.boundary_modulus is not None}
        if self.zeros is not None:
            d["zeros_in_disc"] = [[[z.real, z.imag], k] for z, k in self.zeros]
        return d

