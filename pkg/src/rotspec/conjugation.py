"""Elliptic automorphisms and reduction to the rotation case.

phi = Psi_a o r_beta o Psi_a with Psi_a(z) = (a - z)/(1 - conj(a) z), an
involution swapping 0 and a.  With U f = f o Psi_a,

    U (m * f o phi) U = (m o Psi_a) * (f o r_beta),

so m(z) f(phi(z)) is similar to the rotation operator with weight m o Psi_a
and every spectral verdict carries over unchanged.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotAutomorphism, NotElliptic, PreconditionError
from .operator import OperatorHandle
from .rotation import Rotation
from .series import MAX_ORDER, compose_mobius
from .weights import Weight


def psi(alpha: complex, z):
    z = np.asarray(z, dtype=complex)
    return (alpha - z) / (1 - np.conj(alpha) * z)


@dataclass(frozen=True, eq=False)
class EllipticAutomorphism:
    alpha: complex
    rotation: Rotation

    def __post_init__(self):
        a = complex(self.alpha)
        if abs(a) >= 1:
            raise PreconditionError("the fixed point must lie in the open disc")
        object.__setattr__(self, "alpha", a)
        if abs(self(a) - a) > 1e-12:
            raise PreconditionError("phi(alpha) != alpha")

    @property
    def beta(self) -> complex:
        return self.rotation.beta

    def __call__(self, z):
        out = psi(self.alpha, self.beta * psi(self.alpha, z))
        return complex(out) if np.ndim(out) == 0 else out

    def mobius(self) -> tuple:
        """(a, b, c, d) with phi(z) = (a z + b)/(c z + d)."""
        a = self.alpha
        P = np.array([[-1, a], [-np.conj(a), 1]], dtype=complex)
        R = np.array([[self.beta, 0], [0, 1]], dtype=complex)
        M = P @ R @ P
        return tuple(complex(x) for x in M.ravel())

    def to_dict(self) -> dict:
        return {"alpha": [self.alpha.real, self.alpha.imag], "rotation": self.rotation.to_dict(),
                "mobius": [[c.real, c.imag] for c in self.mobius()]}


def _is_automorphism(a, b, c, d, samples: int = 16, tol: float = 1e-9) -> bool:
    t = 2 * np.pi * np.arange(samples) / samples
    z = np.exp(1j * t)
    den = c * z + d
    if np.any(np.abs(den) < 1e-14) or abs(d) < 1e-14:
        return False
    img = (a * z + b) / den
    return bool(np.all(np.abs(np.abs(img) - 1) < tol) and abs(b / d) < 1)


def fixed_point(a: complex, b: complex, c: complex, d: complex,
                rotation: Optional[Rotation] = None) -> EllipticAutomorphism:
    """Interior fixed point and rotation parameter of phi(z) = (a z + b)/(c z + d).

    The rotation parameter is phi'(alpha).  Without an explicit `rotation`
    it is recognised as a root of unity of small order, or else taken as an
    aperiodic angle with double precision only.
    """
    a, b, c, d = (complex(x) for x in (a, b, c, d))
    det = a * d - b * c
    if abs(det) < 1e-14:
        raise NotAutomorphism("degenerate Mobius map (ad - bc = 0)")
    if not _is_automorphism(a, b, c, d):
        raise NotAutomorphism("the map does not preserve the unit disc")
    if abs(c) < 1e-15:
        if abs(d - a) < 1e-15:
            raise NotElliptic("identity or translation: no isolated fixed point")
        roots = [b / (d - a)]
    else:
        disc = cmath.sqrt((d - a) ** 2 + 4 * b * c)
        roots = [((a - d) + disc) / (2 * c), ((a - d) - disc) / (2 * c)]
    inside = [z for z in roots if abs(z) < 1 - 1e-12]
    if len(inside) != 1:
        raise NotElliptic("no interior fixed point (parabolic or hyperbolic map)")
    alpha = inside[0]
    beta = det / (c * alpha + d) ** 2
    if rotation is None:
        rotation = Rotation.from_complex(beta / abs(beta))
    elif abs(rotation.beta - beta) > 1e-9:
        raise PreconditionError("the supplied rotation does not match phi'(alpha)")
    return EllipticAutomorphism(alpha, rotation)


def working_order(order: int, alpha: complex, margin: int = 64) -> int:
    """Input order needed so that coefficients below `order` of f o Psi_alpha are exact.

    Psi^n carries its mass near index n (1 - |a|)/(1 + |a|), so terms of f
    beyond the output order still reach it when f decays slowly.
    """
    a = abs(complex(alpha))
    need = math.ceil(order * (1 + a) / (1 - a)) + margin
    return max(order, min(need, MAX_ORDER))


def _widened(base: Weight, work: int):
    try:
        return base.at_order(work)
    except PreconditionError:
        return None


def conjugated_weight(m: Weight, alpha: complex, order: Optional[int] = None) -> Weight:
    """m o Psi_alpha with exact evaluators and zeros carried over.

    The series is composed at a wider working order and truncated, when the
    weight can be re-materialised; otherwise the given coefficients are used.
    """
    alpha = complex(alpha)
    if abs(alpha) >= 1:
        raise PreconditionError("|alpha| must be < 1")
    base = m.at_order(order) if order is not None and order != m.order else m
    N = base.order
    wide = _widened(base, working_order(N, alpha)) or base
    series = compose_mobius(wide.series, alpha).truncate(N)
    func = log_abs = bmod = blog = None
    if base.func is not None:
        def func(z):
            return base.func(psi(alpha, z))
    if base.log_abs is not None:
        def log_abs(z):
            return base.log_abs(psi(alpha, z))

    def _angle(t):
        return np.angle(psi(alpha, np.exp(1j * np.asarray(t, dtype=float))))

    if base.boundary_modulus is not None:
        def bmod(t):
            return base.boundary_modulus(_angle(t))
    if base.boundary_log is not None:
        def blog(t):
            return base.boundary_log(_angle(t))
    zeros = None
    if base.zeros is not None:
        zeros = tuple((complex(psi(alpha, z)), k) for z, k in base.zeros)
    logc = None
    if wide.log_coeffs is not None:
        logc = compose_mobius(wide.log_coeffs, alpha).truncate(N)
    spec = {"type": "conjugated", "alpha": [alpha.real, alpha.imag], "base": base.spec}
    return Weight("conjugated", f"{base.name} o Psi", series, func, log_abs, bmod, blog, zeros,
                  logc, spec)


def reduce(m: Weight, phi: EllipticAutomorphism, order: Optional[int] = None) -> OperatorHandle:
    """Rotation-case operator similar to m(z) f(phi(z))."""
    w = conjugated_weight(m, phi.alpha, order)
    meta = {"conjugated": True, "alpha": [phi.alpha.real, phi.alpha.imag],
            "accuracy_downgrade": 1.0 / (1.0 - abs(phi.alpha)),
            "m_at_alpha": [w.m0.real, w.m0.imag]}
    return OperatorHandle(w, phi.rotation, w.order, meta)
