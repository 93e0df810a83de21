import cmath
import math

import numpy as np
import pytest

from rotspec.classifier import classify, prepare
from rotspec.conjugation import (EllipticAutomorphism, conjugated_weight, fixed_point, psi,
                                 reduce)
from rotspec.errors import NotAutomorphism, NotElliptic, PreconditionError
from rotspec.jensen import count_zeros
from rotspec.rotation import Rotation
from rotspec.series import evaluate
from rotspec.weights import Weight

GOLDEN = Rotation.aperiodic("golden")
QUARTER = Rotation.periodic(1, 4)


class TestPsi:
    def test_swaps_zero_and_alpha(self):
        a = 0.3 - 0.4j
        assert abs(psi(a, 0) - a) < 1e-16 and abs(psi(a, a)) < 1e-16

    def test_involution(self):
        a = 0.5j
        z = np.array([0.1, -0.7 + 0.2j, 0.9j])
        assert np.allclose(psi(a, psi(a, z)), z)


class TestFixedPoint:
    def test_pure_rotation(self):
        b = cmath.exp(2j * math.pi * 0.3)
        phi = fixed_point(b, 0, 0, 1)
        assert abs(phi.alpha) < 1e-15 and abs(phi.beta - b) < 1e-12

    def test_round_trip(self):
        built = EllipticAutomorphism(0.3, QUARTER)
        phi = fixed_point(*built.mobius())
        assert abs(phi.alpha - 0.3) < 1e-10
        assert abs(phi.beta - 1j) < 1e-10 and phi.rotation.is_periodic

    def test_round_trip_with_rotation(self):
        built = EllipticAutomorphism(0.6j, GOLDEN)
        phi = fixed_point(*built.mobius(), rotation=GOLDEN)
        assert abs(phi.alpha - 0.6j) < 1e-10

    def test_fixes_alpha(self):
        phi = EllipticAutomorphism(0.3 + 0.2j, GOLDEN)
        assert abs(phi(phi.alpha) - phi.alpha) < 1e-12

    def test_hyperbolic(self):
        # z -> (z + 1/2)/(1 + z/2) fixes +-1 on the circle
        with pytest.raises(NotElliptic):
            fixed_point(1, 0.5, 0.5, 1)

    def test_not_automorphism(self):
        with pytest.raises(NotAutomorphism):
            fixed_point(2, 0, 0, 1)
        with pytest.raises(NotAutomorphism):
            fixed_point(1, 2, 2, 4)

    def test_alpha_outside(self):
        with pytest.raises(PreconditionError):
            EllipticAutomorphism(1.0, GOLDEN)


class TestReduce:
    def test_alpha_zero_reflects(self):
        w = Weight.poly([0.5, 1, 0.25j], 16)
        T = reduce(w, EllipticAutomorphism(0, GOLDEN))
        assert np.allclose(T.m.coeffs, w.series.coeffs * (-1.0) ** np.arange(16))

    def test_constant_term_is_value_at_alpha(self):
        for w in (Weight.exponential([0, 0.5], 64), Weight.example76(256), Weight.monomial(1, 64)):
            T = reduce(w, EllipticAutomorphism(0.3, GOLDEN))
            assert abs(T.m0 - w.evaluate(0.3)) < 1e-10

    def test_identity_weight_zero_moves_to_alpha(self):
        w = Weight.monomial(1, 64)
        mt = conjugated_weight(w, 0.3)
        assert abs(mt.m0 - 0.3) < 1e-15
        assert len(mt.zeros) == 1 and abs(mt.zeros[0][0] - 0.3) < 1e-15
        T = reduce(w, EllipticAutomorphism(0.3, GOLDEN))
        ctx = prepare(T)
        assert ctx.zero_free is False

    def test_zero_free_circle_radius(self):
        w = Weight.exponential([0, 0.5], 128)
        T = reduce(w, EllipticAutomorphism(0.3, GOLDEN))
        ctx = prepare(T)
        assert abs(ctx.m1 - abs(math.exp(0.15))) < 1e-10

    def test_zero_count_transport(self):
        # zeros 0.2 and -0.5i; Psi_a maps r D onto a disc containing exactly the transported ones
        w = Weight.poly(np.polynomial.polynomial.polyfromroots([0.2, -0.5j]), 64)
        a = 0.3
        mt = conjugated_weight(w, a)
        for r in (0.1, 0.4, 0.8):
            inside = sum(1 for z in (0.2, -0.5j) if abs(psi(a, z)) < r)
            assert count_zeros(mt, r) == inside

    def test_exact_evaluator(self):
        w = Weight.example76(512)
        mt = conjugated_weight(w, 0.3)
        z = 0.2 + 0.1j
        assert abs(mt.func(z) - w.func(psi(0.3, z))) < 1e-15
        assert abs(evaluate(mt.series, z) - mt.func(z)) < 1e-8

    def test_accuracy_metadata(self):
        T = reduce(Weight.one(8), EllipticAutomorphism(0.5, GOLDEN))
        assert T.meta["accuracy_downgrade"] == pytest.approx(2.0)

    def test_verdict_shared(self):
        w = Weight.exponential([0, 0.5], 128)
        T = reduce(w, EllipticAutomorphism(0.6j, GOLDEN))
        ctx = prepare(T)
        r = abs(w.evaluate(0.6j))
        assert classify(T, 2 * r, ctx).cls == "WaelbroeckResolvent"
        assert classify(T, r, ctx).cls == "Undetermined"

    def test_tail_coefficients_exact(self):
        # slowly decaying input: the top coefficients need terms beyond the output order
        mt = conjugated_weight(Weight.example76(256), 0.3)
        ref = conjugated_weight(Weight.example76(1024), 0.3).series.coeffs[:256]
        assert float(np.max(np.abs(mt.series.coeffs - ref))) < 1e-12
