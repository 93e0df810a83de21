import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotspec.errors import (NonFiniteCoefficient, OrderMismatch, PreconditionError,
                            SeriesOverflow, ZeroConstantTerm)
from rotspec.series import (BORDERLINE, CONVERGENT, DIVERGENT, TruncatedSeries, add,
                            compose_mobius, compose_rotation, eval_circle, evaluate, exp_series,
                            log_series, mobius_series, mul, radius_estimate, shift_down, shift_up)

S = TruncatedSeries


def coeff_arrays(n, bound=1.0):
    part = st.floats(-bound, bound, allow_nan=False, allow_infinity=False)
    return st.lists(st.tuples(part, part), min_size=n, max_size=n).map(
        lambda xs: np.array([complex(a, b) for a, b in xs]))


class TestConstruction:
    def test_rejects_non_finite(self):
        with pytest.raises(NonFiniteCoefficient):
            S(np.array([1.0, np.nan]))

    def test_immutable(self):
        f = S(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            f.coeffs[0] = 3

    def test_pairs_round_trip(self):
        f = S(np.array([1 + 2j, -0.5]))
        assert np.array_equal(S.from_pairs(f.to_pairs(), 2).coeffs, f.coeffs)

    def test_order_mismatch(self):
        with pytest.raises(OrderMismatch):
            add(S.constant(1, 3), S.constant(1, 4))


class TestArithmetic:
    def test_add_cancellation(self):
        assert np.allclose(add(S(np.array([1, 1])), S(np.array([1, -1]))).coeffs, [2, 0])

    def test_add_disjoint(self):
        out = add(S.monomial(1, 4), S.monomial(2, 4))
        assert np.array_equal(out.coeffs, [0, 1, 1, 0])

    def test_add_zero(self):
        f = S(np.array([0.3, -1j, 2]))
        assert np.array_equal(add(f, S.zeros(3)).coeffs, f.coeffs)

    def test_mul_difference_of_squares(self):
        out = mul(S(np.array([1, 1, 0, 0])), S(np.array([1, -1, 0, 0])))
        assert np.array_equal(out.coeffs, [1, 0, -1, 0])

    def test_mul_identity(self):
        f = S(np.array([0.3, -1j, 2]))
        assert np.array_equal(mul(f, S.constant(1, 3)).coeffs, f.coeffs)

    def test_geometric_times_one_minus_z(self):
        geo = S(np.ones(8))
        out = mul(geo, S(np.array([1, -1] + [0] * 6)))
        # direct convolution oracle
        ref = np.convolve(np.ones(8), [1, -1])[:8]
        assert np.array_equal(out.coeffs, ref)
        assert np.array_equal(out.coeffs, [1, 0, 0, 0, 0, 0, 0, 0])

    @settings(max_examples=40, deadline=None)
    @given(coeff_arrays(12), coeff_arrays(12), coeff_arrays(12))
    def test_mul_commutative_associative(self, a, b, c):
        f, g, h = S(a), S(b), S(c)
        assert np.max(np.abs(mul(f, g).coeffs - mul(g, f).coeffs)) < 1e-12
        assert np.max(np.abs(mul(mul(f, g), h).coeffs - mul(f, mul(g, h)).coeffs)) < 1e-12


class TestExpLog:
    def test_exp_zero(self):
        assert np.array_equal(exp_series(S.zeros(4)).coeffs, [1, 0, 0, 0])

    def test_exp_z(self):
        out = exp_series(S.monomial(1, 5))
        assert np.allclose(out.coeffs, [1, 1, 1 / 2, 1 / 6, 1 / 24], atol=1e-15)

    def test_exp_log_one_plus_z(self):
        f = S(np.array([1, 1] + [0] * 62))
        assert np.max(np.abs(exp_series(log_series(f)).coeffs - f.coeffs)) < 1e-12

    def test_log_exp(self):
        g = S(np.array([0, 1, 0, 1] + [0] * 60))
        assert np.max(np.abs(log_series(exp_series(g)).coeffs - g.coeffs)) < 1e-12

    def test_log_one(self):
        assert np.array_equal(log_series(S.constant(1, 5)).coeffs, np.zeros(5))

    def test_log_needs_constant_term(self):
        with pytest.raises(ZeroConstantTerm):
            log_series(S.monomial(1, 4))

    def test_exp_overflow(self):
        with pytest.raises(SeriesOverflow):
            exp_series(S.constant(800, 4))

    def test_log_of_one_minus_z(self):
        n = np.arange(1, 32)
        out = log_series(S(np.array([1, -1] + [0] * 30))).coeffs
        assert np.allclose(out[1:], -1 / n, atol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(coeff_arrays(64, 0.5), st.floats(1e-6, 3.0), st.floats(-math.pi, math.pi))
    def test_round_trip_property(self, c, mod, arg):
        c = c.copy()
        # tail l1 mass below |f0| / 2 keeps f zero-free on the closed disc
        c[1:] *= mod * 0.5 ** np.arange(1, 64)
        c[0] = mod * complex(math.cos(arg), math.sin(arg))
        f = S(c)
        err = np.max(np.abs(exp_series(log_series(f)).coeffs - f.coeffs))
        assert err < 1e-10 * max(1.0, np.max(np.abs(c)))


class TestRotationAndMobius:
    def test_monomial(self):
        beta = np.exp(0.7j)
        out = compose_rotation(S.monomial(3, 5), beta)
        assert abs(out.coeffs[3] - beta**3) < 1e-15

    def test_identity(self):
        f = S(np.array([1, 2, 3j]))
        assert np.array_equal(compose_rotation(f, 1.0).coeffs, f.coeffs)

    def test_quarter_turn(self):
        out = compose_rotation(S(np.array([1, 1, 1])), 1j)
        assert np.allclose(out.coeffs, [1, 1j, -1], atol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(coeff_arrays(32), st.floats(0, 2 * math.pi))
    def test_rotation_inverse(self, c, t):
        beta = complex(math.cos(t), math.sin(t))
        f = S(c)
        back = compose_rotation(compose_rotation(f, beta), beta.conjugate())
        assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-13

    def test_mobius_at_zero_is_reflection(self):
        c = np.array([1, 2, 3, 4j, 5])
        out = compose_mobius(S(c), 0)
        assert np.allclose(out.coeffs, c * (-1.0) ** np.arange(5))

    def test_identity_gives_mobius_series(self):
        alpha = 0.3 - 0.2j
        out = compose_mobius(S.monomial(1, 20), alpha)
        # geometric expansion of (a - z)/(1 - conj(a) z)
        n = np.arange(1, 20)
        ref = np.concatenate(([alpha], np.conj(alpha) ** (n - 1) * (abs(alpha) ** 2 - 1)))
        assert np.max(np.abs(out.coeffs - ref)) < 1e-14
        assert np.max(np.abs(mobius_series(alpha, 20).coeffs - ref)) < 1e-15

    def test_involution(self):
        rng = np.random.default_rng(1)
        # radius 2 keeps the composed tail below rounding at N = 128
        c = (rng.normal(size=128) + 1j * rng.normal(size=128)) * 0.5 ** np.arange(128)
        f = S(c)
        twice = compose_mobius(compose_mobius(f, 0.3), 0.3)
        err = float(np.max(np.abs(twice.coeffs - f.coeffs)))
        assert err < 1e-10

    @settings(max_examples=25, deadline=None)
    @given(coeff_arrays(128), st.floats(0, 0.5), st.floats(0, 2 * math.pi))
    def test_involution_property(self, c, rad, t):
        alpha = rad * complex(math.cos(t), math.sin(t))
        f = S(c * 0.5 ** np.arange(128))
        twice = compose_mobius(compose_mobius(f, alpha), alpha)
        err = float(np.max(np.abs(twice.coeffs - f.coeffs)))
        assert err < 1e-9

    def test_mobius_pointwise(self):
        alpha = 0.25 + 0.1j
        f = S(0.5 ** np.arange(64))
        g = compose_mobius(f, alpha)
        z = 0.2 - 0.1j
        w = (alpha - z) / (1 - np.conj(alpha) * z)
        assert abs(evaluate(g, z) - 1 / (1 - 0.5 * w)) < 1e-12

    def test_rejects_unit_alpha(self):
        with pytest.raises(PreconditionError):
            compose_mobius(S.monomial(1, 4), 1.0)


class TestRadius:
    def test_geometric_half(self):
        est = radius_estimate(S(0.5 ** np.arange(256)))
        assert abs(est.value - 2.0) < 0.1 and est.confidence == CONVERGENT

    def test_geometric_two(self):
        est = radius_estimate(S(2.0 ** np.arange(256)))
        assert abs(est.value - 0.5) < 0.025 and est.confidence == DIVERGENT

    def test_polynomial(self):
        est = radius_estimate(S(np.array([1, 2, 3] + [0] * 61)))
        assert est.value == math.inf and est.confidence == CONVERGENT

    @pytest.mark.parametrize("rho", [0.5, 0.9, 1.1, 2.0])
    def test_rho_recovery(self, rho):
        n = np.arange(512)
        with np.errstate(under="ignore"):
            c = np.exp(-n * math.log(rho))
        est = radius_estimate(S(c))
        assert abs(est.value - rho) < 0.05 * rho

    def test_borderline_band(self):
        est = radius_estimate(S(np.ones(256)))
        assert est.confidence == BORDERLINE


class TestShiftsAndEvaluation:
    def test_shift_up(self):
        assert np.array_equal(shift_up(S(np.array([1, 0, 0]))).coeffs, [0, 1, 0, 0])

    def test_shift_round_trip(self):
        f = S(np.array([1, 2j, 3]))
        assert np.array_equal(shift_down(shift_up(f)).coeffs, f.coeffs)

    def test_shift_down_needs_zero_constant(self):
        with pytest.raises(PreconditionError):
            shift_down(S(np.array([1, 0, 0])))

    def test_evaluate(self):
        assert evaluate(S(np.array([1, 1])), 0.5) == pytest.approx(1.5)

    def test_evaluate_outside_disc(self):
        with pytest.raises(PreconditionError):
            evaluate(S(np.array([1, 1])), 1.0)

    def test_circle_constant(self):
        assert np.allclose(eval_circle(S.constant(1, 3), 0.7, 4), [1, 1, 1, 1])

    def test_circle_identity(self):
        assert np.allclose(eval_circle(S.monomial(1, 4), 0.5, 4), [0.5, 0.5j, -0.5, -0.5j],
                           atol=1e-15)

    def test_circle_matches_horner(self):
        rng = np.random.default_rng(2)
        f = S(rng.normal(size=40) + 1j * rng.normal(size=40))
        r = 0.6
        z = r * np.exp(2j * np.pi * np.arange(16) / 16)
        assert np.allclose(eval_circle(f, r, 16), evaluate(f, z), atol=1e-12)
