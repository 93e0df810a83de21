import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotspec.errors import PreconditionError
from rotspec.rotation import (Rotation, beta_power, beta_powers, check_g_condition,
                              continued_fraction, resolvent_growth)

GOLDEN = Rotation.aperiodic("golden", tau=2.5)


def mp_power(xi_text, k, dps=80):
    # independent oracle: exp(2 pi i frac(k xi)) in 80-digit arithmetic
    with mpmath.workdps(dps):
        xi = mpmath.mpf(xi_text) if xi_text not in ("golden",) else (mpmath.sqrt(5) - 1) / 2
        t = mpmath.frac(k * xi)
        return complex(mpmath.expjpi(2 * t))


class TestConstruction:
    def test_periodic_requires_coprime(self):
        with pytest.raises(PreconditionError):
            Rotation.periodic(2, 4)

    def test_periodic_needs_q_at_least_two(self):
        with pytest.raises(PreconditionError):
            Rotation.periodic(0, 1)

    def test_parse(self):
        assert Rotation.parse("1/3").is_periodic
        assert not Rotation.parse("golden").is_periodic

    def test_golden_value(self):
        assert abs(GOLDEN.xi - (math.sqrt(5) - 1) / 2) < 1e-16

    def test_golden_gamma_verified(self):
        d = GOLDEN.dioph
        assert d is not None and d.tau == 2.5 and 0 < d.gamma < 0.5

    def test_from_complex_root_of_unity(self):
        rot = Rotation.from_complex(1j)
        assert rot.is_periodic and (rot.p, rot.q) == (1, 4)

    def test_from_complex_generic(self):
        rot = Rotation.from_complex(np.exp(2j))
        assert not rot.is_periodic and rot.limited_precision


class TestBetaPower:
    def test_quarter_turn_square(self):
        assert beta_power(Rotation.periodic(1, 4), 2) == -1

    def test_zero_exponent(self):
        assert beta_power(GOLDEN, 0) == 1
        assert beta_power(Rotation.periodic(2, 5), 0) == 1

    def test_golden_large_k(self):
        k = 10**5
        assert abs(beta_power(GOLDEN, k) - mp_power("golden", k)) < 1e-14

    def test_decimal_xi(self):
        rot = Rotation.aperiodic("0.1234567891011121314")
        for k in (1, 977, 123456):
            assert abs(beta_power(rot, k) - mp_power("0.1234567891011121314", k)) < 1e-14

    def test_periodic_exact_cycle(self):
        for p, q in [(1, 3), (2, 5), (5, 7), (1, 2)]:
            rot = Rotation.periodic(p, q)
            assert beta_power(rot, q) == 1
            assert all(beta_power(rot, k) != 1 for k in range(1, q))

    def test_vectorised(self):
        ks = np.array([0, 1, 5, 10**6])
        assert np.allclose(beta_powers(GOLDEN, ks), [beta_power(GOLDEN, int(k)) for k in ks],
                           atol=0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**5), st.integers(0, 10**5))
    def test_additivity(self, j, k):
        lhs = beta_power(GOLDEN, j + k)
        rhs = beta_power(GOLDEN, j) * beta_power(GOLDEN, k)
        assert abs(lhs - rhs) < 1e-13


class TestContinuedFraction:
    def test_golden_fibonacci(self):
        cf = continued_fraction("golden", depth=30)
        assert cf.quotients[1:] == [1] * 29
        fib = [1, 1]
        while len(fib) < 32:
            fib.append(fib[-1] + fib[-2])
        for i, (p, q) in enumerate(cf.convergents[1:10], start=1):
            assert (p, q) == (fib[i - 1], fib[i])

    def test_rational_terminates(self):
        cf = continued_fraction(Fraction(1, 3))
        assert cf.rational and cf.quotients == [0, 3]

    def test_sqrt2(self):
        cf = continued_fraction("sqrt2m1", depth=25)
        assert cf.quotients[1:] == [2] * 24

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 10**12))
    def test_convergent_bound(self, seed):
        xi = f"0.{seed:012d}7182818284590452353602874"
        cf = continued_fraction(xi, depth=12)
        with mpmath.workdps(60):
            x = mpmath.mpf(xi)
            for (p0, q0), (_, q1) in zip(cf.convergents, cf.convergents[1:]):
                assert abs(x - mpmath.mpf(p0) / q0) < mpmath.mpf(1) / (q0 * q1)


class TestDiophantine:
    def test_golden_one_third(self):
        rep = resolvent_growth(GOLDEN, Fraction(1, 3), 10**4)
        assert rep.violations == []
        # the k-th roots settle near 1 once k is past the first few terms
        assert rep.tail_max_root < 1.01

    def test_distances_match_direct(self):
        rep = resolvent_growth(GOLDEN, Fraction(2, 5), 200)
        lam = np.exp(2j * np.pi * 2 / 5)
        ks = np.arange(1, 201)
        direct = 1 / np.abs(np.array([beta_power(GOLDEN, int(k)) for k in ks]) - lam)
        assert np.allclose(rep.inverse_distances, direct, rtol=1e-9)

    def test_r_zero_rejected(self):
        with pytest.raises(PreconditionError):
            resolvent_growth(GOLDEN, Fraction(0), 100)

    def test_periodic_rejected(self):
        with pytest.raises(PreconditionError):
            resolvent_growth(Rotation.periodic(1, 3), Fraction(1, 3), 100)

    def test_g_power_law(self):
        d = GOLDEN.dioph
        ok, _ = check_g_condition(GOLDEN, lambda q: d.gamma * q ** (-d.tau), 3)
        assert ok

    def test_g_exponential(self):
        ok, _ = check_g_condition(GOLDEN, lambda q: 2.0 ** (-q), 3)
        assert not ok

    def test_g_constant(self):
        ok, _ = check_g_condition(GOLDEN, lambda q: 1.0, 3)
        assert ok
