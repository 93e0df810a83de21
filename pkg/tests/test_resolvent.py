import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotspec.classifier import condition_31_from_log
from rotspec.errors import (ContourRejected, NearPole, PreconditionError,
                            StructuralTestFailed, ZeroAtOrigin)
from rotspec.operator import OperatorHandle, apply
from rotspec.resolvent import (IN_RESOLVENT, OUTSIDE_HOL, eigen_periodic, eigenfunction,
                               pole_distances, resolvent_blowup, rotate_resolvent, solve,
                               solve_many, spectral_projection)
from rotspec.rotation import Rotation, beta_power, continued_fraction
from rotspec.series import (DIVERGENT, TruncatedSeries, exp_series, shift_down,
                            shift_up)
from rotspec.weights import Weight

GOLDEN = Rotation.aperiodic("golden")
S = TruncatedSeries


def handle(w, rot=GOLDEN):
    return OperatorHandle(w, rot, w.order)


def residual(T, lam, sol, g):
    return float(np.max(np.abs(lam * sol.f.coeffs - apply(T, sol.f).coeffs - g.coeffs)))


class TestSolve:
    def test_unit_weight_outside_circle(self):
        N = 64
        T = handle(Weight.one(N))
        g = S(0.5 ** np.arange(N) * (1 + 1j))
        sol = solve(T, 2.0, g)
        beta_n = T.powers
        assert np.allclose(sol.f.coeffs, g.coeffs / (2.0 - beta_n), atol=1e-15)
        assert sol.verdict == IN_RESOLVENT
        assert abs(sol.radius.value - 2.0) < 0.1

    def test_identity_weight_closed_form(self):
        N = 1024
        T = handle(Weight.monomial(1, N))
        sol = solve(T, 0.5, S.monomial(0, N))
        n = np.arange(201)
        # (lambda - T) f = 1 gives f_n = beta^{n(n-1)/2} / lambda^{n+1}
        closed = np.array([beta_power(GOLDEN, int(k * (k - 1) // 2)) for k in n]) / 0.5 ** (n + 1)
        rel = float(np.max(np.abs(sol.f.coeffs[:201] - closed) / np.abs(closed)))
        assert rel < 1e-10
        assert sol.verdict == OUTSIDE_HOL and sol.radius.confidence == DIVERGENT

    def test_forced_pole(self):
        T = handle(Weight.one(16))
        with pytest.raises(NearPole) as err:
            solve(T, 1.0, S.monomial(0, 16))
        assert err.value.n == 0

    def test_pole_distances(self):
        T = handle(Weight.poly([0.5, 1], 16))
        dist, idx = pole_distances(T, 0.5 * T.powers[3])
        assert dist[0] < 1e-15 and idx[0] == 3

    def test_solve_many_matches_solve(self):
        N = 64
        T = handle(Weight.poly([0.5, 0.2j, 0.1], N))
        g = S(np.ones(N) * 0.3 ** np.arange(N))
        lams = [2.0, 1.5j, -0.9 + 0.1j, 0.5 * T.powers[2]]
        many = solve_many(T, lams, g, threads=2, chunk=1)
        for lam, s in zip(lams[:3], many[:3]):
            assert np.allclose(s.f.coeffs, solve(T, lam, g).f.coeffs, atol=1e-13)
        assert many[3].verdict == "NearPole"

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31))
    def test_exactness(self, seed):
        rng = np.random.default_rng(seed)
        N = 256
        deg = rng.integers(0, 9)
        c = rng.uniform(0, 1, deg + 1) * np.exp(2j * np.pi * rng.uniform(size=deg + 1))
        T = handle(Weight.poly(c, N), Rotation.aperiodic(f"{rng.uniform(0.05, 0.95):.15f}"))
        lam = 2 * np.exp(2j * np.pi * rng.uniform())
        dist, _ = pole_distances(T, lam)
        if dist[0] < 1e-6:
            return
        g = S((rng.normal(size=N) + 1j * rng.normal(size=N)) * 0.5 ** np.arange(N))
        sol = solve(T, lam, g)
        if sol.overflow_at is not None:
            return
        assert sol.residual < 1e-10


class TestRotateResolvent:
    def test_zero_constant_rhs(self):
        N = 64
        T = handle(Weight.poly([0.3, 0.5], N))
        g = S(np.concatenate(([0], 0.5 ** np.arange(1, N))))
        mu = 1.7 + 0.2j
        lhs = rotate_resolvent(T, mu, g)
        inner = solve(T, mu, S(np.concatenate((np.conj(T.beta) * shift_down(g).coeffs, [0]))))
        rhs = shift_up(inner.f.truncate(N - 1))
        assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-14)

    def test_matches_direct(self):
        N = 128
        T = handle(Weight.poly([0.4, 0.3j, -0.2], N))
        g = S(0.6 ** np.arange(N) * (1 - 0.5j))
        mu = 1.3 * np.exp(0.4j)
        direct = solve(T, T.beta * mu, g).f
        assert np.allclose(rotate_resolvent(T, mu, g).coeffs, direct.coeffs, atol=1e-8)

    def test_singular_point(self):
        T = handle(Weight.poly([0.4, 1], 16))
        with pytest.raises(PreconditionError):
            rotate_resolvent(T, 0.4 * np.conj(T.beta), S.monomial(0, 16))


class TestEigen:
    def test_unit_weight(self):
        T = handle(Weight.one(32))
        pair = eigenfunction(T, 3)
        assert np.allclose(pair.f.coeffs, S.monomial(3, 32).coeffs)
        assert abs(pair.lam - beta_power(GOLDEN, 3)) < 1e-15 and pair.residual == 0

    def test_single_log_coefficient(self):
        N = 256
        T = handle(Weight.exponential([0, 0.5], N))
        pair = eigenfunction(T, 0)
        ref = exp_series(S.monomial(1, N, 0.5 / (1 - T.beta)))
        assert np.allclose(pair.f.coeffs, ref.coeffs, atol=1e-14)
        assert pair.residual < 1e-10

    def test_zero_at_origin(self):
        with pytest.raises(ZeroAtOrigin):
            eigenfunction(handle(Weight.monomial(1, 16)), 0)

    def test_adversarial_log_fails(self):
        # log coefficients |1 - beta^q| 2^q at continued-fraction denominators
        N = 256
        qs = [q for _, q in continued_fraction("golden", depth=14).convergents if 2 <= q < N]
        logc = np.zeros(N, dtype=complex)
        for q in qs:
            logc[q] = abs(1 - beta_power(GOLDEN, q)) * 2.0**q
        assert condition_31_from_log(logc, GOLDEN).confidence == DIVERGENT

    def test_periodic_unit_weight(self):
        N = 32
        T = handle(Weight.one(N), Rotation.periodic(1, 2))
        es = eigen_periodic(T, 0, dims=2)
        assert es.rank == 2 and es.lam == 1
        assert np.allclose(es.pairs[0].f.coeffs, S.monomial(0, N).coeffs)
        assert np.allclose(es.pairs[1].f.coeffs, exp_series(S.monomial(2, N)).coeffs)
        assert all(p.residual < 1e-12 for p in es.pairs)

    def test_periodic_odd(self):
        T = handle(Weight.one(16), Rotation.periodic(1, 2))
        f = S.monomial(1, 16)
        assert np.allclose(apply(T, f).coeffs, -f.coeffs)
        es = eigen_periodic(T, 1)
        assert es.lam == -1 and es.pairs[0].residual < 1e-12

    def test_periodic_structural_failure(self):
        T = handle(Weight.exponential([0, 0, 1], 16), Rotation.periodic(1, 2))
        with pytest.raises(StructuralTestFailed):
            eigen_periodic(T, 0)


class TestProjection:
    def setup_method(self):
        self.N = 128
        self.T = handle(Weight.exponential([np.log(1.0), 0.5], self.N))
        rng = np.random.default_rng(5)
        self.f = S((rng.normal(size=self.N) + 1j * rng.normal(size=self.N)) * 0.5 ** np.arange(self.N))

    def test_outer_contour_is_identity(self):
        P = spectral_projection(self.T, 2.0, self.f)
        assert float(np.max(np.abs(P.series.coeffs - self.f.coeffs))) < 1e-8

    def test_inner_contour_is_zero(self):
        P = spectral_projection(self.T, 0.5, self.f)
        assert float(np.max(np.abs(P.series.coeffs))) < 1e-8

    def test_idempotent(self):
        P1 = spectral_projection(self.T, 2.0, self.f).series
        P2 = spectral_projection(self.T, 2.0, P1).series
        assert float(np.max(np.abs(P2.coeffs - P1.coeffs))) < 1e-7

    def test_contour_through_spectrum_rejected(self):
        with pytest.raises(ContourRejected):
            spectral_projection(self.T, 1.0, self.f)


class TestBlowup:
    def test_radial_approach(self):
        N = 600
        T = handle(Weight.one(N), Rotation.aperiodic("golden", tau=2.5))
        lam0 = np.exp(2j * np.pi / 3)
        lams = [(1 + 10.0**-j) * lam0 for j in (1, 2)]
        vals = resolvent_blowup(T, lams, 512)
        for lam, v in zip(lams, vals):
            ref = 1 / abs(lam - lam0)
            assert ref / 2 <= v <= 2 * ref

    def test_needs_order(self):
        with pytest.raises(PreconditionError):
            resolvent_blowup(handle(Weight.one(16)), [2.0], 20)
