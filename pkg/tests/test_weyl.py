import math

import numpy as np
import numpy.testing as npt
import pytest
from scipy.integrate import quad

from magspec import geometry as geo, weyl
from magspec.errors import QuadratureNotConverged
from magspec.profiles import BumpProfile
from magspec.weyl import Convention, CorrectionParams, WeylInputs


def brute_force_pairs(W, f1, f2, mu_h):
    """Independent double-loop enumeration of the (m,n) lattice count."""
    if W <= 0:
        return 0
    total = 0
    n = 0
    while W - (2 * n + 1) * mu_h * f2 > 0:
        m = 0
        while W - (2 * m + 1) * mu_h * f1 - (2 * n + 1) * mu_h * f2 > 0:
            total += 1
            m += 1
        n += 1
    return total


class TestWeylDensity:
    def test_unit_coefficient(self):
        inp = WeylInputs(V=1.0, f1=0.0, f2=1.0)
        assert weyl.weyl_density(inp, mode="coefficient") == pytest.approx(
            1.0 / (32 * math.pi ** 2)
        )

    def test_positive_part(self):
        inp = WeylInputs(V=-2.0, f1=0.0, f2=1.0, tau=0.5)
        assert weyl.weyl_density(inp) == 0.0

    def test_arithmetic(self):
        inp = WeylInputs(V=2.0, f1=0.0, f2=1.0, sqrt_g=2.0, tau=0.5)
        assert weyl.weyl_density(inp, mode="coefficient") == pytest.approx(
            9.0 / (16 * math.pi ** 2)
        )

    def test_density_mode_scaling(self):
        inp = WeylInputs(V=1.0, f1=0.0, f2=1.0, h=0.1)
        coeff = weyl.weyl_density(inp, mode="coefficient")
        assert weyl.weyl_density(inp, mode="density") == pytest.approx(coeff * 1e4)


class TestMagneticWeylDensity:
    def test_two_pair_example(self):
        inp = WeylInputs(V=1.0, f1=0.5, f2=1.0, mu=3.0, h=0.1)
        val = weyl.magnetic_weyl_density(inp)
        assert val == pytest.approx(2 * 900 * 0.5 / (4 * math.pi ** 2), rel=1e-12)

    def test_no_pairs_below_threshold(self):
        inp = WeylInputs(V=0.1, f1=0.5, f2=1.0, mu=3.0, h=0.1)
        assert weyl.magnetic_weyl_density(inp) == 0.0

    def test_small_f1_limit(self):
        kw = dict(V=1.0, f2=1.0, mu=3.0, h=0.1, sqrt_g=1.0)
        direct = weyl.magnetic_weyl_density(
            WeylInputs(f1=1e-6, **kw), f1_limit_ratio=1e-9
        )
        limit = weyl.magnetic_weyl_density(WeylInputs(f1=1e-6, **kw))
        assert limit == pytest.approx(direct, rel=1e-4)

    def test_lattice_count_oracle(self, rng):
        # exact agreement with an independent double loop on random draws
        for _ in range(200):
            W = rng.uniform(0.05, 3.0)
            f1 = rng.uniform(0.01, 1.0)
            f2 = f1 + rng.uniform(0.0, 1.5)
            mu_h = rng.uniform(0.02, 0.9)
            assert weyl.lattice_pair_count(W, f1, f2, mu_h) == brute_force_pairs(
                W, f1, f2, mu_h
            )

    def test_monotone_in_level_and_potential(self, rng):
        for _ in range(50):
            f1 = rng.uniform(0.05, 0.8)
            f2 = f1 + rng.uniform(0.1, 1.0)
            mu, h = rng.uniform(2, 10), rng.uniform(0.01, 0.09)
            vals = [
                weyl.magnetic_weyl_density(
                    WeylInputs(V=v, f1=f1, f2=f2, mu=mu, h=h)
                )
                for v in (0.3, 0.8, 1.5)
            ]
            assert vals[0] <= vals[1] <= vals[2]
            w_vals = [
                weyl.weyl_density(WeylInputs(V=1.0, f1=f1, f2=f2, tau=t))
                for t in (-0.2, 0.0, 0.4)
            ]
            assert w_vals[0] <= w_vals[1] <= w_vals[2]

    def test_zero_below_first_threshold(self, rng):
        for _ in range(50):
            f1 = rng.uniform(0.05, 0.8)
            f2 = f1 + rng.uniform(0.1, 1.0)
            mu, h = rng.uniform(2, 10), rng.uniform(0.01, 0.09)
            W = mu * h * (f1 + f2) * rng.uniform(0.1, 0.999)
            inp = WeylInputs(V=W, f1=f1, f2=f2, mu=mu, h=h)
            assert weyl.magnetic_weyl_density(inp) == 0.0

    def test_semiclassical_average(self):
        # averaging over mu*h uniform in [a, 2a] converges to the Weyl value
        V, f1, f2, tau = 1.3, 0.4, 1.1, 0.0
        target = weyl.weyl_density(WeylInputs(V=V, f1=f1, f2=f2, tau=tau),
                                   mode="coefficient")
        for a in (0.05, 0.02):
            s = np.linspace(a, 2 * a, 2001)
            vals = [
                weyl.magnetic_weyl_density(
                    WeylInputs(V=V, f1=f1, f2=f2, tau=tau, mu=si / 0.01, h=0.01),
                    mode="coefficient",
                )
                for si in s
            ]
            avg = np.trapz(vals, s) / a
            assert abs(avg - target) / target <= 5 * a

    def test_convention_flag(self):
        paper = WeylInputs(V=1.0, f1=0.3, f2=1.0, tau=0.25, convention=Convention.PAPER)
        model = WeylInputs(V=1.0, f1=0.3, f2=1.0, tau=0.5, convention=Convention.MODEL)
        assert paper.level == model.level == 1.5


class TestCorrectionDensity:
    def test_zero_profile(self):
        params = CorrectionParams(G=lambda s: 0.0)
        assert weyl.correction_density(params, V=1.0, f2=1.0, mu=4.0, h=0.1) == 0.0

    def test_single_level(self):
        # V=1, f2=1, mu*h=0.4: only n=0 active with gap 0.6... wait gap 0.2 at n=1
        calls = []

        def G(s):
            calls.append(s)
            return 1.0

        params = CorrectionParams(G=G, S0=1.0, kappa=1.0, phi=1.0, g_prime=1.0)
        mu, h = 4.0, 0.1
        val = weyl.correction_density(params, V=1.0, f2=1.0, mu=mu, h=h)
        # active levels: (2n+1)*0.4 < 1 -> n = 0 only, gap = 0.6
        assert len(calls) == 1
        hbar = math.sqrt(mu) * h
        expected = (
            (2 * math.pi) ** -1.5 * mu * h ** -2 * math.sqrt(hbar)
            * 0.6 ** 0.125
        )
        assert val == pytest.approx(expected, rel=1e-12)

    def test_magnitude_bound(self):
        # |result| <= C mu^(5/4) h^(-3/2) with C from ||G||_inf and level count
        params = CorrectionParams(G=lambda s: math.cos(2 * math.pi * s))
        for mu, h in [(16.0, 0.02), (25.0, 0.01), (9.0, 0.05)]:
            val = weyl.correction_density(params, V=1.0, f2=1.0, mu=mu, h=h)
            levels = weyl.landau_level_count(1.0, 1.0, mu * h)
            cap = (2 * math.pi) ** -1.5 * levels * mu ** 1.25 * h ** -1.5
            assert abs(val) <= cap

    def test_periodic_shift_invariance(self):
        g = lambda s: math.cos(2 * math.pi * s)
        shifted = lambda s: g(s + 1.0)
        p1 = CorrectionParams(G=g)
        p2 = CorrectionParams(G=shifted)
        v1 = weyl.correction_density(p1, V=1.0, f2=1.0, mu=9.0, h=0.05)
        v2 = weyl.correction_density(p2, V=1.0, f2=1.0, mu=9.0, h=0.05)
        assert v1 == pytest.approx(v2, rel=1e-12)

    def test_hbar_validation(self):
        params = CorrectionParams(G=lambda s: 1.0)
        with pytest.raises(ValueError):
            weyl.correction_density(params, V=1.0, f2=1.0, mu=400.0, h=0.1)


class TestOscillatorySum:
    def test_zero_profile(self):
        params = CorrectionParams(G=lambda s: 0.0)
        assert weyl.oscillatory_sum(0.4, 0.01, params) == 0.0

    def test_two_term_sum(self):
        params = CorrectionParams(G=lambda s: 1.0)
        val = weyl.oscillatory_sum(0.4, 0.01, params, V=1.0, phi=1.0, f2=1.0,
                                   sqrt_gp=1.0)
        expected = 0.4 * (0.6 ** 0.125 + 0.2 ** 0.125)
        assert val == pytest.approx(expected, rel=1e-12)

    def test_boundedness_over_grid(self):
        params = CorrectionParams(G=lambda s: math.cos(2 * math.pi * s))
        cap = 1.0 * (1.0 + 1.0 / 1.0) * 1.0  # ||G|| (1 + V/f2) * 1
        for eps in np.linspace(0.01, 0.2, 20):
            val = weyl.oscillatory_sum(eps, eps * eps, params, V=1.0)
            assert abs(val) <= cap

    def test_ordering_validation(self):
        params = CorrectionParams(G=lambda s: 1.0)
        with pytest.raises(ValueError):
            weyl.oscillatory_sum(0.01, 0.4, params)


class TestNondegeneracy:
    def test_flat_surface(self):
        rep = weyl.nondegeneracy_diagnostic(
            lambda y: (1.0, 1.0), (0.0, 0.0, 0.0), mu=3.0, h=0.1, eps0=0.05
        )
        assert rep.grad_norm == pytest.approx(0.0, abs=1e-8)
        assert rep.q_class == 0
        assert rep.L == pytest.approx(0.1, abs=1e-8)  # min_n |1 - (2n+1)*0.3|

    def test_quadratic_surface(self):
        rep = weyl.nondegeneracy_diagnostic(
            lambda y: (1.0 + y[0] ** 2 + y[1] ** 2 + y[2] ** 2, 1.0),
            (0.0, 0.0, 0.0), mu=3.0, h=0.1, eps0=0.5,
        )
        assert rep.q_class == 3
        npt.assert_allclose(rep.hess_eigs, (2.0, 2.0, 2.0), atol=1e-6)

    def test_linear_surface(self):
        eps0 = 0.3
        rep = weyl.nondegeneracy_diagnostic(
            lambda y: (1.0 + y[0], 1.0), (0.0, 0.0, 0.0), mu=3.0, h=0.1, eps0=eps0,
        )
        assert rep.grad_norm == pytest.approx(1.0, abs=1e-8)
        assert rep.L >= eps0

    def test_scale_invariance_of_q_class(self, rng):
        def surface(scale):
            return lambda y: (
                scale * (1.0 + y[0] ** 2 - 2 * y[1] ** 2 + 0.2 * y[2]),
                scale * 1.0,
            )

        r1 = weyl.nondegeneracy_diagnostic(surface(1.0), (0.1, 0.0, -0.1),
                                           mu=3.0, h=0.1, eps0=0.5)
        r2 = weyl.nondegeneracy_diagnostic(surface(7.3), (0.1, 0.0, -0.1),
                                           mu=3.0, h=0.1, eps0=0.5)
        assert r1.q_class == r2.q_class


def product_bump(radius):
    bump = BumpProfile(radius=radius)

    def psi(pts):
        pts = np.atleast_2d(pts)
        out = np.ones(pts.shape[0])
        for d in range(4):
            out *= bump(pts[:, d])
        return out

    return psi


class TestMagneticWeylIntegral:
    def test_zero_weight(self):
        model = geo.separable_model(3.0, 0.1)
        val, err = weyl.magnetic_weyl_integral(
            model, lambda p: np.zeros(np.atleast_2d(p).shape[0]), 0.0,
            bounds=np.array([[-0.4, 0.4]] * 4), resolution=8, tol=1e-3,
        )
        assert val == 0.0 and err == 0.0

    def test_separable_oracle(self):
        # thresholds depend on x1 only: compare to the per-(m,n) 1D reduction
        mu, h = 3.0, 0.1
        model = geo.separable_model(mu, h)
        R = 0.4
        bump = BumpProfile(radius=R)
        psi = product_bump(R)
        val, err = weyl.magnetic_weyl_integral(
            model, psi, 0.0, bounds=np.array([[-R, R]] * 4), resolution=16,
            convention=Convention.MODEL, tol=1e-4,
        )
        mu_h = mu * h
        total = 0.0
        for n in range(40):
            Rn = 1.0 - (2 * n + 1) * mu_h
            if Rn <= 0:
                break
            m = 0
            while True:
                c = min(Rn / ((2 * m + 1) * mu_h), R)
                v, _ = quad(lambda x: x * bump(x), 0.0, c, limit=200)
                total += 2.0 * v
                m += 1
                if v < 1e-9:
                    total += bump(0.0) * (Rn / (2 * mu_h)) ** 2 / m
                    break
        oracle = mu ** 2 / h ** 2 / (4 * math.pi ** 2) * total * bump.mass() ** 3
        assert val == pytest.approx(oracle, rel=1e-4)

    def test_small_mu_h_matches_weyl(self):
        # mu*h small: ratio to the field-free Weyl integral within 5 mu h
        mu, h = 4.0, 0.0125  # mu*h = 0.05
        model = geo.constant_field_model(mu, h, f1=0.6, f2=1.0)
        R = 0.35
        psi = product_bump(R)
        val, _ = weyl.magnetic_weyl_integral(
            model, psi, 0.0, bounds=np.array([[-R, R]] * 4), resolution=10,
            convention=Convention.PAPER, tol=5e-2,
        )
        bump = BumpProfile(radius=R)
        wd = weyl.weyl_density(WeylInputs(V=1.0, f1=0.6, f2=1.0, h=h))
        weyl_integral = wd * bump.mass() ** 4
        ratio = val / weyl_integral
        assert 1 - 5 * mu * h <= ratio <= 1 + 5 * mu * h

    def test_not_converged_raises(self):
        model = geo.separable_model(3.0, 0.1)
        psi = product_bump(0.4)
        with pytest.raises(QuadratureNotConverged):
            weyl.magnetic_weyl_integral(
                model, psi, 0.0, bounds=np.array([[-0.4, 0.4]] * 4),
                resolution=4, tol=1e-9,
            )


class TestMagneticWeylIntegral1D:
    def test_matches_pair_oracle(self):
        mu, h, k = 5.0, 0.07, 0.3
        bump = BumpProfile(radius=0.45)
        val, err = weyl.magnetic_weyl_integral_1d(
            bump, bump.support, mu, h, k=k, convention=Convention.MODEL
        )
        # independent oracle: per-(m,n) interval measures
        mu_h = mu * h
        total = 0.0
        for n in range(40):
            base = 1.0 - (2 * n + 1) * mu_h
            for sign in (1.0, -1.0):
                m = 0
                while True:
                    denom = (2 * m + 1) * mu_h - sign * k
                    if denom <= 0:
                        m += 1
                        continue
                    c = min(base / denom, 0.45)
                    if c <= 0:
                        break
                    v, _ = quad(lambda x: x * bump(x), 0.0, c, limit=200)
                    total += v
                    m += 1
                    if v < 1e-10:
                        total += bump(0.0) * (base / (2 * mu_h)) ** 2 / (2 * m)
                        break
            if base <= 0:
                break
        oracle = mu ** 2 / h ** 2 / (4 * math.pi ** 2) * total
        assert val == pytest.approx(oracle, rel=2e-5)
        assert err < abs(val) * 1e-3
