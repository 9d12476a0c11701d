import numpy as np
import numpy.testing as npt
import pytest

from magspec import geometry as geo
from magspec.errors import NearDegenerateFrames, OnLambda
from magspec.geometry import Point4, ZoneConstants, ZoneLabel


def fd_exterior_derivative(p, step=1e-4):
    """Central-difference curl of the vector potential: d_j V_k - d_k V_j."""
    J = np.zeros((4, 4))
    for j in range(4):
        e = np.zeros(4)
        e[j] = step
        J[j, :] = (geo.vector_potential(p + e) - geo.vector_potential(p - e)) / (2 * step)
    return J - J.T


class TestTwoForm:
    def test_origin_only_f12(self):
        F = geo.two_form([0, 0, 0, 0])
        assert F[0, 1] == 1.0 and F[1, 0] == -1.0
        assert np.count_nonzero(F) == 2

    def test_block_diagonal_on_x1_axis(self):
        F = geo.two_form([0.1, 0, 0, 0])
        expected = np.zeros((4, 4))
        expected[0, 1], expected[1, 0] = 1.0, -1.0
        expected[2, 3], expected[3, 2] = 0.2, -0.2
        npt.assert_allclose(F, expected)

    def test_pfaffian_vanishes_on_degeneracy_surface(self):
        F = geo.two_form([0, 0, 0.3, 0.4])
        # direct arithmetic: -0.25 + 0.16 + 0.09 = 0
        assert geo.pfaffian(F) == pytest.approx(0.0, abs=1e-15)

    def test_antisymmetry_exact(self, rng):
        for _ in range(50):
            p = rng.uniform(-1, 1, 4)
            F = geo.two_form(p)
            assert np.all(F + F.T == 0.0)

    def test_pfaffian_is_twice_x1(self, rng):
        for _ in range(50):
            p = rng.uniform(-1, 1, 4)
            assert geo.pfaffian(geo.two_form(p)) == pytest.approx(2 * p[0], rel=1e-12)

    def test_closedness(self, rng):
        # d(dV) = 0: cyclic sum of dF_jk/dx_l over a point sample
        step = 1e-4
        worst = 0.0
        for _ in range(40):
            p = rng.uniform(-0.9, 0.9, 4)
            dF = np.zeros((4, 4, 4))
            for l in range(4):
                e = np.zeros(4)
                e[l] = step
                dF[l] = (geo.two_form(p + e) - geo.two_form(p - e)) / (2 * step)
            for i in range(4):
                for j in range(4):
                    for k in range(4):
                        worst = max(worst, abs(dF[i][j, k] + dF[j][k, i] + dF[k][i, j]))
        assert worst <= 10 * step ** 2


class TestVectorPotential:
    def test_zero_at_origin(self):
        npt.assert_array_equal(geo.vector_potential([0, 0, 0, 0]), np.zeros(4))

    def test_on_x1_axis(self):
        npt.assert_allclose(geo.vector_potential([0.7, 0, 0, 0]), [0, 0.7, 0, 0])

    def test_exterior_derivative_matches_two_form(self, rng):
        for _ in range(20):
            p = rng.uniform(-1, 1, 4)
            err = np.abs(fd_exterior_derivative(p) - geo.two_form(p)).max()
            assert err <= 1e-6


class TestFieldInvariants:
    def test_block_diagonal_values(self, martinet):
        inv = geo.field_invariants([0.1, 0, 0, 0], martinet)
        assert inv.f1 == pytest.approx(0.2, rel=1e-12)
        assert inv.f2 == pytest.approx(1.0, rel=1e-12)

    def test_on_surface(self, martinet):
        inv = geo.field_invariants([0, 0, 0.3, 0.4], martinet)
        assert inv.f1 == pytest.approx(0.0, abs=1e-12)
        assert inv.f2 == pytest.approx(1.25, rel=1e-12)

    def test_f1_vanishes_on_surface_samples(self, martinet, rng):
        for _ in range(25):
            p = np.array([0.0, *rng.uniform(-0.7, 0.7, 3)])
            inv = geo.field_invariants(p, martinet)
            assert inv.f1 <= 1e-12

    def test_eigen_residual(self, martinet, rng):
        for _ in range(25):
            p = rng.uniform(-0.7, 0.7, 4)
            if abs(p[0]) < 1e-3:
                continue
            inv = geo.field_invariants(p, martinet)
            F = inv.two_form
            M = np.asarray(martinet.metric(p)) @ F
            scale = np.abs(F).max()
            for f, frame in ((inv.f1, inv.frame1), (inv.f2, inv.frame2)):
                res = np.abs(M @ frame - 1j * f * frame).max()
                assert res <= 1e-10 * scale

    def test_frame_normalization(self, martinet, rng):
        # metric pairings: <k_a, conj(k_b)> = 2 delta_ab, <k_a, k_b> = 0
        for _ in range(25):
            p = rng.uniform(-0.7, 0.7, 4)
            if abs(p[0]) < 1e-3:
                continue
            inv = geo.field_invariants(p, martinet)
            k = [inv.frame1, inv.frame2]
            for a in range(2):
                for b in range(2):
                    pair = np.dot(k[a], np.conj(k[b]))
                    npt.assert_allclose(pair, 2.0 if a == b else 0.0, atol=1e-9)
                    iso = np.dot(k[a], k[b])
                    assert abs(iso) <= 1e-9

    def test_sum_and_product_identities(self, martinet, rng):
        for _ in range(25):
            p = rng.uniform(-0.7, 0.7, 4)
            inv = geo.field_invariants(p, martinet)
            F = inv.two_form
            sum_sq = sum(F[i, j] ** 2 for i in range(4) for j in range(i + 1, 4))
            assert inv.f1 ** 2 + inv.f2 ** 2 == pytest.approx(sum_sq, rel=1e-10)
            assert inv.f1 * inv.f2 == pytest.approx(abs(geo.pfaffian(F)), abs=1e-10)

    def test_near_degenerate_frames_raises(self):
        model = geo.constant_field_model(mu=10.0, h=0.01, f1=1.0, f2=1.0)
        with pytest.raises(NearDegenerateFrames) as exc:
            geo.field_invariants([0.2, 0.1, 0.3, 0.0], model)
        assert exc.value.f1 == pytest.approx(1.0, rel=1e-9)

    def test_intensity_comparability(self, martinet, rng):
        # f1 / |x1| within [1, 2.5] on the stated sample region
        ratios = []
        for _ in range(400):
            x1 = rng.uniform(-0.3, 0.3)
            if abs(x1) < 1e-3:
                continue
            r = rng.uniform(0, 0.5)
            th = rng.uniform(0, 2 * np.pi)
            p = np.array([x1, rng.uniform(-0.5, 0.5), r * np.cos(th), r * np.sin(th)])
            f1, _ = geo.intensities(p[None, :], martinet)
            ratios.append(float(f1[0]) / abs(x1))
        assert min(ratios) >= 1.0 and max(ratios) <= 2.5

    def test_circular_symmetry(self, martinet, rng):
        for _ in range(20):
            p = rng.uniform(-0.6, 0.6, 4)
            a = rng.uniform(0, 2 * np.pi)
            rot = p.copy()
            rot[2] = np.cos(a) * p[2] - np.sin(a) * p[3]
            rot[3] = np.sin(a) * p[2] + np.cos(a) * p[3]
            f1a, f2a = geo.intensities(p[None, :], martinet)
            f1b, f2b = geo.intensities(rot[None, :], martinet)
            assert abs(f1a[0] - f1b[0]) <= 1e-12
            assert abs(f2a[0] - f2b[0]) <= 1e-12

    def test_batch_matches_eig_path(self, martinet, rng):
        pts = rng.uniform(-0.7, 0.7, (30, 4))
        f1, f2 = geo.intensities(pts, martinet)
        for i, p in enumerate(pts):
            if abs(p[0]) < 1e-6:
                continue
            inv = geo.field_invariants(p, martinet)
            assert f1[i] == pytest.approx(inv.f1, abs=1e-10)
            assert f2[i] == pytest.approx(inv.f2, abs=1e-10)


class TestZones:
    def test_outer_strict_ii_example(self):
        model = geo.martinet_model(mu=100.0, h=0.005)
        k = ZoneConstants(C=1.0, c=1.0, eps=0.1, delta=0.01)
        label = geo.classify_zone([0.3, 0.0, 0.5, 0.0], 0.5, model, k)
        assert label is ZoneLabel.OUTER_STRICT_II

    def test_on_surface_always_inner(self, martinet, rng):
        inner = {ZoneLabel.INNER_CORE, ZoneLabel.INNER_TRUE, ZoneLabel.INNER_BULK}
        for _ in range(30):
            p = np.array([0.0, *rng.uniform(-0.8, 0.8, 3)])
            assert geo.classify_zone(p, rng.uniform(0, 1), martinet) in inner

    def test_inner_family_split_example(self):
        model = geo.martinet_model(mu=1e4, h=1e-5)
        k = ZoneConstants(C=2.0, c=1.0, eps=0.05, delta=0.01)
        p = [0.001, 0.0, 0.4, 0.0]
        # gamma = 0.001 <= mu^-1/2 r^1/2 ~ 0.0063: inner family;
        # rho r vs eps mu gamma^2 = 5e-4 splits true/bulk
        assert geo.classify_zone(p, 0.5, model, k) is ZoneLabel.INNER_TRUE
        assert geo.classify_zone(p, 1e-4, model, k) is ZoneLabel.INNER_BULK

    def test_partition_unique_and_rotation_invariant(self, martinet, rng):
        for _ in range(200):
            p = rng.uniform(-1, 1, 4)
            rho = rng.uniform(0, 1)
            label = geo.classify_zone(p, rho, martinet)
            assert isinstance(label, ZoneLabel)
            a = rng.uniform(0, 2 * np.pi)
            rot = p.copy()
            rot[2] = np.cos(a) * p[2] - np.sin(a) * p[3]
            rot[3] = np.sin(a) * p[2] + np.cos(a) * p[3]
            assert geo.classify_zone(rot, rho, martinet) is label


class TestMagneticLine:
    def test_quarter_turn(self):
        # pitch -r^2 per unit angle, from Ker F cap T Sigma directly
        r = 0.5
        p = geo.magnetic_line([0, 0, r, 0], np.pi / 2)
        npt.assert_allclose(
            p.as_array(), [0, -r * r * np.pi / 2, 0, r], atol=1e-14
        )

    def test_identity_at_zero(self, rng):
        for _ in range(10):
            p0 = np.array([0.0, *rng.uniform(-0.5, 0.5, 3)])
            if np.hypot(p0[2], p0[3]) < 1e-6:
                continue
            p = geo.magnetic_line(p0, 0.0)
            npt.assert_allclose(p.as_array(), p0, atol=1e-15)

    def test_radius_preserved(self, rng):
        for _ in range(10):
            p0 = np.array([0.0, *rng.uniform(-0.5, 0.5, 3)])
            r0 = np.hypot(p0[2], p0[3])
            if r0 < 1e-6:
                continue
            s = rng.uniform(-3, 3)
            p = geo.magnetic_line(p0, s)
            assert p.r == pytest.approx(r0, rel=1e-14)

    def test_on_lambda_raises(self):
        with pytest.raises(OnLambda):
            geo.magnetic_line([0, 0.3, 0, 0], 1.0)

    def test_precondition_off_surface(self):
        with pytest.raises(ValueError):
            geo.magnetic_line([0.1, 0, 0.5, 0], 1.0)

    def test_ode_oracle(self):
        # integrate dx/dt in Ker F cap T Sigma from p0; compare to closed form
        from scipy.integrate import solve_ivp
        from scipy.linalg import null_space

        p0 = np.array([0.0, 0.2, 0.4, 0.0])
        r = 0.4

        def rhs(t, x):
            ker = null_space(geo.two_form(x), rcond=1e-10)
            # intersect with {v1 = 0}: combine columns to kill the x1 component
            a, b = ker[:, 0], ker[:, 1]
            v = a * b[0] - b * a[0]
            # normalize to unit angular speed d(theta)/dt = 1
            om = (x[2] * v[3] - x[3] * v[2]) / (x[2] ** 2 + x[3] ** 2)
            return v / om

        T = 2 * np.pi
        sol = solve_ivp(rhs, (0, T), p0, rtol=1e-10, atol=1e-12, dense_output=True)
        worst = 0.0
        for s in np.linspace(0, T, 25):
            closed = geo.magnetic_line(p0, s).as_array()
            worst = max(worst, np.abs(sol.sol(s) - closed).max())
        assert worst <= 1e-6


class TestModelValidation:
    def test_mu_bounds(self):
        with pytest.raises(ValueError):
            geo.martinet_model(mu=0.5, h=0.01)
        with pytest.raises(ValueError):
            geo.martinet_model(mu=10.0, h=1.5)
        with pytest.raises(ValueError):
            geo.martinet_model(mu=300.0, h=0.01)  # mu*h = 3 > 1

    def test_point4_properties(self):
        p = Point4(0.0, 1.0, 3.0, 4.0)
        assert p.r == pytest.approx(5.0)
        assert p.theta == pytest.approx(np.arctan2(4.0, 3.0))
        npt.assert_array_equal(Point4.from_array(p.as_array()).as_array(), p.as_array())

    def test_sample_field_rows(self, martinet):
        rows = geo.sample_field(martinet, 20, seed=1)
        assert len(rows) == 20
        for row in rows:
            assert len(row) == 7
            assert row[4] <= row[5]  # f1 <= f2
