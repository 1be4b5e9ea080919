import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from gaslab.kernel import (DomainError, RadialMeasure, coulomb_g, l1_deficit, mollified_deficit,
                           mollified_g, radial_pair, radial_point, radial_potential, shell_point,
                           sup_density)

dims = st.sampled_from([2, 3])
radii = st.floats(0.05, 5.0)


def annuli(d):
    return st.tuples(st.floats(0.0, 2.0), st.floats(0.05, 2.0)).map(
        lambda ab: RadialMeasure.annulus(ab[0], ab[0] + ab[1], d))


@st.composite
def measures(draw):
    d = draw(dims)
    kind = draw(st.sampled_from(["shell", "annulus", "mollifier"]))
    if kind == "shell":
        return RadialMeasure.shell(draw(radii), d)
    if kind == "annulus":
        return draw(annuli(d))
    return RadialMeasure.mollifier(draw(st.floats(0.2, 3.0)), d)


class TestCoulombG:
    def test_examples(self):
        assert coulomb_g(2, 1.0) == 0.0
        assert coulomb_g(3, 2.0) == 0.5
        assert coulomb_g(2, math.e) == -1.0

    @pytest.mark.parametrize("t", [0.0, -1.0])
    def test_domain(self, t):
        with pytest.raises(DomainError):
            coulomb_g(2, t)

    @given(dims, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_strictly_decreasing(self, d, a, b):
        if a < b:
            assert coulomb_g(d, a) > coulomb_g(d, b)


class TestShellPoint:
    def test_examples(self):
        assert shell_point(3, 1.0, 2.0) == 0.5
        assert shell_point(3, 1.0, 0.5) == 1.0
        assert shell_point(2, 2.0, 1.0) == -math.log(2)

    @given(dims, radii, st.floats(1.0, 10.0))
    def test_exterior_is_point_charge(self, d, s, f):
        assert shell_point(d, s, s * f) == coulomb_g(d, s * f)

    @given(dims, radii, st.floats(0.0, 0.999))
    def test_interior_constant(self, d, s, f):
        assert shell_point(d, s, s * f) == coulomb_g(d, s)


class TestRadialPoint:
    def test_exterior_example(self):
        assert radial_point(RadialMeasure.annulus(1, 2, 3), 5.0) == pytest.approx(0.2, abs=0)

    def test_shell_boundary(self):
        assert radial_point(RadialMeasure.shell(1.0, 2), 1.0) == 0.0

    def test_annulus_centre_against_monte_carlo(self):
        rng = np.random.default_rng(11)
        value = radial_point(RadialMeasure.annulus(1, 2, 3), 0.0)
        mc, se = oracles.mc_point_potential(rng, 3, "annulus", 1, 2, 0.0, 10 ** 7)
        assert abs(value - mc) < 3 * se
        # closed form of int s^{-1} 3 s^2 / 7 ds on [1, 2]
        assert value == pytest.approx(9 / 14, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(measures(), st.floats(0.0, 1.6))
    def test_mean_value_inequality(self, nu, f):
        t = f * nu.outer
        if t == 0:
            return
        v = radial_point(nu, t)
        gt = coulomb_g(nu.d, t)
        if t >= nu.outer:
            assert v == gt
        else:
            assert v <= gt + 1e-9
            # strict away from the support edge
            if t < 0.99 * nu.outer and nu.kind != "shell":
                assert v < gt

    @settings(max_examples=60, deadline=None)
    @given(measures())
    def test_monotone(self, nu):
        t = np.linspace(0, 1.5 * nu.outer, 40)
        v = np.array([radial_point(nu, x) for x in t])
        assert np.all(np.diff(v) <= 1e-12)

    @settings(max_examples=40, deadline=None)
    @given(dims, st.floats(0, 1), st.floats(0.1, 1), st.floats(0, 1.2))
    def test_closed_form_matches_quadrature(self, d, a, w, f):
        nu = RadialMeasure.annulus(a, a + w, d)
        t = f * nu.outer
        assert radial_point(nu, t) == pytest.approx(radial_point(nu, t, method="quadrature"),
                                                    abs=1e-9)

    def test_vectorised_matches_scalar(self):
        nu = RadialMeasure.annulus(0.3, 1.1, 2)
        t = np.linspace(0, 2, 31)
        np.testing.assert_allclose(radial_potential(nu, t), [radial_point(nu, x) for x in t],
                                   atol=1e-13)


class TestRadialPair:
    def test_disjoint_shells(self):
        s = RadialMeasure.shell(1.0, 3)
        assert radial_pair(s, s, 10.0) == pytest.approx(0.1, abs=1e-15)

    def test_planar_unit_shells_at_zero(self):
        s = RadialMeasure.shell(1.0, 2)
        assert radial_pair(s, s, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_annuli_at_zero_against_monte_carlo(self):
        nu = RadialMeasure.annulus(0.5, 1.0, 3)
        value = radial_pair(nu, nu, 0.0)
        mc, se = oracles.mc_pair_potential(np.random.default_rng(5), 3, "annulus", 0.5, 1.0, 0.0,
                                           10 ** 7)
        assert abs(value - mc) < 3 * se
        assert value <= coulomb_g(3, 0.5)

    @pytest.mark.parametrize("d,t", [(2, 0.0), (2, 0.7), (3, 0.5), (3, 2.4)])
    def test_mollifiers_against_monte_carlo(self, d, t):
        rng = np.random.default_rng(17)
        n = 10 ** 6
        x = np.zeros(d)
        x[0] = t
        y = (oracles.sample_radial(rng, n, d, "mollifier", 0, 1.0)
             - oracles.sample_radial(rng, n, d, "mollifier", 0, 2.0))
        v = oracles.g(d, np.linalg.norm(x + y, axis=1))
        value = radial_pair(RadialMeasure.mollifier(1.0, d), RadialMeasure.mollifier(2.0, d), t)
        assert abs(value - v.mean()) < 3 * v.std() / np.sqrt(n)

    @settings(max_examples=30, deadline=None)
    @given(measures(), measures(), st.floats(0, 1))
    def test_symmetric_and_below_point_charge(self, a, b, f):
        if a.d != b.d:
            return
        t = f * (a.outer + b.outer) * 1.2
        ab = radial_pair(a, b, t)
        assert ab == pytest.approx(radial_pair(b, a, t), abs=1e-9)
        if t > 0:
            assert ab <= coulomb_g(a.d, t) + 1e-9
        if t > a.outer + b.outer:
            assert ab == pytest.approx(coulomb_g(a.d, t), abs=1e-12)


class TestMollifier:
    def test_outside_support(self):
        assert mollified_g(RadialMeasure.mollifier(1, 3), 10.0) == pytest.approx(0.1, abs=1e-15)
        assert mollified_g(RadialMeasure.mollifier(2, 3), 5.0, order=2) == pytest.approx(
            0.2, abs=1e-12)

    def test_planar_against_grid_convolution(self):
        phi = RadialMeasure.mollifier(1.0, 2)
        v = mollified_g(phi, 0.5)
        assert v < coulomb_g(2, 0.5)
        assert v == pytest.approx(oracles.grid_mollified_log(0.5), abs=1e-5)

    @pytest.mark.parametrize("d", [2, 3])
    def test_deficit_nonnegative_and_supported(self, d):
        phi = RadialMeasure.mollifier(1.0, d)
        t = np.linspace(0.01, 2.5, 30)
        one = np.array([mollified_deficit(phi, x) for x in t])
        two = np.array([mollified_deficit(phi, x, order=2) for x in t])
        assert np.all(one >= 0) and np.all(two >= 0)
        assert np.all(one[t >= 1] == 0) and np.all(two[t >= 2] == 0)

    def test_l1_scaling_ratio(self):
        assert l1_deficit(2.0, 2) / l1_deficit(1.0, 2) == pytest.approx(4, rel=5e-3)
        assert l1_deficit(8.0, 3) / l1_deficit(4.0, 3) == pytest.approx(4, rel=5e-3)

    def test_l1_against_grid_oracle(self):
        assert l1_deficit(1.0, 2) == pytest.approx(oracles.grid_l1_deficit(1.0), rel=1e-3)


class TestMeasures:
    def test_sup_density(self):
        assert sup_density(RadialMeasure.annulus(0.5, 1, 2)) == pytest.approx(4 / (3 * math.pi))
        assert sup_density(RadialMeasure.annulus(1, 2, 3)) == pytest.approx(
            1 / (4 * math.pi / 3 * 7))
        with pytest.raises(DomainError):
            sup_density(RadialMeasure.shell(1, 2))

    @pytest.mark.parametrize("d", [2, 3])
    def test_mollifier_sup_by_scan(self, d):
        nu = RadialMeasure.mollifier(0.7, d)
        scan = nu.density(np.linspace(0, 0.7, 10001)).max()
        assert sup_density(nu) == pytest.approx(scan, rel=1e-12)

    @pytest.mark.parametrize("nu", [RadialMeasure.annulus(0.2, 1.3, 2),
                                    RadialMeasure.annulus(0.5, 0.9, 3),
                                    RadialMeasure.mollifier(1.5, 2),
                                    RadialMeasure.mollifier(0.5, 3)])
    def test_unit_mass_and_second_moment(self, nu):
        from scipy.integrate import quad
        assert quad(nu.weight, 0, nu.outer, limit=200)[0] == pytest.approx(1, abs=1e-10)
        m2 = quad(lambda s: s * s * nu.weight(s), 0, nu.outer, limit=200)[0]
        assert nu.second_moment() == pytest.approx(m2, rel=1e-10)
        y = nu.sample(np.random.default_rng(0), 200000)
        assert np.all(np.linalg.norm(y, axis=1) <= nu.outer + 1e-12)
        assert np.mean(np.sum(y * y, axis=1)) == pytest.approx(m2, rel=0.02)

    def test_invalid(self):
        with pytest.raises(DomainError):
            RadialMeasure.annulus(1, 1, 2)
        with pytest.raises(DomainError):
            RadialMeasure.shell(0, 3)
