import math

import numpy as np
import pytest

from gaslab.bounds import (BoundConstants, calibrate_constant, calibrate_jlm, cluster_bound,
                           gap_scaling, incompressibility_bound, jlm_bound, jlm_simplified,
                           jlm_threshold)


class TestJLM:
    def test_spatial_examples(self):
        assert jlm_bound(3, 2.0, 1.0, 1).value == 1.0
        assert jlm_bound(3, 2.0, 1.0, 4).log_value == pytest.approx(-3.0)

    def test_planar_formula(self):
        b = jlm_bound(2, 2.0, 1.0, 5, lam=100, C=0.01)
        expect = -0.5 * 2 * math.log(25) * 25 + 0.01 * (1 + 2 * 1e4) * 5
        assert b.log_value == pytest.approx(expect)

    @pytest.mark.parametrize("beta,R,Q,C", [(2.0, 1.0, 7, 3.0), (1.0, 2.5, 40, 0.2),
                                            (4.0, 1.3, 11, 10.0)])
    def test_simplified_form_is_substitution(self, beta, R, Q, C):
        lam = math.sqrt(Q) / R
        general = jlm_bound(2, beta, R, Q, lam=lam, C=C).log_value
        simple = jlm_simplified(beta, R, Q, C=C, C2=C + math.log(2)).log_value
        assert general == pytest.approx(simple, abs=1e-9 * (1 + abs(general)))

    def test_validity_flags(self):
        assert not jlm_bound(2, 2.0, 1.0, 5).valid  # far below the threshold at C = 10
        assert not jlm_bound(2, 2.0, 1.0, 10 ** 6, lam=50).valid
        assert not jlm_bound(3, 2.0, 0.5, 10).valid
        big = math.ceil(jlm_threshold(2, 2.0, 1.0))
        assert jlm_bound(2, 2.0, 1.0, big).valid

    @pytest.mark.parametrize("d", [2, 3])
    def test_monotone_beyond_threshold(self, d):
        C = 0.5
        start = max(2, math.ceil(jlm_threshold(d, 2.0, 1.5, 100, C)))
        logs = [jlm_bound(d, 2.0, 1.5, Q, 100, C).log_value for Q in range(start, start + 200)]
        assert np.all(np.diff(logs) < 0)

    def test_defaults(self):
        assert BoundConstants() == BoundConstants(C=10.0, c=0.1)


class TestCluster:
    def test_examples(self):
        assert cluster_bound(2, 2.0, 2, 0.1, centered=True).value == pytest.approx(1e-4)
        r, beta = 0.3, 2.0
        assert cluster_bound(3, beta, 2, r, centered=True).value == pytest.approx(
            r ** 4 * math.exp(-beta / r))

    def test_fixed_planar(self):
        assert cluster_bound(2, 2.0, 3, 0.5, C=2.0).value == pytest.approx(2 * 0.5 ** (6 + 6))

    def test_spatial_general(self):
        r, beta, Q = 0.4, 1.0, 4
        fixed = r ** (3 * Q) * math.exp(-beta / 2 / r * math.comb(Q, 2))
        assert cluster_bound(3, beta, Q, r).value == pytest.approx(fixed)
        centred = r ** (3 * (Q - 1)) * math.exp(-beta / 2 / r * math.comb(Q - 1, 2) - beta / r * (Q - 1))
        assert cluster_bound(3, beta, Q, r, centered=True).value == pytest.approx(centred)

    @pytest.mark.parametrize("d,centered", [(2, False), (2, True), (3, False), (3, True)])
    def test_vanishes_as_r_shrinks(self, d, centered):
        vals = [cluster_bound(d, 2.0, 3, r, centered).value for r in (0.5, 0.1, 1e-2, 1e-3)]
        assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-10

    def test_invalid(self):
        with pytest.raises(ValueError):
            cluster_bound(2, 2.0, 1, 0.1, centered=True)
        with pytest.raises(ValueError):
            cluster_bound(2, 2.0, 0, 0.1)
        with pytest.raises(ValueError):
            cluster_bound(2, 2.0, 2, 0.0)


class TestGaps:
    def test_planar_exponent(self):
        g = gap_scaling(2, 2.0, 1000, 1, 0.5)
        assert g.lower_exponent == 4
        assert g.lower_tail_bound == pytest.approx(0.5 ** 4)
        assert g.leading == pytest.approx(1000 ** -0.25)

    def test_spatial_leading(self):
        assert gap_scaling(3, 1.0, math.exp(100), 1, 1.0).leading == pytest.approx(0.01)

    def test_thresholds_decrease_in_N(self):
        t = [gap_scaling(2, 2.0, N, 1, 1.0).lower_threshold for N in (10, 100, 1000, 10 ** 5)]
        assert np.all(np.diff(t) < 0)

    def test_tails_monotone_in_gamma(self):
        for d in (2, 3):
            g = [gap_scaling(d, 2.0, 10 ** 4, 2, x) for x in (0.5, 1.0, 2.0, 4.0)]
            assert np.all(np.diff([x.upper_tail_bound for x in g]) < 0)
            if d == 3:
                assert np.all(np.diff([x.lower_tail_bound for x in g]) < 0)
            else:
                assert np.all(np.diff([x.lower_tail_bound for x in g]) > 0)


class TestIncompressibility:
    def test_examples(self):
        b, _ = incompressibility_bound(2, 1.0, 1.0, c=1.0)
        assert b == pytest.approx(3 * math.exp(-1))
        _, thr = incompressibility_bound(2, math.e, 1.0)
        assert thr == pytest.approx(math.exp(4 / 3) * 2)

    def test_monotone_in_T(self):
        vals = [incompressibility_bound(3, 2.0, T)[0] for T in (1, 2, 4, 8)]
        assert np.all(np.diff(vals) < 0)

    def test_domain(self):
        with pytest.raises(ValueError):
            incompressibility_bound(2, 0.5, 1.0)


class TestCalibration:
    def test_smallest_dominating_constant(self):
        # log bound = -x + C; targets force C >= max(log p + x)
        targets = [(1.0, 0.5), (2.0, 0.2), (3.0, 0.0)]
        C = calibrate_constant(lambda C, x: -x + C, targets, lo=-10)
        assert C == pytest.approx(max(math.log(0.5) + 1, math.log(0.2) + 2), abs=1e-9)

    def test_jlm_calibration_dominates(self):
        tail = [(2, 0.3), (3, 0.04), (4, 1e-3), (5, 0.0)]
        C = calibrate_jlm(2, 2.0, 1.0, tail)
        for Q, p in tail:
            assert jlm_bound(2, 2.0, 1.0, Q, C=C).value >= p * (1 - 1e-9)
        assert any(abs(jlm_bound(2, 2.0, 1.0, Q, C=C).value - p) < 1e-9 * p for Q, p in tail if p)
