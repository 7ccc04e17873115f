import math

import numpy as np
import pytest

from degenlab.errors import CoverageError, InvalidFunction, InvalidSpec, SupportError
from degenlab.weighted_spaces import (NormSpec, SampledFunction, TimeWeight, ap_constant_estimate,
                                      ap_diverges, ap_interval_family, build_cutoff, dyadic_norm,
                                      h1_theta_norm, hardy_check, lp_theta_norm)


def ones_on_unit_shell(n=2001):
    return SampledFunction.from_log(np.ones_like, 0.0, 1.0, n)


def gaussian(n=4801, lo=-12.0, hi=12.0):
    return SampledFunction.from_log(lambda s: np.exp(-s * s), lo, hi, n,
                                    dfn=lambda s: -2 * s * np.exp(-s * s))


class TestSampledFunction:
    def test_rejects_non_finite(self):
        with pytest.raises(InvalidFunction):
            SampledFunction(0.0, 0.1, [0.0, np.nan, 1.0])

    def test_rejects_short_and_bad_grid(self):
        with pytest.raises(InvalidFunction):
            SampledFunction(0.0, 0.1, [1.0, 2.0])
        with pytest.raises(InvalidFunction):
            SampledFunction(0.0, -0.1, [1.0, 2.0, 3.0])

    def test_zero_outside_grid(self):
        u = ones_on_unit_shell()
        assert u(np.array([0.5, 3.0])).tolist() == [0.0, 0.0]
        with pytest.raises(InvalidFunction):
            u(np.array([-1.0]))

    def test_midpoint_interp_holds_values(self):
        u = SampledFunction(0.0, 1.0, [1.0, 2.0, 3.0], interp="midpoint")
        assert u.at_s(np.array([0.4, 0.6, 1.4, 1.9, 2.2])).tolist() == [1.0, 2.0, 2.0, 3.0, 0.0]

    def test_support(self):
        u = SampledFunction(0.0, 1.0, [0.0, 1.0, 2.0, 0.0, 0.0])
        assert u.support() == (1.0, 2.0)
        assert all(math.isnan(v) for v in u.with_values(np.zeros(5)).support())


class TestNormSpec:
    @pytest.mark.parametrize("p", [1.0, 0.5, math.inf])
    def test_bad_p(self, p):
        with pytest.raises(InvalidSpec):
            NormSpec(p, 0.0)

    def test_q_defaults_to_p(self):
        assert NormSpec(3, 0.0).q == 3


class TestLpNorm:
    def test_unit_shell_theta2(self):
        assert lp_theta_norm(ones_on_unit_shell(), NormSpec(2, 2)) == pytest.approx(
            math.sqrt((math.e ** 2 - 1) / 2), rel=1e-10)

    def test_unit_shell_theta0(self):
        assert lp_theta_norm(ones_on_unit_shell(), NormSpec(2, 0)) == pytest.approx(1.0, rel=1e-12)

    def test_zero(self):
        u = ones_on_unit_shell().scaled(0.0)
        assert lp_theta_norm(u, NormSpec(3, 1)) == 0.0
        assert h1_theta_norm(u, NormSpec(3, 1)) == 0.0

    def test_midpoint_rule_exact_for_piecewise_constant(self):
        u = SampledFunction(0.0, 0.5, [1.0, 1.0, 1.0], interp="midpoint")
        # cells [0, .25], [.25, .75], [.75, 1] all carry 1
        assert lp_theta_norm(u, NormSpec(2, 2)) == pytest.approx(
            math.sqrt((math.e ** 2 - 1) / 2), rel=1e-14)

    @pytest.mark.parametrize("k", [1, 5, -3])
    def test_dilation_covariance(self, k):
        u = gaussian()
        spec = NormSpec(2.5, 1.5)
        shift = k * u.h * 10
        assert lp_theta_norm(u.dilated(shift), spec) == pytest.approx(
            math.exp(-spec.theta * shift / spec.p) * lp_theta_norm(u, spec), rel=1e-12)


class TestH1Norm:
    def test_identity_on_unit_shell(self):
        u = SampledFunction.from_x(lambda x: x, 1.0, math.e, 2001, dfn=np.ones_like)
        assert h1_theta_norm(u, NormSpec(2, 0)) == pytest.approx(
            math.sqrt(math.e ** 2 - 1), rel=1e-10)

    def test_constant_interior_derivative_vanishes(self):
        u = SampledFunction(0.0, 0.1, [0, 0, 1, 1, 1, 1, 1, 0, 0.0])
        d = u.log_derivative()
        assert np.all(d[3:6] == 0.0)
        assert np.any(d[1:3] != 0.0)

    def test_finite_differences_match_exact_derivative(self):
        exact = gaussian()
        fd = exact.with_values(exact.values)
        spec = NormSpec(2, 0.5)
        assert h1_theta_norm(fd, spec) == pytest.approx(h1_theta_norm(exact, spec), rel=1e-5)


class TestCutoff:
    @pytest.mark.parametrize("p", [2, 4, 1.5])
    def test_covering_invariant(self, p):
        cut = build_cutoff(p)
        assert cut.covering_sum(np.linspace(-5, 5, 2001)).min() >= 1.0

    def test_vanishes_outside_support(self):
        cut = build_cutoff(2)
        lo, hi = cut.support
        assert cut(np.array([lo * 0.99, hi * 1.01, 0.0])).tolist() == [0.0, 0.0, 0.0]

    def test_bad_p(self):
        with pytest.raises(InvalidSpec):
            build_cutoff(1.0)


class TestDyadicNorm:
    def test_zero(self):
        u = ones_on_unit_shell().scaled(0.0)
        assert dyadic_norm(u, NormSpec(2, 0), build_cutoff(2)) == 0.0

    def test_coverage_error(self):
        cut = build_cutoff(2, shifts=range(-1, 2))
        with pytest.raises(CoverageError):
            dyadic_norm(gaussian(), NormSpec(2, 0), cut)

    def test_equivalence_stable_under_refinement(self):
        spec = NormSpec(2, 1)
        cut = build_cutoff(2)
        r = []
        for n in (2401, 4801, 9601):
            u = gaussian(n)
            r.append(dyadic_norm(u, spec, cut) / h1_theta_norm(u, spec))
        assert 0.1 < r[-1] < 10
        assert abs(r[-1] - r[-2]) < 1e-6

    def test_single_shell_uses_few_shifts(self):
        s = np.linspace(-6, 6, 2401)
        v = np.where((s > 2.2) & (s < 2.8), np.sin((s - 2.2) / 0.6 * math.pi) ** 4, 0.0)
        u = SampledFunction(s[0], s[1] - s[0], v)
        narrow = build_cutoff(2, shifts=range(0, 5))
        wide = build_cutoff(2)
        spec = NormSpec(2, 0.7)
        assert dyadic_norm(u, spec, narrow) == pytest.approx(dyadic_norm(u, spec, wide), rel=1e-14)


class TestHardy:
    def xexp(self):
        return SampledFunction.from_x(lambda x: x * np.exp(-x), math.exp(-30.0), 60.0, 14001,
                                      dfn=lambda x: (1 - x) * np.exp(-x))

    def test_gamma_integral_example(self):
        rep = hardy_check(self.xexp(), NormSpec(2, 1))
        assert rep.holds
        assert rep.lhs == pytest.approx(1 / 16, abs=1e-8)
        assert rep.rhs == pytest.approx(1 / 4, abs=1e-8)

    def test_theta_zero(self):
        rep = hardy_check(self.xexp(), NormSpec(2, 0))
        assert rep.lhs == 0.0 and rep.holds

    def test_zero(self):
        rep = hardy_check(self.xexp().scaled(0.0), NormSpec(3, 1))
        assert rep.lhs == rep.rhs == 0.0 and rep.holds

    def test_support_touching_boundary(self):
        with pytest.raises(SupportError):
            hardy_check(ones_on_unit_shell(), NormSpec(2, 1))

    def test_p_below_two_flags_floor(self):
        s = np.linspace(-4, 4, 801)
        v = np.where(np.abs(s) < 1, (1 - s * s) ** 3, 0.0)
        rep = hardy_check(SampledFunction(s[0], s[1] - s[0], v), NormSpec(1.5, 1))
        assert rep.holds
        assert rep.flagged_nodes == 2  # the two support edges


class TestTimeWeight:
    def test_measure_exact(self):
        w = TimeWeight.power(0.5)
        assert w.measure(-1.0, 4.0) == pytest.approx(2 / 3 + 16 / 3)
        assert TimeWeight.one().measure(2.0, 1.0) == 0.0

    def test_bad_power(self):
        with pytest.raises(InvalidSpec):
            TimeWeight.power(-1.0)

    def test_in_ap(self):
        assert TimeWeight.power(0.5).in_ap(2)
        assert not TimeWeight.power(2.0).in_ap(2)


class TestAp:
    def test_unit(self):
        assert ap_constant_estimate(TimeWeight.one(), 2, 2 ** 10) == 1.0

    def test_family_nested(self):
        lo1, hi1 = ap_interval_family(2 ** 6)
        lo2, hi2 = ap_interval_family(2 ** 8)
        small = set(zip(lo1.round(12), hi1.round(12)))
        assert small <= set(zip(lo2.round(12), hi2.round(12)))

    def test_sqrt_stable(self):
        w = TimeWeight.power(0.5)
        a, b = ap_constant_estimate(w, 2, 2 ** 10), ap_constant_estimate(w, 2, 2 ** 12)
        assert 1.0 < a <= b < 1.02 * a

    def test_square_diverges(self):
        w = TimeWeight.power(2.0)
        assert ap_constant_estimate(w, 2, 2 ** 12) > 10 * ap_constant_estimate(w, 2, 2 ** 8)
        assert ap_diverges(w, 2)
        assert not ap_diverges(TimeWeight.power(0.5), 2)

    def test_monotone_in_resolution(self):
        w = TimeWeight.power(-0.5)
        vals = [ap_constant_estimate(w, 3, 2 ** k) for k in (6, 8, 10)]
        assert vals == sorted(vals)

    def test_bad_args(self):
        with pytest.raises(InvalidSpec):
            ap_constant_estimate(TimeWeight.one(), 1.0, 64)
        with pytest.raises(InvalidSpec):
            ap_constant_estimate(TimeWeight.power(0.5), 2, 8)
