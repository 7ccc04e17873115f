import math

import numpy as np
import pytest

from degenlab.errors import DegenerateRoots, DomainError, ForbiddenExponent, InvalidSpec
from degenlab.exact1d import (BSParams, EulerProblem, Forcing, LowerOrderRatios, Payoff,
                              PowerPiece, admissible_theta, bs_call_closed_form, bs_density,
                              bs_solve, data_norms, euler_solve_exact, gauge_shift,
                              indicial_roots, normalizing_gamma)
from degenlab.weighted_spaces import NormSpec, SampledFunction, lp_theta_norm

BLOCK = Forcing.indicator(1.0, 2.0)
SIMPLE = EulerProblem(1.0, LowerOrderRatios(), f=BLOCK)


class TestRoots:
    @pytest.mark.parametrize("ratios,expected", [((0, 0, 0), (-1, 0)), ((0, 0, 2), (-2, 1))])
    def test_examples(self, ratios, expected):
        r = indicial_roots(LowerOrderRatios(*ratios))
        assert (r.alpha, r.beta) == pytest.approx(expected, abs=1e-15)

    def test_double_root(self):
        with pytest.raises(DegenerateRoots):
            indicial_roots(LowerOrderRatios(1, 0, -1))

    def test_non_finite(self):
        with pytest.raises(InvalidSpec):
            LowerOrderRatios(math.nan, 0, 0)

    def test_small_product_is_accurate(self):
        r = indicial_roots(LowerOrderRatios(1e8, 0, 1e-8))
        assert r.beta == pytest.approx(1e-8 / (1 + 1e8), rel=1e-12)


class TestWindow:
    def test_examples(self):
        w = admissible_theta(indicial_roots(LowerOrderRatios()), 2)
        assert w.interior == (-2, 0) and w.forbidden == (-2, 0)
        assert admissible_theta(indicial_roots(LowerOrderRatios(0, 0, 2)), 3).interior == (-6, 3)

    def test_shrinks_as_p_to_one(self):
        w = admissible_theta(indicial_roots(LowerOrderRatios()), 1 + 1e-9)
        assert w.interior == pytest.approx((-1, 0), abs=1e-8)

    def test_classify(self):
        w = admissible_theta(indicial_roots(LowerOrderRatios()), 2)
        assert [w.classify(t) for t in (-3, -2, -1, 0, 1)] == [
            "below", "forbidden", "interior", "forbidden", "above"]
        assert -1 in w and -2 not in w

    def test_bad_p(self):
        with pytest.raises(InvalidSpec):
            admissible_theta(indicial_roots(LowerOrderRatios()), 1.0)


class TestGauge:
    def test_identity(self):
        P = EulerProblem(1.0, LowerOrderRatios(0.3, -0.2, 1.0), F=BLOCK, f=BLOCK)
        Q = gauge_shift(P, 0.0)
        assert Q.ratios == P.ratios
        x = np.linspace(0.5, 3, 11)
        assert np.allclose(Q.F(x), P.F(x)) and np.allclose(Q.f(x), P.f(x))

    def test_unit_shift_example(self):
        Q = gauge_shift(EulerProblem(), 1.0)
        assert (Q.ratios.n_b, Q.ratios.n_bhat, Q.ratios.n_c) == (1, 1, -2)
        r = Q.roots
        assert (r.alpha, r.beta) == pytest.approx((-2, -1))

    def test_inverse(self):
        P = EulerProblem(1.0, LowerOrderRatios(0.3, -0.2, 1.0))
        back = gauge_shift(gauge_shift(P, 0.7), -0.7).ratios
        for a, b in zip((back.n_b, back.n_bhat, back.n_c), (0.3, -0.2, 1.0)):
            assert a == pytest.approx(b, abs=1e-12)


@pytest.mark.parametrize("p,theta,ratios,gamma", [
    (2, -1, (0, 0, 0), 0.0), (2, 1, (0, 0, 0), 1.0), (3, 0, (1, 0, 0), 0.5)])
def test_normalizing_gamma(p, theta, ratios, gamma):
    assert normalizing_gamma(p, theta, LowerOrderRatios(*ratios)) == pytest.approx(gamma)


class TestForcing:
    def test_piece_validation(self):
        with pytest.raises(InvalidSpec):
            PowerPiece(0.0, 1.0)
        with pytest.raises(InvalidSpec):
            PowerPiece(2.0, 1.0)

    def test_dilated_and_power(self):
        f = BLOCK.times_power(1.0).dilated(2.0)
        x = np.array([0.4, 0.6, 0.9, 1.1])
        assert f(x) == pytest.approx(np.where((x >= 0.5) & (x < 1.0), 2 * x, 0.0))

    def test_support_and_zero(self):
        assert Forcing.zero().is_zero and Forcing.zero().support() is None
        lo, hi = (BLOCK + Forcing.indicator(3.0, 4.0)).support()
        assert (lo, hi) == pytest.approx((0.0, math.log(4.0)))


class TestExactSolver:
    def test_below_closed_form(self):
        u = euler_solve_exact(SIMPLE, 2, -3)
        x = np.array([0.5, 1.0, 1.5, 2.0, 4.0])
        ref = np.where(x <= 1, 0, np.where(x <= 2, -x + 1 + np.log(x), -x / 2 + math.log(2)))
        assert u(x) == pytest.approx(ref, abs=1e-12)
        assert float(u(2.0)) == pytest.approx(math.log(2) - 1, abs=1e-10)

    def test_above_closed_form(self):
        u = euler_solve_exact(SIMPLE, 2, 0.5)
        assert float(u(3.0)) == pytest.approx(0.0, abs=1e-12)
        x = np.array([0.2, 0.7])
        assert u(x) == pytest.approx(x / 2 - math.log(2), abs=1e-12)

    def test_interior_decays_both_ends(self):
        u = euler_solve_exact(SIMPLE, 2, -1)
        assert u.regime == "interior"
        assert abs(float(u(1e-8))) < 1e-7
        v_far = float(u(1e8))
        assert abs(v_far - float(u(1e9))) < 1e-12  # x^0 tail, integrable for theta < 0
        un, dn = u.norms()
        assert math.isfinite(un) and math.isfinite(dn)

    def test_zero_data(self):
        u = euler_solve_exact(EulerProblem(), 2, -1)
        assert u(np.array([0.5, 1, 2])).tolist() == [0, 0, 0]
        assert u.norms() == (0.0, 0.0)

    def test_forbidden(self):
        with pytest.raises(ForbiddenExponent):
            euler_solve_exact(SIMPLE, 2, -2.0)
        with pytest.raises(ForbiddenExponent):
            euler_solve_exact(SIMPLE, 2, 1e-9)

    @pytest.mark.parametrize("theta", [-3.0, -1.0, 0.5])
    def test_log_derivative_with_F(self, theta):
        P = EulerProblem(1.3, LowerOrderRatios(0.2, 0.1, 1.5),
                         F=Forcing.indicator(0.5, 3.0, 2.0), f=BLOCK)
        u = euler_solve_exact(P, 2, theta)
        s = np.array([-0.4, 0.3, 0.9, 1.5])
        h = 1e-6
        num = (u.evaluate(s + h)[0] - u.evaluate(s - h)[0]) / (2 * h)
        assert u.evaluate(s)[1] == pytest.approx(num, abs=1e-6)

    def test_norms_match_sampled_quadrature(self):
        P = EulerProblem(1.0, LowerOrderRatios(), F=Forcing.indicator(0.5, 3.0), f=BLOCK)
        u = euler_solve_exact(P, 2, -1)
        un, dn = u.norms()
        samp = u.sampled(-40, 40, 160001)
        assert un == pytest.approx(lp_theta_norm(samp, NormSpec(2, -1)), rel=1e-6)
        d = SampledFunction(samp.s_min, samp.h, samp.derivative)
        assert dn == pytest.approx(lp_theta_norm(d, NormSpec(2, -1)), rel=1e-4)

    def test_lambda_folded_into_roots(self):
        P = EulerProblem(2.0, LowerOrderRatios(), f=BLOCK, lam=4.0, c0=0.5)
        assert P.effective_ratios.n_c == pytest.approx(1.0)
        assert P.roots.alpha < -1 and P.roots.beta > 0

    def test_data_norms(self):
        P = EulerProblem(F=Forcing.indicator(1.0, math.e), f=BLOCK)
        Fn, fn = data_norms(P, 2, 2)
        # ||x^-1 F||^2 = int_1^e x^-2 x dx = 1, ||f||^2 = int_1^2 x dx = 3/2
        assert Fn == pytest.approx(1.0, rel=1e-12)
        assert fn == pytest.approx(math.sqrt(1.5), rel=1e-12)

    def test_problem_validation(self):
        with pytest.raises(InvalidSpec):
            EulerProblem(a=0.0)
        with pytest.raises(InvalidSpec):
            EulerProblem(a=3.0, nu=0.5)
        with pytest.raises(InvalidSpec):
            EulerProblem(lam=-1.0)


class TestBlackScholes:
    P = BSParams(0.2, 0.05, 1.0, Payoff("call", 100.0))

    def test_density_domain(self):
        with pytest.raises(DomainError):
            bs_density(100.0, 0.0, self.P)
        with pytest.raises(DomainError):
            bs_solve(self.P, -1.0)

    def test_mode(self):
        P = BSParams(0.01, 0.05, 1.0)
        y = np.linspace(100, 110, 200001)
        mode = y[np.argmax(bs_density(100.0, y, P))]
        assert mode == pytest.approx(100 * math.exp(0.05 - 1.5 * 0.01 ** 2), abs=1e-3)

    def test_constant_payoff(self):
        P = BSParams(0.3, 0.04, 2.0, Payoff("power", k=0.0))
        assert bs_solve(P, 50.0) == pytest.approx(math.exp(-0.08), rel=1e-10)

    def test_martingale(self):
        P = BSParams(0.3, 0.04, 2.0, Payoff("power", k=1.0))
        assert bs_solve(P, 50.0) == pytest.approx(50.0, rel=1e-10)

    def test_call(self):
        price = bs_solve(self.P, 100.0)
        assert price == pytest.approx(10.4506, abs=1e-3)
        assert price == pytest.approx(bs_call_closed_form(100, 100, 0.2, 0.05, 1.0), rel=1e-9)

    def test_put_call_parity(self):
        put = bs_solve(BSParams(0.2, 0.05, 1.0, Payoff("put", 100.0)), 90.0)
        call = bs_solve(self.P, 90.0)
        assert call - put == pytest.approx(90 - 100 * math.exp(-0.05), rel=1e-9)

    def test_params_validation(self):
        with pytest.raises(InvalidSpec):
            BSParams(0.0, 0.05, 1.0)
        with pytest.raises(InvalidSpec):
            BSParams(0.2, 0.05, 0.0)
