import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rejodds.design import (
    average_power,
    compute_power,
    design_report,
    power_at,
    pre_odds,
    r_to_d,
    rejection_boundary,
    rejection_ratio,
    solve_alpha,
    solve_sample_size,
)
from rejodds.errors import DomainError, InfeasibleTargetError, UnsupportedModelError
from rejodds.mathcore import norm_cdf, norm_sf
from rejodds.models import GridWeight, NormalPrior, PointMass, TestModel, UniformInterval

TWO_SAMPLE_ONE = TestModel("two-sample-z", "one", 0.0, 1.0, 1)
VARIANCE = TestModel("normal-variance")

# one-sided two-sample z, shift 0.21, 40-digit evaluation
SHIFT021_EXACT = {
    10: 0.119941486293, 20: 0.163351776107, 30: 0.202837955881, 40: 0.240185781704,
    50: 0.275970658657, 100: 0.436468349705, 150: 0.568988568165, 200: 0.675498030999,
    250: 0.758977655904, 280: 0.799517738084,
}


def two_sample(n, sides="one"):
    return TestModel("two-sample-z", sides, 0.0, 1.0, n)


class TestComputePower:
    @pytest.mark.parametrize("n, expected", [(20, 0.16), (280, 0.80)])
    def test_table_rows(self, n, expected):
        res = compute_power(two_sample(n), PointMass(0.21), 0.05)
        assert res.avg_power == pytest.approx(expected, abs=0.005)

    @pytest.mark.parametrize("n, exact", sorted(SHIFT021_EXACT.items()))
    def test_against_high_precision(self, n, exact):
        assert compute_power(two_sample(n), PointMass(0.21), 0.05).avg_power == pytest.approx(
            exact, abs=1e-11)

    @pytest.mark.parametrize("model", [
        TestModel("z-mean", "one"), TestModel("z-mean", "two"),
        two_sample(5, "two"), VARIANCE,
    ])
    def test_point_at_null_has_size(self, model):
        res = compute_power(model, PointMass(model.null_value), 0.05)
        assert res.avg_power == pytest.approx(0.05, abs=1e-12)

    def test_unequal_groups_two_sided(self):
        m = TestModel("two-sample-z", "two", 0.0, 1.0, 37, 34)
        assert compute_power(m, PointMass(0.26), 0.05).avg_power == pytest.approx(0.19, abs=0.005)

    def test_variance_low_power(self):
        res = compute_power(VARIANCE, PointMass(1.1), 0.05)
        assert res.rejection_boundary == pytest.approx(1.959964, abs=1e-6)
        assert res.avg_power == pytest.approx(0.0617, abs=5e-5)

    def test_two_sided_counts_both_tails(self):
        m = TestModel("z-mean", "two")
        c = rejection_boundary(m, 0.05)
        assert power_at(m, 0.5, c) == pytest.approx(norm_sf(c - 0.5) + norm_cdf(-c - 0.5), rel=1e-14)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5, 1.2])
    def test_alpha_domain(self, alpha):
        with pytest.raises(DomainError):
            compute_power(TWO_SAMPLE_ONE, PointMass(0.2), alpha)

    def test_negative_variance_rejected(self):
        with pytest.raises(DomainError):
            compute_power(VARIANCE, PointMass(-1.0), 0.05)
        with pytest.raises(DomainError):
            compute_power(VARIANCE, UniformInterval(-1.0, 2.0), 0.05)

    def test_uniform_prior_matches_direct_quadrature(self):
        from scipy import integrate as sint

        m = TestModel("z-mean", "one")
        c = rejection_boundary(m, 0.05)
        direct = sint.quad(lambda t: norm_sf(c - t) / 2.95, 0.0, 2.95, epsabs=1e-13)[0]
        assert average_power(m, UniformInterval(0, 2.95), c) == pytest.approx(direct, rel=1e-9)

    def test_normal_prior_closed_form(self):
        # E over N(mu, s^2) of Phi(t - c) is Phi((mu - c)/sqrt(1 + s^2))
        m = TestModel("z-mean", "one")
        c = rejection_boundary(m, 0.05)
        got = average_power(m, NormalPrior(0.7, 1.3), c)
        assert got == pytest.approx(norm_cdf((0.7 - c) / math.sqrt(1 + 1.3 ** 2)), rel=1e-9)

    def test_grid_prior_is_weighted_sum(self):
        m = TestModel("z-mean", "one")
        c = rejection_boundary(m, 0.05)
        g = GridWeight((0.5, 1.0, 2.0), (0.25, 0.25, 0.5))
        expected = sum(w * power_at(m, t, c) for t, w in zip(g.points, g.weights))
        assert average_power(m, g, c) == pytest.approx(expected, rel=1e-14)

    def test_per_theta_grid(self):
        res = compute_power(TestModel("z-mean"), UniformInterval(0, 2), 0.05)
        assert res.per_theta_power is not None
        powers = [p for _, p in res.per_theta_power]
        assert np.all(np.diff(powers) >= 0)


class TestRatios:
    @pytest.mark.parametrize("power, alpha, expected", [
        (0.25, 0.05, 5.0), (1.0, 0.05, 20.0), (0.05, 0.05, 1.0), (0.19, 0.05, 3.8),
    ])
    def test_rejection_ratio(self, power, alpha, expected):
        assert rejection_ratio(power, alpha) == pytest.approx(expected, rel=1e-14)

    def test_pre_odds(self):
        assert pre_odds(1, 16) == 16
        assert pre_odds(1e-20 / (1 - 1e-20), 20) == pytest.approx(2e-19, rel=1e-12)
        assert pre_odds(1 / 100000, 0.5 / 5e-7) == pytest.approx(10.0, rel=1e-12)

    @pytest.mark.parametrize("args, expected", [((1 / 100000, 0.5, 10), 5e-7), ((1, 0.8, 16), 0.05)])
    def test_solve_alpha(self, args, expected):
        assert solve_alpha(*args) == pytest.approx(expected, rel=1e-12)

    @settings(max_examples=100)
    @given(st.floats(1e-6, 0.99), st.floats(0.0, 1.0))
    def test_solve_alpha_identity(self, alpha, frac):
        k = 1.0 + frac * (1.0 / alpha - 1.0)  # keeps the power alpha*k within [alpha, 1]
        assert solve_alpha(1.0, alpha * k, k) == pytest.approx(alpha, rel=1e-12)

    @settings(max_examples=100)
    @given(st.floats(1e-6, 1e3), st.floats(0.01, 1.0), st.floats(0.1, 100))
    def test_inverse_consistency(self, odds, power, target):
        try:
            a = solve_alpha(odds, power, target)
        except InfeasibleTargetError:
            assert odds * power / target >= 1.0
            return
        assert pre_odds(odds, rejection_ratio(power, a)) == pytest.approx(target, rel=1e-12)

    def test_solve_alpha_infeasible(self):
        with pytest.raises(InfeasibleTargetError):
            solve_alpha(1.0, 0.8, 0.5)

    def test_r_to_d(self):
        assert r_to_d(0.21) == pytest.approx(2 * 0.21 / math.sqrt(1 - 0.21 ** 2), rel=1e-15)


class TestSampleSize:
    # 16 is reached first at n=281 (R_pre(280) = 15.990); see README
    @pytest.mark.parametrize("target, expected", [(16.0, 281), (15.99, 280), (1.0, 1), (8.7, 100)])
    def test_targets(self, target, expected):
        assert solve_sample_size(TWO_SAMPLE_ONE, PointMass(0.21), 0.05, target) == expected

    @pytest.mark.parametrize("target", [2.5, 5.0, 12.0, 19.0])
    def test_minimality(self, target):
        n = solve_sample_size(TWO_SAMPLE_ONE, PointMass(0.21), 0.05, target)
        r = lambda k: compute_power(two_sample(k), PointMass(0.21), 0.05).avg_power / 0.05
        assert r(n) >= target
        assert n == 1 or r(n - 1) < target

    def test_infeasible(self):
        with pytest.raises(InfeasibleTargetError):
            solve_sample_size(TWO_SAMPLE_ONE, PointMass(0.21), 0.05, 21.0)

    def test_variance_family_unsupported(self):
        with pytest.raises(UnsupportedModelError):
            solve_sample_size(VARIANCE, PointMass(4.0), 0.05, 2.0)


class TestDesignReport:
    def test_unequal_groups(self):
        m = TestModel("two-sample-z", "two", 0.0, 1.0, 37, 34)
        rep = design_report(m, PointMass(0.26), 0.05)
        assert rep.avg_power == pytest.approx(0.19, abs=0.005)
        assert rep.r_pre == pytest.approx(3.8, abs=0.1)
        assert rep.o_pre is None and rep.prior_odds is None

    def test_given_power(self):
        rep = design_report(TestModel("z-mean"), alpha=0.05, avg_power=0.45)
        assert rep.r_pre == 0.45 / 0.05

    def test_null_point(self):
        rep = design_report(TestModel("z-mean"), PointMass(0.0), 0.05)
        assert rep.r_pre == pytest.approx(1.0, abs=1e-12)

    def test_odds(self):
        rep = design_report(TWO_SAMPLE_ONE.with_n(280), PointMass(0.21), 0.05, prior_odds=0.25)
        assert rep.o_pre == 0.25 * rep.r_pre
        assert rep.r_pre == rep.avg_power / rep.alpha


class TestProperties:
    @pytest.mark.parametrize("sides", ["one", "two"])
    def test_monotone_in_n(self, sides):
        p = [compute_power(two_sample(n, sides), PointMass(0.3), 0.05).avg_power for n in range(1, 200, 7)]
        assert np.all(np.diff(p) >= 0)

    @pytest.mark.parametrize("sides", ["one", "two"])
    def test_monotone_in_effect(self, sides):
        m = TestModel("z-mean", sides, 0.0, 1.0, 9)
        p = [compute_power(m, PointMass(d), 0.05).avg_power for d in np.linspace(0.01, 2, 60)]
        assert np.all(np.diff(p) >= 0)

    @pytest.mark.parametrize("model", [TestModel("z-mean", "one"), TestModel("z-mean", "two"),
                                       two_sample(10, "two"), VARIANCE])
    @pytest.mark.parametrize("alpha", [0.001, 0.01, 0.05, 0.3])
    def test_size_correct(self, model, alpha):
        c = rejection_boundary(model, alpha)
        if model.is_variance:
            size = 2 * norm_sf(c / math.sqrt(model.null_value))
        elif model.two_sided:
            size = 2 * norm_sf(c)
        else:
            size = norm_sf(c)
        assert abs(size - alpha) < 1e-10

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.001, 0.5), st.floats(-3, 3), st.integers(1, 500))
    def test_r_pre_cap(self, alpha, d, n):
        rep = design_report(TestModel("z-mean", "two", 0.0, 1.0, n), PointMass(d), alpha)
        assert rep.r_pre <= 1 / alpha * (1 + 1e-15)


def _mc_power(model, theta, alpha, n_rep, rng):
    """Simulate the test itself: group means, then the standardized statistic."""
    c = rejection_boundary(model, alpha)
    if model.is_variance:
        x = rng.normal(0.0, math.sqrt(theta), n_rep)
        return np.mean(np.abs(x) >= c)
    sd = model.known_sd
    if model.family == "two-sample-z":
        m1 = rng.normal(theta, sd / math.sqrt(model.n1), n_rep)
        m2 = rng.normal(0.0, sd / math.sqrt(model.n2), n_rep)
        z = (m1 - m2 - model.null_value) / (sd * math.sqrt(1 / model.n1 + 1 / model.n2))
    else:
        xbar = rng.normal(theta, sd / math.sqrt(model.n1), n_rep)
        z = (xbar - model.null_value) * math.sqrt(model.n1) / sd
    hit = np.abs(z) >= c if model.two_sided else z >= c
    return np.mean(hit)


def _random_tuples(k=5):
    rng = np.random.default_rng(20240601)
    out = []
    for i in range(k):
        family = ["z-mean", "two-sample-z", "normal-variance"][i % 3]
        alpha = float(rng.choice([0.01, 0.05, 0.1]))
        if family == "normal-variance":
            out.append((TestModel(family), float(rng.uniform(1.5, 9.0)), alpha))
        else:
            sides = str(rng.choice(["one", "two"]))
            n = int(rng.integers(5, 120))
            out.append((TestModel(family, sides, 0.0, 1.0, n), float(rng.uniform(0.05, 0.6)), alpha))
    return out


@pytest.mark.parametrize("i, model, theta, alpha", [(i, *t) for i, t in enumerate(_random_tuples())])
def test_power_monte_carlo_oracle(i, model, theta, alpha):
    n_rep = 1_000_000
    est = _mc_power(model, theta, alpha, n_rep, np.random.default_rng(1000 + i))
    exact = compute_power(model, PointMass(theta), alpha).avg_power
    se = math.sqrt(exact * (1 - exact) / n_rep)
    assert abs(est - exact) <= 3 * se
