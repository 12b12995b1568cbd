import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from rejodds.errors import ConvergenceError, DomainError
from rejodds.mathcore import (
    Quadrature,
    RngContract,
    integrate,
    map_blocks,
    maximize_1d,
    norm_cdf,
    norm_pdf,
    norm_quantile,
    norm_sf,
    std_normal_cdf,
    std_normal_quantile,
)
from rejodds.models import GridWeight, NormalPrior, UniformInterval

# high-precision erf values (mpmath, 40 digits)
PHI_196 = 0.97500210485177956
PHI_M1645 = 0.049984905539121363
# bisection on a 40-digit cdf
Q_975 = 1.9599639845400539
Q_95 = 1.6448536269514723


class TestNormalCdf:
    @pytest.mark.parametrize("x, expected", [(0.0, 0.5), (1.96, PHI_196), (-1.645, PHI_M1645)])
    def test_values(self, x, expected):
        assert std_normal_cdf(x) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("x", [math.inf, -math.inf, math.nan])
    def test_non_finite(self, x):
        with pytest.raises(DomainError):
            norm_cdf(x)

    def test_symmetry(self):
        for x in np.linspace(-10, 10, 401):
            assert abs(norm_cdf(x) + norm_cdf(-x) - 1.0) <= 1e-14

    def test_matches_scipy(self):
        xs = np.linspace(-8, 8, 161)
        ours = np.array([norm_cdf(x) for x in xs])
        np.testing.assert_allclose(ours, stats.norm.cdf(xs), atol=1e-15, rtol=1e-13)

    def test_sf_tail(self):
        assert norm_sf(10.0) == pytest.approx(stats.norm.sf(10.0), rel=1e-12)

    def test_pdf(self):
        assert norm_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


class TestNormalQuantile:
    @pytest.mark.parametrize("u, expected", [(0.5, 0.0), (0.975, Q_975), (0.95, Q_95)])
    def test_values(self, u, expected):
        assert std_normal_quantile(u) == pytest.approx(expected, abs=1e-9)
        assert abs(norm_cdf(std_normal_quantile(u)) - u) <= 1e-12

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5, math.nan])
    def test_domain(self, u):
        with pytest.raises(DomainError):
            norm_quantile(u)

    def test_round_trip_grid(self):
        us = np.concatenate([np.geomspace(1e-10, 0.5, 300), 1 - np.geomspace(1e-10, 0.5, 300)])
        for u in us:
            assert abs(norm_cdf(norm_quantile(u)) - u) < 1e-11

    @given(st.floats(1e-10, 1 - 1e-10))
    def test_round_trip_property(self, u):
        assert abs(norm_cdf(norm_quantile(u)) - u) < 1e-11


class TestIntegrate:
    def test_density_normalizes(self):
        assert integrate(norm_pdf, -math.inf, math.inf) == pytest.approx(1.0, abs=1e-10)

    def test_upper_tail(self):
        assert integrate(norm_pdf, 1.645, math.inf) == pytest.approx(PHI_M1645, abs=1e-10)

    def test_rectangle(self):
        assert integrate(lambda x: 1.0, 0.0, 2.95) == pytest.approx(2.95, rel=1e-12)

    def test_reversed_limits(self):
        assert integrate(math.sin, math.pi, 0.0) == pytest.approx(-2.0, rel=1e-10)

    def test_points_split_kink(self):
        val = integrate(lambda x: abs(x - 0.3), 0.0, 1.0, points=(0.3,))
        assert val == pytest.approx(0.5 * (0.09 + 0.49), rel=1e-10)

    def test_budget_exhausted(self):
        cfg = Quadrature(abs_tol=1e-14, rel_tol=1e-14, max_evals=200)
        with pytest.raises(ConvergenceError) as info:
            integrate(lambda x: math.sin(1 / x) if x else 0.0, 1e-4, 1.0, cfg)
        assert math.isfinite(info.value.estimate)

    def test_non_finite_integrand(self):
        with pytest.raises(DomainError):
            integrate(lambda x: math.inf, 0.0, 1.0)

    def test_tail_cut_floor(self):
        with pytest.raises(DomainError):
            Quadrature(tail_cut=4.0)

    @pytest.mark.parametrize("prior", [
        UniformInterval(0.0, 2.95),
        UniformInterval(-3.0, 1.5),
        NormalPrior(0.0, math.sqrt(2.0)),
        NormalPrior(1.0, 0.2),
    ])
    def test_prior_densities_normalize(self, prior):
        lo, hi = prior.support(12.0)
        assert integrate(prior.density, lo, hi) == pytest.approx(1.0, abs=1e-8)

    def test_grid_weights_sum(self):
        g = GridWeight((0.1, 0.5, 1.0), (0.2, 0.3, 0.5))
        assert math.fsum(g.weights) == pytest.approx(1.0, abs=1e-12)


class TestMaximize:
    def test_parabola(self):
        a, v = maximize_1d(lambda a: -(a - 2) ** 2, 0.0, 5.0)
        assert a == pytest.approx(2.0, abs=1e-8)
        assert v == pytest.approx(0.0, abs=1e-15)

    def test_sine(self):
        tol = 1e-8
        a, _ = maximize_1d(math.sin, 0.0, math.pi, tol=tol)
        assert abs(a - math.pi / 2) <= tol

    def test_uniform_prior_bf(self):
        z = 2.06

        def f(a):
            return (norm_cdf(z) - norm_cdf(z - a)) / (a * norm_pdf(z))

        a, v = maximize_1d(f, 0.01, 20.0)
        assert a == pytest.approx(2.95, abs=0.01)
        assert v == pytest.approx(5.63, abs=0.005)

    def test_tie_breaks_left(self):
        a, v = maximize_1d(lambda x: 1.0, 0.0, 1.0)
        assert a == 0.0 and v == 1.0

    def test_non_finite(self):
        with pytest.raises(DomainError):
            maximize_1d(lambda x: math.nan, 0.0, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-50, 50), st.floats(0.1, 10))
    def test_vertex_property(self, m, w):
        a, _ = maximize_1d(lambda x: -((x - m) / w) ** 2, m - 7 * w, m + 3 * w)
        assert abs(a - m) <= 1e-8 * max(1.0, abs(m)) + 1e-7 * w


class TestRng:
    def test_same_contract_same_stream(self):
        a = RngContract(7, 3).generator(0).standard_normal(1000)
        b = RngContract(7, 3).generator(0).standard_normal(1000)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngContract(7, 3).generator(0).standard_normal(10)
        b = RngContract(7, 4).generator(0).standard_normal(10)
        c = RngContract(7, 3).generator(1).standard_normal(10)
        assert not np.array_equal(a, b) and not np.array_equal(a, c)

    @pytest.mark.parametrize("workers", [1, 2, 5])
    def test_worker_partition_invariance(self, workers):
        seed = RngContract(11, 0)

        def draw(k, n):
            return seed.generator(k).standard_normal(n)

        ref = np.concatenate(map_blocks(draw, 10_000, 1, block_size=1000))
        got = np.concatenate(map_blocks(draw, 10_000, workers, block_size=1000))
        assert np.array_equal(ref, got)

    @pytest.mark.parametrize("seed", [-1, 2 ** 64])
    def test_seed_range(self, seed):
        with pytest.raises(DomainError):
            RngContract(seed, 0)
