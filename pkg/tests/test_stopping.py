import json
import math

import numpy as np
import pytest
from scipy import stats

from rejodds.errors import DomainError, UnsupportedModelError
from rejodds.mathcore import RngContract
from rejodds.models import Intrinsic, NormalPrior, PointMass, TestModel, UniformInterval
from rejodds.stopping import (
    StoppingConfig,
    bf_stopped_vs_fixed,
    simulate_sequential,
    stopped_type1_error,
    trajectory_batches,
)

Z = TestModel("z-mean", "two")


def null_config(k, runs=100_000, seed=0, sides="two"):
    return StoppingConfig(batch_fractions=(0.25,) * k, n_runs=runs, seed=RngContract(seed, 0), sides=sides)


class TestConfig:
    def test_defaults(self):
        cfg = StoppingConfig()
        assert cfg.n_stages == 5
        assert cfg.cumulative_fractions == (1.0, 1.25, 1.5, 1.75, 2.0)

    @pytest.mark.parametrize("kw", [dict(batch_fractions=(0.25, -0.1)), dict(threshold_p=0.0),
                                    dict(threshold_p=1.0), dict(n_runs=0), dict(fixed_z=math.inf)])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            StoppingConfig(**kw)

    def test_from_p(self):
        assert StoppingConfig.from_p(0.08).fixed_z == pytest.approx(stats.norm.isf(0.04), rel=1e-12)
        assert StoppingConfig.from_p(0.08, "one").fixed_z == pytest.approx(stats.norm.isf(0.08), rel=1e-12)


class TestSimulation:
    def test_single_stage_size(self):
        rep = simulate_sequential(null_config(0))
        assert abs(rep.cumulative_stop_prob - 0.05) <= 3 * rep.std_error

    def test_single_stage_uniform_p(self):
        rep = simulate_sequential(null_config(0, seed=3))
        p = 2 * stats.norm.sf(np.abs(rep.final_z))
        assert stats.kstest(p, "uniform").pvalue > 0.01

    def test_per_stage_sum(self):
        rep = simulate_sequential(null_config(4, runs=50_000))
        assert rep.cumulative_stop_prob == sum(rep.per_stage_stop_prob)
        assert 0 <= rep.cumulative_stop_prob <= 1
        assert len(rep.per_stage_stop_prob) == 5

    def test_monotone_inflation_paired(self):
        probs = [simulate_sequential(null_config(k, runs=50_000, seed=9)).cumulative_stop_prob
                 for k in range(0, 11)]
        assert np.all(np.diff(probs) >= 0)

    def test_ten_vs_four_from_fixed_start(self):
        kw = dict(n_runs=50_000, seed=RngContract(4, 0))
        four = simulate_sequential(StoppingConfig.from_p(0.08, batch_fractions=(0.25,) * 4, **kw))
        ten = simulate_sequential(StoppingConfig.from_p(0.08, batch_fractions=(0.25,) * 10, **kw))
        assert ten.cumulative_stop_prob >= four.cumulative_stop_prob

    def test_fixed_start_never_stops_at_stage0(self):
        rep = simulate_sequential(StoppingConfig.from_p(0.08, n_runs=20_000))
        assert rep.per_stage_stop_prob[0] == 0.0

    def test_worker_invariance(self):
        cfg = null_config(4, runs=150_000, seed=2)
        a = simulate_sequential(cfg, workers=1)
        b = simulate_sequential(cfg, workers=4)
        assert np.array_equal(a.final_z, b.final_z)
        assert a.per_stage_stop_prob == b.per_stage_stop_prob

    def test_drift_raises_stopping(self):
        base = simulate_sequential(null_config(2, runs=20_000))
        alt = simulate_sequential(StoppingConfig(batch_fractions=(0.25,) * 2, n_runs=20_000, drift=2.0))
        assert alt.cumulative_stop_prob > base.cumulative_stop_prob

    def test_json_export(self):
        rep = simulate_sequential(null_config(1, runs=10_000, seed=1))
        doc = json.loads(rep.to_json())
        assert doc["seed"] == {"master_seed": 1, "stream_id": 0}
        assert doc["config"]["batch_fractions"] == [0.25]
        assert doc["cumulative_stop_prob"] == pytest.approx(rep.cumulative_stop_prob, rel=1e-5)
        assert rep.to_json() == simulate_sequential(null_config(1, runs=10_000, seed=1)).to_json()


class TestTypeOne:
    def test_four_batches_inflated(self):
        rep = stopped_type1_error(null_config(4))
        assert rep.estimate - 0.05 > 3 * rep.std_error

    def test_one_stage(self):
        rep = stopped_type1_error(null_config(0, seed=7))
        assert abs(rep.z_score) <= 3

    def test_paired_monotone(self):
        est = [stopped_type1_error(null_config(k, runs=50_000, seed=11)).estimate for k in range(5)]
        assert all(a <= b for a, b in zip(est, est[1:]))

    def test_requires_null_start(self):
        with pytest.raises(DomainError):
            stopped_type1_error(StoppingConfig.from_p(0.08))


class TestInvariance:
    def test_random_trajectories(self):
        cfg = StoppingConfig(batch_fractions=(0.25,) * 4, n_runs=10_000, seed=RngContract(42, 0),
                             drift=1.0)
        rep = simulate_sequential(cfg, keep_paths=True)
        rng = np.random.default_rng(7)
        worst = 0.0
        for run in range(cfg.n_runs):
            kind = run % 3
            if kind == 0:
                prior = PointMass(float(rng.uniform(0.1, 3)))
            elif kind == 1:
                lo = float(rng.uniform(-2, 1))
                prior = UniformInterval(lo, lo + float(rng.uniform(0.2, 4)))
            else:
                prior = NormalPrior(float(rng.uniform(-1, 1)), float(rng.uniform(0.2, 3)))
            batches = trajectory_batches(rep, run)
            total = sum(f for f, _ in batches)
            mean = sum(v for _, v in batches) / total
            s, f = bf_stopped_vs_fixed(mean, total, prior, Z, batches, cfg.threshold_p, cfg.sides,
                                       max_looks=cfg.n_stages)
            worst = max(worst, abs(s - f) / f)
        assert worst <= 1e-12

    def test_intrinsic_near_two(self):
        # final z right at the two-sided 0.05 threshold after two extra batches
        z = stats.norm.isf(0.025)
        s, f = bf_stopped_vs_fixed(z / math.sqrt(1.5), 1.5, Intrinsic(), TestModel("z-mean"))
        assert s == pytest.approx(f, rel=1e-12)
        assert 1.5 < f < 2.5

    def test_earlier_stop_rejected(self):
        # crossing at the first look contradicts continuing
        with pytest.raises(DomainError):
            bf_stopped_vs_fixed(1.0, 2.0, PointMass(1.0), Z, [(1.0, 3.0), (1.0, -1.0)], 0.05, "two")

    def test_zero_length(self):
        with pytest.raises(DomainError):
            bf_stopped_vs_fixed(1.0, 0.0, PointMass(1.0), Z)

    def test_variance_unsupported(self):
        with pytest.raises(UnsupportedModelError):
            bf_stopped_vs_fixed(1.0, 1.0, PointMass(2.0), TestModel("normal-variance"))
