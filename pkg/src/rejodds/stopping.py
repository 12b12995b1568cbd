"""Optional-stopping simulator on the normalized sufficient-statistic scale.

Sample sizes are measured as fractions of the original sample.  The running
sum ``S`` of standardized observations satisfies ``S ~ N(drift * T, T)`` after
a total fraction ``T``, and the unadjusted z statistic is ``S / sqrt(T)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedModelError
from .evidence import _log_bf_mean
from .freqcheck import MCReport
from .mathcore.normal import LOG_SQRT_2PI, norm_quantile, norm_sf, norm_sf_array
from .mathcore.quadrature import DEFAULT_QUADRATURE
from .mathcore.rng import BLOCK_SIZE, RngContract, map_blocks
from .models import TWO_SIDED, Intrinsic, TestModel, check_prior, normalize_sides


@dataclass(frozen=True)
class StoppingConfig:
    """Stopping rule: stop at the first stage whose p-value is below ``threshold_p``.

    Stage 0 is the original sample (``initial_fraction``); each entry of
    ``batch_fractions`` adds one more look.  With ``fixed_z`` set the original
    sample is not simulated and starts at that z; otherwise it is drawn like
    the batches, with noncentrality ``drift`` per unit fraction (0 is the null).
    """

    batch_fractions: tuple = (0.25, 0.25, 0.25, 0.25)
    threshold_p: float = 0.05
    sides: str = TWO_SIDED
    n_runs: int = 100_000
    seed: RngContract = field(default_factory=RngContract)
    fixed_z: float | None = None
    drift: float = 0.0
    initial_fraction: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "batch_fractions", tuple(float(f) for f in self.batch_fractions))
        object.__setattr__(self, "sides", normalize_sides(self.sides))
        if any(not (f > 0 and math.isfinite(f)) for f in self.batch_fractions):
            raise DomainError("batch fractions must be positive")
        if not self.initial_fraction > 0:
            raise DomainError("initial_fraction must be positive")
        if not 0.0 < self.threshold_p < 1.0:
            raise DomainError("threshold_p must lie in (0, 1)")
        if int(self.n_runs) != self.n_runs or self.n_runs < 1:
            raise DomainError("n_runs must be a positive integer")
        if self.fixed_z is not None and not math.isfinite(self.fixed_z):
            raise DomainError("fixed_z must be finite")
        if not math.isfinite(self.drift):
            raise DomainError("drift must be finite")

    @classmethod
    def from_p(cls, p: float, sides: str = TWO_SIDED, **kw) -> StoppingConfig:
        """Start from the (positive) z whose p-value is ``p``."""
        sides = normalize_sides(sides)
        if not 0.0 < p < 1.0:
            raise DomainError("p must lie in (0, 1)")
        z = -norm_quantile(0.5 * p if sides == TWO_SIDED else p)
        return cls(sides=sides, fixed_z=z, **kw)

    @property
    def n_stages(self) -> int:
        return 1 + len(self.batch_fractions)

    @property
    def cumulative_fractions(self) -> tuple:
        out, t = [], self.initial_fraction
        out.append(t)
        for f in self.batch_fractions:
            t += f
            out.append(t)
        return tuple(out)

    def echo(self) -> dict:
        d = asdict(self)
        d["batch_fractions"] = list(self.batch_fractions)
        return d


@dataclass(frozen=True)
class StoppingSimReport:
    per_stage_stop_prob: tuple
    per_stage_std_error: tuple
    cumulative_stop_prob: float
    std_error: float
    n_runs: int
    config: StoppingConfig
    final_z: np.ndarray = field(repr=False)
    final_fraction: np.ndarray = field(repr=False)
    stop_stage: np.ndarray = field(repr=False)
    paths: np.ndarray | None = field(default=None, repr=False)

    def trajectories_summary(self) -> dict:
        stopped = self.stop_stage >= 0
        return {
            "n_stopped": int(stopped.sum()),
            "mean_final_z": float(self.final_z.mean()),
            "mean_final_fraction": float(self.final_fraction.mean()),
            "mean_final_z_stopped": float(self.final_z[stopped].mean()) if stopped.any() else None,
        }

    def to_json(self) -> str:
        doc = {
            "per_stage_stop_prob": [round_sig(p) for p in self.per_stage_stop_prob],
            "per_stage_std_error": [round_sig(p) for p in self.per_stage_std_error],
            "cumulative_stop_prob": round_sig(self.cumulative_stop_prob),
            "std_error": round_sig(self.std_error),
            "n_runs": self.n_runs,
            "config": self.config.echo(),
            "seed": asdict(self.config.seed),
            "trajectories": {k: (round_sig(v) if isinstance(v, float) else v)
                             for k, v in self.trajectories_summary().items()},
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def round_sig(x, digits=6):
    if x is None or not math.isfinite(x):
        return x
    return float(f"{x:.{digits}g}")


def _p_values(z, sides):
    if sides == TWO_SIDED:
        return np.minimum(1.0, 2.0 * norm_sf_array(np.abs(z)))
    return norm_sf_array(z)


def simulate_sequential(config: StoppingConfig, workers: int = 1,
                        keep_paths: bool = False) -> StoppingSimReport:
    """Simulate the stopping rule and estimate per-stage stopping probabilities.

    Each stage's increments come from their own counter-based stream, so two
    configurations sharing a seed see identical early stages (paired runs).
    """
    fracs = config.cumulative_fractions
    steps = (config.initial_fraction,) + config.batch_fractions
    seed = config.seed

    def block(k, n):
        if config.fixed_z is not None:
            s = np.full(n, config.fixed_z * math.sqrt(config.initial_fraction))
        else:
            f0 = config.initial_fraction
            s = config.drift * f0 + math.sqrt(f0) * seed.generator(k, 0).standard_normal(n)
        stop = np.full(n, -1, dtype=np.int64)
        z_final = np.empty(n)
        path = np.empty((n, len(fracs))) if keep_paths else None
        for stage, t in enumerate(fracs):
            if stage > 0:
                f = steps[stage]
                s = s + config.drift * f + math.sqrt(f) * seed.generator(k, stage).standard_normal(n)
            z = s / math.sqrt(t)
            if keep_paths:
                path[:, stage] = s
            active = stop < 0
            z_final[active] = z[active]
            hit = active & (_p_values(z, config.sides) < config.threshold_p)
            stop[hit] = stage
        t_final = np.where(stop >= 0, np.asarray(fracs)[np.maximum(stop, 0)], fracs[-1])
        return stop, z_final, t_final, path

    parts = map_blocks(block, config.n_runs, workers, BLOCK_SIZE)
    stop = np.concatenate([p[0] for p in parts])
    z_final = np.concatenate([p[1] for p in parts])
    t_final = np.concatenate([p[2] for p in parts])
    paths = np.concatenate([p[3] for p in parts]) if keep_paths else None

    n = config.n_runs
    counts = np.bincount(stop[stop >= 0], minlength=config.n_stages)
    per_stage = tuple(float(c) / n for c in counts)
    per_se = tuple(math.sqrt(p * (1.0 - p) / n) for p in per_stage)
    cumulative = sum(per_stage)
    se = math.sqrt(max(cumulative * (1.0 - cumulative), 0.0) / n)
    return StoppingSimReport(per_stage, per_se, cumulative, se, n, config,
                             z_final, t_final, stop, paths)


def stopped_type1_error(config: StoppingConfig, workers: int = 1) -> MCReport:
    """Type I error of the stopped design, against the nominal threshold."""
    if config.fixed_z is not None or config.drift != 0.0:
        raise DomainError("type I error needs data simulated from the null from the start")
    rep = simulate_sequential(config, workers)
    est, se = rep.cumulative_stop_prob, rep.std_error
    z = (est - config.threshold_p) / se if se > 0 else math.inf
    return MCReport(est, se, config.threshold_p, z, config.n_runs, config.seed)


# ---------------------------------------------------------------------------
# stopping-rule invariance of the Bayes factor


def _stopping_factor(batches, threshold_p, sides, max_looks=None):
    """Stopped-data density factor: no stop before the last look, stop at it.

    The final permitted look always stops; an earlier last look must have
    crossed the threshold.
    """
    t = s = 0.0
    n = len(batches)
    for i, (f, inc) in enumerate(batches):
        t += f
        s += inc
        z = s / math.sqrt(t)
        p = 2.0 * norm_sf(abs(z)) if sides == TWO_SIDED else norm_sf(z)
        stopped = p < threshold_p
        if i < n - 1 and stopped:
            return 0.0
    if max_looks is not None and n < max_looks and not stopped:
        return 0.0
    return 1.0


def bf_stopped_vs_fixed(final_mean: float, total_n_fraction: float, prior, model: TestModel,
                        batches=None, threshold_p: float | None = None, sides: str | None = None,
                        max_looks: int | None = None):
    """Bayes factor of stopped data, computed two ways.

    ``bf_stopped`` uses the full stopped-data density: per-batch likelihoods
    times the stopping-rule factor, in both numerator and denominator.
    ``bf_fixed`` treats ``(final_mean, total_n_fraction)`` as a fixed-size
    sample.  ``batches`` is a sequence of ``(fraction, sum)`` pairs on the
    noncentrality scale; without it the data form a single batch.  With
    ``threshold_p`` given, the rule "stop once p < threshold_p, or at look
    ``max_looks``" is evaluated on the batches.

    Returns:
        (bf_stopped, bf_fixed)
    """
    if model.is_variance:
        raise UnsupportedModelError("optional stopping is simulated for mean families")
    if not (total_n_fraction > 0 and math.isfinite(total_n_fraction)):
        raise DomainError("total_n_fraction must be positive")
    if not math.isfinite(final_mean):
        raise DomainError("final_mean must be finite")
    if isinstance(prior, Intrinsic):
        from .evidence import intrinsic_prior

        prior = intrinsic_prior(model)
    check_prior(model, prior)
    cfg = DEFAULT_QUADRATURE
    big_t = total_n_fraction
    big_s = final_mean * big_t
    if batches is None:
        batches = [(big_t, big_s)]
    batches = [(float(f), float(v)) for f, v in batches]
    if not batches or any(not f > 0 for f, _ in batches):
        raise DomainError("batches need positive fractions")
    if not math.isclose(sum(f for f, _ in batches), big_t, rel_tol=1e-12):
        raise DomainError("batch fractions do not add up to total_n_fraction")
    if not math.isclose(sum(v for _, v in batches), big_s, rel_tol=1e-12, abs_tol=1e-12):
        raise DomainError("batch sums do not add up to final_mean * total_n_fraction")

    scale = model.scale * math.sqrt(big_t)
    z = big_s / math.sqrt(big_t)
    log_fixed = float(_log_bf_mean(z, prior, model.null_value, scale, cfg))

    tau = 1.0
    if threshold_p is not None:
        tau = _stopping_factor(batches, threshold_p, normalize_sides(sides or TWO_SIDED),
                               max_looks)
    if tau == 0.0:
        raise DomainError("trajectory would have stopped earlier under this rule")
    log_tau = math.log(tau)

    def log_normal(v, var):
        return -0.5 * v * v / var - 0.5 * math.log(var) - LOG_SQRT_2PI

    # batch likelihood = g(batches) * N(S; delta*T, T); g carries no parameter
    log_den_batches = math.fsum(log_normal(v, f) for f, v in batches)
    log_g = log_den_batches - log_normal(big_s, big_t)
    log_h1 = log_normal(big_s, big_t) + log_fixed
    log_num = log_tau + log_g + log_h1
    log_den = log_tau + log_den_batches
    return math.exp(log_num - log_den), math.exp(log_fixed)


def trajectory_batches(report: StoppingSimReport, run: int):
    """``(fraction, sum)`` batches actually observed by one simulated run."""
    if report.paths is None:
        raise DomainError("simulate with keep_paths=True to recover trajectories")
    cfg = report.config
    last = report.stop_stage[run] if report.stop_stage[run] >= 0 else cfg.n_stages - 1
    steps = (cfg.initial_fraction,) + cfg.batch_fractions
    sums = report.paths[run, : last + 1]
    incs = np.diff(sums, prepend=0.0)
    return [(steps[i], float(incs[i])) for i in range(last + 1)]
