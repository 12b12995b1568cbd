"""Frequentist checks on reported Bayes factors.

Over a rejection region R of size alpha, the Bayes factor averages to the
rejection ratio under the null, and its reciprocal averages to the reciprocal
rejection ratio under the marginal alternative:

    E[BF | H0, R] = (1 - beta_bar) / alpha
    E[1/BF | H1*, R] = alpha / (1 - beta_bar)

Both are evaluated by quadrature here and the first by Monte Carlo as well.
The power side always comes from :mod:`rejodds.design`, which integrates the
power curve over the prior and never touches a Bayes factor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import design
from .errors import DomainError, InsufficientSampleError
from .evidence import bayes_factor_array, log_bayes_factor, log_marginal_density
from .mathcore.normal import norm_sf
from .mathcore.quadrature import DEFAULT_QUADRATURE, Quadrature, integrate
from .mathcore.rng import BLOCK_SIZE, RngContract, map_blocks
from .models import (
    GridWeight,
    Intrinsic,
    NormalPrior,
    PointMass,
    TestModel,
    UniformInterval,
    check_prior,
)

MARGINAL_CAVEAT = (
    "the reciprocal identity averages over the marginal alternative, i.e. over "
    "theta drawn from the prior as well as the data; it is not a fixed-theta "
    "frequentist statement"
)


@dataclass(frozen=True)
class RejectionRegion:
    """``{x >= c}`` (kind ``"upper"``) or ``{|x| >= c}`` (kind ``"abs"``)."""

    kind: str
    c: float

    def __post_init__(self):
        if self.kind not in ("upper", "abs"):
            raise DomainError(f"region kind must be 'upper' or 'abs', got {self.kind!r}")
        if math.isnan(self.c):
            raise DomainError("region boundary is NaN")

    @classmethod
    def for_alpha(cls, model: TestModel, alpha: float) -> RejectionRegion:
        kind = "abs" if model.two_sided else "upper"
        return cls(kind, design.rejection_boundary(model, alpha))

    @classmethod
    def whole_line(cls) -> RejectionRegion:
        return cls("upper", -math.inf)

    @property
    def two_sided(self) -> bool:
        return self.kind == "abs"

    def contains(self, x):
        x = np.asarray(x)
        return np.abs(x) >= self.c if self.two_sided else x >= self.c

    def null_prob(self, model: TestModel) -> float:
        """Probability of the region under the null (its size alpha)."""
        if math.isinf(self.c):
            return 1.0 if self.c < 0 else 0.0
        sd = math.sqrt(model.null_value) if model.is_variance else 1.0
        if self.two_sided:
            return 1.0 if self.c <= 0 else min(1.0, 2.0 * norm_sf(self.c / sd))
        return norm_sf(self.c / sd)

    def pieces(self, lo: float, hi: float):
        """Finite sub-intervals of ``[lo, hi]`` covered by the region."""
        if self.two_sided and self.c > 0:
            out = [(lo, min(hi, -self.c)), (max(lo, self.c), hi)]
        elif self.two_sided:
            out = [(lo, hi)]
        else:
            out = [(max(lo, self.c), hi)]
        return [(a, b) for a, b in out if a < b]


@dataclass(frozen=True)
class MCReport:
    estimate: float
    std_error: float
    target: float
    z_score: float
    n_runs: int
    seed: RngContract
    n_retained: int = 0


@dataclass(frozen=True)
class Result2Check:
    alpha: float
    avg_power: float
    r_pre: float
    expected_bf_null: float
    expected_inv_bf_marginal: float
    rel_err_bf: float
    rel_err_inv_bf: float
    caveat: str = MARGINAL_CAVEAT


def _resolve(model, prior):
    if isinstance(prior, Intrinsic):
        from .evidence import intrinsic_prior

        prior = intrinsic_prior(model)
    check_prior(model, prior)
    if not isinstance(prior, (PointMass, UniformInterval, NormalPrior, GridWeight)):
        raise DomainError("frequentist checks need a fixed (data-independent) prior")
    return prior


def _window(model, prior, cut):
    """Interval holding all but a negligible part of the marginal density."""
    if model.is_variance:
        top = prior.support(cut)[1]
        half = cut * math.sqrt(max(top, model.null_value))
        return -half, half
    s, theta0 = model.scale, model.null_value
    if isinstance(prior, NormalPrior):
        m = (prior.mean - theta0) * s
        w = cut * math.sqrt(1.0 + (prior.sd * s) ** 2)
        return min(m - w, -cut), max(m + w, cut)
    lo, hi = prior.support(cut)
    return min((lo - theta0) * s, 0.0) - cut, max((hi - theta0) * s, 0.0) + cut


def _integrate_region(f, model, prior, region, cfg):
    lo, hi = _window(model, prior, cfg.tail_cut)
    total = 0.0
    for a, b in region.pieces(lo, hi):
        total += integrate(f, a, b, cfg, points=(0.0,))
    return total


def _power(model, prior, region, cfg):
    return design.average_power(model, prior, region.c, region.two_sided, cfg)


def _alpha(model, region):
    alpha = region.null_prob(model)
    if not alpha > 0:
        raise DomainError("rejection region has zero probability under the null")
    return alpha


def expected_bf_under_null(model: TestModel, prior, region: RejectionRegion,
                           cfg: Quadrature | None = None) -> float:
    """Null-conditional mean of the Bayes factor over the region, by quadrature."""
    cfg = cfg or DEFAULT_QUADRATURE
    prior = _resolve(model, prior)
    alpha = _alpha(model, region)

    def f(x):
        return math.exp(log_bayes_factor(model, x, prior, cfg) + model.null_logpdf(x))

    return _integrate_region(f, model, prior, region, cfg) / alpha


def expected_inv_bf_under_marginal(model: TestModel, prior, region: RejectionRegion,
                                   cfg: Quadrature | None = None) -> float:
    """Mean of 1/BF over the region when data follow the marginal m(x)."""
    cfg = cfg or DEFAULT_QUADRATURE
    prior = _resolve(model, prior)

    def inv_bf_times_m(x):
        return math.exp(log_marginal_density(model, x, prior, cfg)
                        - log_bayes_factor(model, x, prior, cfg))

    def m(x):
        return math.exp(log_marginal_density(model, x, prior, cfg))

    mass = _integrate_region(m, model, prior, region, cfg)
    if not mass > 0:
        raise DomainError("rejection region has zero probability under the marginal")
    return _integrate_region(inv_bf_times_m, model, prior, region, cfg) / mass


def check_result2(model: TestModel, prior, region: RejectionRegion,
                  cfg: Quadrature | None = None) -> Result2Check:
    """Both identities side by side with their design-side targets."""
    cfg = cfg or DEFAULT_QUADRATURE
    prior = _resolve(model, prior)
    alpha = _alpha(model, region)
    power = _power(model, prior, region, cfg)
    r_pre = power / alpha
    e1 = expected_bf_under_null(model, prior, region, cfg)
    e2 = expected_inv_bf_under_marginal(model, prior, region, cfg)
    return Result2Check(alpha, power, r_pre, e1, e2,
                        abs(e1 - r_pre) / r_pre, abs(e2 - 1.0 / r_pre) * r_pre)


def mc_check_result2(model: TestModel, prior, region: RejectionRegion, n_runs: int,
                     seed: RngContract, workers: int = 1,
                     cfg: Quadrature | None = None) -> MCReport:
    """Monte Carlo version of the null identity.

    Data are drawn from the null, draws outside the region are discarded and
    the Bayes factor is averaged over the rest.  The target is the rejection
    ratio from :func:`rejodds.design.average_power`.
    """
    if n_runs < 10_000:
        raise DomainError("n_runs must be at least 10^4")
    cfg = cfg or DEFAULT_QUADRATURE
    prior = _resolve(model, prior)
    sd = math.sqrt(model.null_value) if model.is_variance else 1.0

    def block(k, n):
        x = sd * seed.generator(k).standard_normal(n)
        return bayes_factor_array(model, x[region.contains(x)], prior, cfg)

    kept = np.concatenate(map_blocks(block, n_runs, workers, BLOCK_SIZE))
    if kept.size < 2:
        raise InsufficientSampleError(
            f"only {kept.size} of {n_runs} draws fell in the rejection region")
    estimate = float(kept.mean())
    std_error = float(kept.std(ddof=1) / math.sqrt(kept.size))
    alpha = _alpha(model, region)
    target = _power(model, prior, region, cfg) / alpha
    z = (estimate - target) / std_error if std_error > 0 else math.inf
    return MCReport(estimate, std_error, target, z, n_runs, seed, int(kept.size))


def bf_curve_over_region(model: TestModel, prior, region: RejectionRegion, grid_size: int,
                         upper: float | None = None, cfg: Quadrature | None = None):
    """Bayes factor tabulated on an even grid from the region boundary to ``upper``.

    Returns a list of ``(statistic, r_post)``.  For ``|x| >= c`` regions the
    positive branch is tabulated.
    """
    if grid_size < 2:
        raise DomainError("grid_size must be at least 2")
    if math.isinf(region.c):
        raise DomainError("the region needs a finite boundary to tabulate")
    prior = _resolve(model, prior)
    start = max(region.c, 0.0) if region.two_sided else region.c
    if upper is None:
        upper = start + 4.0 * (math.sqrt(model.null_value) if model.is_variance else 1.0)
    if not upper > start:
        raise DomainError("upper end must exceed the region boundary")
    xs = np.linspace(start, upper, grid_size)
    bf = bayes_factor_array(model, xs, prior, cfg)
    return [(float(x), float(r)) for x, r in zip(xs, bf)]


def write_curve_csv(rows, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["statistic", "r_post"])
    for x, r in rows:
        writer.writerow([f"{x:.6g}", f"{r:.6g}"])
