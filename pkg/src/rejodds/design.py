"""Pre-experimental design: power, rejection ratio and pre-experimental odds.

The rejection ratio of a design is ``average power / alpha``; multiplying it by
the prior odds of the alternative gives the pre-experimental odds that a
rejection is correct.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InfeasibleTargetError, UnsupportedModelError
from .mathcore.normal import norm_quantile, norm_sf
from .mathcore.quadrature import DEFAULT_QUADRATURE, Quadrature, integrate
from .models import (
    DATA_DEPENDENT_PRIORS,
    GridWeight,
    Intrinsic,
    NormalPrior,
    PointMass,
    TestModel,
    UniformInterval,
    check_prior,
)

_PER_THETA_POINTS = 65


@dataclass(frozen=True)
class PowerResult:
    alpha: float
    avg_power: float
    rejection_boundary: float
    per_theta_power: tuple | None = None


@dataclass(frozen=True)
class RejectionReport:
    alpha: float
    avg_power: float
    r_pre: float
    prior_odds: float | None = None
    o_pre: float | None = None
    power: PowerResult | None = None


def _check_alpha(alpha):
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")


def _check_positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


def r_to_d(r: float) -> float:
    """Convert a point-biserial correlation to Cohen's d (never applied implicitly)."""
    if not -1.0 < r < 1.0:
        raise DomainError("correlation must lie in (-1, 1)")
    return 2.0 * r / math.sqrt(1.0 - r * r)


def rejection_boundary(model: TestModel, alpha: float) -> float:
    """Critical value ``c``: reject when ``z >= c`` (one-sided) or ``|stat| >= c``."""
    _check_alpha(alpha)
    if model.two_sided:
        c = -norm_quantile(0.5 * alpha)
    else:
        c = -norm_quantile(alpha)
    if model.is_variance:
        c *= math.sqrt(model.null_value)
    return c


def power_at(model: TestModel, theta: float, c: float, two_sided: bool | None = None) -> float:
    """Probability that the statistic lands in the region defined by ``c``."""
    two_sided = model.two_sided if two_sided is None else two_sided
    if model.is_variance:
        if theta < 0:
            raise DomainError("variance must be non-negative")
        if math.isinf(c):
            return 1.0 if c < 0 else 0.0
        if theta == 0:
            return 1.0 if c <= 0 else 0.0
        sigma = math.sqrt(theta)
        if not two_sided:
            return norm_sf(c / sigma)
        if c <= 0:
            return 1.0
        return min(1.0, 2.0 * norm_sf(c / sigma))
    delta = model.noncentrality(theta)
    if math.isinf(c):
        return 1.0 if c < 0 else 0.0
    if two_sided:
        if c <= 0:
            return 1.0
        return min(1.0, norm_sf(c - delta) + norm_sf(c + delta))
    return norm_sf(c - delta)


def _resolve_effect(model, effect):
    if isinstance(effect, Intrinsic):
        from .evidence import intrinsic_prior

        return intrinsic_prior(model)
    if isinstance(effect, DATA_DEPENDENT_PRIORS):
        raise DomainError("empirical-Bayes priors depend on the data and cannot drive a design")
    check_prior(model, effect, allow_null_point=True)
    return effect


def average_power(model: TestModel, effect, c: float, two_sided: bool | None = None,
                  cfg: Quadrature | None = None) -> float:
    """Power integrated against the effect prior."""
    cfg = cfg or DEFAULT_QUADRATURE
    effect = _resolve_effect(model, effect)

    def pw(t):
        return power_at(model, t, c, two_sided)

    if isinstance(effect, PointMass):
        value = pw(effect.theta)
    elif isinstance(effect, GridWeight):
        value = math.fsum(w * pw(t) for t, w in zip(effect.points, effect.weights))
    elif isinstance(effect, UniformInterval):
        width = effect.hi - effect.lo
        value = integrate(lambda t: pw(t), effect.lo, effect.hi, cfg) / width
    elif isinstance(effect, NormalPrior):
        lo, hi = effect.support(cfg.tail_cut)
        value = integrate(lambda t: pw(t) * effect.density(t), lo, hi, cfg,
                          points=(effect.mean,))
    else:  # pragma: no cover - _resolve_effect guards this
        raise DomainError(f"unsupported effect specification {effect!r}")
    return min(1.0, max(0.0, value))


def _per_theta(model, effect, c, cfg):
    if isinstance(effect, PointMass):
        return None
    if isinstance(effect, GridWeight):
        thetas = effect.points
    else:
        lo, hi = effect.support(4.0)
        if model.is_variance:
            lo = max(lo, 0.0)
        step = (hi - lo) / (_PER_THETA_POINTS - 1)
        thetas = [lo + i * step for i in range(_PER_THETA_POINTS)]
    return tuple((t, power_at(model, t, c)) for t in thetas)


def compute_power(model: TestModel, effect, alpha: float,
                  cfg: Quadrature | None = None) -> PowerResult:
    """Average power of the size-``alpha`` test against the effect prior.

    Examples:
        >>> m = TestModel("two-sample-z", "one-sided-upper", n1=280)
        >>> round(compute_power(m, PointMass(0.21), 0.05).avg_power, 2)
        0.8
    """
    c = rejection_boundary(model, alpha)
    effect = _resolve_effect(model, effect)
    avg = average_power(model, effect, c, cfg=cfg)
    return PowerResult(alpha, avg, c, _per_theta(model, effect, c, cfg))


def rejection_ratio(power: float, alpha: float) -> float:
    _check_alpha(alpha)
    if not 0.0 <= power <= 1.0:
        raise DomainError(f"power must lie in [0, 1], got {power!r}")
    return power / alpha


def pre_odds(prior_odds: float, r_pre: float) -> float:
    _check_positive("prior_odds", prior_odds)
    _check_positive("r_pre", r_pre)
    return prior_odds * r_pre


def solve_alpha(prior_odds: float, avg_power: float, target_o_pre: float) -> float:
    """Significance threshold giving the target pre-experimental odds."""
    _check_positive("prior_odds", prior_odds)
    _check_positive("target_o_pre", target_o_pre)
    if not 0.0 < avg_power <= 1.0:
        raise DomainError(f"avg_power must lie in (0, 1], got {avg_power!r}")
    alpha = prior_odds * avg_power / target_o_pre
    if not 0.0 < alpha < 1.0:
        raise InfeasibleTargetError(
            f"target odds {target_o_pre!r} need alpha={alpha!r}, outside (0, 1)")
    return alpha


def solve_sample_size(model: TestModel, effect, alpha: float, target_r_pre: float,
                      cfg: Quadrature | None = None, n_max: int = 1 << 40) -> int:
    """Smallest per-group n whose rejection ratio reaches ``target_r_pre``.

    Doubling finds a bracket, integer bisection closes it.  Power is assumed
    nondecreasing in n, which holds for effects on one side of the null.
    """
    if model.is_variance:
        raise UnsupportedModelError("sample size does not enter the single-observation variance test")
    _check_alpha(alpha)
    _check_positive("target_r_pre", target_r_pre)
    if target_r_pre > 1.0 / alpha:
        raise InfeasibleTargetError(
            f"rejection ratio cannot exceed 1/alpha = {1.0 / alpha:g}")
    effect = _resolve_effect(model, effect)

    def ok(n):
        power = compute_power(model.with_n(n), effect, alpha, cfg).avg_power
        return rejection_ratio(power, alpha) >= target_r_pre

    if ok(1):
        return 1
    lo, hi = 1, 2
    while not ok(hi):
        lo, hi = hi, hi * 2
        if hi > n_max:
            raise InfeasibleTargetError("target rejection ratio not reached at any sample size")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def design_report(model: TestModel, effect=None, alpha: float = 0.05,
                  prior_odds: float | None = None, avg_power: float | None = None,
                  cfg: Quadrature | None = None) -> RejectionReport:
    """Bundle alpha, power, R_pre and (optionally) the pre-experimental odds.

    Pass ``avg_power`` instead of ``effect`` when power was computed elsewhere.
    """
    _check_alpha(alpha)
    power = None
    if avg_power is None:
        if effect is None:
            raise DomainError("either an effect prior or avg_power is required")
        power = compute_power(model, effect, alpha, cfg)
        avg_power = power.avg_power
    r_pre = rejection_ratio(avg_power, alpha)
    o_pre = None
    if prior_odds is not None:
        o_pre = pre_odds(prior_odds, r_pre)
    return RejectionReport(alpha, avg_power, r_pre, prior_odds, o_pre, power)
