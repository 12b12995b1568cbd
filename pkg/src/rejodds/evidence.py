"""Post-experimental evidence: Bayes factors and the p-value bound.

Bayes factors are computed in log space and exponentiated at the end, so
extreme statistics overflow to ``inf`` rather than producing ``nan``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, UnsupportedModelError
from .mathcore.normal import LOG_SQRT_2PI, norm_logpdf
from .mathcore.optimize import maximize_1d
from .mathcore.quadrature import DEFAULT_QUADRATURE, Quadrature, integrate
from .models import (
    EmpiricalBayesAll,
    EmpiricalBayesNonincreasing,
    GridWeight,
    Intrinsic,
    NormalPrior,
    PointMass,
    TestModel,
    UniformInterval,
    Z_MEAN,
    check_prior,
    prior_label,
)

INV_E = math.exp(-1.0)


def bf_bound(p: float) -> float | None:
    """Upper bound ``1 / (-e p ln p)`` on the Bayes factor of a proper p-value.

    Returns ``None`` when ``p > 1/e``, where the bound does not apply.

    Examples:
        >>> round(bf_bound(0.05), 3)
        2.456
        >>> bf_bound(0.5) is None
        True
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"p-value must lie in (0, 1), got {p!r}")
    if p > INV_E * (1.0 + 4.0 * np.finfo(float).eps):
        return None
    return max(1.0, 1.0 / (-math.e * p * math.log(p)))


def post_odds(prior_odds: float, r_post: float) -> float:
    for name, v in (("prior_odds", prior_odds), ("r_post", r_post)):
        if not (v > 0 and math.isfinite(v)):
            raise DomainError(f"{name} must be positive and finite, got {v!r}")
    return prior_odds * r_post


# ---------------------------------------------------------------------------
# log Bayes factor kernels


def _log_diff_ndtr(u, w):
    """log(Phi(u) - Phi(w)) for u > w, stable in both tails (array friendly)."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    upper = w > 0
    # upper tail: Phi(u) - Phi(w) = Q(w) - Q(u)
    lu = np.where(upper, special.log_ndtr(-w), special.log_ndtr(u))
    lw = np.where(upper, special.log_ndtr(-u), special.log_ndtr(w))
    with np.errstate(divide="ignore"):
        out = lu + np.log1p(-np.exp(lw - lu))
    return out


def _mean_point(z, delta):
    return z * delta - 0.5 * delta * delta


def _log_bf_mean(z, prior, theta0, scale, cfg, quadrature=False):
    """log BF for a z statistic with noncentrality ``(theta - theta0) * scale``."""
    if isinstance(prior, PointMass):
        return _mean_point(z, (prior.theta - theta0) * scale)
    if isinstance(prior, GridWeight):
        deltas = (np.asarray(prior.points) - theta0) * scale
        with np.errstate(divide="ignore"):
            logw = np.log(np.asarray(prior.weights))
        z = np.asarray(z, dtype=float)[..., None]
        return special.logsumexp(logw + _mean_point(z, deltas), axis=-1)
    if quadrature:
        return _log_bf_mean_quad(z, prior, theta0, scale, cfg)
    if isinstance(prior, NormalPrior):
        m = (prior.mean - theta0) * scale
        v = (prior.sd * scale) ** 2
        return -0.5 * math.log1p(v) + 0.5 * z * z - 0.5 * (z - m) ** 2 / (1.0 + v)
    if isinstance(prior, UniformInterval):
        a = (prior.lo - theta0) * scale
        b = (prior.hi - theta0) * scale
        return _log_diff_ndtr(z - a, z - b) - math.log(b - a) + 0.5 * z * z + LOG_SQRT_2PI
    raise DomainError(f"unsupported prior for a mean family: {prior!r}")


def _log_prior_density(prior, t):
    if isinstance(prior, NormalPrior):
        return norm_logpdf((t - prior.mean) / prior.sd) - math.log(prior.sd)
    return -math.log(prior.hi - prior.lo)


def _log_bf_mean_quad(z, prior, theta0, scale, cfg):
    z = float(z)
    lo, hi = prior.support(cfg.tail_cut)

    def log_g(t):
        return _mean_point(z, (t - theta0) * scale) + _log_prior_density(prior, t)

    # scale by the integrand's maximum (posterior mode) so tolerances act relative to it
    if isinstance(prior, NormalPrior):
        v = (prior.sd * scale) ** 2
        t_peak = theta0 + ((prior.mean - theta0) * scale + v * z) / (1.0 + v) / scale
    else:
        t_peak = min(max(theta0 + z / scale, lo), hi)
    peak = log_g(t_peak)

    def g(t):
        return math.exp(log_g(t) - peak)

    pts = [p for p in (t_peak,) if lo < p < hi]
    total = integrate(g, lo, hi, cfg, points=pts)
    if total <= 0.0:
        return -math.inf
    return peak + math.log(total)


def _var_point(x, s0sq, s1sq):
    return 0.5 * math.log(s0sq / s1sq) + 0.5 * x * x * (1.0 / s0sq - 1.0 / s1sq)


def _log_bf_variance(x, prior, s0sq, cfg):
    if isinstance(prior, PointMass):
        return _var_point(x, s0sq, prior.theta)
    if isinstance(prior, GridWeight):
        pts = np.asarray(prior.points)
        with np.errstate(divide="ignore"):
            logw = np.log(np.asarray(prior.weights))
        x = np.asarray(x, dtype=float)[..., None]
        terms = 0.5 * np.log(s0sq / pts) + 0.5 * x * x * (1.0 / s0sq - 1.0 / pts)
        return special.logsumexp(logw + terms, axis=-1)
    if isinstance(prior, UniformInterval):
        # substitute s = sigma so the integrand stays bounded at sigma^2 = 0
        x = float(x)
        s_lo, s_hi = math.sqrt(prior.lo), math.sqrt(prior.hi)
        if x == 0.0:
            log_total = math.log(s_hi - s_lo)
        else:
            h = 0.5 * x * x
            peak = -h / prior.hi  # the integrand increases in s

            def g(s):
                return math.exp(-h / (s * s) - peak) if s > 0 else 0.0

            pts = (abs(x),) if s_lo < abs(x) < s_hi else ()
            total = integrate(g, s_lo, s_hi, cfg, points=pts)
            if total <= 0.0:
                return -math.inf
            log_total = peak + math.log(total)
        return (math.log(2.0 * math.sqrt(s0sq) / (prior.hi - prior.lo))
                + 0.5 * x * x / s0sq + log_total)
    raise DomainError(f"unsupported prior for the variance family: {prior!r}")


def _check_statistic(statistic):
    if not math.isfinite(statistic):
        raise DomainError(f"statistic must be finite, got {statistic!r}")


def log_bayes_factor(model: TestModel, statistic: float, prior, cfg: Quadrature | None = None,
                     method: str = "auto") -> float:
    """Natural log of :func:`bayes_factor`."""
    cfg = cfg or DEFAULT_QUADRATURE
    _check_statistic(statistic)
    if method not in ("auto", "quadrature"):
        raise DomainError(f"unknown method {method!r}")
    if isinstance(prior, Intrinsic):
        prior = intrinsic_prior(model)
    if isinstance(prior, EmpiricalBayesAll):
        return math.log(mle_fit(model, statistic).r_post)
    if isinstance(prior, EmpiricalBayesNonincreasing):
        return math.log(empirical_bayes_nonincreasing(model, statistic, cfg)[1])
    check_prior(model, prior)
    if model.is_variance:
        return float(_log_bf_variance(statistic, prior, model.null_value, cfg))
    return float(_log_bf_mean(statistic, prior, model.null_value, model.scale, cfg,
                              quadrature=method == "quadrature"))


def bayes_factor(model: TestModel, statistic: float, prior, cfg: Quadrature | None = None,
                 method: str = "auto") -> float:
    """Bayes factor ``m(x) / f(x | theta0)`` of the alternative to the null.

    Point, normal and uniform priors on a mean use closed forms, grid priors
    exact weighted sums.  ``method="quadrature"`` integrates over the prior
    instead (used to cross-check the closed forms).  Uniform priors on a
    variance always use quadrature.

    Examples:
        >>> m = TestModel("z-mean", "one-sided-upper")
        >>> round(bayes_factor(m, 2.06, UniformInterval(0.0, 2.95)), 2)
        5.63
    """
    return math.exp(log_bayes_factor(model, statistic, prior, cfg, method))


def bayes_factor_array(model: TestModel, statistics, prior, cfg: Quadrature | None = None):
    """Vectorized :func:`bayes_factor` over an array of statistics."""
    cfg = cfg or DEFAULT_QUADRATURE
    x = np.asarray(statistics, dtype=float)
    if isinstance(prior, Intrinsic):
        prior = intrinsic_prior(model)
    check_prior(model, prior)
    if model.is_variance:
        if isinstance(prior, (PointMass, GridWeight)):
            if isinstance(prior, PointMass):
                s0, s1 = model.null_value, prior.theta
                lbf = 0.5 * math.log(s0 / s1) + 0.5 * x * x * (1.0 / s0 - 1.0 / s1)
            else:
                lbf = _log_bf_variance(x, prior, model.null_value, cfg)
            return np.exp(lbf)
        return np.array([bayes_factor(model, float(v), prior, cfg) for v in x.ravel()]).reshape(x.shape)
    if isinstance(prior, (PointMass, GridWeight, NormalPrior, UniformInterval)):
        return np.exp(_log_bf_mean(x, prior, model.null_value, model.scale, cfg))
    return np.array([bayes_factor(model, float(v), prior, cfg) for v in x.ravel()]).reshape(x.shape)


def log_marginal_density(model: TestModel, statistic: float, prior,
                         cfg: Quadrature | None = None) -> float:
    """log m(x), integrating the sampling density against the prior directly.

    This does not go through the Bayes factor, so it can serve as a
    cross-check of it.
    """
    cfg = cfg or DEFAULT_QUADRATURE
    _check_statistic(statistic)
    if isinstance(prior, Intrinsic):
        prior = intrinsic_prior(model)
    check_prior(model, prior)
    x = statistic
    if isinstance(prior, PointMass):
        return model.logpdf(x, prior.theta)
    if isinstance(prior, GridWeight):
        with np.errstate(divide="ignore"):
            logw = np.log(np.asarray(prior.weights))
        terms = [model.logpdf(x, t) for t in prior.points]
        return float(special.logsumexp(logw + np.asarray(terms)))
    if model.is_variance:
        if not isinstance(prior, UniformInterval):
            raise DomainError(f"unsupported prior for the variance family: {prior!r}")

        def g(v):
            return math.exp(model.logpdf(x, v)) if v > 0 else 0.0

        total = integrate(g, prior.lo, prior.hi, cfg, points=(x * x,)) / (prior.hi - prior.lo)
        return math.log(total) if total > 0 else -math.inf
    s, theta0 = model.scale, model.null_value
    if isinstance(prior, NormalPrior):
        m = (prior.mean - theta0) * s
        var = 1.0 + (prior.sd * s) ** 2
        return -0.5 * (x - m) ** 2 / var - 0.5 * math.log(var) - LOG_SQRT_2PI
    if isinstance(prior, UniformInterval):
        a = (prior.lo - theta0) * s
        b = (prior.hi - theta0) * s
        return float(_log_diff_ndtr(x - a, x - b)) - math.log(b - a)
    raise DomainError(f"unsupported prior: {prior!r}")


# ---------------------------------------------------------------------------
# empirical-Bayes and intrinsic priors


@dataclass(frozen=True)
class EBFit:
    theta_hat: float
    r_post: float
    attained: bool


def mle_fit(model: TestModel, statistic: float) -> EBFit:
    """Point mass at the maximum-likelihood alternative.

    When the maximizer is the null itself (e.g. ``z <= 0`` for a one-sided
    test) the supremum over alternatives is approached but not attained.
    """
    _check_statistic(statistic)
    if model.is_variance:
        s0 = model.null_value
        v = statistic * statistic
        if v == 0.0:
            return EBFit(0.0, math.inf, False)
        return EBFit(v, math.exp(_var_point(statistic, s0, v)), v != s0)
    delta = statistic if model.two_sided else max(statistic, 0.0)
    theta = model.null_value + delta / model.scale
    return EBFit(theta, math.exp(0.5 * delta * delta), delta != 0.0)


def empirical_bayes_all(model: TestModel, statistic: float) -> float:
    """Largest Bayes factor over all priors (a point mass at the MLE)."""
    return mle_fit(model, statistic).r_post


def empirical_bayes_nonincreasing(model: TestModel, statistic: float,
                                  cfg: Quadrature | None = None, tol: float = 1e-8):
    """Best prior nonincreasing away from the null, for one-sided mean tests.

    Mixtures of ``Uniform(theta0, theta0 + a)`` span the class, so the
    optimum is a single uniform; ``a`` is found by :func:`maximize_1d`.

    Returns:
        (a_star, r_post) with ``a_star`` on the parameter scale.  For
        ``statistic <= 0`` the supremum 1 is reached only as ``a -> 0``,
        reported as ``(0.0, 1.0)``.
    """
    if model.is_variance or model.two_sided:
        raise UnsupportedModelError("nonincreasing empirical Bayes needs a one-sided mean test")
    _check_statistic(statistic)
    z = statistic
    if z <= 0.0:
        return 0.0, 1.0
    theta0, s = model.null_value, model.scale

    def objective(delta_a):
        return bayes_factor(model, z, UniformInterval(theta0, theta0 + delta_a / s), cfg)

    lo = min(0.01, 0.5 * z)
    hi = max(20.0, 2.0 * z + 10.0)
    arg, value = maximize_1d(objective, lo, hi, tol=tol)
    return arg / s, value


def intrinsic_prior(model: TestModel) -> NormalPrior:
    """Intrinsic prior for a normal mean with a flat estimation prior.

    One imaginary observation suffices, and averaging its flat-prior posterior
    ``N(x*, sd^2)`` over ``x* ~ N(theta0, sd^2)`` gives ``N(theta0, 2 sd^2)``.
    :func:`intrinsic_density` evaluates the same construction numerically.
    """
    if model.family != Z_MEAN:
        raise UnsupportedModelError("the intrinsic prior is implemented for the z-mean family only")
    return NormalPrior(model.null_value, math.sqrt(2.0) * model.known_sd)


def intrinsic_density(model: TestModel, theta: float, cfg: Quadrature | None = None) -> float:
    """Intrinsic prior density at ``theta`` by direct quadrature of its definition."""
    if model.family != Z_MEAN:
        raise UnsupportedModelError("the intrinsic prior is implemented for the z-mean family only")
    cfg = cfg or DEFAULT_QUADRATURE
    sd, theta0 = model.known_sd, model.null_value

    def f(x, t):  # one imaginary observation
        return math.exp(-0.5 * ((x - t) / sd) ** 2 - LOG_SQRT_2PI) / sd

    def outer(xs):
        m_flat = integrate(lambda t: f(xs, t), -math.inf, math.inf, cfg, loc=xs, scale=sd)
        return f(xs, theta) / m_flat * f(xs, theta0)

    mid = 0.5 * (theta + theta0)
    return integrate(outer, -math.inf, math.inf, cfg, loc=mid, scale=sd,
                     points=(theta0, theta))


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class BFEntry:
    prior: object
    r_post: float
    note: str = ""

    @property
    def label(self) -> str:
        return prior_label(self.prior)


@dataclass(frozen=True)
class EvidenceReport:
    p_value: float
    bf_bound: float | None
    bf_entries: tuple = ()
    prior_odds: float | None = None
    o_post: tuple = ()
    notes: tuple = ()


def evidence_report(model: TestModel | None = None, statistic: float | None = None,
                    p: float | None = None, priors=(), prior_odds: float | None = None,
                    stopped: bool = False, cfg: Quadrature | None = None) -> EvidenceReport:
    """Collect the p-value bound and per-prior Bayes factors for one result.

    ``p`` defaults to the model's p-value for ``statistic``.  A p-value from an
    optionally stopped design is not proper, so no bound is reported for it.
    """
    if p is None:
        if model is None or statistic is None:
            raise DomainError("need a p-value, or a model and a statistic")
        p = model.p_value(statistic)
    if not (0.0 < p < 1.0):
        raise DomainError(f"p-value must lie in (0, 1), got {p!r}")
    if priors and (model is None or statistic is None):
        raise DomainError("Bayes factors need a model and a statistic")

    notes = []
    bound = None
    if stopped:
        notes.append("bound not reported: p-value from optional stopping is not proper")
    else:
        bound = bf_bound(p)
        if bound is None:
            notes.append("bound not applicable: p > 1/e")
        else:
            notes.append("bf_bound is an upper bound only")
            if model is not None and not model.two_sided:
                notes.append("for one-sided tests the bound need not strictly hold")

    entries = []
    for prior in priors:
        note = ""
        if isinstance(prior, EmpiricalBayesAll):
            fit = mle_fit(model, statistic)
            r = fit.r_post
            note = "supremum, not attained" if not fit.attained else f"theta_hat={fit.theta_hat:.6g}"
        elif isinstance(prior, EmpiricalBayesNonincreasing):
            a, r = empirical_bayes_nonincreasing(model, statistic, cfg)
            note = f"a_star={a:.6g}"
        else:
            r = bayes_factor(model, statistic, prior, cfg)
            if isinstance(prior, Intrinsic):
                note = prior_label(intrinsic_prior(model))
        entries.append(BFEntry(prior, r, note))

    o_post = ()
    if prior_odds is not None:
        o_post = tuple(post_odds(prior_odds, e.r_post) for e in entries)
    return EvidenceReport(p, bound, tuple(entries), prior_odds, o_post, tuple(notes))
