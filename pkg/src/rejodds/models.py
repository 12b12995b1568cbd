"""Test models and prior specifications.

Mean families work on the z scale: the statistic is ``z ~ N(delta, 1)`` with
noncentrality ``delta = (theta - null_value) * sqrt(n_eff) / known_sd``.
Priors are declared on the parameter scale ``theta``; with the defaults
(``null_value=0``, ``known_sd=1``, ``n1=1``) that is the z scale itself.

The variance family observes a single ``x ~ N(0, sigma^2)`` and tests
``sigma^2 = null_value``; its priors live on ``sigma^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from .errors import DomainError
from .mathcore.normal import norm_logpdf, norm_sf

Z_MEAN = "z-mean"
TWO_SAMPLE_Z = "two-sample-z"
NORMAL_VARIANCE = "normal-variance"
FAMILIES = (Z_MEAN, TWO_SAMPLE_Z, NORMAL_VARIANCE)

ONE_SIDED = "one-sided-upper"
TWO_SIDED = "two-sided"
SIDES = (ONE_SIDED, TWO_SIDED)

_SIDE_ALIASES = {"one": ONE_SIDED, "one-sided": ONE_SIDED, "upper": ONE_SIDED,
                 "two": TWO_SIDED}


def normalize_sides(sides: str) -> str:
    sides = _SIDE_ALIASES.get(sides, sides)
    if sides not in SIDES:
        raise DomainError(f"unknown sidedness {sides!r}; expected one of {SIDES}")
    return sides


@dataclass(frozen=True)
class TestModel:
    """Sampling family and point null under test.

    For ``normal-variance`` the rejection region is always ``|x| >= c``, so
    ``sides`` is normalized to two-sided.
    """

    __test__ = False  # keep pytest from collecting this class

    family: str = Z_MEAN
    sides: str = ONE_SIDED
    null_value: float | None = None  # 0 for mean families, 1 for the variance
    known_sd: float = 1.0
    n1: int = 1
    n2: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        sides = normalize_sides(self.sides)
        if self.family == NORMAL_VARIANCE:
            sides = TWO_SIDED
        object.__setattr__(self, "sides", sides)
        if self.null_value is None:
            object.__setattr__(self, "null_value", 1.0 if self.family == NORMAL_VARIANCE else 0.0)
        if not (self.known_sd > 0 and math.isfinite(self.known_sd)):
            raise DomainError("known_sd must be a positive finite number")
        if not math.isfinite(self.null_value):
            raise DomainError("null_value must be finite")
        if int(self.n1) != self.n1 or self.n1 < 1:
            raise DomainError("n1 must be a positive integer")
        if self.family == TWO_SAMPLE_Z:
            n2 = self.n1 if self.n2 is None else self.n2
            if int(n2) != n2 or n2 < 1:
                raise DomainError("n2 must be a positive integer")
            object.__setattr__(self, "n2", int(n2))
        elif self.n2 is not None:
            raise DomainError("n2 only applies to the two-sample-z family")
        if self.family == NORMAL_VARIANCE:
            if self.null_value <= 0:
                raise DomainError("variance-family null_value must be positive")
            if self.n1 != 1:
                raise DomainError("the variance family observes a single x (n1 = 1)")

    @property
    def is_variance(self) -> bool:
        return self.family == NORMAL_VARIANCE

    @property
    def two_sided(self) -> bool:
        return self.sides == TWO_SIDED

    @property
    def effective_n(self) -> float:
        if self.family == TWO_SAMPLE_Z:
            return self.n1 * self.n2 / (self.n1 + self.n2)
        return float(self.n1)

    @property
    def scale(self) -> float:
        """Noncentrality per unit of ``theta`` (mean families)."""
        return math.sqrt(self.effective_n) / self.known_sd

    def noncentrality(self, theta: float) -> float:
        return (theta - self.null_value) * self.scale

    def with_n(self, n: int) -> TestModel:
        """Same model with ``n`` per group."""
        n2 = n if self.family == TWO_SAMPLE_Z else None
        return TestModel(self.family, self.sides, self.null_value, self.known_sd, n, n2)

    def null_logpdf(self, x: float) -> float:
        if self.is_variance:
            s = math.sqrt(self.null_value)
            return norm_logpdf(x / s) - math.log(s)
        return norm_logpdf(x)

    def logpdf(self, x: float, theta: float) -> float:
        if self.is_variance:
            s = math.sqrt(theta)
            return norm_logpdf(x / s) - math.log(s)
        return norm_logpdf(x - self.noncentrality(theta))

    def p_value(self, statistic: float) -> float:
        if self.is_variance:
            return min(1.0, 2.0 * norm_sf(abs(statistic) / math.sqrt(self.null_value)))
        if self.two_sided:
            return min(1.0, 2.0 * norm_sf(abs(statistic)))
        return norm_sf(statistic)


# ---------------------------------------------------------------------------
# priors


@dataclass(frozen=True)
class PointMass:
    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise DomainError("point mass location must be finite")

    def support(self, cut):
        return self.theta, self.theta


@dataclass(frozen=True)
class UniformInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise DomainError("uniform prior needs finite lo < hi")

    def density(self, theta):
        return 1.0 / (self.hi - self.lo) if self.lo <= theta <= self.hi else 0.0

    def support(self, cut):
        return self.lo, self.hi


@dataclass(frozen=True)
class NormalPrior:
    mean: float
    sd: float

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise DomainError("normal prior mean must be finite")
        if not (self.sd > 0 and math.isfinite(self.sd)):
            raise DomainError("normal prior sd must be positive")

    def density(self, theta):
        return math.exp(norm_logpdf((theta - self.mean) / self.sd)) / self.sd

    def support(self, cut):
        return self.mean - cut * self.sd, self.mean + cut * self.sd


@dataclass(frozen=True)
class GridWeight:
    """Discrete prior (a power weight function); weights must sum to one."""

    points: tuple = field(default=())
    weights: tuple = field(default=())

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        wts = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        if not pts or len(pts) != len(wts):
            raise DomainError("grid prior needs equally many points and weights (at least one)")
        if any(not math.isfinite(p) for p in pts):
            raise DomainError("grid points must be finite")
        if any(not (w >= 0 and math.isfinite(w)) for w in wts):
            raise DomainError("grid weights must be non-negative")
        if abs(math.fsum(wts) - 1.0) > 1e-12:
            raise DomainError(f"grid weights must sum to 1, got {math.fsum(wts)!r}")

    def support(self, cut):
        return min(self.points), max(self.points)


@dataclass(frozen=True)
class Intrinsic:
    """Resolved to the intrinsic prior of the model at evaluation time."""


@dataclass(frozen=True)
class EmpiricalBayesAll:
    """Supremum over point masses (the class of all priors)."""


@dataclass(frozen=True)
class EmpiricalBayesNonincreasing:
    """Best prior nonincreasing away from the null (a uniform ``(theta0, theta0 + a)``)."""


PriorSpec = Union[PointMass, UniformInterval, NormalPrior, GridWeight, Intrinsic,
                  EmpiricalBayesAll, EmpiricalBayesNonincreasing]

CONCRETE_PRIORS = (PointMass, UniformInterval, NormalPrior, GridWeight)
DATA_DEPENDENT_PRIORS = (EmpiricalBayesAll, EmpiricalBayesNonincreasing)


def check_prior(model: TestModel, prior, allow_null_point=False):
    """Raise :class:`DomainError` unless ``prior`` is legal for ``model``."""
    if not isinstance(prior, CONCRETE_PRIORS + (Intrinsic,) + DATA_DEPENDENT_PRIORS):
        raise DomainError(f"not a prior specification: {prior!r}")
    if isinstance(prior, PointMass) and not allow_null_point and prior.theta == model.null_value:
        raise DomainError("an alternative point mass may not sit on the null value")
    if model.is_variance:
        if isinstance(prior, NormalPrior):
            raise DomainError("a normal prior puts mass on negative variances")
        if isinstance(prior, PointMass) and prior.theta <= 0:
            raise DomainError("alternative variance must be positive")
        if isinstance(prior, UniformInterval) and prior.lo < 0:
            raise DomainError("uniform prior on a variance must have lo >= 0")
        if isinstance(prior, GridWeight) and min(prior.points) <= 0:
            raise DomainError("grid points for a variance must be positive")


def prior_label(prior) -> str:
    """Compact textual form, matching the command-line syntax."""
    if isinstance(prior, PointMass):
        return f"point:{prior.theta:g}"
    if isinstance(prior, UniformInterval):
        return f"uniform:{prior.lo:g}:{prior.hi:g}"
    if isinstance(prior, NormalPrior):
        return f"normal:{prior.mean:g}:{prior.sd:g}"
    if isinstance(prior, GridWeight):
        return f"grid[{len(prior.points)}]"
    if isinstance(prior, Intrinsic):
        return "intrinsic"
    if isinstance(prior, EmpiricalBayesAll):
        return "eb-all"
    if isinstance(prior, EmpiricalBayesNonincreasing):
        return "eb-noninc"
    return repr(prior)
