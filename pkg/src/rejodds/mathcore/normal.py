"""Standard normal density, distribution and quantile functions.

Scalar functions are built on :func:`math.erfc` and are accurate to well below
1e-12 absolute error.  The ``*_array`` variants are vectorized for Monte Carlo
work and use :mod:`scipy.special`.
"""

import math
from statistics import NormalDist

import numpy as np
from scipy import special

from ..errors import DomainError

SQRT2 = math.sqrt(2.0)
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

_STD = NormalDist()


def _check_finite(x):
    if not math.isfinite(x):
        raise DomainError(f"expected a finite real, got {x!r}")


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x - LOG_SQRT_2PI)


def norm_logpdf(x: float) -> float:
    return -0.5 * x * x - LOG_SQRT_2PI


def norm_cdf(x: float) -> float:
    """Phi(x), the standard normal distribution function."""
    _check_finite(x)
    return 0.5 * math.erfc(-x / SQRT2)


def norm_sf(x: float) -> float:
    """Upper tail 1 - Phi(x), computed without cancellation."""
    _check_finite(x)
    return 0.5 * math.erfc(x / SQRT2)


def norm_quantile(u: float) -> float:
    """Inverse of :func:`norm_cdf` on the open unit interval.

    The rational approximation from :class:`statistics.NormalDist` seeds one
    Newton step taken against :func:`norm_cdf`.  Upper-tail arguments are
    reflected so the step works on the small tail probability.
    """
    if not (0.0 < u < 1.0):
        raise DomainError(f"quantile argument must lie in (0, 1), got {u!r}")
    if u > 0.5:
        return -norm_quantile(1.0 - u)
    x = _STD.inv_cdf(u)
    dens = norm_pdf(x)
    if dens > 0.0:
        x -= (norm_cdf(x) - u) / dens
    return x


def norm_cdf_array(x):
    return special.ndtr(np.asarray(x, dtype=float))


def norm_sf_array(x):
    return special.ndtr(-np.asarray(x, dtype=float))


def norm_logcdf_array(x):
    return special.log_ndtr(np.asarray(x, dtype=float))


def norm_logpdf_array(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - LOG_SQRT_2PI
