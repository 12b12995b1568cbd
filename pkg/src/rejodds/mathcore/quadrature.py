"""Globally adaptive Simpson quadrature with error budgeting."""

import heapq
import math
from dataclasses import dataclass

from ..errors import ConvergenceError, DomainError


@dataclass(frozen=True)
class Quadrature:
    """Tolerances for :func:`integrate`.

    ``tail_cut`` is measured in units of the ``scale`` passed to
    :func:`integrate`; infinite endpoints are replaced by
    ``loc -/+ tail_cut * scale``.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    tail_cut: float = 12.0
    max_evals: int = 400_000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if not self.tail_cut >= 8:
            raise DomainError("tail_cut must be at least 8")
        if self.max_evals < 10:
            raise DomainError("max_evals too small")


DEFAULT_QUADRATURE = Quadrature()

# initial uniform panels; keeps narrow features from hiding between nodes
_INITIAL_PANELS = 16


def _finite_limits(lower, upper, cfg, loc, scale):
    if math.isnan(lower) or math.isnan(upper):
        raise DomainError("integration limits must not be NaN")
    if scale <= 0 or not math.isfinite(scale) or not math.isfinite(loc):
        raise DomainError("loc must be finite and scale positive")
    span = cfg.tail_cut * scale
    if math.isinf(lower):
        lower = loc - span if lower < 0 else math.inf
    if math.isinf(upper):
        upper = loc + span if upper > 0 else -math.inf
    return lower, upper


def integrate(f, lower, upper, cfg=None, *, loc=0.0, scale=1.0, points=()):
    """Integrate ``f`` over ``[lower, upper]``.

    The interval is split into panels (at ``points`` and then uniformly) and
    the panel with the largest Richardson error estimate is bisected until the
    summed estimate falls below ``max(abs_tol, rel_tol * |result|)``.

    Raises:
        ConvergenceError: the evaluation budget ran out; the exception carries
            the best estimate and its error bound.
        DomainError: ``f`` returned a non-finite value.
    """
    cfg = cfg or DEFAULT_QUADRATURE
    sign = 1.0
    if lower > upper:
        lower, upper, sign = upper, lower, -1.0
    lower, upper = _finite_limits(lower, upper, cfg, loc, scale)
    if not lower < upper:
        return 0.0

    def ev(x):
        y = f(x)
        if not math.isfinite(y):
            raise DomainError(f"integrand is not finite at x={x!r}: {y!r}")
        return y

    cuts = sorted({lower, upper, *(p for p in points if lower < p < upper)})
    edges = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        k = max(1, round(_INITIAL_PANELS * (b - a) / (upper - lower)))
        edges.extend(a + (b - a) * i / k for i in range(k))
    edges.append(upper)

    n_evals = 0

    def panel(a, fa, m, fm, b, fb):
        nonlocal n_evals
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = ev(lm)
        frm = ev(rm)
        n_evals += 2
        h = b - a
        whole = h * (fa + 4.0 * fm + fb) / 6.0
        halves = h * (fa + 4.0 * flm + 2.0 * fm + 4.0 * frm + fb) / 12.0
        err = abs(halves - whole) / 15.0
        est = halves + (halves - whole) / 15.0
        return (-err, a, b, fa, flm, fm, frm, fb, est, err)

    fedge = [ev(x) for x in edges]
    heap = []
    for i in range(len(edges) - 1):
        a, b = edges[i], edges[i + 1]
        m = 0.5 * (a + b)
        heap.append(panel(a, fedge[i], m, ev(m), b, fedge[i + 1]))
    n_evals += 2 * len(edges) - 1
    total = math.fsum(item[8] for item in heap)
    total_err = math.fsum(item[9] for item in heap)
    heapq.heapify(heap)

    while total_err > max(cfg.abs_tol, cfg.rel_tol * abs(total)):
        if n_evals >= cfg.max_evals:
            raise ConvergenceError(
                f"quadrature budget of {cfg.max_evals} evaluations exhausted "
                f"(estimate {total!r}, error {total_err!r})",
                estimate=sign * total,
                error=total_err,
            )
        _, a, b, fa, flm, fm, frm, fb, est, err = heapq.heappop(heap)
        m = 0.5 * (a + b)
        left = panel(a, fa, 0.5 * (a + m), flm, m, fm)
        right = panel(m, fm, 0.5 * (m + b), frm, b, fb)
        heapq.heappush(heap, left)
        heapq.heappush(heap, right)
        total += left[8] + right[8] - est
        total_err += left[9] + right[9] - err
        if total_err < 0.0:
            total_err = math.fsum(item[9] for item in heap)

    return sign * math.fsum(item[8] for item in heap)
