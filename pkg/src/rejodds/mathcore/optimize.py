"""Bracketed one-dimensional maximization."""

import math

from ..errors import DomainError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1 / golden ratio


def maximize_1d(f, bracket_lo, bracket_hi, tol=1e-8, grid=64):
    """Maximize ``f`` on ``[bracket_lo, bracket_hi]``.

    A ``grid``-point scan picks the best node (the smallest argument wins a
    tie) and golden-section search refines inside its two neighbouring cells.
    The result is exact to ``tol`` when ``f`` is unimodal on the bracket.

    Returns:
        (argmax, max_value)
    """
    if not bracket_lo < bracket_hi:
        raise DomainError("bracket_lo must be smaller than bracket_hi")
    if not tol > 0:
        raise DomainError("tol must be positive")

    def ev(x):
        y = f(x)
        if not math.isfinite(y):
            raise DomainError(f"objective is not finite at {x!r}: {y!r}")
        return y

    grid = max(int(grid), 3)
    step = (bracket_hi - bracket_lo) / (grid - 1)
    xs = [bracket_lo + i * step for i in range(grid - 1)] + [bracket_hi]
    ys = [ev(x) for x in xs]
    best = max(range(grid), key=lambda i: (ys[i], -i))
    a = xs[max(best - 1, 0)]
    b = xs[min(best + 1, grid - 1)]

    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = ev(c), ev(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = ev(d)

    candidates = [(fc, -c, c), (fd, -d, d), (ys[best], -xs[best], xs[best])]
    mid = 0.5 * (a + b)
    candidates.append((ev(mid), -mid, mid))
    value, _, arg = max(candidates)
    return arg, value
