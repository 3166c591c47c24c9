"""Generic handling of ``w^2 + z^2 >= b`` as an arbitrary nonconvex quadratic.

This is the baseline the specialized modulus handler is compared against: no
orthants or arcs, just interval propagation, secant overestimators of the
convex squares and spatial branching on a single variable.
"""

from __future__ import annotations

import math

from .lp import FEAS_TOL
from .modulus import AntennaCut, Box


def _sq_range(lo: float, hi: float) -> tuple[float, float]:
    if lo >= 0:
        return lo * lo, hi * hi
    if hi <= 0:
        return hi * hi, lo * lo
    return 0.0, max(lo * lo, hi * hi)


def _tighten_abs(lo: float, hi: float, sq_min: float, sq_max: float) -> tuple[float, float] | None:
    """Intersect ``[lo, hi]`` with ``{v : sq_min <= v^2 <= sq_max}`` where representable."""
    if sq_max < -FEAS_TOL:
        return None
    r = math.sqrt(max(sq_max, 0.0))
    lo, hi = max(lo, -r), min(hi, r)
    if sq_min > 0:
        t = math.sqrt(sq_min)
        if lo >= 0:
            lo = max(lo, t)
        elif hi <= 0:
            hi = min(hi, -t)
        elif hi < t:
            hi = min(hi, -t)
        elif lo > -t:
            lo = max(lo, t)
    if lo > hi + FEAS_TOL:
        return None
    return lo, max(lo, hi)


def propagate(box: Box, b_lo: float, b_hi: float) -> Box | None:
    """Interval propagation of ``b <= w^2 + z^2 <= b`` over the box."""
    l1, u1, l2, u2 = box
    for _ in range(2):
        w2 = _sq_range(l1, u1)
        z2 = _sq_range(l2, u2)
        res = _tighten_abs(l1, u1, b_lo - z2[1], b_hi - z2[0])
        if res is None:
            return None
        l1, u1 = res
        w2 = _sq_range(l1, u1)
        res = _tighten_abs(l2, u2, b_lo - w2[1], b_hi - w2[0])
        if res is None:
            return None
        l2, u2 = res
    return l1, u1, l2, u2


def secant_overestimator(antenna: int, box: Box, w: float, z: float, b: float) -> AntennaCut | None:
    """``(l1+u1) w + (l2+u2) z - b >= l1 u1 + l2 u2`` if it cuts off the point."""
    l1, u1, l2, u2 = box
    cut = AntennaCut(antenna, l1 + u1, l2 + u2, -1.0, l1 * u1 + l2 * u2)
    if cut.value(w, z, b) >= -FEAS_TOL:
        return None
    return cut


def branching_choice(box: Box, w: float, z: float) -> tuple[int, float] | None:
    """Variable (0 for w, 1 for z) with the wider domain and the split value.

    Splits at the LP value when it lies in the middle 60% of the domain, else at
    the midpoint.
    """
    l1, u1, l2, u2 = box
    if u1 - l1 >= u2 - l2:
        var, lo, hi, val = 0, l1, u1, w
    else:
        var, lo, hi, val = 1, l2, u2, z
    width = hi - lo
    if width < 1e-9:
        return None
    if not lo + 0.2 * width <= val <= hi - 0.2 * width:
        val = 0.5 * (lo + hi)
    return var, val
