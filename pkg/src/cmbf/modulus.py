"""Enforcement of the nonconvex modulus constraints ``w_n^2 + z_n^2 >= b_n``.

All geometry is done in the first quadrant: a box in orthant ``q`` is mapped
there by flipping the signs of ``w`` and/or ``z``, handled, and mapped back.
Orthants are numbered like the usual quadrants: 1 = (+,+), 2 = (-,+),
3 = (-,-), 4 = (+,-); 0 means not yet assigned.

A box is the tuple ``(l1, u1, l2, u2)`` of bounds on ``(w_n, z_n)``.  Cuts are
returned as :class:`AntennaCut` and are only valid inside the node that
produced them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lp import FEAS_TOL

UNASSIGNED = 0
SIGNS = {1: (1.0, 1.0), 2: (-1.0, 1.0), 3: (-1.0, -1.0), 4: (1.0, -1.0)}
MIN_ARC = 1e-9

Box = tuple[float, float, float, float]


@dataclass(frozen=True)
class AntennaCut:
    """``cw * w_n + cz * z_n + cb * b_n >= rhs``."""

    antenna: int
    cw: float
    cz: float
    cb: float
    rhs: float = 0.0

    def value(self, w: float, z: float, b: float) -> float:
        return self.cw * w + self.cz * z + self.cb * b - self.rhs


@dataclass(frozen=True)
class ModulusViolation:
    antenna: int
    rho: float


def circle(x: float) -> float:
    """``sqrt(1 - x^2)`` clamped to the first-quadrant domain."""
    if x >= 1.0:
        return 0.0
    if x <= 0.0:
        return 1.0
    return math.sqrt(1.0 - x * x)


def to_q1(orthant: int, box: Box) -> Box:
    sw, sz = SIGNS[orthant]
    l1, u1, l2, u2 = box
    if sw < 0:
        l1, u1 = -u1, -l1
    if sz < 0:
        l2, u2 = -u2, -l2
    return l1, u1, l2, u2


from_q1 = to_q1  # sign flips are involutions


def point_to_q1(orthant: int, w: float, z: float) -> tuple[float, float]:
    sw, sz = SIGNS[orthant]
    return sw * w, sz * z


def orthant_box(orthant: int, box: Box) -> Box | None:
    """Intersect ``box`` with the closed quadrant; None if empty."""
    sw, sz = SIGNS[orthant]
    l1, u1, l2, u2 = box
    if sw > 0:
        l1 = max(l1, 0.0)
    else:
        u1 = min(u1, 0.0)
    if sz > 0:
        l2 = max(l2, 0.0)
    else:
        u2 = min(u2, 0.0)
    if l1 > u1 or l2 > u2:
        return None
    return l1, u1, l2, u2


def orthant_of_box(box: Box) -> int:
    """The unique orthant containing ``box`` when it lies in one, else 0."""
    l1, u1, l2, u2 = box
    if l1 >= 0 and l2 >= 0:
        return 1
    if u1 <= 0 and l2 >= 0:
        return 2
    if u1 <= 0 and u2 <= 0:
        return 3
    if l1 >= 0 and u2 <= 0:
        return 4
    return UNASSIGNED


def modulus_violations(w, z, b, eps: float = 1e-5) -> np.ndarray:
    """``rho(n)`` for violated antennas, ``-inf`` elsewhere."""
    w, z, b = (np.asarray(v, float) for v in (w, z, b))
    mod = w * w + z * z
    rho = b - mod
    bad = (mod < b) & (mod < 1.0 - eps)
    return np.where(bad, rho, -np.inf)


def select_violated(w, z, b, eps: float = 1e-5, skip=()) -> int | None:
    """Most violated modulus constraint; lowest index on ties."""
    rho = modulus_violations(w, z, b, eps)
    for n in skip:
        rho[n] = -np.inf
    if rho.size == 0:
        return None
    n = int(np.argmax(rho))
    if not rho[n] > 0:
        return None
    return n


def try_fix(box: Box, b_fixed_zero: bool) -> Box | None:
    """Collapse ``(w_n, z_n)`` to the origin when ``b_n`` is fixed to zero."""
    if not b_fixed_zero:
        return None
    return 0.0, 0.0, 0.0, 0.0


def branch_orthants(box: Box) -> list[tuple[int, Box]]:
    """Split a box into its nonempty quadrant pieces (at most four)."""
    children = []
    for q in (1, 4, 3, 2):
        piece = orthant_box(q, box)
        if piece is not None:
            children.append((q, piece))
    return children


def propagate(orthant: int, box: Box, b_fixed_one: bool) -> Box | None:
    """Tighten a box from its intersection with the unit circle.

    Upper bounds are always tightened; lower bounds only when ``b_n`` is fixed
    to one, since ``b_n = 0`` keeps the origin feasible.  Returns None when the
    box becomes empty.
    """
    l1, u1, l2, u2 = to_q1(orthant, box)
    nu1 = min(u1, circle(l2))
    nu2 = min(u2, circle(l1))
    nl1, nl2 = l1, l2
    if b_fixed_one:
        nl1 = max(l1, circle(u2))
        nl2 = max(l2, circle(u1))
    if nl1 > nu1 + FEAS_TOL or nl2 > nu2 + FEAS_TOL:
        return None
    nl1, nl2 = min(nl1, nu1), min(nl2, nu2)
    return from_q1(orthant, (nl1, nu1, nl2, nu2))


def arc_interval(orthant: int, box: Box) -> tuple[float, float] | None:
    """Angles (first-quadrant frame) of the unit-circle points inside ``box``."""
    l1, u1, l2, u2 = to_q1(orthant, box)
    clip = lambda v: min(max(v, 0.0), 1.0)
    lo = max(math.acos(clip(u1)), math.asin(clip(l2)))
    hi = min(math.acos(clip(l1)), math.asin(clip(u2)))
    if lo > hi + 1e-12:
        return None
    return lo, max(lo, hi)


def absolute_interval(orthant: int, interval: tuple[float, float]) -> tuple[float, float]:
    """Map a first-quadrant angle interval to angles in the actual orthant."""
    lo, hi = interval
    if orthant == 1:
        return lo, hi
    if orthant == 2:
        return math.pi - hi, math.pi - lo
    if orthant == 3:
        return math.pi + lo, math.pi + hi
    return 2 * math.pi - hi, 2 * math.pi - lo


def secant(alpha: float, beta: float) -> tuple[float, float]:
    """``(f, g)`` such that ``f cos t + g sin t = 1`` at ``t = alpha`` and ``t = beta``."""
    half = 0.5 * (beta - alpha)
    mid = 0.5 * (alpha + beta)
    c = math.cos(half)
    return math.cos(mid) / c, math.sin(mid) / c


def secant_cut(antenna: int, orthant: int, alpha: float, beta: float) -> AntennaCut:
    f, g = secant(alpha, beta)
    sw, sz = SIGNS[orthant]
    return AntennaCut(antenna, sw * f, sz * g, -1.0)


def separate_chord(antenna: int, orthant: int, w: float, z: float, b: float,
                   eps: float = 1e-5, arc: tuple[float, float] = (0.0, math.pi / 2)) -> AntennaCut | None:
    """Secant through the ends of ``arc``; for the full quadrant this is ``w + z >= b``.

    Only produced when it cuts off the point and the point's modulus is below
    ``1 - eps``.
    """
    if w * w + z * z >= 1.0 - eps:
        return None
    cut = secant_cut(antenna, orthant, arc[0], arc[1])
    if cut.value(w, z, b) >= -FEAS_TOL:
        return None
    return cut


@dataclass(frozen=True)
class ArcChild:
    box: Box
    cut: AntennaCut
    arc: tuple[float, float]


def branch_subarc(antenna: int, orthant: int, box: Box, b_fixed_one: bool,
                  point: tuple[float, float, float] | None = None,
                  arc: tuple[float, float] | None = None) -> tuple[list[ArcChild], bool] | None:
    """Bisect the node's arc and give each half its secant and bounding box.

    Returns ``(children, separates)`` where ``separates`` tells whether the LP
    point violates at least one child's secant, or None for a degenerate arc.
    Child boxes only tighten lower bounds when ``b_n`` is fixed to one.
    """
    if arc is None:
        arc = arc_interval(orthant, box)
        if arc is None:
            return None
    lo, hi = arc
    if hi - lo < MIN_ARC:
        return None
    mid = 0.5 * (lo + hi)
    l1, u1, l2, u2 = to_q1(orthant, box)
    children = []
    for a, b in ((mid, hi), (lo, mid)):
        cu1 = min(u1, math.cos(a))
        cu2 = min(u2, math.sin(b))
        cl1, cl2 = l1, l2
        if b_fixed_one:
            cl1 = max(l1, math.cos(b))
            cl2 = max(l2, math.sin(a))
        cl1, cl2 = min(cl1, cu1), min(cl2, cu2)
        children.append(ArcChild(from_q1(orthant, (cl1, cu1, cl2, cu2)), secant_cut(antenna, orthant, a, b), (a, b)))
    separates = True
    if point is not None:
        w, z, bv = point
        separates = any(ch.cut.value(w, z, bv) < -FEAS_TOL for ch in children)
    return children, separates
