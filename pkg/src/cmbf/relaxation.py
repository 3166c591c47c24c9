"""Root LP relaxation and gradient cuts for the convex constraints.

Variables are laid out as ``w_0..w_{N-1}, z_0..z_{N-1}, b_0..b_{N-1}``.  The
root LP drops the quadratic constraints, relaxes ``b`` to ``[0, 1]`` and adds
eight octagon rows per antenna bounding ``(w_n, z_n)`` by ``b_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lp import FEAS_TOL, LpModel, Row
from .model import RealInstance

SQRT2 = math.sqrt(2.0)

# (coef_w, coef_z, coef_b) for rows  cw*w + cz*z + cb*b <= 0
OCTAGON = (
    (1.0, 0.0, -1.0),
    (-1.0, 0.0, -1.0),
    (0.0, 1.0, -1.0),
    (0.0, -1.0, -1.0),
    (1.0, 1.0, -SQRT2),
    (1.0, -1.0, -SQRT2),
    (-1.0, 1.0, -SQRT2),
    (-1.0, -1.0, -SQRT2),
)


@dataclass
class RelaxationLayout:
    n_antennas: int
    octagon_rows: list[int] = field(default_factory=list)
    cut_rows: list[int] = field(default_factory=list)

    @property
    def n_vars(self) -> int:
        return 3 * self.n_antennas

    def w(self, n: int) -> int:
        return n

    def z(self, n: int) -> int:
        return self.n_antennas + n

    def b(self, n: int) -> int:
        return 2 * self.n_antennas + n

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        N = self.n_antennas
        return x[:N], x[N:2 * N], x[2 * N:]


def octagon_rows(layout: RelaxationLayout, n: int) -> list[Row]:
    return [
        Row({layout.w(n): cw, layout.z(n): cz, layout.b(n): cb}, "<=", 0.0)
        for cw, cz, cb in OCTAGON
    ]


def build_root(real: RealInstance) -> tuple[LpModel, RelaxationLayout]:
    N = real.n_antennas
    layout = RelaxationLayout(N)
    lo = np.concatenate([-np.ones(2 * N), np.zeros(N)])
    hi = np.ones(3 * N)
    obj = np.concatenate([np.zeros(2 * N), np.ones(N)])
    model = LpModel(lo, hi, obj)
    for n in range(N):
        layout.octagon_rows.extend(model.add_rows(octagon_rows(layout, n)))
    return model, layout


def error_gradient(real: RealInstance, w, z) -> tuple[float, np.ndarray]:
    """Value and gradient of ``g(w, z) = ||target - A (w, z)||^2 - delta``."""
    r = real.residual_vector(np.asarray(w, float), np.asarray(z, float))
    return float(r @ r - real.delta), -2.0 * (real.matrix.T @ r)


def separate_error_soc(real: RealInstance, w, z, feas_tol: float = FEAS_TOL,
                       form: str = "squared") -> Row | None:
    """Gradient cut for the error constraint at ``(w, z)``, or None if satisfied.

    ``form="squared"`` linearizes ``||r||^2 <= delta``; ``form="norm"``
    linearizes the equivalent cone ``||r|| <= sqrt(delta)``, which gives the
    tangent plane at the radial projection and dominates the squared cut.
    The row is over the ``2N`` variables ``(w, z)`` and is padded by the caller.
    """
    w = np.asarray(w, float)
    z = np.asarray(z, float)
    r = real.residual_vector(w, z)
    rr = float(r @ r)
    if rr - real.delta <= feas_tol:
        return None
    p = np.concatenate([w, z])
    if form == "squared":
        grad = -2.0 * (real.matrix.T @ r)
        return Row(grad, "<=", float(grad @ p - (rr - real.delta)))
    if form == "norm":
        norm = math.sqrt(rr)
        u = r / norm
        # u . (target - A v) <= sqrt(delta)
        return Row(-(real.matrix.T @ u), "<=", math.sqrt(real.delta) - float(u @ real.target))
    raise ValueError(f"unknown cut form {form!r}")


def separate_upper_modulus(w_n: float, z_n: float, b_n: float,
                           feas_tol: float = FEAS_TOL) -> tuple[float, float, float, float] | None:
    """Cut ``cw*w + cz*z + cb*b <= rhs`` for ``w^2 + z^2 <= b`` at a violating point."""
    value = w_n * w_n + z_n * z_n
    if value <= b_n + feas_tol:
        return None
    return 2.0 * w_n, 2.0 * z_n, -1.0, value


def pad_row(row: Row, layout: RelaxationLayout) -> Row:
    """Extend a ``(w, z)`` row to the full variable vector."""
    coefs = np.zeros(layout.n_vars)
    coefs[: 2 * layout.n_antennas] = row.coefs
    return Row(coefs, row.sense, row.rhs)


def antenna_row(layout: RelaxationLayout, n: int, cw: float, cz: float, cb: float,
                sense: str, rhs: float) -> Row:
    return Row({layout.w(n): cw, layout.z(n): cz, layout.b(n): cb}, sense, rhs)
