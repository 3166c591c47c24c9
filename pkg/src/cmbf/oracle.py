"""Brute-force reference for small instances.

Every support is enumerated in order of size; for each one the best
unit-modulus phases are searched by multistart cyclic coordinate descent
(optionally seeded from a dense phase grid when the support is small).  The
phase search is local, so the reported cardinality is an upper bound on the
optimum that is tight in practice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ProblemInstance, residual

MAX_ANTENNAS = 12


@dataclass
class OracleResult:
    cardinality: int | None
    x: np.ndarray | None
    support_errors: dict[tuple[int, ...], float] = field(default_factory=dict)
    visited: int = 0
    note: str = "phase search is multistart local descent, not certified"

    @property
    def found(self) -> bool:
        return self.cardinality is not None


def _descend(rows: np.ndarray, s: np.ndarray, phases: np.ndarray, tol: float = 1e-10,
             max_sweeps: int = 10_000) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic coordinate phase updates for a batch of starting phase vectors.

    ``rows`` holds the channel rows of the support (m x K); ``phases`` is R x m.
    Each update aligns one coefficient with the residual it leaves behind,
    which is the exact 1-D minimizer.
    """
    x = np.exp(1j * phases)
    res = s[None, :] - x @ rows
    err = np.linalg.norm(res, axis=1)
    for _ in range(max_sweeps):
        for u in range(rows.shape[0]):
            r = res + x[:, u:u + 1] * rows[u][None, :]
            c = r @ rows[u].conj()
            mag = np.abs(c)
            new = np.where(mag > 0, c / np.where(mag > 0, mag, 1.0), x[:, u])
            x[:, u] = new
            res = r - new[:, None] * rows[u][None, :]
        new_err = np.linalg.norm(res, axis=1)
        done = np.max(err - new_err) < tol
        err = new_err
        if done:
            break
    return err, np.angle(x)


def grid_phase_fit(inst: ProblemInstance, support, points: int = 64) -> tuple[float, np.ndarray]:
    """Exhaustive search over ``points`` equispaced phases per active antenna."""
    rows = inst.channel[list(support)]
    m, k = rows.shape
    grid = np.exp(2j * math.pi * np.arange(points) / points)
    total = np.broadcast_to(inst.desired, (1,) * m + (k,)).astype(complex)
    for j in range(m):
        shape = [1] * m + [k]
        shape[j] = points
        total = total - (grid[:, None] * rows[j][None, :]).reshape(shape)
    err = np.linalg.norm(total, axis=-1)
    idx = np.unravel_index(int(np.argmin(err)), err.shape)
    return float(err[idx]), 2 * math.pi * np.array(idx) / points


def best_phase_fit(inst: ProblemInstance, support, restarts: int = 64, seed: int = 0,
                   grid_points: int = 64, grid_max: int = 3) -> tuple[float, np.ndarray]:
    """Smallest error found for unit-modulus coefficients on ``support``."""
    support = list(support)
    if not support:
        raise ValueError("support must be nonempty")
    rows = inst.channel[support]
    s = inst.desired
    rng = np.random.default_rng([seed, len(support)] + support)
    starts = rng.uniform(0, 2 * math.pi, (restarts, len(support)))
    if len(support) <= grid_max:
        _, grid_best = grid_phase_fit(inst, support, grid_points)
        starts = np.vstack([starts, grid_best[None, :]])
    errs, phases = _descend(rows, s, starts)
    i = int(np.argmin(errs))
    phases = phases[i]
    x = np.zeros(inst.n_antennas, dtype=complex)
    x[support] = np.exp(1j * phases)
    return residual(inst, x), phases


def brute_force(inst: ProblemInstance, m_max: int | None = None, restarts: int = 64,
                seed: int = 0) -> OracleResult:
    n = inst.n_antennas
    if n > MAX_ANTENNAS:
        raise ValueError(f"brute force is limited to N <= {MAX_ANTENNAS}")
    m_max = n if m_max is None else min(m_max, n)
    bound = inst.tol * (1 + 1e-7)
    result = OracleResult(None, None)
    if np.linalg.norm(inst.desired) <= bound:
        result.cardinality = 0
        result.x = np.zeros(n, dtype=complex)
        result.visited = 1
        return result
    result.visited = 1
    for m in range(1, m_max + 1):
        best = None
        for support in itertools.combinations(range(n), m):
            err, phases = best_phase_fit(inst, support, restarts, seed)
            result.support_errors[support] = err
            result.visited += 1
            if err <= bound and (best is None or err < best[0]):
                best = (err, support, phases)
        if best is not None:
            x = np.zeros(n, dtype=complex)
            x[list(best[1])] = np.exp(1j * best[2])
            result.cardinality = m
            result.x = x
            return result
    return result
