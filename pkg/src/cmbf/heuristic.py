"""Greedy swap heuristic for sparse constant-modulus beamformers.

For a sparsity level ``M`` many random restarts are run.  Each restart keeps a
unit-modulus vector with ``M`` active antennas and repeatedly picks an active
antenna ``u`` and an idle antenna ``v``, fits both jointly to the residual by
complex least squares, and either re-phases ``u`` or moves the support from
``u`` to ``v``; the move is kept only if the error drops.  ``M`` grows until
the best restart meets the error bound.

Restarts are simulated in lockstep with numpy.  Every restart draws from its
own seed sequence ``(seed, M, i)`` and only elementwise operations are used, so
a restart's trajectory does not depend on how restarts are batched.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import ProblemInstance, residual

RIDGE = 1e-12


@dataclass
class HeuristicConfig:
    max_iter: int = 1000
    max_count: int = 1000
    m_guess: int = 1
    seed: int = 0
    parallel_restarts: bool = False
    workers: int | None = None
    batch_size: int = 1000

    def validate(self, n: int) -> None:
        if self.max_iter < 1 or self.max_count < 1:
            raise ValueError("max_iter and max_count must be at least 1")
        if not 1 <= self.m_guess <= n:
            raise ValueError(f"m_guess must lie in [1, {n}]")


@dataclass
class HeuristicResult:
    x: np.ndarray
    cardinality: int
    error: float
    time_s: float
    success: bool
    levels: list[tuple[int, float]]

    @property
    def status(self) -> str:
        return "feasible" if self.success else "infeasible-at-N"


def restart_seed(seed: int, m: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(m), int(index)])


def _draws(n: int, m: int, max_count: int, seeds):
    """Initial supports, phases and per-step uniforms for a batch of restarts."""
    r = len(seeds)
    mask = np.zeros((r, n), dtype=bool)
    phases = np.zeros((r, n))
    uniforms = np.empty((r, max_count, 2))
    for i, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        support = rng.choice(n, size=m, replace=False)
        mask[i, support] = True
        phases[i, support] = rng.uniform(0.0, 2.0 * math.pi, size=m)
        uniforms[i] = rng.random((max_count, 2))
    x = np.where(mask, np.exp(1j * phases), 0.0)
    return x, mask, uniforms


def _kth_true(mask: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Column index of the ``k``-th True entry (0-based) in each row."""
    return np.argmax(np.cumsum(mask, axis=1) > k[:, None], axis=1)


def _rowdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=1)


def _norms(res: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(res.real**2 + res.imag**2, axis=1))


def swap_step(x: np.ndarray, u: int, v: int | None, inst: ProblemInstance) -> np.ndarray:
    """One swap move applied to a single vector (the update is returned, not judged)."""
    y, _ = _propose(x[None, :], np.array([u]), None if v is None else np.array([v]), inst.channel,
                    (inst.desired - inst.channel.T @ x)[None, :])
    return y[0]


def _propose(x, u, v, H, res):
    """Candidate vectors and residuals for a batch of (u, v) moves."""
    rows = np.arange(x.shape[0])
    hu = H[u]
    yu = x[rows, u]
    r = res + yu[:, None] * hu
    g11 = _rowdot(hu.conj(), hu).real
    c1 = _rowdot(hu.conj(), r)
    y = x.copy()
    if v is None:
        a = c1 / (g11 + RIDGE)
        mag = np.abs(a)
        newu = np.where(mag > 0, a / np.where(mag > 0, mag, 1.0), yu)
        y[rows, u] = newu
        return y, r - newu[:, None] * hu
    hv = H[v]
    g22 = _rowdot(hv.conj(), hv).real
    g12 = _rowdot(hu.conj(), hv)
    c2 = _rowdot(hv.conj(), r)
    det = g11 * g22 - (g12.real**2 + g12.imag**2)
    singular = det <= 1e-12 * g11 * g22
    if np.any(singular):
        g11 = np.where(singular, g11 + RIDGE, g11)
        g22 = np.where(singular, g22 + RIDGE, g22)
        det = g11 * g22 - (g12.real**2 + g12.imag**2)
    a = (g22 * c1 - g12 * c2) / det
    b = (g11 * c2 - g12.conj() * c1) / det
    ma, mb = np.abs(a), np.abs(b)
    keep = ma >= mb
    newu = np.where(keep, np.where(ma > 0, a / np.where(ma > 0, ma, 1.0), yu), 0.0)
    newv = np.where(keep, 0.0, b / np.where(mb > 0, mb, 1.0))
    y[rows, u] = newu
    y[rows, v] = newv
    return y, r - newu[:, None] * hu - newv[:, None] * hv


def run_batch(inst: ProblemInstance, m: int, seeds, max_count: int, trace: bool = False):
    """Run restarts for the given seed sequences; returns ``(x, errors[, history])``."""
    H = inst.channel
    s = inst.desired
    n = inst.n_antennas
    x, mask, uniforms = _draws(n, m, max_count, seeds)
    # residuals built elementwise so each row is independent of the batch
    res = s[None, :] - np.sum(x[:, :, None] * H[None, :, :], axis=1)
    err = _norms(res)
    history = [err.copy()] if trace else None
    swap = m < n
    for step in range(max_count):
        ku = np.minimum((uniforms[:, step, 0] * m).astype(int), m - 1)
        u = _kth_true(mask, ku)
        if swap:
            kv = np.minimum((uniforms[:, step, 1] * (n - m)).astype(int), n - m - 1)
            v = _kth_true(~mask, kv)
        else:
            v = None
        y, new_res = _propose(x, u, v, H, res)
        new_err = _norms(new_res)
        better = new_err < err
        if np.any(better):
            x[better] = y[better]
            res[better] = new_res[better]
            err = np.where(better, new_err, err)
            mask = x != 0
        if trace:
            history.append(err.copy())
    if trace:
        return x, err, np.array(history)
    return x, err


def run_restart(inst: ProblemInstance, m: int, sub_seed, max_count: int):
    """One restart: returns the final vector and its error."""
    if not 1 <= m <= inst.n_antennas:
        raise ValueError("m must lie in [1, N]")
    if not isinstance(sub_seed, np.random.SeedSequence):
        sub_seed = np.random.SeedSequence(sub_seed)
    x, err = run_batch(inst, m, [sub_seed], max_count)
    return x[0], float(err[0])


def _run_chunk(args):
    inst, m, seed, indices, max_count = args
    seeds = [restart_seed(seed, m, i) for i in indices]
    return run_batch(inst, m, seeds, max_count)


def run_level(inst: ProblemInstance, m: int, config: HeuristicConfig):
    """All restarts for one sparsity level; returns ``(x, errors)`` in restart order."""
    indices = list(range(config.max_iter))
    chunks = [indices[i:i + config.batch_size] for i in range(0, len(indices), config.batch_size)]
    jobs = [(inst, m, config.seed, chunk, config.max_count) for chunk in chunks]
    if config.parallel_restarts and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(job) for job in jobs]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def solve_heuristic(inst: ProblemInstance, config: HeuristicConfig | None = None) -> HeuristicResult:
    config = config or HeuristicConfig()
    n = inst.n_antennas
    config.validate(n)
    start = time.perf_counter()
    levels = []
    best_x, best_err = None, math.inf
    m = config.m_guess
    while m <= n:
        xs, errs = run_level(inst, m, config)
        i = int(np.argmin(errs))
        best_x = xs[i]
        best_err = residual(inst, best_x)
        levels.append((m, best_err))
        if best_err <= inst.tol:
            return HeuristicResult(best_x, m, best_err, time.perf_counter() - start, True, levels)
        m += 1
    return HeuristicResult(best_x, n, best_err, time.perf_counter() - start, False, levels)
