"""Small dense LP solver with warm starts.

The model is ``min c.x`` subject to ``row_lo <= A x <= row_hi`` and
``lo <= x <= hi``.  Every row gets a logical (slack) column ``r = a.x`` so the
working system is ``[A, -I] (x, r) = 0`` with bounds on all columns.

Solves run the bounded-variable dual simplex.  Infinite bounds are replaced by
artificial bounds of magnitude ``BIG`` so any basis can be made dual feasible by
placing nonbasic columns on the bound matching the sign of their reduced
cost; a nonbasic column left on an artificial bound at the end signals an
unbounded LP.  When only the objective changed and the previous basis is still
primal feasible, the primal simplex is used instead.

Bases are remembered by key (``("x", j)`` for variables, ``("r", row_id)`` for
rows) so a hint stays meaningful after rows are added or removed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

FEAS_TOL = 1e-7
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
BIG = 1e7
BLAND_AFTER = 5000
REFACTOR_EVERY = 64

BASIC, AT_LOWER, AT_UPPER, AT_ZERO = 0, 1, 2, 3


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"
    NUMERICAL = "numerical-failure"


@dataclass
class Row:
    """Linear inequality ``coefs . x (sense) rhs`` with sense in ``<=, >=, ==``."""

    coefs: Mapping[int, float] | np.ndarray
    sense: str
    rhs: float

    def dense(self, n: int) -> np.ndarray:
        if isinstance(self.coefs, np.ndarray):
            if self.coefs.shape != (n,):
                raise ValueError(f"row has {self.coefs.shape[0]} coefficients, model has {n} variables")
            vec = self.coefs.astype(float, copy=True)
        else:
            vec = np.zeros(n)
            for j, v in self.coefs.items():
                if not 0 <= j < n:
                    raise KeyError(f"unknown variable {j}")
                vec[j] += v
        if not np.all(np.isfinite(vec)) or not math.isfinite(self.rhs):
            raise ValueError("row coefficients must be finite")
        return vec

    def bounds(self) -> tuple[float, float]:
        if self.sense == "<=":
            return -math.inf, float(self.rhs)
        if self.sense == ">=":
            return float(self.rhs), math.inf
        if self.sense == "==":
            return float(self.rhs), float(self.rhs)
        raise ValueError(f"unknown sense {self.sense!r}")


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float = math.nan
    basis: tuple | None = None
    iterations: int = 0
    basic_rows: frozenset = field(default_factory=frozenset)
    duals: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL


class LpModel:
    def __init__(self, lo: Sequence[float], hi: Sequence[float], obj: Sequence[float]):
        self.lo = np.array(lo, dtype=float)
        self.hi = np.array(hi, dtype=float)
        self.obj = np.array(obj, dtype=float)
        if not (self.lo.shape == self.hi.shape == self.obj.shape) or self.lo.ndim != 1:
            raise ValueError("bounds and objective must be 1-D arrays of equal length")
        self.n = self.lo.shape[0]
        self._rows: dict[int, tuple[np.ndarray, float, float]] = {}
        self._next_id = 0
        self._dense = None
        self._basis_hint: tuple | None = None
        self._obj_changed = False
        self._last_feasible_basis = False

    # ---- construction -------------------------------------------------
    @property
    def n_rows(self) -> int:
        return len(self._rows)

    @property
    def row_ids(self) -> list[int]:
        return list(self._rows)

    def add_rows(self, rows: Iterable[Row]) -> list[int]:
        ids = []
        for row in rows:
            vec = row.dense(self.n)
            rlo, rhi = row.bounds()
            rid = self._next_id
            self._next_id += 1
            self._rows[rid] = (vec, rlo, rhi)
            ids.append(rid)
        if ids:
            self._dense = None
        return ids

    def add_row(self, row: Row) -> int:
        return self.add_rows([row])[0]

    def remove_rows(self, ids: Iterable[int]) -> None:
        for rid in ids:
            del self._rows[rid]
            self._dense = None

    def row(self, rid: int) -> tuple[np.ndarray, float, float]:
        return self._rows[rid]

    def set_bounds(self, var: int, lo: float, hi: float) -> None:
        if not 0 <= var < self.n:
            raise KeyError(f"unknown variable {var}")
        self.lo[var] = lo
        self.hi[var] = hi

    def set_all_bounds(self, lo: np.ndarray, hi: np.ndarray) -> None:
        self.lo[:] = lo
        self.hi[:] = hi

    def set_objective(self, obj: Sequence[float]) -> None:
        obj = np.asarray(obj, dtype=float)
        if obj.shape != (self.n,):
            raise ValueError("objective has wrong length")
        self.obj = obj.copy()
        self._obj_changed = True

    @property
    def basis_hint(self) -> tuple | None:
        return self._basis_hint

    def _matrices(self):
        if self._dense is None:
            ids = list(self._rows)
            if ids:
                A = np.array([self._rows[i][0] for i in ids])
                rlo = np.array([self._rows[i][1] for i in ids])
                rhi = np.array([self._rows[i][2] for i in ids])
            else:
                A = np.zeros((0, self.n))
                rlo = np.zeros(0)
                rhi = np.zeros(0)
            self._dense = (ids, A, rlo, rhi)
        return self._dense

    # ---- solving ------------------------------------------------------
    def solve(self, warm_start: tuple | None = None, max_iter: int | None = None,
              cold: bool = False) -> LpSolution:
        """Solve from ``warm_start`` (a basis hint), else from the last basis.

        ``cold=True`` ignores every hint and starts from the slack basis.
        """
        ids, A, rlo, rhi = self._matrices()
        m, n = A.shape
        lb = np.concatenate([self.lo, rlo])
        ub = np.concatenate([self.hi, rhi])
        if np.any(lb > ub + FEAS_TOL):
            self._obj_changed = False
            return LpSolution(LpStatus.INFEASIBLE)
        ub = np.maximum(ub, lb)
        c = np.concatenate([self.obj, np.zeros(m)])
        keys = [("x", j) for j in range(n)] + [("r", rid) for rid in ids]
        hint = None if cold else (warm_start if warm_start is not None else self._basis_hint)
        use_primal = self._obj_changed and warm_start is None and self._last_feasible_basis and not cold
        self._obj_changed = False
        if max_iter is None:
            max_iter = 50 * (n + m) + 1000
        engine = _Simplex(A, lb, ub, c, max_iter)
        basic_hint, upper_hint = hint if hint else ((), ())
        engine.start(_hint_columns(basic_hint, keys), _hint_columns(upper_hint, keys) if use_primal else None)
        if use_primal and engine.primal_feasible():
            # a primal ray longer than the artificial bounds is a genuine ray
            status = engine.run_primal()
        else:
            status = engine.run_dual()
        if status == LpStatus.OPTIMAL:
            status = engine.finalize()
        basis = (
            tuple(keys[j] for j in engine.basic),
            tuple(keys[j] for j in np.flatnonzero(engine.status == AT_UPPER)),
        )
        self._basis_hint = basis
        self._last_feasible_basis = status == LpStatus.OPTIMAL
        if status != LpStatus.OPTIMAL:
            return LpSolution(status, basis=basis, iterations=engine.iterations)
        x = engine.x[:n].copy()
        basic_rows = frozenset(keys[j][1] for j in engine.basic if j >= n)
        return LpSolution(status, x, float(self.obj @ x), basis, engine.iterations, basic_rows, engine.y.copy())


def _hint_columns(hint, keys) -> list[int]:
    if not hint:
        return []
    index = {k: j for j, k in enumerate(keys)}
    return [index[k] for k in hint if k in index]


class _Simplex:
    """Bounded revised simplex on ``[A, -I]`` with an explicit dense basis inverse."""

    def __init__(self, A, lb, ub, c, max_iter):
        self.A = A
        self.m, self.n = A.shape
        self.lb = lb
        self.ub = ub
        self.lbw = np.where(np.isfinite(lb), lb, -BIG)
        self.ubw = np.where(np.isfinite(ub), ub, BIG)
        self.c = c
        self.max_iter = max_iter
        self.iterations = 0
        self.degenerate = 0
        self.since_refactor = 0
        self.fixed = lb == ub

    # ---- column helpers ----
    def column(self, j):
        if j < self.n:
            return self.A[:, j]
        col = np.zeros(self.m)
        col[j - self.n] = -1.0
        return col

    def basis_matrix(self, basic):
        B = np.zeros((self.m, self.m))
        for i, j in enumerate(basic):
            if j < self.n:
                B[:, i] = self.A[:, j]
            else:
                B[j - self.n, i] = -1.0
        return B

    def invert(self, basic):
        """Inverse of the basis matrix, exploiting the identity block of basic slacks.

        With structural columns ``S`` and the rows ``R1`` whose slacks are not
        basic, only the square block ``A[R1, S]`` needs a dense inverse.
        """
        m, n = self.m, self.n
        basic = np.asarray(basic, dtype=int)
        struct_pos = np.flatnonzero(basic < n)
        slack_pos = np.flatnonzero(basic >= n)
        cols = basic[struct_pos]
        slack_rows = basic[slack_pos] - n
        covered = np.zeros(m, dtype=bool)
        covered[slack_rows] = True
        free_rows = np.flatnonzero(~covered)
        if free_rows.size != cols.size:
            raise np.linalg.LinAlgError("basis is singular")
        inner = np.linalg.inv(self.A[np.ix_(free_rows, cols)])
        Binv = np.zeros((m, m))
        Binv[np.ix_(struct_pos, free_rows)] = inner
        Binv[np.ix_(slack_pos, free_rows)] = self.A[np.ix_(slack_rows, cols)] @ inner
        Binv[slack_pos, slack_rows] = -1.0
        return Binv

    def row_alpha(self, r):
        rho = self.Binv[r]
        return np.concatenate([rho @ self.A, -rho])

    def col_alpha(self, q):
        if q < self.n:
            return self.Binv @ self.A[:, q]
        return -self.Binv[:, q - self.n]

    # ---- setup ----
    def start(self, preferred: list[int], upper: list[int] | None = None):
        m = self.m
        basic = _select_basis(self.A, preferred) if preferred else list(range(self.n, self.n + m))
        Binv = None
        if len(basic) == m:
            try:
                Binv = self.invert(basic)
                if not np.all(np.isfinite(Binv)) or np.abs(Binv).max(initial=0.0) > 1e12:
                    Binv = None
            except np.linalg.LinAlgError:
                Binv = None
        if Binv is None:
            basic = list(range(self.n, self.n + m))
            Binv = -np.eye(m)
        self.basic = basic
        self.Binv = Binv
        self.status = np.full(self.n + m, AT_LOWER, dtype=np.int8)
        self.status[basic] = BASIC
        self.x = np.zeros(self.n + m)
        self.compute_duals()
        if upper is None:
            self.place_nonbasic(initial=True)
        else:
            # keep the previous vertex: nonbasic columns stay on their old bounds
            nb = np.flatnonzero(self.status != BASIC)
            self.status[nb] = np.where(np.isfinite(self.lb[nb]), AT_LOWER,
                                       np.where(np.isfinite(self.ub[nb]), AT_UPPER, AT_ZERO))
            up = [j for j in upper if self.status[j] != BASIC and math.isfinite(self.ub[j])]
            self.status[up] = AT_UPPER
            self.x[nb] = np.where(self.status[nb] == AT_LOWER, self.lbw[nb],
                                  np.where(self.status[nb] == AT_UPPER, self.ubw[nb], 0.0))
        self.compute_primal()

    def compute_duals(self):
        cB = self.c[self.basic]
        y = self.Binv.T @ cB
        self.y = y
        d = self.c - np.concatenate([self.A.T @ y, -y])
        d[self.basic] = 0.0
        self.d = d

    def place_nonbasic(self, initial=False):
        """Put nonbasic columns on the bound that makes them dual feasible.

        Returns True when some column moved (primal values must be recomputed).
        """
        moved = False
        for j in np.flatnonzero(self.status != BASIC):
            dj = self.d[j]
            if self.fixed[j]:
                new = AT_LOWER
            elif dj > DUAL_TOL:
                new = AT_LOWER
            elif dj < -DUAL_TOL:
                new = AT_UPPER
            elif not initial:
                continue
            elif math.isfinite(self.lb[j]):
                new = AT_LOWER
            elif math.isfinite(self.ub[j]):
                new = AT_UPPER
            else:
                new = AT_ZERO
            if new != self.status[j] or initial:
                moved = moved or new != self.status[j]
                self.status[j] = new
                self.x[j] = self.lbw[j] if new == AT_LOWER else self.ubw[j] if new == AT_UPPER else 0.0
        return moved

    def compute_primal(self):
        nb = self.status != BASIC
        xn = np.where(nb, self.x, 0.0)
        rhs = self.A @ xn[: self.n] - xn[self.n:]
        self.x[self.basic] = -self.Binv @ rhs

    def refactor(self):
        try:
            self.Binv = self.invert(self.basic)
        except np.linalg.LinAlgError:
            return False
        self.since_refactor = 0
        self.compute_duals()
        self.place_nonbasic()
        self.compute_primal()
        return True

    def primal_feasible(self):
        xb = self.x[self.basic]
        return bool(np.all(xb >= self.lbw[self.basic] - FEAS_TOL) and np.all(xb <= self.ubw[self.basic] + FEAS_TOL))

    def pivot(self, r, q, alpha_row, alpha_col):
        piv = alpha_col[r]
        prow = self.Binv[r] / piv
        self.Binv -= np.outer(alpha_col, prow)
        self.Binv[r] = prow
        self.basic[r] = q
        self.status[q] = BASIC
        self.since_refactor += 1
        self.iterations += 1

    # ---- dual simplex ----
    def run_dual(self) -> LpStatus:
        retried = False
        while True:
            if self.iterations >= self.max_iter:
                return LpStatus.ITERATION_LIMIT
            if self.since_refactor >= REFACTOR_EVERY:
                if not self.refactor():
                    return LpStatus.NUMERICAL
            basic = np.asarray(self.basic, dtype=int)
            xb = self.x[basic]
            below = self.lbw[basic] - xb
            above = xb - self.ubw[basic]
            infeas = np.maximum(below, above)
            if infeas.size == 0:
                return LpStatus.OPTIMAL
            bland = self.degenerate >= BLAND_AFTER
            if bland:
                cand = np.flatnonzero(infeas > FEAS_TOL)
                if cand.size == 0:
                    return LpStatus.OPTIMAL
                r = int(cand[np.argmin(basic[cand])])
            else:
                r = int(np.argmax(infeas))
                if infeas[r] <= FEAS_TOL:
                    return LpStatus.OPTIMAL
            p = self.basic[r]
            to_lower = below[r] > 0
            sgn = 1.0 if to_lower else -1.0
            alpha_row = self.row_alpha(r)
            sa = sgn * alpha_row
            st = self.status
            elig = ((st == AT_LOWER) & (sa < -PIVOT_TOL)) | ((st == AT_UPPER) & (sa > PIVOT_TOL)) | (
                (st == AT_ZERO) & (np.abs(alpha_row) > PIVOT_TOL))
            elig &= ~self.fixed
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                if not retried and self.since_refactor > 0:
                    retried = True
                    if not self.refactor():
                        return LpStatus.NUMERICAL
                    continue
                return LpStatus.INFEASIBLE
            retried = False
            absd = np.abs(self.d[cand])
            absa = np.abs(alpha_row[cand])
            if bland:
                ratios = absd / absa
                best = ratios.min()
                ties = cand[ratios <= best + 1e-12]
                q = int(ties.min())
            else:
                bound = np.min((absd + DUAL_TOL) / absa)
                ok = absd / absa <= bound
                q = int(cand[ok][np.argmax(absa[ok])])
            alpha_col = self.col_alpha(q)
            if abs(alpha_col[r] - alpha_row[q]) > 1e-7 * (1 + abs(alpha_row[q])) and self.since_refactor > 0:
                if not self.refactor():
                    return LpStatus.NUMERICAL
                continue
            arq = alpha_col[r]
            theta = self.d[q] / arq
            if abs(theta) < 1e-12:
                self.degenerate += 1
            self.d -= theta * alpha_row
            target = self.lbw[p] if to_lower else self.ubw[p]
            t = (self.x[p] - target) / arq
            self.x[basic] -= t * alpha_col
            self.x[q] += t
            self.x[p] = target
            self.pivot(r, q, alpha_row, alpha_col)
            self.d[p] = -theta
            self.d[q] = 0.0
            self.status[p] = AT_LOWER if to_lower else AT_UPPER

    # ---- primal simplex ----
    def run_primal(self) -> LpStatus:
        while True:
            if self.iterations >= self.max_iter:
                return LpStatus.ITERATION_LIMIT
            if self.since_refactor >= REFACTOR_EVERY:
                try:
                    self.Binv = self.invert(self.basic)
                except np.linalg.LinAlgError:
                    return LpStatus.NUMERICAL
                self.since_refactor = 0
                self.compute_duals()
                self.compute_primal()
            st = self.status
            d = self.d
            up = ((st == AT_LOWER) | (st == AT_ZERO)) & (d < -DUAL_TOL)
            down = ((st == AT_UPPER) | (st == AT_ZERO)) & (d > DUAL_TOL)
            elig = (up | down) & ~self.fixed
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return LpStatus.OPTIMAL
            if self.degenerate >= BLAND_AFTER:
                q = int(cand.min())
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if up[q] else -1.0
            alpha_col = self.col_alpha(q)
            basic = np.asarray(self.basic, dtype=int)
            xb = self.x[basic]
            delta = -direction * alpha_col  # change of x_B per unit step
            step = self.ubw[q] - self.lbw[q] if st[q] != AT_ZERO else math.inf
            leave = -1
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = delta < -PIVOT_TOL
                inc = delta > PIVOT_TOL
                lim = np.full(self.m, math.inf)
                lim[dec] = (xb[dec] - self.lbw[basic][dec]) / -delta[dec]
                lim[inc] = (self.ubw[basic][inc] - xb[inc]) / delta[inc]
            lim = np.maximum(lim, 0.0)
            if lim.size:
                bound = np.min(lim + FEAS_TOL / np.maximum(np.abs(delta), PIVOT_TOL))
                ok = np.flatnonzero((lim <= bound) & (dec | inc))
                if ok.size:
                    i = int(ok[np.argmax(np.abs(delta[ok]))])
                    if lim[i] < step:
                        step = lim[i]
                        leave = i
            if not math.isfinite(step) or step >= BIG:
                return LpStatus.UNBOUNDED
            if step < 1e-12:
                self.degenerate += 1
            self.x[basic] += step * delta
            self.x[q] += direction * step
            self.iterations += 1
            if leave < 0:
                self.status[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[q] = self.ubw[q] if direction > 0 else self.lbw[q]
                continue
            p = self.basic[leave]
            alpha_row = self.row_alpha(leave)
            theta = d[q] / alpha_col[leave]
            self.d -= theta * alpha_row
            self.pivot(leave, q, alpha_row, alpha_col)
            self.d[p] = -theta
            self.d[q] = 0.0
            to_lower = delta[leave] < 0
            self.status[p] = AT_LOWER if to_lower else AT_UPPER
            self.x[p] = self.lbw[p] if to_lower else self.ubw[p]

    def finalize(self) -> LpStatus:
        """Refactor, verify feasibility against the true bounds, detect unboundedness."""
        if self.since_refactor > 0:
            try:
                self.Binv = self.invert(self.basic)
            except np.linalg.LinAlgError:
                return LpStatus.NUMERICAL
            self.compute_duals()
            if self.place_nonbasic():
                self.compute_primal()
                status = self.run_dual()
                if status != LpStatus.OPTIMAL:
                    return status
                return self.finalize()
            self.compute_primal()
            self.since_refactor = 0
            if not self.primal_feasible():
                status = self.run_dual()
                if status != LpStatus.OPTIMAL:
                    return status
                return self.finalize()
        nb = np.flatnonzero(self.status != BASIC)
        artificial = (
            ((self.status[nb] == AT_LOWER) & ~np.isfinite(self.lb[nb]))
            | ((self.status[nb] == AT_UPPER) & ~np.isfinite(self.ub[nb]))
        )
        if np.any(artificial & (np.abs(self.d[nb]) > DUAL_TOL)):
            return LpStatus.UNBOUNDED
        x = self.x
        tol = 10 * FEAS_TOL
        if np.any(x < self.lb - tol) or np.any(x > self.ub + tol):
            return LpStatus.NUMERICAL
        act = self.A @ x[: self.n]
        if np.max(np.abs(act - x[self.n:]), initial=0.0) > tol * (1 + np.max(np.abs(x), initial=0.0)):
            return LpStatus.NUMERICAL
        return LpStatus.OPTIMAL


def _select_basis(A: np.ndarray, preferred: list[int]) -> list[int]:
    """Pick a nonsingular basis containing as many ``preferred`` columns as possible.

    Greedy Gaussian elimination over the preferred columns with row pivoting;
    rows left without a pivot are covered by their own logical column.
    """
    m, n = A.shape
    if m == 0:
        return []
    structural = [j for j in preferred if j < n]
    logical_rows = {j - n for j in preferred if j >= n}
    chosen = []
    used = np.zeros(m, dtype=bool)
    # logical columns of preferred rows are unit vectors; take them first
    for i in sorted(logical_rows):
        used[i] = True
        chosen.append(n + i)
    if structural:
        rows = np.flatnonzero(~used)
        W = A[np.ix_(rows, structural)]
        taken = np.zeros(rows.size, dtype=bool)
        scale = 1e-9 * (1 + np.abs(W).max(axis=0, initial=0.0))
        for k, j in enumerate(structural):
            if taken.all():
                break
            colv = W[:, k]
            mag = np.where(taken, 0.0, np.abs(colv))
            i = int(np.argmax(mag))
            if mag[i] <= scale[k]:
                continue
            taken[i] = True
            chosen.append(j)
            if k + 1 < W.shape[1]:
                factor = colv / colv[i]
                factor[i] = 0.0
                W[:, k + 1:] -= np.outer(factor, W[i, k + 1:])
        used[rows[taken]] = True
    chosen.extend(n + i for i in np.flatnonzero(~used))
    return chosen
