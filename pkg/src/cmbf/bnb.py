"""Branch-and-bound for the real-valued mixed-integer formulation.

Each node solves the LP relaxation and then enforces, in this order:
integrality of ``b`` (binary branching on the most fractional entry), the
convex constraints (gradient cuts for the error cone and for
``w_n^2 + z_n^2 <= b_n``), and the nonconvex modulus constraints, either with
the specialized handler in :mod:`cmbf.modulus` or with the generic quadratic
treatment in :mod:`cmbf.quadratic`.  Nodes whose LP point passes every check
are polished onto the unit circle and offered as incumbents.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import modulus as mod
from . import quadratic
from .lp import FEAS_TOL, LpStatus, Row
from .model import CandidateSolution, ProblemInstance, is_feasible, to_real
from .relaxation import antenna_row, build_root, pad_row, separate_error_soc, separate_upper_modulus

log = logging.getLogger(__name__)

INT_TOL = 1e-6
BOUND_TOL = 1e-9


class Outcome(str, Enum):
    BRANCHED_BINARY = "branched-binary"
    CONVEX_ENFORCED = "convex-enforced"
    MODULUS_HANDLED = "modulus-handled"
    INTEGER_FEASIBLE = "integer-feasible"
    PRUNED_BOUND = "pruned-bound"
    PRUNED_INFEASIBLE = "pruned-infeasible"


class Status(str, Enum):
    OPTIMAL = "optimal"
    TIME_LIMIT = "time-limit"
    NODE_LIMIT = "node-limit"
    INFEASIBLE = "infeasible"


@dataclass
class SolverConfig:
    time_limit_s: float = 3600.0
    eps: float = 1e-5
    modulus_handler: bool = True
    initial_solution: np.ndarray | None = None
    max_soc_rounds: int = 20
    cut_form: str = "norm"
    pruning: bool = True
    node_limit: int | None = None
    cut_pool_factor: int = 10
    max_inplace_rounds: int = 200


@dataclass
class Node:
    id: int
    depth: int
    lo: np.ndarray
    hi: np.ndarray
    orthant: np.ndarray
    cuts: tuple = ()
    bound: float = -math.inf
    basis: tuple | None = None

    def box(self, n: int, N: int) -> mod.Box:
        return self.lo[n], self.hi[n], self.lo[N + n], self.hi[N + n]

    def set_box(self, n: int, N: int, box: mod.Box) -> None:
        self.lo[n], self.hi[n], self.lo[N + n], self.hi[N + n] = box

    def b_fixed_one(self, n: int, N: int) -> bool:
        return self.lo[2 * N + n] >= 0.5

    def b_fixed_zero(self, n: int, N: int) -> bool:
        return self.hi[2 * N + n] <= 0.5


@dataclass
class NodeResult:
    outcome: Outcome
    children: list = field(default_factory=list)
    resolve: bool = False


@dataclass
class SolveReport:
    status: Status
    cardinality: int | None
    x: np.ndarray | None
    nodes: int
    modulus_branches: int
    time_s: float
    dual_bound: float
    dual_bound_trace: list = field(default_factory=list)
    incumbent_history: list = field(default_factory=list)
    lp_iterations: int = 0
    numerical_drops: int = 0
    unresolved: int = 0


def _fractionality(b: np.ndarray) -> np.ndarray:
    return np.abs(b - np.round(b))


def most_fractional(b: np.ndarray) -> int | None:
    frac = _fractionality(b)
    if frac.size == 0:
        return None
    n = int(np.argmax(frac))
    return n if frac[n] > INT_TOL else None


def polish(inst: ProblemInstance, w, z, b, sweeps: int = 50) -> np.ndarray:
    """Project active entries onto the unit circle, then improve their phases."""
    active = np.flatnonzero(np.asarray(b) > 0.5)
    x = np.zeros(inst.n_antennas, dtype=complex)
    v = w[active] + 1j * z[active]
    mag = np.abs(v)
    x[active] = np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 1.0)
    if active.size == 0:
        return x
    H = inst.channel
    res = inst.desired - H.T @ x
    if np.linalg.norm(res) <= inst.tol:
        return x
    err = np.linalg.norm(res)
    for _ in range(sweeps):
        for u in active:
            r = res + x[u] * H[u]
            c = np.vdot(H[u], r)
            if abs(c) > 0:
                x[u] = c / abs(c)
            res = r - x[u] * H[u]
        new = np.linalg.norm(res)
        if new <= inst.tol or err - new < 1e-14:
            break
        err = new
    return x


class BranchAndBound:
    def __init__(self, inst: ProblemInstance, config: SolverConfig | None = None):
        self.inst = inst
        self.config = config or SolverConfig()
        self.real = to_real(inst)
        self.model, self.layout = build_root(self.real)
        self.N = inst.n_antennas
        self.heap: list = []
        self._ids = itertools.count()
        self.local_rows: dict[mod.AntennaCut, int] = {}
        self.pool: list[int] = []
        self.incumbent_card = math.inf
        self.incumbent_x = None
        self.nodes = 0
        self.modulus_branches = 0
        self.lp_iterations = 0
        self.numerical_drops = 0
        self.unresolved = 0
        self.dual_trace: list[float] = []
        self.incumbent_history: list[tuple[float, int]] = []
        self.start = time.perf_counter()
        if self.config.initial_solution is not None:
            x0 = np.asarray(self.config.initial_solution, dtype=complex)
            cand = CandidateSolution.from_complex(x0)
            if not is_feasible(inst, cand, self.config.eps):
                raise ValueError("initial solution is not feasible")
            self._store_incumbent(x0)

    # ---- helpers ------------------------------------------------------
    def _store_incumbent(self, x: np.ndarray) -> bool:
        card = int(np.count_nonzero(x))
        if card >= self.incumbent_card:
            return False
        assert is_feasible(self.inst, CandidateSolution.from_complex(x), self.config.eps)
        self.incumbent_card = card
        self.incumbent_x = x.copy()
        self.incumbent_history.append((time.perf_counter() - self.start, card))
        return True

    def _prunable(self, bound: float) -> bool:
        if not self.config.pruning or not math.isfinite(bound):
            return False
        return math.ceil(bound - BOUND_TOL) >= self.incumbent_card

    @staticmethod
    def integral_bound(bound: float) -> float:
        """The objective counts antennas, so a node's usable bound is the LP bound rounded up."""
        return float(math.ceil(bound - BOUND_TOL)) if math.isfinite(bound) else bound

    def _push(self, node: Node) -> None:
        # best bound first, then deeper nodes, then first-in-first-out
        heapq.heappush(self.heap, (self.integral_bound(node.bound), -node.depth, node.id, node))

    def _child(self, parent: Node, lo=None, hi=None, orthant=None, cuts=None) -> Node:
        return Node(
            next(self._ids),
            parent.depth + 1,
            parent.lo.copy() if lo is None else lo,
            parent.hi.copy() if hi is None else hi,
            parent.orthant.copy() if orthant is None else orthant,
            parent.cuts if cuts is None else cuts,
            parent.bound,
            parent.basis,
        )

    def _row_for(self, cut: mod.AntennaCut) -> Row:
        return antenna_row(self.layout, cut.antenna, cut.cw, cut.cz, cut.cb, ">=", cut.rhs)

    def _load(self, node: Node) -> None:
        self.model.set_all_bounds(node.lo, node.hi)
        wanted = set(node.cuts)
        stale = [c for c in self.local_rows if c not in wanted]
        if stale:
            self.model.remove_rows([self.local_rows.pop(c) for c in stale])
        for cut in node.cuts:
            if cut not in self.local_rows:
                self.local_rows[cut] = self.model.add_row(self._row_for(cut))

    def _add_local_cut(self, node: Node, cut: mod.AntennaCut) -> None:
        node.cuts = node.cuts + (cut,)
        self.local_rows[cut] = self.model.add_row(self._row_for(cut))

    def _add_global_rows(self, rows: list[Row], basic_rows: frozenset) -> None:
        self.pool.extend(self.model.add_rows(rows))
        cap = self.config.cut_pool_factor * self.N
        if len(self.pool) > cap:
            excess = len(self.pool) - cap
            inactive = [r for r in self.pool if r in basic_rows][:excess]
            if len(inactive) < excess:
                extra = [r for r in self.pool if r not in inactive][: excess - len(inactive)]
                inactive += extra
            drop = set(inactive)
            self.model.remove_rows(drop)
            self.pool = [r for r in self.pool if r not in drop]

    # ---- domain propagation ---------------------------------------------
    def propagate(self, node: Node) -> bool:
        """Tighten the node's bounds in place; False if the node is infeasible."""
        N = self.N
        for _ in range(3):
            changed = False
            for n in range(N):
                box = node.box(n, N)
                if node.b_fixed_zero(n, N):
                    if box != (0.0, 0.0, 0.0, 0.0):
                        if box[0] > 0 or box[1] < 0 or box[2] > 0 or box[3] < 0:
                            return False
                        node.set_box(n, N, (0.0, 0.0, 0.0, 0.0))
                    continue
                if self.config.modulus_handler:
                    if node.orthant[n] == mod.UNASSIGNED:
                        q = mod.orthant_of_box(box)
                        if q != mod.UNASSIGNED and not (box[0] == box[1] == box[2] == box[3] == 0):
                            node.orthant[n] = q
                    if node.orthant[n] != mod.UNASSIGNED:
                        new = mod.propagate(int(node.orthant[n]), box, node.b_fixed_one(n, N))
                    else:
                        new = box
                else:
                    new = quadratic.propagate(box, node.lo[2 * N + n], node.hi[2 * N + n])
                if new is None:
                    return False
                if new != box:
                    node.set_box(n, N, new)
                    changed = True
                # an excluded origin forces b_n = 1
                if (new[0] > FEAS_TOL or new[1] < -FEAS_TOL or new[2] > FEAS_TOL or new[3] < -FEAS_TOL) \
                        and not node.b_fixed_one(n, N):
                    node.lo[2 * N + n] = 1.0
                    changed = True
            if not changed:
                break
        return bool(np.all(node.lo <= node.hi + FEAS_TOL))

    # ---- node processing ------------------------------------------------
    def solve_lp(self, node: Node):
        sol = self.model.solve(warm_start=node.basis)
        self.lp_iterations += sol.iterations
        if sol.status in (LpStatus.NUMERICAL, LpStatus.ITERATION_LIMIT, LpStatus.UNBOUNDED):
            sol = self.model.solve(cold=True)
            self.lp_iterations += sol.iterations
        return sol

    def process_node(self, node: Node, state: dict) -> NodeResult:
        """One pass of the node loop: solve the LP and take exactly one action."""
        N = self.N
        sol = self.solve_lp(node)
        if sol.status == LpStatus.INFEASIBLE:
            return NodeResult(Outcome.PRUNED_INFEASIBLE)
        if not sol.optimal:
            return self._numerical_fallback(node)
        node.basis = sol.basis
        node.bound = max(node.bound, sol.objective)
        if self._prunable(node.bound):
            return NodeResult(Outcome.PRUNED_BOUND)
        w, z, b = self.layout.split(sol.x)

        n = most_fractional(b)
        if n is not None:
            return NodeResult(Outcome.BRANCHED_BINARY, self.branch_binary(node, n))

        if state["soc_rounds"] < self.config.max_soc_rounds:
            rows = self._convex_cuts(w, z, b)
            if rows:
                state["soc_rounds"] += 1
                self._add_global_rows(rows, sol.basic_rows)
                return NodeResult(Outcome.CONVEX_ENFORCED, resolve=True)

        if state["inplace"] < self.config.max_inplace_rounds:
            handled = self._enforce_modulus(node, w, z, b, state)
            if handled is not None:
                return handled

        return self._integer_feasible(node, w, z, b)

    def _convex_cuts(self, w, z, b) -> list[Row]:
        rows = []
        cut = separate_error_soc(self.real, w, z, form=self.config.cut_form)
        if cut is not None:
            rows.append(pad_row(cut, self.layout))
        for n in range(self.N):
            up = separate_upper_modulus(w[n], z[n], b[n])
            if up is not None:
                cw, cz, cb, rhs = up
                rows.append(antenna_row(self.layout, n, cw, cz, cb, "<=", rhs))
        return rows

    def branch_binary(self, node: Node, n: int) -> list[Node]:
        N = self.N
        zero = self._child(node)
        zero.lo[2 * N + n] = zero.hi[2 * N + n] = 0.0
        zero.set_box(n, N, (0.0, 0.0, 0.0, 0.0))
        one = self._child(node)
        one.lo[2 * N + n] = 1.0
        return [zero, one]

    def _enforce_modulus(self, node: Node, w, z, b, state) -> NodeResult | None:
        N = self.N
        eps = self.config.eps
        skip = state["skip"]
        while True:
            n = mod.select_violated(w, z, b, eps, skip)
            if n is None:
                return None
            box = node.box(n, N)
            fixed = mod.try_fix(box, node.b_fixed_zero(n, N))
            if fixed is not None:
                if fixed == box:
                    skip.add(n)
                    continue
                node.set_box(n, N, fixed)
                state["inplace"] += 1
                return NodeResult(Outcome.MODULUS_HANDLED, resolve=True)
            if self.config.modulus_handler:
                result = self._modulus_handler(node, n, box, (w[n], z[n], b[n]), state)
            else:
                result = self._generic_handler(node, n, box, (w[n], z[n], b[n]), state)
            if result is None:
                skip.add(n)
                continue
            return result

    def _modulus_handler(self, node: Node, n: int, box, point, state) -> NodeResult | None:
        N = self.N
        q = int(node.orthant[n])
        if q == mod.UNASSIGNED:
            children = []
            for orth, piece in mod.branch_orthants(box):
                child = self._child(node)
                child.orthant[n] = orth
                child.set_box(n, N, piece)
                children.append(child)
            self.modulus_branches += 1
            return NodeResult(Outcome.MODULUS_HANDLED, children)
        b_one = node.b_fixed_one(n, N)
        new = mod.propagate(q, box, b_one)
        if new is None:
            return NodeResult(Outcome.PRUNED_INFEASIBLE)
        if max(abs(x - y) for x, y in zip(new, box)) > FEAS_TOL:
            node.set_box(n, N, new)
            state["inplace"] += 1
            return NodeResult(Outcome.MODULUS_HANDLED, resolve=True)
        arc = mod.arc_interval(q, box)
        if arc is None:
            # no circle point in the box: only b_n = 0 remains
            if b_one:
                return NodeResult(Outcome.PRUNED_INFEASIBLE)
            node.hi[2 * N + n] = 0.0
            node.set_box(n, N, (0.0, 0.0, 0.0, 0.0))
            state["inplace"] += 1
            return NodeResult(Outcome.MODULUS_HANDLED, resolve=True)
        w, z, bv = point
        cut = mod.separate_chord(n, q, w, z, bv, self.config.eps, arc)
        if cut is not None and cut not in node.cuts:
            self._add_local_cut(node, cut)
            state["inplace"] += 1
            return NodeResult(Outcome.MODULUS_HANDLED, resolve=True)
        return self._subarc_children(node, n, q, box, point, arc)

    def _subarc_children(self, node, n, q, box, point, arc) -> NodeResult | None:
        N = self.N
        split = mod.branch_subarc(n, q, box, node.b_fixed_one(n, N), point, arc)
        if split is None:
            return None
        children = []
        for arc_child in split[0]:
            child = self._child(node, cuts=node.cuts + (arc_child.cut,))
            child.set_box(n, N, arc_child.box)
            children.append(child)
        self.modulus_branches += 1
        return NodeResult(Outcome.MODULUS_HANDLED, children)

    def _generic_handler(self, node: Node, n: int, box, point, state) -> NodeResult | None:
        N = self.N
        w, z, bv = point
        cut = quadratic.secant_overestimator(n, box, w, z, bv)
        if cut is not None and cut not in node.cuts:
            self._add_local_cut(node, cut)
            state["inplace"] += 1
            return NodeResult(Outcome.MODULUS_HANDLED, resolve=True)
        return self._spatial_children(node, n, box, w, z)

    def _spatial_children(self, node, n, box, w, z) -> NodeResult | None:
        N = self.N
        choice = quadratic.branching_choice(box, w, z)
        if choice is None:
            return None
        var, value = choice
        idx = n if var == 0 else N + n
        left, right = self._child(node), self._child(node)
        left.hi[idx] = value
        right.lo[idx] = value
        self.modulus_branches += 1
        return NodeResult(Outcome.MODULUS_HANDLED, [left, right])

    def _integer_feasible(self, node: Node, w, z, b) -> NodeResult:
        x = polish(self.inst, w, z, b)
        if is_feasible(self.inst, CandidateSolution.from_complex(x), self.config.eps):
            self._store_incumbent(x)
            return NodeResult(Outcome.INTEGER_FEASIBLE)
        # the LP point is only eps-feasible: keep narrowing the worst active antenna
        N = self.N
        active = np.flatnonzero(b > 0.5)
        order = active[np.argsort(w[active] ** 2 + z[active] ** 2, kind="stable")]
        for n in order:
            box = node.box(n, N)
            point = (w[n], z[n], b[n])
            if self.config.modulus_handler:
                q = int(node.orthant[n])
                if q == mod.UNASSIGNED:
                    result = self._modulus_handler(node, n, box, point, {"inplace": 0})
                else:
                    arc = mod.arc_interval(q, box)
                    result = None if arc is None else self._subarc_children(node, n, q, box, point, arc)
            else:
                result = self._spatial_children(node, n, box, w[n], z[n])
            if result is not None and result.children:
                return result
        self.unresolved += 1
        return NodeResult(Outcome.PRUNED_INFEASIBLE)

    def _numerical_fallback(self, node: Node) -> NodeResult:
        N = self.N
        free = [n for n in range(N) if not node.b_fixed_zero(n, N) and not node.b_fixed_one(n, N)]
        if not free:
            self.numerical_drops += 1
            log.warning("dropping node %d after repeated LP failure", node.id)
            return NodeResult(Outcome.PRUNED_INFEASIBLE)
        return NodeResult(Outcome.BRANCHED_BINARY, self.branch_binary(node, free[0]))

    # ---- main loop ------------------------------------------------------
    def root(self) -> Node:
        N = self.N
        return Node(next(self._ids), 0, self.model.lo.copy(), self.model.hi.copy(),
                    np.zeros(N, dtype=np.int8))

    def solve(self) -> SolveReport:
        self._push(self.root())
        status = Status.OPTIMAL
        while self.heap:
            if time.perf_counter() - self.start > self.config.time_limit_s:
                status = Status.TIME_LIMIT
                break
            if self.config.node_limit is not None and self.nodes >= self.config.node_limit:
                status = Status.NODE_LIMIT
                break
            bound, _, _, node = heapq.heappop(self.heap)
            self.dual_trace.append(min(bound, self.incumbent_card))
            if self._prunable(node.bound):
                continue
            self.nodes += 1
            if not self.propagate(node):
                continue
            self._load(node)
            state = {"soc_rounds": 0, "inplace": 0, "skip": set()}
            while True:
                result = self.process_node(node, state)
                if not result.resolve:
                    break
                if not self.propagate(node):
                    result = NodeResult(Outcome.PRUNED_INFEASIBLE)
                    break
                self._load(node)
            for child in result.children:
                child.bound = max(child.bound, node.bound)
                if not self._prunable(child.bound):
                    self._push(child)
        elapsed = time.perf_counter() - self.start
        if status == Status.OPTIMAL:
            if self.incumbent_x is None:
                status = Status.INFEASIBLE
                dual = math.inf
            else:
                dual = float(self.incumbent_card)
        else:
            open_bounds = [item[0] for item in self.heap]
            dual = min([self.incumbent_card] + open_bounds)
        card = None if self.incumbent_x is None else int(self.incumbent_card)
        return SolveReport(status, card, self.incumbent_x, self.nodes, self.modulus_branches, elapsed,
                           dual, self.dual_trace, self.incumbent_history, self.lp_iterations,
                           self.numerical_drops, self.unresolved)


def solve_exact(inst: ProblemInstance, config: SolverConfig | None = None, **kwargs) -> SolveReport:
    config = config or SolverConfig()
    if kwargs:
        config = replace(config, **kwargs)
    return BranchAndBound(inst, config).solve()
