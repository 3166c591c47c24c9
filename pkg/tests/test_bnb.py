import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmbf.bnb import BranchAndBound, Node, Outcome, SolverConfig, Status, most_fractional, solve_exact
from cmbf.lp import LpStatus
from cmbf.model import CandidateSolution, ProblemInstance, generate_instance, is_feasible

FROZEN_6x2 = {"0.1q": [2, 2, 2, 3, 2, 2], "0.2q": [2, 2, 2, 3, 2, 2]}


def test_zero_cardinality_in_one_node():
    inst = generate_instance(6, 2, seed=0)
    loose = ProblemInstance(inst.channel, inst.desired, float(np.linalg.norm(inst.desired)) + 1e-3)
    report = solve_exact(loose)
    assert report.status == Status.OPTIMAL and report.cardinality == 0 and report.nodes == 1


def test_scalar_instance():
    inst = ProblemInstance(np.array([[1 + 0j]]), np.array([1 + 0j]), 0.1)
    report = solve_exact(inst)
    assert report.cardinality == 1
    assert abs(report.x[0]) == pytest.approx(1.0)


def test_most_fractional_rule():
    assert most_fractional(np.array([1.0, 0.5, 0.0])) == 1
    assert most_fractional(np.array([0.4, 0.6])) == 0
    assert most_fractional(np.array([1.0, 0.0, 1.0 - 1e-8])) is None


def test_pruning_boundary():
    bb = BranchAndBound(generate_instance(4, 2, seed=0))
    bb.incumbent_card = 3
    assert bb._prunable(2.3)
    bb.incumbent_card = 4
    assert not bb._prunable(2.3)


def test_zero_child_fixes_antenna():
    bb = BranchAndBound(generate_instance(5, 2, seed=1))
    root = bb.root()
    zero, one = bb.branch_binary(root, 2)
    assert zero.hi[bb.layout.b(2)] == 0 and one.lo[bb.layout.b(2)] == 1
    bb._load(zero)
    sol = bb.model.solve()
    assert sol.status == LpStatus.OPTIMAL
    assert sol.x[bb.layout.w(2)] == 0 and sol.x[bb.layout.z(2)] == 0


@pytest.mark.parametrize("handler", [True, False])
@pytest.mark.parametrize("preset", sorted(FROZEN_6x2))
def test_matches_reference_on_small_instances(handler, preset):
    for seed, opt in enumerate(FROZEN_6x2[preset]):
        report = solve_exact(generate_instance(6, 2, preset, seed=seed), modulus_handler=handler)
        assert report.status == Status.OPTIMAL
        assert report.cardinality == opt


@settings(max_examples=12)
@given(st.integers(0, 10**6), st.booleans())
def test_dual_bound_monotone_and_incumbent_feasible(seed, handler):
    inst = generate_instance(6, 3, "0.2q", seed=seed)
    report = solve_exact(inst, modulus_handler=handler)
    trace = np.array(report.dual_bound_trace)
    assert np.all(np.diff(trace) >= -1e-9)
    assert report.status == Status.OPTIMAL
    assert is_feasible(inst, CandidateSolution.from_complex(report.x), 1e-5)
    assert np.count_nonzero(report.x) == report.cardinality
    cards = [c for _, c in report.incumbent_history]
    assert cards == sorted(cards, reverse=True)


def test_warm_start_incumbent_is_used_and_checked():
    inst = generate_instance(6, 2, seed=2)
    base = solve_exact(inst)
    warm = solve_exact(inst, initial_solution=base.x)
    assert warm.cardinality == base.cardinality
    assert warm.nodes <= base.nodes
    with pytest.raises(ValueError):
        solve_exact(inst, initial_solution=np.zeros(6))


def test_node_limit_reports_valid_bound():
    inst = generate_instance(8, 3, seed=0)
    report = solve_exact(inst, node_limit=3)
    assert report.status == Status.NODE_LIMIT and report.nodes == 3
    full = solve_exact(inst)
    assert report.dual_bound <= full.cardinality


def test_time_limit():
    report = solve_exact(generate_instance(8, 3, seed=0), time_limit_s=0.0)
    assert report.status == Status.TIME_LIMIT and report.nodes == 0


def test_process_node_branches_on_fractional_binaries():
    bb = BranchAndBound(generate_instance(6, 2, seed=0))
    root = bb.root()
    bb._load(root)
    result = bb.process_node(root, {"soc_rounds": 0, "inplace": 0, "skip": set()})
    assert result.outcome in (Outcome.BRANCHED_BINARY, Outcome.CONVEX_ENFORCED)
    if result.outcome == Outcome.BRANCHED_BINARY:
        assert len(result.children) == 2


def test_propagation_forces_b_when_origin_excluded():
    bb = BranchAndBound(generate_instance(3, 2, seed=0))
    node = bb.root()
    node.lo[bb.layout.w(1)] = 0.5
    assert bb.propagate(node)
    assert node.lo[bb.layout.b(1)] == 1.0
    assert node.orthant[1] == 0  # z still spans both signs
