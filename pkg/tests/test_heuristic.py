import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from cmbf.heuristic import (
    HeuristicConfig,
    _draws,
    restart_seed,
    run_batch,
    run_restart,
    solve_heuristic,
    swap_step,
)
from cmbf.model import CandidateSolution, ProblemInstance, generate_instance, is_feasible, residual

FAST = HeuristicConfig(max_iter=64, max_count=200)

# cardinalities from the brute-force reference, generate_instance(6, 2, preset, seed) for seeds 0..5
FROZEN_6x2 = {"0.1q": [2, 2, 2, 3, 2, 2], "0.2q": [2, 2, 2, 3, 2, 2]}


@given(st.integers(0, 10**6), st.integers(1, 4))
def test_error_never_increases_within_a_restart(seed, m):
    inst = generate_instance(8, 3, seed=seed)
    seeds = [restart_seed(seed, m, i) for i in range(4)]
    _, _, history = run_batch(inst, m, seeds, 150, trace=True)
    assert np.all(np.diff(history, axis=0) <= 0)


def test_equal_seeds_give_equal_restarts():
    inst = generate_instance(10, 2, seed=1)
    a = run_restart(inst, 3, restart_seed(0, 3, 5), 300)
    b = run_restart(inst, 3, restart_seed(0, 3, 5), 300)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


def test_restart_does_not_depend_on_batching():
    inst = generate_instance(12, 3, seed=2)
    seeds = [restart_seed(4, 2, i) for i in range(10)]
    x_all, e_all = run_batch(inst, 2, seeds, 200)
    x_one, e_one = run_batch(inst, 2, seeds[3:4], 200)
    assert np.array_equal(x_all[3], x_one[0]) and e_all[3] == e_one[0]


def test_initial_supports_are_uniform():
    seeds = [restart_seed(0, 2, i) for i in range(10_000)]
    _, mask, _ = _draws(5, 2, 1, seeds)
    pairs = list(combinations(range(5), 2))
    counts = np.zeros(len(pairs))
    index = {p: i for i, p in enumerate(pairs)}
    for row in mask:
        counts[index[tuple(np.flatnonzero(row))]] += 1
    assert chisquare(counts).pvalue > 0.01


def test_swap_moves_support_to_better_antenna():
    inst = ProblemInstance(np.array([[1 + 0j], [2 + 0j]]), np.array([2 + 0j]), 0.1)
    y = swap_step(np.array([1 + 0j, 0j]), 0, 1, inst)
    assert y == pytest.approx(np.array([0, 1]))
    assert residual(inst, y) == pytest.approx(0.0, abs=1e-9)


def test_equal_magnitudes_keep_u_and_rank_one_is_safe():
    inst = ProblemInstance(np.array([[1 + 0j], [1 + 0j]]), np.array([1 + 0j]), 0.1)
    x = np.array([1j, 0j])
    y = swap_step(x, 0, 1, inst)
    assert y[1] == 0 and abs(y[0]) == pytest.approx(1.0)
    before = residual(inst, x)
    xr, err = run_restart(inst, 1, restart_seed(0, 1, 0), 20)
    assert err <= before + 1e-12


def test_output_is_feasible():
    inst = generate_instance(10, 2, seed=5)
    res = solve_heuristic(inst, FAST)
    assert res.success
    assert is_feasible(inst, CandidateSolution.from_complex(res.x))
    assert res.cardinality == np.count_nonzero(res.x)


@pytest.mark.parametrize("preset", sorted(FROZEN_6x2))
def test_cardinality_never_below_reference(preset):
    for seed, opt in enumerate(FROZEN_6x2[preset]):
        res = solve_heuristic(generate_instance(6, 2, preset, seed=seed), FAST)
        assert res.cardinality >= opt


def test_single_antenna_found_when_one_suffices():
    H = np.array([[1.0 + 0j], [0.1 + 0j], [0.2j]])
    inst = ProblemInstance(H, np.array([1j]), 0.05)
    res = solve_heuristic(inst, FAST)
    assert res.cardinality == 1 and res.x[0] != 0


def test_infeasible_at_n_is_reported():
    inst = ProblemInstance(np.array([[0.1 + 0j], [0.1 + 0j]]), np.array([5 + 0j]), 0.1)
    res = solve_heuristic(inst, HeuristicConfig(max_iter=4, max_count=10))
    assert not res.success and res.status == "infeasible-at-N"


def test_parallel_matches_serial():
    inst = generate_instance(8, 2, seed=9)
    serial = solve_heuristic(inst, HeuristicConfig(max_iter=40, max_count=100, batch_size=10))
    parallel = solve_heuristic(inst, HeuristicConfig(max_iter=40, max_count=100, batch_size=10,
                                                     parallel_restarts=True, workers=2))
    assert np.array_equal(serial.x, parallel.x)


def test_config_validation():
    with pytest.raises(ValueError):
        HeuristicConfig(m_guess=0).validate(4)
    with pytest.raises(ValueError):
        HeuristicConfig(max_iter=0).validate(4)
