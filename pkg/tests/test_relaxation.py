import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmbf.lp import LpStatus
from cmbf.model import ProblemInstance, generate_instance, to_real
from cmbf.relaxation import (
    OCTAGON,
    build_root,
    error_gradient,
    separate_error_soc,
    separate_upper_modulus,
)


def _octagon_values(w, z, b):
    return np.array([cw * w + cz * z + cb * b for cw, cz, cb in OCTAGON])


def test_octagon_cuts_off_corner():
    vals = _octagon_values(0.9, 0.9, 1.0)
    assert vals.max() > 0  # 1.8 > sqrt(2)


def test_octagon_touches_circle_point():
    # (1, 0) is the midpoint of the edge w = b, so exactly one row is tight
    vals = _octagon_values(1.0, 0.0, 1.0)
    assert vals.max() <= 1e-15
    assert np.sum(np.isclose(vals, 0.0)) == 1
    # the octagon's corners lie on the edge lines through (cos, sin) of 22.5 degrees
    corner = _octagon_values(1.0, math.sqrt(2) - 1, 1.0)
    assert np.sum(np.isclose(corner, 0.0)) == 2


@given(st.floats(0, 2 * math.pi), st.floats(0, 1))
def test_octagon_contains_scaled_disk(theta, r):
    # w^2 + z^2 <= b is implied for b = r (points with modulus sqrt(r) <= r... use b = 1)
    vals = _octagon_values(r * math.cos(theta), r * math.sin(theta), 1.0)
    assert vals.max() <= 1e-12


def test_root_objective_zero_when_origin_feasible():
    inst = generate_instance(5, 2, seed=1)
    loose = ProblemInstance(inst.channel, inst.desired, float(np.linalg.norm(inst.desired)) + 0.1)
    model, _ = build_root(to_real(loose))
    sol = model.solve()
    assert sol.status == LpStatus.OPTIMAL and sol.objective == pytest.approx(0.0)


def test_scalar_error_cut():
    inst = ProblemInstance(np.array([[1 + 0j]]), np.array([2 + 0j]), 0.5)
    real = to_real(inst)
    row = separate_error_soc(real, np.zeros(1), np.zeros(1), form="squared")
    # 3.75 - 4 w <= 0  <=>  -4 w <= -3.75  <=>  w >= 0.9375
    coefs = np.asarray(row.coefs)
    assert coefs[0] == pytest.approx(-4.0)
    assert coefs[1] == pytest.approx(0.0)
    assert row.rhs / coefs[0] == pytest.approx(0.9375)


def test_norm_cut_is_tangent_and_stronger():
    inst = ProblemInstance(np.array([[1 + 0j]]), np.array([2 + 0j]), 0.5)
    row = separate_error_soc(to_real(inst), np.zeros(1), np.zeros(1), form="norm")
    coefs = np.asarray(row.coefs)
    assert row.rhs / coefs[0] == pytest.approx(1.5)  # |2 - w| <= 0.5 at the tangent: w >= 1.5


def test_feasible_point_gets_no_cut():
    inst = generate_instance(4, 2, seed=3)
    real = to_real(inst)
    x = np.zeros(4)
    loose = ProblemInstance(inst.channel, inst.desired, 10.0)
    assert separate_error_soc(to_real(loose), x, x) is None
    assert separate_error_soc(real, x, x) is not None


@pytest.mark.parametrize("seed", range(100))
def test_gradient_matches_finite_differences(seed):
    inst = generate_instance(5, 3, seed=seed)
    real = to_real(inst)
    rng = np.random.default_rng(seed)
    w, z = rng.uniform(-1, 1, 5), rng.uniform(-1, 1, 5)
    _, grad = error_gradient(real, w, z)
    h = 1e-6
    p = np.concatenate([w, z])
    fd = np.empty_like(p)
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = h
        hi, _ = error_gradient(real, *np.split(p + e, 2))
        lo, _ = error_gradient(real, *np.split(p - e, 2))
        fd[i] = (hi - lo) / (2 * h)
    assert np.linalg.norm(grad - fd) <= 1e-5 * max(1.0, np.linalg.norm(grad))


@given(st.integers(0, 10**6))
def test_error_cuts_keep_feasible_points(seed):
    inst = generate_instance(4, 2, seed=seed)
    real = to_real(inst)
    rng = np.random.default_rng(seed)
    for form in ("squared", "norm"):
        row = separate_error_soc(real, rng.uniform(-3, 3, 4), rng.uniform(-3, 3, 4), form=form)
        if row is None:
            continue
        coefs = np.asarray(row.coefs)
        # any point satisfying the error bound satisfies the cut
        for _ in range(20):
            x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            fit = np.linalg.lstsq(inst.channel.T, inst.desired, rcond=None)[0] + 1e-3 * x
            if np.linalg.norm(inst.desired - inst.channel.T @ fit) ** 2 <= real.delta:
                assert coefs @ np.concatenate([fit.real, fit.imag]) <= row.rhs + 1e-9


def test_upper_modulus_cut_examples():
    assert separate_upper_modulus(1.0, 1.0, 1.0) == (2.0, 2.0, -1.0, 2.0)
    assert separate_upper_modulus(0.5, 0.0, 1.0) is None


def test_upper_modulus_cut_valid_on_disk():
    rng = np.random.default_rng(0)
    for _ in range(100):
        w, z = rng.uniform(-1.5, 1.5, 2)
        cut = separate_upper_modulus(w, z, 0.5)
        if cut is None:
            continue
        cw, cz, cb, rhs = cut
        theta, b = rng.uniform(0, 2 * math.pi), rng.uniform(0, 1)
        r = math.sqrt(b) * rng.uniform(0, 1)
        assert cw * r * math.cos(theta) + cz * r * math.sin(theta) + cb * b <= rhs + 1e-12
