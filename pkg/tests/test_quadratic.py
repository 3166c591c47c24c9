import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from cmbf import quadratic

unit = st.floats(-1, 1)


@given(unit, unit, unit, unit, st.floats(0, 2 * math.pi), st.booleans())
def test_propagation_keeps_feasible_points(a, b, c, d, theta, b_one):
    box = (min(a, b), max(a, b), min(c, d), max(c, d))
    w, z = math.cos(theta), math.sin(theta)
    pts = [(w, z)] + ([] if b_one else [(0.0, 0.0)])
    new = quadratic.propagate(box, 1.0 if b_one else 0.0, 1.0)
    for pw, pz in pts:
        if box[0] <= pw <= box[1] and box[2] <= pz <= box[3]:
            assert new is not None
            assert new[0] - 1e-9 <= pw <= new[1] + 1e-9 and new[2] - 1e-9 <= pz <= new[3] + 1e-9


def test_propagation_detects_empty_box():
    assert quadratic.propagate((0.0, 0.3, 0.0, 0.3), 1.0, 1.0) is None


def test_secant_overestimator_validity():
    rng = np.random.default_rng(3)
    for _ in range(2000):
        l1, u1 = np.sort(rng.uniform(-1, 1, 2))
        l2, u2 = np.sort(rng.uniform(-1, 1, 2))
        cut = quadratic.secant_overestimator(0, (l1, u1, l2, u2), 0.5 * (l1 + u1), 0.5 * (l2 + u2), 1.0)
        if cut is None:
            continue
        w, z = rng.uniform(l1, u1), rng.uniform(l2, u2)
        # any point with w^2 + z^2 >= b in the box satisfies the overestimator
        b = min(1.0, w * w + z * z)
        assert cut.value(w, z, b) >= -1e-12


def test_branching_choice_prefers_wider_domain_and_clamps_to_middle():
    assert quadratic.branching_choice((-1, 1, 0, 0.5), 0.1, 0.2) == (0, 0.1)
    var, value = quadratic.branching_choice((-1, 1, 0, 0.5), 0.95, 0.2)
    assert var == 0 and value == 0.0
    assert quadratic.branching_choice((0.2, 0.2, 0.3, 0.3), 0.2, 0.3) is None
