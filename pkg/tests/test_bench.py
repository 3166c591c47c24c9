import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmbf import bench
from cmbf.heuristic import HeuristicConfig

FAST = HeuristicConfig(max_iter=50, max_count=100)


def test_shifted_geomean_direct_evaluation():
    direct = math.sqrt((10 + 10) * (1000 + 10)) - 10
    assert bench.shifted_geomean([10, 1000], 10) == pytest.approx(direct, rel=1e-15)
    assert direct == pytest.approx(132.1267040, abs=1e-7)


@given(st.floats(0, 1e6), st.floats(0, 100))
def test_shifted_geomean_of_single_value(t, shift):
    assert bench.shifted_geomean([t], shift) == t


@given(st.floats(0, 1e6), st.integers(1, 20))
def test_shifted_geomean_of_equal_values(v, n):
    assert bench.shifted_geomean([v] * n, 10) == v


@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=30))
def test_means_are_ordered(values):
    g = bench.geomean(values) if min(values) > 0 else 0.0
    sg = bench.shifted_geomean(values, 10)
    a = bench.arithmetic_mean(values)
    assert g - 1e-9 * (1 + a) <= sg <= a + 1e-9 * (1 + a)


def test_mean_errors():
    with pytest.raises(ValueError):
        bench.shifted_geomean([])
    with pytest.raises(ValueError):
        bench.shifted_geomean([-1.0])
    with pytest.raises(ValueError):
        bench.arithmetic_mean([])


def test_instance_seeds_are_deterministic_and_distinct():
    a = bench.instance_seed(0, 16, 2, "0.1q", 0)
    assert a == bench.instance_seed(0, 16, 2, "0.1q", 0)
    assert len({bench.instance_seed(0, 16, 2, p, r) for p in ("0.1q", "0.2q") for r in range(5)}) == 10


def test_variant_records_and_upper_bound_property():
    exact = bench.run_variant(8, 2, "0.1q", 3, "modulus", heuristic=FAST)
    warm = bench.run_variant(8, 2, "0.1q", 3, "modulus+heur", heuristic=FAST)
    heur = bench.run_variant(8, 2, "0.1q", 3, "heur", heuristic=FAST)
    assert exact.status == warm.status == "optimal" and heur.status == "feasible"
    assert exact.opt_card == warm.opt_card
    assert heur.heur_card >= exact.opt_card and warm.heur_card >= warm.opt_card
    assert warm.time_s >= warm.heur_time_s
    assert heur.nodes == 0 and heur.opt_card is None


def test_failures_are_recorded_not_raised():
    rec = bench.run_variant(0, 2, "0.1q", 1, "modulus")
    assert rec.status.startswith("error")


def test_csv_round_trip(tmp_path):
    recs = [
        bench.RunRecord("a", 8, 2, "0.1q", 1, "modulus", 10, 0.5, "optimal", 2, None, None),
        bench.RunRecord("a", 8, 2, "0.1q", 1, "heur", 0, 0.1, "feasible", None, 2, 0.1),
    ]
    path = tmp_path / "runs.csv"
    bench.write_csv(recs, path)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(bench.COLUMNS)
    assert bench.read_csv(path) == recs


def test_read_csv_rejects_missing_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("instance,N\nx,1\n")
    with pytest.raises(ValueError, match="missing columns"):
        bench.read_csv(path)


def test_summary_block():
    recs = [bench.RunRecord("a", 8, 2, "0.1q", s, "modulus", n, t, "optimal", 2)
            for s, (n, t) in enumerate([(10, 1.0), (1000, 10.0)])]
    summary = bench.summarize(recs)["modulus"]
    assert summary.nodes["shifted"] == pytest.approx(math.sqrt(110 * 1100) - 100)
    assert summary.time["arithmetic"] == pytest.approx(5.5)
    text = bench.format_summary({"modulus": summary})
    assert "shifted" in text and "modulus" in text


def test_small_suite_is_reproducible(tmp_path):
    config = bench.SuiteConfig(grid={"N": (6,), "K": (2,), "presets": ("0.1q", "0.2q")}, seeds=2,
                               heuristic=FAST, time_limit_s=60)
    a = bench.run_suite(config, tmp_path / "a.csv")
    b = bench.run_suite(config, tmp_path / "b.csv")
    assert len(a) == 2 * 2 * len(bench.VARIANTS)
    assert bench.comparable_rows(a) == bench.comparable_rows(b)
    # exact variants agree on every instance
    for inst in {r.instance for r in a}:
        cards = {r.opt_card for r in a if r.instance == inst and r.variant != "heur"}
        assert len(cards) == 1


def test_suite_config_validation():
    with pytest.raises(ValueError):
        bench.SuiteConfig(variants=("nope",)).validate()
    with pytest.raises(ValueError):
        bench.SuiteConfig(grid={"N": (6,), "K": (2,), "presets": ("0.5q",)}).validate()
