"""Benchmark harness: instance ensembles, algorithm variants and summary means.

A run is identified by ``(N, K, preset, seed)`` and a variant name.  The
instance seed of cell ``(N, K, preset)`` and replicate ``r`` is derived from the
master seed, so a suite is fully determined by its configuration.  Timings
naturally differ between runs; everything else in the CSV is reproducible.
"""

from __future__ import annotations

import contextlib
import csv
import logging
import math
import os
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from .bnb import SolverConfig, solve_exact
from .heuristic import HeuristicConfig, solve_heuristic
from .model import PRESETS, generate_instance

log = logging.getLogger(__name__)

VARIANTS = ("default", "modulus", "default+heur", "modulus+heur", "heur")
TIME_SHIFT = 10.0
NODE_SHIFT = 100.0
COLUMNS = ("instance", "N", "K", "preset", "seed", "variant", "nodes", "time_s", "status",
           "opt_card", "heur_card", "heur_time_s")
TIMING_COLUMNS = ("time_s", "heur_time_s")

DESK_GRID = {"N": (16, 32), "K": (2, 3, 4), "presets": tuple(PRESETS)}
FULL_GRID = {"N": (16, 32, 48, 64), "K": (2, 3, 4), "presets": tuple(PRESETS)}


def shifted_geomean(values: Iterable[float], shift: float = TIME_SHIFT) -> float:
    """``(prod(v_i + shift))^(1/n) - shift``, computed in log space."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("shifted_geomean of an empty sequence")
    if np.any(v < 0) or shift < 0:
        raise ValueError("values and shift must be nonnegative")
    if np.all(v == v[0]):
        return float(v[0])
    return float(np.exp(np.mean(np.log(v + shift))) - shift)


def geomean(values: Iterable[float]) -> float:
    return shifted_geomean(values, 0.0)


def arithmetic_mean(values: Iterable[float]) -> float:
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("mean of an empty sequence")
    return float(v.mean())


@dataclass
class RunRecord:
    instance: str
    N: int
    K: int
    preset: str
    seed: int
    variant: str
    nodes: int | None = None
    time_s: float | None = None
    status: str = ""
    opt_card: int | None = None
    heur_card: int | None = None
    heur_time_s: float | None = None

    def row(self) -> dict:
        out = {}
        for key, value in asdict(self).items():
            if value is None:
                out[key] = ""
            elif isinstance(value, float):
                out[key] = f"{value:.6f}"
            else:
                out[key] = str(value)
        return out

    @classmethod
    def from_row(cls, row: dict) -> "RunRecord":
        kinds = {f.name: f.type for f in fields(cls)}
        values = {}
        for key in COLUMNS:
            raw = row.get(key, "")
            kind = kinds[key]
            if raw == "" and "None" in kind:
                values[key] = None
            elif kind.startswith("int"):
                values[key] = int(raw)
            elif kind.startswith("float"):
                values[key] = float(raw)
            else:
                values[key] = raw
        return cls(**values)


@dataclass
class SuiteConfig:
    grid: dict = field(default_factory=lambda: dict(DESK_GRID))
    seeds: int = 3
    variants: Sequence[str] = VARIANTS
    time_limit_s: float = 300.0
    eps: float = 1e-5
    master_seed: int = 0
    workers: int = 1
    heuristic: HeuristicConfig = field(default_factory=HeuristicConfig)

    def validate(self) -> None:
        unknown = set(self.variants) - set(VARIANTS)
        if unknown:
            raise ValueError(f"unknown variants: {sorted(unknown)}")
        if self.seeds < 1 or self.workers < 1 or self.time_limit_s <= 0:
            raise ValueError("seeds, workers and time limit must be positive")
        for preset in self.grid["presets"]:
            if preset not in PRESETS:
                raise ValueError(f"unknown preset {preset!r}")


def instance_seed(master_seed: int, n: int, k: int, preset: str, replicate: int) -> int:
    """Deterministic 32-bit instance seed for one cell replicate."""
    key = [int(master_seed), int(n), int(k), sorted(PRESETS).index(preset), int(replicate)]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def instance_name(n: int, k: int, preset: str, seed: int) -> str:
    return f"N{n}-K{k}-{preset}-{seed}"


def run_variant(n: int, k: int, preset: str, seed: int, variant: str, time_limit_s: float = 300.0,
                eps: float = 1e-5, heuristic: HeuristicConfig | None = None) -> RunRecord:
    """Generate one instance and solve it with one variant; failures are recorded, not raised."""
    record = RunRecord(instance_name(n, k, preset, seed), n, k, preset, seed, variant)
    start = time.perf_counter()
    try:
        inst = generate_instance(n, k, preset, seed=seed)
        hconf = heuristic or HeuristicConfig()
        initial = None
        if variant.endswith("heur"):
            h = solve_heuristic(inst, hconf)
            record.heur_card = h.cardinality if h.success else None
            record.heur_time_s = h.time_s
            if variant == "heur":
                record.status = h.status
                record.nodes = 0
                record.time_s = time.perf_counter() - start
                return record
            initial = h.x if h.success else None
        config = SolverConfig(time_limit_s=time_limit_s, eps=eps,
                              modulus_handler=variant.startswith("modulus"), initial_solution=initial)
        report = solve_exact(inst, config)
        record.nodes = report.nodes
        record.status = report.status.value
        record.opt_card = report.cardinality if report.status.value == "optimal" else None
    except Exception as exc:  # a failed run must not stop the suite
        log.exception("run %s/%s failed", record.instance, variant)
        record.status = f"error: {type(exc).__name__}"
    record.time_s = time.perf_counter() - start
    return record


def suite_jobs(config: SuiteConfig) -> list[tuple]:
    jobs = []
    for n in config.grid["N"]:
        for k in config.grid["K"]:
            for preset in config.grid["presets"]:
                for r in range(config.seeds):
                    seed = instance_seed(config.master_seed, n, k, preset, r)
                    for variant in config.variants:
                        jobs.append((n, k, preset, seed, variant, config.time_limit_s, config.eps,
                                     config.heuristic))
    return jobs


def _run_job(job) -> RunRecord:
    return run_variant(*job)


def run_suite(config: SuiteConfig, csv_path: str | os.PathLike | None = None) -> list[RunRecord]:
    """Run every job of the suite; records are returned (and streamed to CSV) in job order."""
    config.validate()
    jobs = suite_jobs(config)
    workers = max(1, min(config.workers, os.cpu_count() or 1))
    records = []
    with contextlib.ExitStack() as stack:
        writer = None
        if csv_path is not None:
            fh = stack.enter_context(open(csv_path, "w", newline=""))
            writer = csv.DictWriter(fh, fieldnames=COLUMNS)
            writer.writeheader()
        if workers == 1:
            results = map(_run_job, jobs)
        else:
            results = stack.enter_context(ProcessPoolExecutor(max_workers=workers)).map(_run_job, jobs)
        for i, rec in enumerate(results, 1):
            records.append(rec)
            log.info("[%d/%d] %s %s: %s nodes=%s %.1fs", i, len(jobs), rec.instance, rec.variant,
                     rec.status, rec.nodes, rec.time_s or 0.0)
            if writer is not None:
                writer.writerow(rec.row())
                fh.flush()
    return records


def write_csv(records: Iterable[RunRecord], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.row())


def read_csv(path: str | os.PathLike) -> list[RunRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return [RunRecord.from_row(row) for row in reader]


@dataclass
class VariantSummary:
    variant: str
    runs: int
    solved: int
    nodes: dict
    time: dict


def _means(values: list[float], shift: float) -> dict:
    if not values:
        return {"geometric": math.nan, "shifted": math.nan, "arithmetic": math.nan}
    return {
        "geometric": geomean(values),
        "shifted": shifted_geomean(values, shift),
        "arithmetic": arithmetic_mean(values),
    }


def summarize(records: Iterable[RunRecord]) -> dict[str, VariantSummary]:
    """Geometric, shifted geometric and arithmetic means of nodes and time per variant."""
    groups: dict[str, list[RunRecord]] = defaultdict(list)
    for rec in records:
        groups[rec.variant].append(rec)
    out = {}
    for variant in sorted(groups, key=lambda v: VARIANTS.index(v) if v in VARIANTS else len(VARIANTS)):
        recs = groups[variant]
        done = [r for r in recs if r.time_s is not None]
        solved = sum(r.status in ("optimal", "feasible") for r in recs)
        nodes = [float(r.nodes) for r in done if r.nodes is not None]
        times = [r.time_s for r in done]
        out[variant] = VariantSummary(variant, len(recs), solved, _means(nodes, NODE_SHIFT),
                                      _means(times, TIME_SHIFT))
    return out


def format_summary(summary: dict[str, VariantSummary]) -> str:
    lines = [f"{'variant':<14}{'runs':>6}{'solved':>8}  {'mean':<11}{'nodes':>12}{'time_s':>12}"]
    for s in summary.values():
        for label, key in (("geometric", "geometric"), ("shifted", "shifted"), ("arithmetic", "arithmetic")):
            lines.append(f"{s.variant:<14}{s.runs:>6}{s.solved:>8}  {label:<11}"
                         f"{s.nodes[key]:>12.1f}{s.time[key]:>12.3f}")
    return "\n".join(lines)


def comparable_rows(records: Iterable[RunRecord]) -> list[dict]:
    """CSV rows with the timing columns blanked, for reproducibility checks."""
    rows = []
    for rec in records:
        row = rec.row()
        for key in TIMING_COLUMNS:
            row[key] = ""
        rows.append(row)
    return rows
