"""Instance x noise x solver sweeps, written as per-row and summary CSV tables."""
from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import qubo as qb
from .metrics import evaluate
from .problem import MotionProblem, all_motion_counts, labels_to_bits
from .samplers import (AnnealParams, SampleSet, best_sample, brute_force, random_sampler,
                       simulated_annealing, success_probability)
from .spectral import SpectralParams, spectral_segment
from .synthetic import SyntheticConfig, generate

log = logging.getLogger(__name__)

SOLVERS = ("v1-sa", "v2-sa", "v1-brute", "v2-brute", "synch-like", "random")
WORKERS_ENV = "MOTIONQUBO_WORKERS"


@dataclass(frozen=True)
class SweepConfig:
    configs: tuple[SyntheticConfig, ...] = ()
    problem_files: tuple[str, ...] = ()
    noise_grid: tuple[float, ...] = (0.0,)
    instances: int = 20
    solvers: tuple[str, ...] = ("v1-sa", "v2-sa")
    lambda1: float = qb.SYNTHETIC_WEIGHTS["lambda1"]
    lambda2: float = qb.SYNTHETIC_WEIGHTS["lambda2"]
    lambda3: float = qb.SYNTHETIC_WEIGHTS["lambda3"]
    fill: str = "zeroed"
    reads: int = 1000
    sweeps: int = 64
    seed: int = 0
    out: str | None = None
    persist: bool = False
    timing: bool = True

    def __post_init__(self):
        if not self.configs and not self.problem_files:
            raise ValueError("sweep needs synthetic configs or problem files")
        if not self.noise_grid:
            raise ValueError("noise grid must be nonempty")
        object.__setattr__(self, "noise_grid", tuple(float(r) for r in self.noise_grid))
        if self.instances < 1:
            raise ValueError("instances must be >= 1")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown:
            raise ValueError(f"unknown solvers {sorted(unknown)}; choose from {SOLVERS}")


@dataclass
class SweepResult:
    config: int
    n: int
    d: int
    instance: int
    solver: str
    variant: str
    qubits: int
    noise: float
    seed: int
    accuracy_raw: float = math.nan
    accuracy_aligned: float = math.nan
    energy: float = math.nan
    feasible: bool = False
    row_violations: int = -1
    success_probability: float = math.nan
    wall_time_ms: float = 0.0
    error: str = ""


COLUMNS = tuple(f.name for f in fields(SweepResult))


@dataclass(frozen=True)
class _Cell:
    config: int
    noise_index: int
    instance: int
    problem: MotionProblem = field(compare=False)
    noise: float = math.nan


def derive_seed(master: int, *key: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=key).generate_state(1)[0] >> 1)


def _cells(cfg: SweepConfig):
    for ci, sc in enumerate(cfg.configs):
        for ni, rho in enumerate(cfg.noise_grid):
            for inst in range(cfg.instances):
                problem = generate(replace(sc, noise=rho, seed=cfg.seed), inst)
                yield _Cell(ci, ni, inst, problem, rho)
    base = len(cfg.configs)
    for fi, path in enumerate(cfg.problem_files):
        yield _Cell(base + fi, 0, 0, MotionProblem.load(path))


def solve_one(problem: MotionProblem, solver: str, cfg: SweepConfig, seed: int):
    """Run a single solver; returns ``(bits, energy, sampleset_or_None, variant)``."""
    if solver == "synch-like":
        lab = spectral_segment(problem, SpectralParams(problem.d, seed=seed))
        q = qb.build_v1(problem, cfg.lambda1, cfg.fill)
        y = labels_to_bits(lab, problem.d)
        return y, qb.energy(q, y), None, "v1"
    variant = "v2" if solver.startswith("v2") else "v1"
    counts = None
    if variant == "v2":
        if problem.ground_truth is None:
            raise ValueError("v2 needs motion counts; problem has no ground truth")
        counts = all_motion_counts(problem.ground_truth, problem.d)
    q = qb.build(problem, variant, lambda1=cfg.lambda1, lambda2=cfg.lambda2,
                 lambda3=cfg.lambda3, fill=cfg.fill, counts=counts)
    if solver.endswith("-sa"):
        ss = simulated_annealing(q, AnnealParams(reads=cfg.reads, sweeps=cfg.sweeps, seed=seed))
    elif solver.endswith("-brute"):
        ss = brute_force(q, keep=1)
    else:
        ss = random_sampler(q, cfg.reads, seed)
    return best_sample(ss), float(ss.energies[0]), ss, variant


def _reference_energy(problem, ss, cfg, variant):
    ref = float(ss.energies[0])
    if problem.ground_truth is not None:
        counts = all_motion_counts(problem.ground_truth, problem.d)
        q = qb.build(problem, variant, lambda1=cfg.lambda1, lambda2=cfg.lambda2,
                     lambda3=cfg.lambda3, fill=cfg.fill, counts=counts)
        ref = min(ref, qb.energy(q, labels_to_bits(problem.ground_truth, problem.d)))
    return ref


def _cell_stem(cell: _Cell) -> str:
    return f"c{cell.config}-r{cell.noise_index}-i{cell.instance}"


def run_cell(cell: _Cell, cfg: SweepConfig) -> list[SweepResult]:
    problem = cell.problem
    rows = []
    outdir = Path(cfg.out) if cfg.out and cfg.persist else None
    if outdir is not None:
        (outdir / "problems").mkdir(parents=True, exist_ok=True)
        (outdir / "samples").mkdir(parents=True, exist_ok=True)
        problem.save(outdir / "problems" / f"{_cell_stem(cell)}.json")
    for si, solver in enumerate(cfg.solvers):
        seed = derive_seed(cfg.seed, cell.config, cell.noise_index, cell.instance, si)
        row = SweepResult(cell.config, problem.n, problem.d, cell.instance, solver,
                          "v2" if solver.startswith("v2") else "v1", problem.k, cell.noise, seed)
        t0 = time.perf_counter()
        try:
            y, e, ss, variant = solve_one(problem, solver, cfg, seed)
            counts = None
            if variant == "v2":
                counts = all_motion_counts(problem.ground_truth, problem.d)
            rep = evaluate(y, problem, energy=e, counts=counts)
            row.variant = variant
            row.energy = e
            row.feasible = rep.feasible
            row.row_violations = rep.row_violations
            if rep.accuracy_raw is not None:
                row.accuracy_raw = rep.accuracy_raw
                row.accuracy_aligned = rep.accuracy_aligned
            if ss is not None and ss.solver != "brute":
                row.success_probability = success_probability(
                    ss, _reference_energy(problem, ss, cfg, variant))
            if outdir is not None and ss is not None:
                ss.save(outdir / "samples" / f"{_cell_stem(cell)}-{solver}.json")
        except Exception as exc:  # recorded per row; the sweep carries on
            log.warning("cell %s solver %s failed: %s", _cell_stem(cell), solver, exc)
            row.error = f"{type(exc).__name__}: {exc}"
        row.wall_time_ms = (time.perf_counter() - t0) * 1e3 if cfg.timing else 0.0
        rows.append(row)
    return rows


def _run_cell_star(args):
    return run_cell(*args)


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> list[SweepResult]:
    """All rows in canonical (config, noise, instance, solver) order."""
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    cells = list(_cells(cfg))
    if workers <= 1:
        chunks = [run_cell(c, cfg) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_run_cell_star, [(c, cfg) for c in cells]))
    rows = [r for chunk in chunks for r in chunk]
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(rows, out / "rows.csv")
        write_summary(summarize(rows), out / "summary.csv")
    return rows


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v


def write_rows(rows: list[SweepResult], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(v) for v in astuple(r)])


def read_rows(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


SUMMARY_COLUMNS = ("config", "n", "d", "qubits", "noise", "solver", "count",
                   "acc_raw", "std_raw", "acc_aligned", "std_aligned",
                   "feasible_rate", "success_probability", "errors")


def _mean_std(vals):
    vals = np.array([v for v in vals if not math.isnan(v)], dtype=np.float64)
    if vals.size == 0:
        return math.nan, math.nan
    return float(vals.mean()), float(vals.std())


def summarize(rows: list[SweepResult]) -> list[dict]:
    """Mean and population std of the accuracies per (config, noise, solver) cell."""
    groups: dict[tuple, list[SweepResult]] = {}
    for r in rows:
        groups.setdefault((r.config, r.noise, r.solver), []).append(r)
    out = []
    for (c, rho, solver), rs in groups.items():
        ok = [r for r in rs if not r.error]
        acc, sd = _mean_std([r.accuracy_raw for r in ok])
        acc_a, sd_a = _mean_std([r.accuracy_aligned for r in ok])
        sp, _ = _mean_std([r.success_probability for r in ok])
        out.append({
            "config": c, "n": rs[0].n, "d": rs[0].d, "qubits": rs[0].qubits, "noise": rho,
            "solver": solver, "count": len(ok),
            "acc_raw": acc, "std_raw": sd, "acc_aligned": acc_a, "std_aligned": sd_a,
            "feasible_rate": float(np.mean([r.feasible for r in ok])) if ok else math.nan,
            "success_probability": sp, "errors": len(rs) - len(ok),
        })
    return out


def write_summary(summary: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for s in summary:
            w.writerow([_fmt(s[c]) for c in SUMMARY_COLUMNS])
