"""QUBO solvers: simulated annealing, exhaustive enumeration and a random floor.

All solvers return a :class:`SampleSet` whose rows are unique bitstrings
sorted by energy, ties broken by the lexicographically smaller bitstring.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .qubo import QuboInstance, energies

ENERGY_TOL = 1e-9
BRUTE_FORCE_MAX_K = 26


class SolverGuardError(RuntimeError):
    """A solver refused an instance (e.g. too many variables to enumerate)."""


@dataclass(frozen=True)
class SampleSet:
    bits: np.ndarray
    energies: np.ndarray
    counts: np.ndarray
    solver: str = ""
    seed: int | None = None
    reads: int = 0
    wall_time_ms: float = 0.0
    info: dict = field(default_factory=dict)

    @classmethod
    def from_reads(cls, bits, qubo: QuboInstance, *, aggregate=True, **kw) -> "SampleSet":
        """Evaluate, de-duplicate and canonically sort raw solver output."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[1] != qubo.k:
            raise ValueError(f"expected bit array of shape (m, {qubo.k})")
        if aggregate:
            bits, counts = np.unique(bits, axis=0, return_counts=True)
        else:
            order = np.lexsort(bits.T[::-1])
            bits, counts = bits[order], np.ones(len(bits), dtype=np.int64)
        e = energies(qubo, bits)
        # rows are lexicographically sorted here; a stable sort keeps that as the tie rule
        order = np.argsort(np.round(e, 9), kind="stable")
        return cls(bits[order], e[order], counts[order].astype(np.int64), **kw)

    def __len__(self):
        return len(self.energies)

    @property
    def samples(self):
        return [(b, float(e), int(c)) for b, e, c in zip(self.bits, self.energies, self.counts)]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "seed": self.seed,
            "reads": self.reads,
            "samples": [
                {"y": "".join(map(str, b.tolist())), "energy": float(e), "count": int(c)}
                for b, e, c in zip(self.bits, self.energies, self.counts)
            ],
            "wall_time_ms": self.wall_time_ms,
            "info": self.info,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SampleSet":
        rows = data["samples"]
        bits = np.array([[int(ch) for ch in r["y"]] for r in rows], dtype=np.uint8)
        return cls(
            bits.reshape(len(rows), -1),
            np.array([r["energy"] for r in rows], dtype=np.float64),
            np.array([r["count"] for r in rows], dtype=np.int64),
            data.get("solver", ""),
            data.get("seed"),
            int(data.get("reads", 0)),
            float(data.get("wall_time_ms", 0.0)),
            dict(data.get("info", {})),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "SampleSet":
        return cls.from_dict(json.loads(Path(path).read_text()))


def best_sample(sampleset: SampleSet) -> np.ndarray:
    if len(sampleset) == 0:
        raise ValueError("empty sample set")
    return sampleset.bits[0].copy()


def success_probability(sampleset: SampleSet, reference_energy: float) -> float:
    """Fraction of reads (by multiplicity) whose energy is within tolerance of the reference."""
    if len(sampleset) == 0:
        raise ValueError("empty sample set")
    hit = sampleset.energies <= reference_energy + ENERGY_TOL
    return float(sampleset.counts[hit].sum() / sampleset.total)


def brute_force(qubo: QuboInstance, keep: int | None = None, chunk_bits: int = 16) -> SampleSet:
    """Enumerate all ``2**k`` bitstrings; the first row is the certified global minimum."""
    k = qubo.k
    if k > BRUTE_FORCE_MAX_K:
        raise SolverGuardError(f"brute force refuses k={k} > {BRUTE_FORCE_MAX_K}")
    t0 = time.perf_counter()
    total = 1 << k
    step = 1 << min(k, chunk_bits)
    # bit t of state index s is the (k-1-t)-th binary digit, so index order is lexicographic
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    parts_bits, parts_e = [], []
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total), dtype=np.int64)
        bits = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
        e = energies(qubo, bits)
        if keep is not None:
            if parts_bits:
                bits, e = np.concatenate([parts_bits[0], bits]), np.concatenate([parts_e[0], e])
            sel = np.sort(np.argsort(np.round(e, 9), kind="stable")[:keep])
            parts_bits, parts_e = [bits[sel]], [e[sel]]
        else:
            parts_bits.append(bits)
            parts_e.append(e)
    bits = np.concatenate(parts_bits)
    ss = SampleSet.from_reads(bits, qubo, aggregate=False, solver="brute", reads=len(bits))
    return _timed(ss, t0)


def _timed(ss: SampleSet, t0: float) -> SampleSet:
    return SampleSet(ss.bits, ss.energies, ss.counts, ss.solver, ss.seed, ss.reads,
                     (time.perf_counter() - t0) * 1e3, ss.info)


@dataclass(frozen=True)
class AnnealParams:
    """Simulated annealing settings.

    ``initial_temp``/``final_temp`` of ``None`` are set automatically from a
    probe of random single flips. An explicit ``schedule`` (one temperature
    per sweep, non-increasing, zero allowed) overrides both and ``sweeps``.
    """

    reads: int = 1000
    sweeps: int = 64
    initial_temp: float | None = None
    final_temp: float | None = None
    seed: int = 0
    schedule: tuple[float, ...] | None = None
    probe_flips: int = 100

    def __post_init__(self):
        if self.reads < 1 or self.sweeps < 1:
            raise ValueError("reads and sweeps must be >= 1")
        for t in (self.initial_temp, self.final_temp):
            if t is not None and not t > 0:
                raise ValueError("temperatures must be positive")
        if (self.initial_temp is not None and self.final_temp is not None
                and self.final_temp > self.initial_temp):
            raise ValueError("temperature schedule must be decreasing")
        if self.schedule is not None:
            s = tuple(float(t) for t in self.schedule)
            if not s or min(s) < 0 or any(b > a for a, b in zip(s, s[1:])):
                raise ValueError("schedule must be nonempty, nonnegative and non-increasing")
            object.__setattr__(self, "schedule", s)


def _probe_deltas(qubo: QuboInstance, flips: int, rng: np.random.Generator) -> np.ndarray:
    k = qubo.k
    x = rng.integers(0, 2, size=(flips, k)).astype(np.float64)
    t = rng.integers(0, k, size=flips)
    s = 1.0 - 2.0 * x[np.arange(flips), t]
    g = np.einsum("ij,ij->i", x, qubo.quadratic[t])
    return s * (2.0 * g + qubo.linear[t]) + qubo.quadratic[t, t]


def temperature_schedule(qubo: QuboInstance, params: AnnealParams) -> np.ndarray:
    """Geometric schedule from ``initial_temp`` down to ``final_temp`` over ``sweeps`` steps.

    Automatic ends: the hot end is the largest probed ``|dE|``; the cold end
    accepts the smallest nonzero probed ``|dE|`` with probability 0.01.
    """
    if params.schedule is not None:
        return np.array(params.schedule, dtype=np.float64)
    t_hot, t_cold = params.initial_temp, params.final_temp
    if t_hot is None or t_cold is None:
        rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(1,)))
        dE = np.abs(_probe_deltas(qubo, params.probe_flips, rng)) if qubo.k else np.zeros(0)
        nz = dE[dE > ENERGY_TOL]
        hot = float(nz.max()) if nz.size else 1.0
        cold = float(nz.min()) / math.log(100.0) if nz.size else 1.0
        t_hot = hot if t_hot is None else t_hot
        t_cold = cold if t_cold is None else t_cold
        t_cold = min(t_cold, t_hot)
    if params.sweeps == 1:
        return np.array([t_cold])
    return np.geomspace(t_hot, t_cold, params.sweeps)


def read_seeds(seed: int, reads: int) -> np.ndarray:
    """Per-read 32-bit seeds; read ``r`` gets the same seed whatever the total read count."""
    return np.array(
        [np.random.SeedSequence(seed, spawn_key=(0, r)).generate_state(1)[0] for r in range(reads)],
        dtype=np.uint32,
    )


@numba.njit(cache=True)
def _anneal(Q, h, seeds, temps, out):
    k = Q.shape[0]
    for r in range(seeds.shape[0]):
        np.random.seed(seeds[r])
        x = np.empty(k, dtype=np.float64)
        for t in range(k):
            x[t] = 1.0 if np.random.random() < 0.5 else 0.0
        g = Q @ x
        for T in temps:
            for t in range(k):
                s = 1.0 - 2.0 * x[t]
                dE = s * (2.0 * g[t] + h[t]) + Q[t, t]
                if dE > 0.0:
                    if T <= 0.0 or np.random.random() >= math.exp(-dE / T):
                        continue
                x[t] += s
                for u in range(k):
                    g[u] += s * Q[u, t]
        for t in range(k):
            out[r, t] = np.uint8(x[t])


def simulated_annealing(qubo: QuboInstance, params: AnnealParams | None = None) -> SampleSet:
    """Single-flip Metropolis annealing, one returned state per read."""
    params = params or AnnealParams()
    t0 = time.perf_counter()
    temps = temperature_schedule(qubo, params)
    out = np.zeros((params.reads, qubo.k), dtype=np.uint8)
    if qubo.k:
        _anneal(np.ascontiguousarray(qubo.quadratic), np.ascontiguousarray(qubo.linear),
                read_seeds(params.seed, params.reads), temps, out)
    ss = SampleSet.from_reads(
        out, qubo, solver="sa", seed=params.seed, reads=params.reads,
        info={"sweeps": len(temps), "t_hot": float(temps[0]), "t_cold": float(temps[-1])},
    )
    return _timed(ss, t0)


def random_sampler(qubo: QuboInstance, reads: int = 1000, seed: int = 0) -> SampleSet:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(reads, qubo.k), dtype=np.uint8)
    return _timed(SampleSet.from_reads(bits, qubo, solver="random", seed=seed, reads=reads), t0)
