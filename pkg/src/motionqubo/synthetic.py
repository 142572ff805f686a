"""Synthetic instances with label-switching noise on the pairwise segmentations."""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import asdict, dataclass

import numpy as np

from .problem import Labeling, MotionProblem, PartialSegmentation, ProblemError, relative_from_absolute

NOISE_SIDES = ("both", "one")


@dataclass(frozen=True)
class SyntheticConfig:
    n: int = 3
    d: int = 2
    points: int | tuple[int, ...] = 16
    motion_counts: tuple[tuple[int, ...], ...] | None = None
    noise: float = 0.0
    complete: bool = True
    edges: tuple[tuple[int, int], ...] | None = None
    seed: int = 0
    noise_side: str = "both"

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ProblemError("n and d must be >= 1")
        if not 0.0 <= self.noise <= 1.0:
            raise ProblemError("noise fraction must lie in [0, 1]")
        if self.noise_side not in NOISE_SIDES:
            raise ProblemError(f"noise_side must be one of {NOISE_SIDES}")
        if isinstance(self.points, (list, tuple)):
            object.__setattr__(self, "points", tuple(int(c) for c in self.points))
        if self.motion_counts is not None:
            object.__setattr__(
                self, "motion_counts", tuple(tuple(int(c) for c in m) for m in self.motion_counts)
            )
        if self.edges is not None:
            object.__setattr__(self, "edges", tuple((int(i), int(j)) for i, j in self.edges))
        if any(c < 1 for c in self.point_counts):
            raise ProblemError("point counts must be positive")

    @property
    def point_counts(self) -> tuple[int, ...]:
        if self.motion_counts is not None:
            return tuple(sum(m) for m in self.motion_counts)
        if isinstance(self.points, tuple):
            if len(self.points) != self.n:
                raise ProblemError(f"need {self.n} point counts, got {len(self.points)}")
            return self.points
        return (int(self.points),) * self.n

    def edge_list(self) -> list[tuple[int, int]]:
        if self.edges is not None:
            return sorted(self.edges)
        if self.complete:
            return list(itertools.combinations(range(self.n), 2))
        # a path keeps the view graph connected without being complete
        return [(i, i + 1) for i in range(self.n - 1)]

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha1(blob.encode()).hexdigest()[:10]


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def generate_ground_truth(config: SyntheticConfig, instance: int = 0) -> MotionProblem:
    """Noiseless instance: random labels, every edge built exactly from them."""
    pc = config.point_counts
    rng = _rng(config.seed, instance, 0)
    labels = []
    if config.motion_counts is not None:
        for m in config.motion_counts:
            if len(m) != config.d:
                raise ProblemError(f"motion counts {m} do not have d={config.d} entries")
            labels.append(rng.permutation(np.repeat(np.arange(config.d), m)))
    else:
        for p_i in pc:
            labels.append(rng.integers(0, config.d, size=p_i))
    gt = Labeling(tuple(labels))
    edges = [PartialSegmentation(i, j, relative_from_absolute(gt, i, j)) for i, j in config.edge_list()]
    return MotionProblem(config.n, config.d, pc, tuple(edges), gt,
                         f"{config.digest()}-{instance}", config.seed)


def _corrupt(labels: np.ndarray, count: int, d: int, rng: np.random.Generator) -> np.ndarray:
    out = labels.copy()
    if count == 0 or d < 2:
        return out
    idx = rng.choice(labels.size, size=count, replace=False)
    # shift by 1..d-1 so the new motion always differs from the old one
    out[idx] = (out[idx] + rng.integers(1, d, size=count)) % d
    return out


def _count(rho: float, size: int) -> int:
    # guard against products like 0.29 * 100 = 28.999...
    return int(np.floor(rho * size + 1e-9))


def inject_noise(problem: MotionProblem, rho: float, seed: int, side: str = "both") -> MotionProblem:
    """Re-derive every edge from locally corrupted copies of the ground-truth labels.

    For edge ``(i, j)`` the ``p_i + p_j`` local labels are copied, ``floor(rho * (p_i + p_j))``
    of them are reassigned to a different motion, and ``Z_ij`` is rebuilt. With
    ``side="one"`` only ``floor(rho * p_j)`` labels of image ``j`` are touched.
    Each edge draws from its own stream keyed by ``(seed, i, j)``.
    """
    if problem.ground_truth is None:
        raise ProblemError("noise injection needs ground truth")
    if not 0.0 <= rho <= 1.0:
        raise ProblemError("noise fraction must lie in [0, 1]")
    if side not in NOISE_SIDES:
        raise ProblemError(f"side must be one of {NOISE_SIDES}")
    gt = problem.ground_truth
    edges = []
    for e in problem.edges:
        rng = _rng(seed, 1, e.i, e.j)
        li, lj = gt.labels[e.i], gt.labels[e.j]
        if side == "both":
            joint = np.concatenate([li, lj])
            joint = _corrupt(joint, _count(rho, joint.size), problem.d, rng)
            li, lj = joint[: li.size], joint[li.size:]
        else:
            lj = _corrupt(lj, _count(rho, lj.size), problem.d, rng)
        edges.append(PartialSegmentation(e.i, e.j, (li[:, None] == lj[None, :]).astype(np.int64)))
    return problem.with_edges(edges)


def generate(config: SyntheticConfig, instance: int = 0) -> MotionProblem:
    """Ground truth followed by the configured noise."""
    problem = generate_ground_truth(config, instance)
    if config.noise == 0:
        return problem
    noise_seed = int(np.random.SeedSequence(config.seed, spawn_key=(instance, 1)).generate_state(1)[0])
    return inject_noise(problem, config.noise, noise_seed, config.noise_side)
