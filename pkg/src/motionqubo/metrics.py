"""Accuracy of bit assignments against ground truth, and constraint diagnostics."""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from .problem import MotionProblem, labels_to_bits

MAX_ALIGN_D = 6


def _pair(y, y_gt, d: int, p: int):
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    y_gt = np.asarray(y_gt, dtype=np.int64).reshape(-1)
    if y.size != d * p or y_gt.size != d * p:
        raise ValueError(f"assignments must have length d*p = {d * p}")
    return y, y_gt


def accuracy(y, y_gt, d: int, p: int) -> float:
    """``1 - hamming(y, y_gt) / (d p)``: the fraction of matching bits."""
    y, y_gt = _pair(y, y_gt, d, p)
    return 1.0 - np.count_nonzero(y != y_gt) / (d * p)


def permute_motions(y, perm, p: int) -> np.ndarray:
    """Block ``k`` of the result is motion block ``perm[k]`` of ``y``."""
    blocks = np.asarray(y).reshape(len(perm), p)
    return blocks[list(perm)].reshape(-1)


def aligned_accuracy(y, y_gt, d: int, p: int) -> tuple[float, tuple[int, ...]]:
    """Best accuracy over all global relabelings of the motions.

    The synchronization solution is only defined up to such a relabeling.
    Ties go to the first permutation in lexicographic order.
    """
    if d > MAX_ALIGN_D:
        raise ValueError(f"alignment enumerates d! permutations; refusing d={d} > {MAX_ALIGN_D}")
    y, y_gt = _pair(y, y_gt, d, p)
    best, best_perm = -1.0, tuple(range(d))
    for perm in itertools.permutations(range(d)):
        acc = accuracy(permute_motions(y, perm, p), y_gt, d, p)
        if acc > best:
            best, best_perm = acc, perm
    return best, best_perm


@dataclass(frozen=True)
class Violations:
    row_violations: int
    bad_points: tuple[int, ...]
    count_deviations: np.ndarray | None = None

    @property
    def count_violations(self) -> int:
        if self.count_deviations is None:
            return 0
        return int(np.count_nonzero(self.count_deviations))

    @property
    def feasible(self) -> bool:
        return self.row_violations == 0 and self.count_violations == 0


def violations(y, problem: MotionProblem, counts=None) -> Violations:
    """Points whose motion slots do not sum to one, and ``|column sum - m_ik|`` per image/motion."""
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.size != problem.k:
        raise ValueError(f"assignment has length {y.size}, expected {problem.k}")
    x = y.reshape(problem.d, problem.p).T
    bad = np.flatnonzero(x.sum(axis=1) != 1)
    dev = None
    if counts is not None:
        m = np.asarray(counts, dtype=np.int64)
        cols = np.stack([x[problem.image_slice(i)].sum(axis=0) for i in range(problem.n)])
        dev = np.abs(cols - m)
    return Violations(int(bad.size), tuple(bad.tolist()), dev)


@dataclass(frozen=True)
class EvalReport:
    accuracy_raw: float | None
    accuracy_aligned: float | None
    permutation: tuple[int, ...] | None
    row_violations: int
    count_violations: int
    energy: float | None
    feasible: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.permutation is not None:
            out["permutation"] = list(self.permutation)
        return out


def evaluate(y, problem: MotionProblem, *, energy: float | None = None, counts=None) -> EvalReport:
    """Score ``y`` against the problem's ground truth (accuracies are ``None`` without one)."""
    v = violations(y, problem, counts)
    raw = aligned = perm = None
    if problem.ground_truth is not None:
        y_gt = labels_to_bits(problem.ground_truth, problem.d)
        raw = accuracy(y, y_gt, problem.d, problem.p)
        aligned, perm = aligned_accuracy(y, y_gt, problem.d, problem.p)
    return EvalReport(raw, aligned, perm, v.row_violations, v.count_violations, energy, v.feasible)
