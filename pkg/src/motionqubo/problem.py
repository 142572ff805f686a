"""Segmentation data model: relative/absolute segmentations and the bit layout.

Bit layout used everywhere in the package: the absolute segmentation is the
``p x d`` block matrix ``X`` (images stacked in order, points in per-image
order) and ``y = vect(X)`` stacks its columns, so the slot of global point
``a`` under motion ``k`` is ``k * p + a``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class ProblemError(ValueError):
    """Malformed problem data (bad indices, shapes, labels or counts)."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PartialSegmentation:
    """Relative segmentation of the image pair ``(i, j)``; ``z[h, k] = 1`` iff same motion."""

    i: int
    j: int
    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=np.int64)
        if z.ndim != 2:
            raise ProblemError(f"edge ({self.i},{self.j}): z must be 2-D")
        if not np.isin(z, (0, 1)).all():
            raise ProblemError(f"edge ({self.i},{self.j}): z entries must be 0 or 1")
        object.__setattr__(self, "z", _frozen(z))

    def __eq__(self, other):
        if not isinstance(other, PartialSegmentation):
            return NotImplemented
        return (self.i, self.j) == (other.i, other.j) and np.array_equal(self.z, other.z)

    def __hash__(self):
        return hash((self.i, self.j, self.z.tobytes()))


@dataclass(frozen=True)
class Labeling:
    """Absolute segmentation in label form: one motion index per point, per image."""

    labels: tuple

    def __post_init__(self):
        arrs = tuple(_frozen(np.array(l, dtype=np.int64).reshape(-1)) for l in self.labels)
        object.__setattr__(self, "labels", arrs)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def flat(self) -> np.ndarray:
        if not self.labels:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(self.labels)

    def check(self, d: int, point_counts: Sequence[int] | None = None) -> None:
        if point_counts is not None:
            if len(point_counts) != self.n:
                raise ProblemError(f"labeling has {self.n} images, expected {len(point_counts)}")
            for i, (l, p_i) in enumerate(zip(self.labels, point_counts)):
                if len(l) != p_i:
                    raise ProblemError(f"image {i}: {len(l)} labels, expected {p_i}")
        flat = self.flat
        if flat.size and (flat.min() < 0 or flat.max() >= d):
            raise ProblemError(f"labels must lie in [0, {d})")

    def to_list(self) -> list[list[int]]:
        return [l.tolist() for l in self.labels]

    def __eq__(self, other):
        if not isinstance(other, Labeling):
            return NotImplemented
        return self.n == other.n and all(
            np.array_equal(a, b) for a, b in zip(self.labels, other.labels)
        )

    def __hash__(self):
        return hash(tuple(tuple(l.tolist()) for l in self.labels))


@dataclass(frozen=True)
class InfeasibilityReport:
    """Returned by :func:`bits_to_labels` when some point does not have exactly one motion."""

    points: tuple[int, ...]
    row_sums: tuple[int, ...]

    def __bool__(self):
        return False


@dataclass(frozen=True)
class MotionProblem:
    n: int
    d: int
    point_counts: tuple[int, ...]
    edges: tuple[PartialSegmentation, ...] = ()
    ground_truth: Labeling | None = None
    id: str = ""
    seed: int | None = None
    _offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pc = tuple(int(c) for c in self.point_counts)
        object.__setattr__(self, "point_counts", pc)
        object.__setattr__(self, "edges", tuple(self.edges))
        if self.n < 1 or len(pc) != self.n:
            raise ProblemError(f"need n >= 1 and {self.n} point counts, got {len(pc)}")
        if self.d < 1:
            raise ProblemError("d must be >= 1")
        if any(c < 1 for c in pc):
            raise ProblemError("point counts must be positive")
        seen = set()
        for e in self.edges:
            if not (0 <= e.i < e.j < self.n):
                raise ProblemError(f"edge ({e.i},{e.j}) must satisfy 0 <= i < j < n")
            if (e.i, e.j) in seen:
                raise ProblemError(f"duplicate edge ({e.i},{e.j})")
            seen.add((e.i, e.j))
            if e.z.shape != (pc[e.i], pc[e.j]):
                raise ProblemError(
                    f"edge ({e.i},{e.j}): z has shape {e.z.shape}, expected {(pc[e.i], pc[e.j])}"
                )
        if self.ground_truth is not None:
            self.ground_truth.check(self.d, pc)
        object.__setattr__(self, "_offsets", _frozen(np.concatenate([[0], np.cumsum(pc)])))

    @property
    def p(self) -> int:
        return int(self._offsets[-1])

    @property
    def k(self) -> int:
        """Number of binary variables, ``d * p``."""
        return self.d * self.p

    def offset(self, i: int) -> int:
        return int(self._offsets[i])

    def image_slice(self, i: int) -> slice:
        return slice(int(self._offsets[i]), int(self._offsets[i + 1]))

    def edge(self, i: int, j: int) -> PartialSegmentation | None:
        for e in self.edges:
            if (e.i, e.j) == (i, j):
                return e
        return None

    def split(self, flat: np.ndarray) -> Labeling:
        return Labeling(tuple(flat[self.image_slice(i)] for i in range(self.n)))

    def with_edges(self, edges) -> "MotionProblem":
        return MotionProblem(
            self.n, self.d, self.point_counts, tuple(edges), self.ground_truth, self.id, self.seed
        )

    # JSON form

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "d": self.d,
            "point_counts": list(self.point_counts),
            "edges": [{"i": e.i, "j": e.j, "z": e.z.tolist()} for e in self.edges],
        }
        if self.ground_truth is not None:
            out["ground_truth"] = self.ground_truth.to_list()
        if self.id:
            out["id"] = self.id
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MotionProblem":
        try:
            n, d = int(data["n"]), int(data["d"])
            pc = [int(c) for c in data["point_counts"]]
            edges = []
            for e in data.get("edges", []):
                i, j = int(e["i"]), int(e["j"])
                if "z" in e:
                    z = np.array(e["z"], dtype=np.int64).reshape(pc[i], pc[j])
                else:
                    z = np.zeros((pc[i], pc[j]), dtype=np.int64)
                    for h, kk in e["z_ones"]:
                        z[h, kk] = 1
                edges.append(PartialSegmentation(i, j, z))
        except (KeyError, TypeError, IndexError) as exc:
            raise ProblemError(f"malformed problem data: {exc!r}") from exc
        except ValueError as exc:
            raise ProblemError(str(exc)) from exc
        gt = data.get("ground_truth")
        return cls(
            n,
            d,
            tuple(pc),
            tuple(edges),
            Labeling(tuple(gt)) if gt is not None else None,
            str(data.get("id", "")),
            data.get("seed"),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "MotionProblem":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ProblemError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)


def assemble_block_z(problem: MotionProblem) -> np.ndarray:
    """Symmetric ``p x p`` block matrix of all relative segmentations (zero diagonal blocks)."""
    z = np.zeros((problem.p, problem.p), dtype=np.int64)
    for e in problem.edges:
        si, sj = problem.image_slice(e.i), problem.image_slice(e.j)
        z[si, sj] = e.z
        z[sj, si] = e.z.T
    return z


def labels_to_bits(labeling: Labeling, d: int) -> np.ndarray:
    labeling.check(d)
    flat = labeling.flat
    p = flat.size
    y = np.zeros(d * p, dtype=np.int64)
    y[flat * p + np.arange(p)] = 1
    return y


def bits_to_labels(y, problem: MotionProblem) -> Labeling | InfeasibilityReport:
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.size != problem.k:
        raise ProblemError(f"bit vector has length {y.size}, expected {problem.k}")
    x = y.reshape(problem.d, problem.p).T
    sums = x.sum(axis=1)
    bad = np.flatnonzero(sums != 1)
    if bad.size:
        return InfeasibilityReport(tuple(bad.tolist()), tuple(sums[bad].tolist()))
    return problem.split(x.argmax(axis=1))


def relative_from_absolute(labeling: Labeling, i: int, j: int) -> np.ndarray:
    li, lj = labeling.labels[i], labeling.labels[j]
    return (li[:, None] == lj[None, :]).astype(np.int64)


def consistency_error(problem: MotionProblem, labeling: Labeling) -> int:
    """Sum over measured edges of the squared Frobenius gap ``||Z_ij - X_i X_j^T||^2``."""
    labeling.check(problem.d, problem.point_counts)
    total = 0
    for e in problem.edges:
        total += int(np.sum(e.z != relative_from_absolute(labeling, e.i, e.j)))
    return total


def motion_counts(labeling: Labeling, i: int, d: int) -> np.ndarray:
    return np.bincount(labeling.labels[i], minlength=d).astype(np.int64)


def all_motion_counts(labeling: Labeling, d: int) -> np.ndarray:
    """``n x d`` array whose row ``i`` is the per-motion point count of image ``i``."""
    return np.stack([motion_counts(labeling, i, d) for i in range(labeling.n)])


def absolute_matrix(labeling: Labeling, i: int, d: int) -> np.ndarray:
    """The ``p_i x d`` one-hot matrix ``X_i``."""
    li = labeling.labels[i]
    x = np.zeros((li.size, d), dtype=np.int64)
    x[np.arange(li.size), li] = 1
    return x
