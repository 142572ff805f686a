"""Compile a :class:`MotionProblem` into a penalized QUBO.

Two formulations are provided. ``build_v1`` uses the dense objective
``-I_d kron (2Z - 1)`` with the one-motion-per-point constraint as a penalty.
``build_v2`` uses the sparse objective ``-I_d kron Z`` and additionally
penalizes deviations from known per-image motion counts.

Energies are ``y^T Q y + s^T y + c`` over binary ``y`` in the layout of
:mod:`motionqubo.problem`. The constant ``c`` is kept so energies of feasible
assignments relate to the consistency error by a fixed instance constant.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .problem import MotionProblem, ProblemError, assemble_block_z

SYNTHETIC_WEIGHTS = {"lambda1": 14.0, "lambda2": 27.5, "lambda3": 3.2}
DATASET_WEIGHTS = {"lambda1": 10.0, "lambda2": 10.0, "lambda3": 4.0}

FILL_MODES = ("zeroed", "literal")


@dataclass(frozen=True)
class LinearSystem:
    rows: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rhs.shape != (self.rows.shape[0],):
            raise ValueError("rows must be 2-D and rhs must have one entry per row")

    @property
    def k(self) -> int:
        return self.rows.shape[1]

    def residual(self, y) -> np.ndarray:
        return self.rows @ np.asarray(y) - self.rhs


@dataclass(frozen=True)
class QuboInstance:
    quadratic: np.ndarray
    linear: np.ndarray
    offset: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        q = np.array(self.quadratic, dtype=np.float64)
        s = np.array(self.linear, dtype=np.float64).reshape(-1)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or s.shape != (q.shape[0],):
            raise ValueError(f"inconsistent QUBO shapes {q.shape} and {s.shape}")
        if not np.array_equal(q, q.T):
            raise ValueError("quadratic matrix must be symmetric")
        q.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "quadratic", q)
        object.__setattr__(self, "linear", s)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def k(self) -> int:
        return self.quadratic.shape[0]

    def to_dict(self) -> dict:
        iu, ju = np.triu_indices(self.k)
        vals = self.quadratic[iu, ju]
        nz = vals != 0
        return {
            "k": self.k,
            "quadratic_upper": [
                [int(a), int(b), float(v)] for a, b, v in zip(iu[nz], ju[nz], vals[nz])
            ],
            "linear": self.linear.tolist(),
            "offset": self.offset,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuboInstance":
        k = int(data["k"])
        q = np.zeros((k, k))
        for a, b, v in data["quadratic_upper"]:
            a, b = int(a), int(b)
            if a > b:
                raise ValueError("quadratic_upper entries must have i <= j")
            q[a, b] = v
            q[b, a] = v
        return cls(q, np.array(data["linear"], dtype=np.float64), data.get("offset", 0.0),
                   dict(data.get("meta", {})))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "QuboInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_row_constraints(problem: MotionProblem) -> LinearSystem:
    """``A y = 1_p`` with ``A = 1_d^T kron I_p``: every point takes exactly one motion."""
    rows = np.kron(np.ones((1, problem.d), dtype=np.int64), np.eye(problem.p, dtype=np.int64))
    return LinearSystem(rows, np.ones(problem.p, dtype=np.int64))


def _check_counts(problem: MotionProblem, counts) -> np.ndarray:
    if counts is None:
        raise ProblemError("motion counts are required")
    m = np.array(counts, dtype=np.int64)
    if m.shape != (problem.n, problem.d):
        raise ProblemError(f"counts must have shape {(problem.n, problem.d)}, got {m.shape}")
    if (m < 0).any() or not np.array_equal(m.sum(axis=1), problem.point_counts):
        raise ProblemError("each image's motion counts must be nonnegative and sum to p_i")
    return m


def build_count_constraints(problem: MotionProblem, counts) -> LinearSystem:
    """``E y = vect(M)`` with ``E = I_d kron K``; row ``k * n + i`` counts motion ``k`` in image ``i``."""
    m = _check_counts(problem, counts)
    K = np.zeros((problem.n, problem.p), dtype=np.int64)
    for i in range(problem.n):
        K[i, problem.image_slice(i)] = 1
    rows = np.kron(np.eye(problem.d, dtype=np.int64), K)
    return LinearSystem(rows, m.T.reshape(-1))


def expand_penalty(system: LinearSystem, lam: float):
    """Quadratic, linear and constant parts of ``lam * ||A y - b||^2``."""
    if not lam > 0:
        raise ValueError("penalty weight must be positive")
    A, b = system.rows, system.rhs
    return lam * (A.T @ A), -2.0 * lam * (A.T @ b), lam * float(b @ b)


def signed_block_matrix(problem: MotionProblem, fill: str = "zeroed") -> np.ndarray:
    """``W = 2Z - 1`` on measured edge blocks; other blocks 0 (zeroed) or -1 (literal)."""
    if fill not in FILL_MODES:
        raise ValueError(f"fill must be one of {FILL_MODES}")
    if fill == "literal":
        w = -np.ones((problem.p, problem.p), dtype=np.int64)
    else:
        w = np.zeros((problem.p, problem.p), dtype=np.int64)
    for e in problem.edges:
        si, sj = problem.image_slice(e.i), problem.image_slice(e.j)
        w[si, sj] = 2 * e.z - 1
        w[sj, si] = (2 * e.z - 1).T
    return w


def v1_objective(problem: MotionProblem, fill: str = "zeroed") -> np.ndarray:
    """Integer matrix ``-I_d kron W`` (the unpenalized v1 quadratic term)."""
    return -np.kron(np.eye(problem.d, dtype=np.int64), signed_block_matrix(problem, fill))


def v2_objective(problem: MotionProblem) -> np.ndarray:
    """Integer matrix ``-I_d kron Z`` (the unpenalized v2 quadratic term)."""
    return -np.kron(np.eye(problem.d, dtype=np.int64), assemble_block_z(problem))


def build_v1(problem: MotionProblem, lambda1: float = SYNTHETIC_WEIGHTS["lambda1"],
             fill: str = "zeroed") -> QuboInstance:
    q, s, c = expand_penalty(build_row_constraints(problem), lambda1)
    meta = {"variant": "v1", "lambda1": float(lambda1), "fill": fill, "problem_id": problem.id}
    return QuboInstance(v1_objective(problem, fill) + q, s, c, meta)


def build_v2(problem: MotionProblem, lambda2: float = SYNTHETIC_WEIGHTS["lambda2"],
             lambda3: float = SYNTHETIC_WEIGHTS["lambda3"], counts=None) -> QuboInstance:
    q_rows, s_rows, c_rows = expand_penalty(build_row_constraints(problem), lambda2)
    q_cnt, s_cnt, c_cnt = expand_penalty(build_count_constraints(problem, counts), lambda3)
    meta = {
        "variant": "v2",
        "lambda2": float(lambda2),
        "lambda3": float(lambda3),
        "counts": np.asarray(counts).tolist(),
        "problem_id": problem.id,
    }
    return QuboInstance(v2_objective(problem) + q_rows + q_cnt, s_rows + s_cnt,
                        c_rows + c_cnt, meta)


def build(problem: MotionProblem, variant: str, *, lambda1=None, lambda2=None, lambda3=None,
          fill: str = "zeroed", counts=None) -> QuboInstance:
    """Dispatch on ``variant``; unset weights fall back to the synthetic defaults."""
    w = SYNTHETIC_WEIGHTS
    if variant == "v1":
        return build_v1(problem, w["lambda1"] if lambda1 is None else lambda1, fill)
    if variant == "v2":
        return build_v2(
            problem,
            w["lambda2"] if lambda2 is None else lambda2,
            w["lambda3"] if lambda3 is None else lambda3,
            counts,
        )
    raise ValueError(f"unknown variant {variant!r}")


def energy(qubo: QuboInstance, y) -> float:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != qubo.k:
        raise ValueError(f"assignment has length {y.size}, expected {qubo.k}")
    return float(y @ qubo.quadratic @ y + qubo.linear @ y + qubo.offset)


def energies(qubo: QuboInstance, ys) -> np.ndarray:
    """Row-wise energies of a ``(m, k)`` array of assignments."""
    ys = np.asarray(ys, dtype=np.float64)
    if ys.ndim != 2 or ys.shape[1] != qubo.k:
        raise ValueError(f"expected shape (m, {qubo.k}), got {ys.shape}")
    return np.einsum("ij,ij->i", ys @ qubo.quadratic, ys) + ys @ qubo.linear + qubo.offset


def fold_linear(qubo: QuboInstance) -> QuboInstance:
    """Move the linear part onto the diagonal (``y_i^2 = y_i`` on binaries)."""
    q = qubo.quadratic + np.diag(qubo.linear)
    return QuboInstance(q, np.zeros(qubo.k), qubo.offset, dict(qubo.meta))
