"""Synch-like baseline: relax the segmentation to real values, then round by k-means.

This approximates a spectral synchronization method; the rounding step is a
joint k-means on the eigen-embedding and is not claimed to match any
published implementation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans

from .problem import Labeling, MotionProblem, assemble_block_z


class DegenerateInputError(ValueError):
    """Too few distinct embedding rows, or the eigen-solver failed."""


@dataclass(frozen=True)
class SpectralParams:
    d: int
    restarts: int = 10
    max_iter: int = 300
    seed: int = 0
    normalized: bool = False

    def __post_init__(self):
        if self.d < 1 or self.restarts < 1 or self.max_iter < 1:
            raise ValueError("d, restarts and max_iter must be >= 1")


def kmeans(rows: np.ndarray, d: int, params: SpectralParams) -> np.ndarray:
    """Lloyd k-means from random initial centroids, best of ``params.restarts`` runs."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[:, None]
    if len(np.unique(np.round(rows, 12), axis=0)) < d:
        raise DegenerateInputError(f"fewer than {d} distinct rows to cluster")
    if d == 1:
        return np.zeros(len(rows), dtype=np.int64)
    km = KMeans(n_clusters=d, init="random", n_init=params.restarts,
                max_iter=params.max_iter, random_state=params.seed)
    return km.fit_predict(rows).astype(np.int64)


def spectral_segment(problem: MotionProblem, params: SpectralParams | None = None) -> Labeling:
    params = params or SpectralParams(problem.d)
    z = assemble_block_z(problem).astype(np.float64)
    if params.normalized:
        deg = z.sum(axis=1)
        scale = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
        z = scale[:, None] * z * scale[None, :]
    try:
        _, vecs = np.linalg.eigh(z)
    except np.linalg.LinAlgError as exc:
        raise DegenerateInputError(f"eigendecomposition failed: {exc}") from exc
    emb = vecs[:, -params.d:]
    return problem.split(kmeans(emb, params.d, params))
