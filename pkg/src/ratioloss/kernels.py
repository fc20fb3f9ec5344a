"""Positive-definite kernels and Gram matrices."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

GRAM_JITTER = 1e-10


@dataclass(frozen=True)
class KernelSpec:
    """Kernel description: 'gaussian' (needs sigma) or 'polynomial'
    (needs integer degree >= 1; offset defaults to 1)."""

    kind: str
    sigma: Optional[float] = None
    degree: Optional[int] = None
    offset: float = 1.0

    def __post_init__(self):
        if self.kind == "gaussian":
            if self.sigma is None or self.sigma <= 0:
                raise ValueError("gaussian kernel needs sigma > 0")
        elif self.kind == "polynomial":
            if self.degree is None or int(self.degree) < 1:
                raise ValueError("polynomial kernel needs degree >= 1")
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")


def as_points(x) -> np.ndarray:
    """Coerce to an (n, d) float array; 1-d input becomes (n, 1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1)
    elif x.ndim != 2:
        raise ValueError("points must be at most 2-d")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    return x


def gram(spec: KernelSpec, x, y) -> np.ndarray:
    """Cross Gram matrix K[i, j] = k(x_i, y_j)."""
    x = as_points(x)
    y = as_points(y)
    if x.shape[1] != y.shape[1]:
        raise ValueError("point sets have mismatched dimensions")
    if spec.kind == "gaussian":
        sq = (np.sum(x ** 2, axis=1)[:, None] + np.sum(y ** 2, axis=1)[None, :]
              - 2.0 * (x @ y.T))
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * spec.sigma ** 2))
    return (spec.offset + x @ y.T) ** int(spec.degree)


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Single kernel evaluation between two points."""
    return float(gram(spec, np.atleast_1d(x), np.atleast_1d(y))[0, 0])


def median_heuristic(points) -> float:
    """Median pairwise Euclidean distance over all pairs i < j."""
    pts = as_points(points)
    n = pts.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    sq = (np.sum(pts ** 2, axis=1)[:, None] + np.sum(pts ** 2, axis=1)[None, :]
          - 2.0 * (pts @ pts.T))
    np.maximum(sq, 0.0, out=sq)
    iu = np.triu_indices(n, k=1)
    med = float(np.median(np.sqrt(sq[iu])))
    if med <= 0.0:
        raise ValueError("all points coincide; median distance is zero")
    return med
