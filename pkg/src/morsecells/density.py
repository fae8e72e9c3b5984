"""Gaussian kernel density estimation and the differentiable scalar-field interface.

Every solver in the package (mean-shift ascent, band evolution, sheet
relaxation) consumes a ``DensityField``.  The concrete estimator is an
isotropic Gaussian KDE over a point cloud; analytic fields can implement the
same interface for testing solvers against known geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NoMassError


@dataclass(frozen=True)
class PointCloud:
    """Finite set of points in R^n, stored as an (m, n) array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidInputError("point cloud must be a non-empty (m, n) array")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


class DensityField:
    """Differentiable scalar field on R^n.

    ``gradient`` must be the true derivative of ``value`` (finite-difference
    checkable).  Implementations are immutable and safe to query concurrently.
    """

    dimension: int

    def value(self, y: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # Batched variants; subclasses override when they can vectorize.
    def value_batch(self, ys: np.ndarray) -> np.ndarray:
        return np.array([self.value(y) for y in np.asarray(ys, dtype=float)])

    def gradient_batch(self, ys: np.ndarray) -> np.ndarray:
        return np.array([self.gradient(y) for y in np.asarray(ys, dtype=float)])

    def _check_query(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dimension,):
            raise InvalidInputError(
                f"query has shape {y.shape}, field dimension is {self.dimension}"
            )
        return y


def gradient_constant(n: int, sigma: float) -> float:
    """Reciprocal of the maximum gradient norm of the isotropic Gaussian kernel.

    c = (sigma * sqrt(2*pi))^n * sqrt(e); the supremum of ||grad psi_{0,sigma}||
    is attained at radius sigma.
    """
    if n < 1 or sigma <= 0:
        raise InvalidInputError("need n >= 1 and sigma > 0")
    return (sigma * math.sqrt(2.0 * math.pi)) ** n * math.sqrt(math.e)


@dataclass(frozen=True)
class KernelDensity(DensityField):
    """Mean of isotropic Gaussian kernels centered at the cloud points.

    f(y) = |X|^-1 sum_x (2 pi sigma^2)^(-n/2) exp(-||y - x||^2 / (2 sigma^2))
    """

    cloud: PointCloud
    sigma: float
    dimension: int = field(init=False)

    def __post_init__(self):
        if self.sigma <= 0:
            raise InvalidInputError("sigma must be positive")
        object.__setattr__(self, "dimension", self.cloud.dimension)

    def _sq_dists(self, ys: np.ndarray) -> np.ndarray:
        # (q, m) squared distances from queries to cloud points
        diff = ys[:, None, :] - self.cloud.points[None, :, :]
        return np.einsum("qmn,qmn->qm", diff, diff)

    @property
    def _norm_const(self) -> float:
        n = self.dimension
        return (2.0 * math.pi * self.sigma**2) ** (-n / 2.0)

    def value(self, y: np.ndarray) -> float:
        y = self._check_query(y)
        return float(self.value_batch(y[None, :])[0])

    def value_batch(self, ys: np.ndarray) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        w = np.exp(-self._sq_dists(ys) / (2.0 * self.sigma**2))
        return self._norm_const * w.mean(axis=1)

    def gradient(self, y: np.ndarray) -> np.ndarray:
        y = self._check_query(y)
        return self.gradient_batch(y[None, :])[0]

    def gradient_batch(self, ys: np.ndarray) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        w = np.exp(-self._sq_dists(ys) / (2.0 * self.sigma**2))
        # d/dy of each kernel is psi * (x - y) / sigma^2
        diff = self.cloud.points[None, :, :] - ys[:, None, :]
        grad = np.einsum("qm,qmn->qn", w, diff)
        return self._norm_const * grad / (len(self.cloud) * self.sigma**2)

    def mean_shift(self, y: np.ndarray) -> np.ndarray:
        """Kernel-weighted average of the cloud at y.

        m(y) - y is proportional to grad f(y) / f(y); iterating y <- m(y)
        ascends to a local maximum.  Raises NoMassError when every kernel
        weight underflows to zero in double precision.
        """
        y = self._check_query(y)
        sq = self._sq_dists(y[None, :])[0]
        raw = np.exp(-sq / (2.0 * self.sigma**2))
        if raw.sum() == 0.0:
            raise NoMassError("all kernel weights underflowed at the query point")
        # Shift by the nearest point for numerical headroom; ratios are unchanged.
        w = np.exp(-(sq - sq.min()) / (2.0 * self.sigma**2))
        return w @ self.cloud.points / w.sum()
