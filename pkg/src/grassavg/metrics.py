"""Subspace quality measures."""
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidInput
from .geometry import GrassmannPoint, geodesic_distance
from .linalg import as_matrix

EV_SLACK = 1e-9


class DegenerateTruth(InvalidInput):
    pass


@dataclass(frozen=True)
class MetricsReport:
    expressed_variance: float
    reconstruction_error: float
    subspace_error: float
    wall_time: float
    samples: int

    def to_dict(self):
        return asdict(self)


def _basis(p):
    return p.basis if isinstance(p, GrassmannPoint) else as_matrix(p, "basis")


def _data(data, d):
    data = as_matrix(data, "data")
    if data.shape[1] != d:
        raise DimensionMismatch(f"data has {data.shape[1]} columns, subspace lives in R^{d}")
    return data


def captured_variance(data, est) -> float:
    """sum_n ||V^T x_n||^2 for an orthonormal basis V of ``est``."""
    v = _basis(est)
    return float(np.sum((_data(data, v.shape[0]) @ v) ** 2))


def expressed_variance(data, est, truth) -> float:
    """Variance captured by ``est`` relative to the variance captured by ``truth``."""
    den = captured_variance(data, truth)
    if den <= 1e-12:
        raise DegenerateTruth("reference subspace captures no variance of the data")
    return captured_variance(data, est) / den


def residual_norms(data, est) -> np.ndarray:
    """Per-sample squared residuals ||x_n - V V^T x_n||^2."""
    v = _basis(est)
    data = _data(data, v.shape[0])
    r = data - (data @ v) @ v.T
    return np.einsum("ij,ij->i", r, r)


def reconstruction_error(data, est) -> float:
    return float(residual_norms(data, est).mean())


def subspace_error(est: GrassmannPoint, truth: GrassmannPoint) -> float:
    return geodesic_distance(est, truth)


def report(data, est, truth, wall_time=0.0, samples=0) -> MetricsReport:
    return MetricsReport(
        expressed_variance=expressed_variance(data, est, truth),
        reconstruction_error=reconstruction_error(data, est),
        subspace_error=subspace_error(est, truth),
        wall_time=float(wall_time),
        samples=int(samples),
    )
