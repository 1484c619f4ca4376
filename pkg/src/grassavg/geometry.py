"""Points, tangents, geodesics and exp/log maps on the Grassmannian Gr(K, D).

A point is stored as an orthonormal D x K basis; every function here depends
only on the span, so results are invariant to ``basis @ R`` for orthogonal R.
Tangent vectors are horizontal lifts: D x K matrices with ``basis.T @ mat = 0``
whose Frobenius norm is the Riemannian norm.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (DimensionMismatch, GeodesicUndefined, InvalidInput,
                     NotHorizontal, NumericalDrift)
from .linalg import DRIFT_TOL, ORTH_TOL, as_matrix, qr_orthonormalize

HORIZONTAL_TOL = 1e-8
EXP_HORIZONTAL_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class GrassmannPoint:
    basis: np.ndarray

    def __post_init__(self):
        b = as_matrix(self.basis, "basis")
        d, k = b.shape
        if not 1 <= k < d:
            raise InvalidInput(f"need 1 <= K < D, got K={k}, D={d}")
        err = np.abs(b.T @ b - np.eye(k)).max()
        if err > ORTH_TOL:
            raise InvalidInput(f"basis is not orthonormal (max error {err:.2e})")
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)

    @classmethod
    def from_span(cls, a):
        """Point spanned by the columns of an arbitrary full-rank matrix."""
        return cls(qr_orthonormalize(a))

    @property
    def dim_ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim_subspace(self) -> int:
        return self.basis.shape[1]

    @property
    def shape(self):
        return self.basis.shape

    def projector(self):
        return self.basis @ self.basis.T


@dataclass(frozen=True, eq=False)
class TangentVector:
    at: GrassmannPoint
    mat: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.mat, "tangent")
        if m.shape != self.at.shape:
            raise DimensionMismatch(f"tangent shape {m.shape} != point shape {self.at.shape}")
        off = np.abs(self.at.basis.T @ m).max()
        if off > HORIZONTAL_TOL * max(1.0, np.linalg.norm(m)):
            raise NotHorizontal(f"tangent is not horizontal (|X^T V| = {off:.2e})")
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)

    def norm(self) -> float:
        return float(np.linalg.norm(self.mat))

    def __mul__(self, c):
        return TangentVector(self.at, self.mat * float(c))

    __rmul__ = __mul__


def _check_pair(x, y):
    if x.shape != y.shape:
        raise DimensionMismatch(f"points live in different Grassmannians: {x.shape} vs {y.shape}")


def ball_radius(k: int) -> float:
    """Radius of a regular geodesic ball: pi/2 on projective space, pi/(2 sqrt 2) otherwise."""
    return np.pi / 2 if k == 1 else np.pi / (2 * np.sqrt(2))


def principal_angles(x: GrassmannPoint, y: GrassmannPoint) -> np.ndarray:
    """Principal angles between two subspaces in nondecreasing order."""
    _check_pair(x, y)
    angles, s = kernels.principal_angles_core(x.basis, y.basis)
    if s.min() < -DRIFT_TOL or s.max() > 1.0 + DRIFT_TOL:
        raise NumericalDrift(f"cosines {s} drifted outside [0, 1]")
    return angles


def geodesic_distance(x: GrassmannPoint, y: GrassmannPoint) -> float:
    a = principal_angles(x, y)
    return float(np.sqrt(np.sum(a * a)))


def geodesic_point(x: GrassmannPoint, y: GrassmannPoint, t: float) -> GrassmannPoint:
    """Point at fraction ``t`` of the geodesic from x (t=0) to y (t=1)."""
    _check_pair(x, y)
    if not 0.0 <= t <= 1.0:
        raise InvalidInput(f"t must lie in [0, 1], got {t}")
    q, ok, _ = kernels.geodesic_core(x.basis, y.basis, float(t))
    if not ok:
        raise GeodesicUndefined("a principal angle is pi/2; the geodesic is not unique")
    return GrassmannPoint(q)


def log_map(x: GrassmannPoint, y: GrassmannPoint) -> TangentVector:
    """Inverse exponential map: the horizontal tangent at x pointing to y."""
    _check_pair(x, y)
    mat, ok = kernels.log_core(x.basis, y.basis)
    if not ok:
        raise GeodesicUndefined("a principal angle is pi/2; log map undefined")
    return TangentVector(x, mat)


def exp_map(x: GrassmannPoint, v) -> GrassmannPoint:
    """Exponential map at x. ``v`` is a TangentVector at x or a raw D x K matrix."""
    if isinstance(v, TangentVector):
        if v.at is not x:
            _check_pair(x, v.at)
            if geodesic_distance(x, v.at) > 1e-8:
                raise InvalidInput("tangent vector is attached to a different point")
        mat = v.mat
    else:
        mat = as_matrix(v, "tangent")
        if mat.shape != x.shape:
            raise DimensionMismatch(f"tangent shape {mat.shape} != point shape {x.shape}")
    off = np.abs(x.basis.T @ mat).max()
    if off > EXP_HORIZONTAL_TOL * max(1.0, np.linalg.norm(mat)):
        raise NotHorizontal(f"tangent is not horizontal (|X^T V| = {off:.2e})")
    return GrassmannPoint(kernels.exp_core(x.basis, np.ascontiguousarray(mat)))


def in_regular_ball(points, center: GrassmannPoint):
    """Return (inside, max_distance) for the regular ball around ``center``."""
    radius = ball_radius(center.dim_subspace)
    dmax = 0.0
    for p in points:
        dmax = max(dmax, geodesic_distance(center, p))
    return bool(dmax < radius), dmax


def project_horizontal(x: GrassmannPoint, a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a - x.basis @ (x.basis.T @ a)


def random_point(d: int, k: int, rng) -> GrassmannPoint:
    return GrassmannPoint(qr_orthonormalize(rng.standard_normal((d, k))))


def random_tangent(x: GrassmannPoint, rng, norm: float = 1.0) -> TangentVector:
    """Uniformly oriented horizontal tangent at x with the given Frobenius norm."""
    a = project_horizontal(x, rng.standard_normal(x.shape))
    return TangentVector(x, a * (norm / np.linalg.norm(a)))


def random_cloud(center: GrassmannPoint, n: int, radius: float, rng):
    """``n`` points at geodesic distance uniform in [0, radius) from ``center``.

    Exact distances hold while radius < pi/2, since the exp map is then
    injective along each ray.
    """
    return [exp_map(center, random_tangent(center, rng, radius * rng.random()))
            for _ in range(n)]
