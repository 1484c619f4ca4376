"""Fréchet mean and median on Gr(K, D): streaming recursions and batch oracles.

The streaming estimators are single-pass:

* `iga_update` walks a fraction 1/(k+1) of the geodesic from the current
  mean towards each new point.
* `median_update` buffers ``batch_size`` points and takes one stochastic
  gradient step on the sum of (unsquared) distances, with step 1/(k+1).

The batch routines are iterative fixed-point solvers used as references.
"""
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import BallViolation, DimensionMismatch, GeodesicUndefined, NoConvergence
from .geometry import GrassmannPoint, exp_map, geodesic_distance, geodesic_point, in_regular_ball, log_map


@dataclass(frozen=True)
class MeanState:
    current: GrassmannPoint
    count: int = 1
    skipped: int = 0

    @classmethod
    def first(cls, x: GrassmannPoint):
        return cls(current=x)


@dataclass(frozen=True)
class MedianState:
    current: GrassmannPoint
    count: int = 1
    buffer: tuple = ()
    batch_size: int = 5
    skipped: int = 0

    @classmethod
    def first(cls, x: GrassmannPoint, batch_size: int = 5):
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        return cls(current=x, batch_size=batch_size)


def _check(state, x):
    if x.shape != state.current.shape:
        raise DimensionMismatch(f"sample {x.shape} does not match estimate {state.current.shape}")


def iga_update(state: MeanState, x: GrassmannPoint) -> MeanState:
    """Absorb one point into the inductive mean.

    A point at principal angle pi/2 from the estimate has no unique geodesic;
    it is skipped and counted in ``state.skipped``.
    """
    _check(state, x)
    try:
        new = geodesic_point(state.current, x, 1.0 / (state.count + 1))
    except GeodesicUndefined:
        return replace(state, skipped=state.skipped + 1)
    return MeanState(new, state.count + 1, state.skipped)


def median_update(state: MedianState, x: GrassmannPoint) -> MedianState:
    _check(state, x)
    state = replace(state, buffer=state.buffer + (x,))
    if len(state.buffer) >= state.batch_size:
        state = median_flush(state)
    return state


def median_flush(state: MedianState) -> MedianState:
    """Take the gradient step for whatever is buffered (no-op when empty)."""
    if not state.buffer:
        return state
    buf = np.stack([p.basis for p in state.buffer])
    m, count, skipped = kernels.median_flush(state.current.basis, state.count, buf, len(buf))
    return MedianState(GrassmannPoint(m), count, (), state.batch_size, state.skipped + skipped)


def stream_mean(points) -> MeanState:
    it = iter(points)
    state = MeanState.first(next(it))
    for p in it:
        state = iga_update(state, p)
    return state


def stream_median(points, batch_size: int = 5) -> MedianState:
    it = iter(points)
    state = MedianState.first(next(it), batch_size)
    for p in it:
        state = median_update(state, p)
    return median_flush(state)


def _check_ball(points):
    inside, dmax = in_regular_ball(points, points[0])
    if not inside:
        raise BallViolation(f"points spread {dmax:.4f} from the first point exceeds the regular ball",
                            max_distance=dmax)


def karcher_gradient(m: GrassmannPoint, points) -> np.ndarray:
    """Mean of log maps at m: the negative Riemannian gradient of half the mean squared distance."""
    return sum(log_map(m, p).mat for p in points) / len(points)


def batch_karcher_mean(points, max_iter: int = 200, tol: float = 1e-9) -> GrassmannPoint:
    """Fréchet mean by the fixed-point iteration m <- Exp_m(mean_i Log_m(x_i))."""
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    _check_ball(points)
    m = points[0]
    gnorm = np.inf
    for _ in range(max_iter):
        g = karcher_gradient(m, points)
        gnorm = float(np.linalg.norm(g))
        if gnorm < tol:
            return m
        m = exp_map(m, g)
    raise NoConvergence(f"Karcher iteration stalled at gradient norm {gnorm:.3e}", grad_norm=gnorm)


def frechet_median_objective(m: GrassmannPoint, points) -> float:
    return float(sum(geodesic_distance(m, p) for p in points))


def batch_frechet_median(points, max_iter: int = 500, tol: float = 1e-9) -> GrassmannPoint:
    """Fréchet median by a Riemannian Weiszfeld iteration.

    Starts from the Karcher mean, which keeps the first iterate off the data
    (and makes two-point inputs return their midpoint). Points within 1e-12
    of the iterate carry no weight.
    """
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    _check_ball(points)
    m = batch_karcher_mean(points)
    step = np.inf
    for _ in range(max_iter):
        num = np.zeros(m.shape)
        den = 0.0
        for p in points:
            v = log_map(m, p).mat
            d = np.linalg.norm(v)
            if d < kernels.ZERO_DIST:
                continue
            num += v / d
            den += 1.0 / d
        if den == 0.0:
            return m
        g = num / den
        step = float(np.linalg.norm(g))
        if step < tol:
            return m
        m = exp_map(m, g)
    raise NoConvergence(f"Weiszfeld iteration stalled at step norm {step:.3e}", grad_norm=step)
