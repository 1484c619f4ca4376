"""Dense matrix primitives with fixed tolerances and sign conventions."""
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import InvalidInput, NearSingular, NumericalDrift, RankDeficient

RANK_TOL = kernels.RANK_TOL
ORTH_TOL = 1e-10
RECON_TOL = 1e-8
COND_MAX = 1e12
DRIFT_TOL = 1e-6


class ThinSvdResult(NamedTuple):
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray


def as_matrix(a, name="matrix"):
    """Validate and return a finite 2-D float64 C-contiguous array."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInput(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


def thin_svd(a) -> ThinSvdResult:
    """Thin SVD ``a = u @ diag(s) @ v.T`` with r = min(m, n) columns.

    Each column of ``u`` has its first nonzero entry positive (``v`` is
    flipped to match), so the result is reproducible for a fixed input.
    """
    a = as_matrix(a)
    u, s, vt = kernels.svd_thin(a)
    return ThinSvdResult(u, s, np.ascontiguousarray(vt.T))


def qr_orthonormalize(a):
    """Orthonormal basis for span(a), with the triangular factor's diagonal >= 0.

    Raises `RankDeficient` unless the smallest singular value of ``a``
    exceeds ``RANK_TOL`` times the largest.
    """
    a = as_matrix(a)
    if a.shape[1] > a.shape[0]:
        raise RankDeficient(
            f"{a.shape[1]} columns cannot be independent in R^{a.shape[0]}",
            columns=(a.shape[0], a.shape[1]),
        )
    q, r = kernels.qr_pos(a)
    if kernels.sv_ratio(r) <= RANK_TOL:
        diag = np.abs(np.diag(r))
        bad = np.flatnonzero(diag <= RANK_TOL * max(diag.max(), np.finfo(float).tiny))
        first = int(bad[0]) if bad.size else 0
        raise RankDeficient("matrix is rank deficient", columns=(first, a.shape[1]))
    return q


def solve_small(a, b):
    """Solve ``a @ x = b`` for a small square, well-conditioned ``a``."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[0] != a.shape[1] or b.shape[0] != a.shape[0]:
        raise InvalidInput(f"cannot solve {a.shape} against {b.shape}")
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond >= COND_MAX:
        raise NearSingular(f"condition number {cond:.3g} exceeds {COND_MAX:.0e}")
    return np.linalg.solve(a, b)


def clamp_unit(x: float) -> float:
    """Clamp a roundoff-perturbed cosine into [0, 1]."""
    if x < -DRIFT_TOL or x > 1.0 + DRIFT_TOL:
        raise NumericalDrift(f"{x!r} is outside [0, 1] by more than {DRIFT_TOL}")
    return min(max(float(x), 0.0), 1.0)
