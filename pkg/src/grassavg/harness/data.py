"""Synthetic data: the inlier/outlier Gaussian model and seeded substreams."""
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidConfig


def substream(seed, *key):
    """Independent counter-based generator for (seed, *key), e.g. (seed, trial)."""
    ss = np.random.SeedSequence([int(seed)] + [int(k) for k in key])
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *key) -> int:
    return int(np.random.SeedSequence([int(seed)] + [int(k) for k in key]).generate_state(1, np.uint64)[0])


def covariance(spec, d):
    """Build a D x D covariance from a number, a diagonal, a full matrix or {"lead", "rest"}."""
    if isinstance(spec, dict):
        lead = list(spec.get("lead", []))
        rest = float(spec.get("rest", 0.0))
        if len(lead) > d:
            raise InvalidConfig(f"{len(lead)} leading variances for D={d}")
        return np.diag(np.r_[lead, np.full(d - len(lead), rest)].astype(float))
    a = np.asarray(spec, dtype=float)
    if a.ndim == 0:
        return float(a) * np.eye(d)
    if a.ndim == 1 and a.shape == (d,):
        return np.diag(a)
    if a.shape == (d, d):
        return a
    raise InvalidConfig(f"cannot read a {d}x{d} covariance from shape {a.shape}")


def _sqrt_psd(cov, name):
    if not np.all(np.isfinite(cov)):
        raise InvalidConfig(f"{name} has non-finite entries")
    if np.count_nonzero(cov - np.diag(np.diag(cov))) == 0:
        diag = np.diag(cov)
        if diag.min() < 0:
            raise InvalidConfig(f"{name} is not positive semidefinite")
        return np.sqrt(diag), True
    if not np.allclose(cov, cov.T, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise InvalidConfig(f"{name} is not symmetric")
    w, q = np.linalg.eigh(cov)
    if w.min() < -1e-10 * max(1.0, w.max()):
        raise InvalidConfig(f"{name} is not positive semidefinite (eigenvalue {w.min():.3g})")
    return q * np.sqrt(np.clip(w, 0.0, None)), False


@dataclass
class MixtureConfig:
    """Each observation is ``w1 * y1 + (1 - w1) * y2``, y1 ~ N(0, sigma1), y2 ~ N(mu, sigma2)."""

    w1: float
    mu: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    seed: int = 0
    _roots: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        d = self.mu.shape[0]
        self.sigma1 = covariance(self.sigma1, d)
        self.sigma2 = covariance(self.sigma2, d)
        if not 0.0 <= self.w1 <= 1.0:
            raise InvalidConfig(f"w1 must lie in [0, 1], got {self.w1}")
        self._roots = (_sqrt_psd(self.sigma1, "sigma1"), _sqrt_psd(self.sigma2, "sigma2"))

    @property
    def d(self):
        return self.mu.shape[0]

    @classmethod
    def from_dict(cls, spec, d, seed=0):
        spec = dict(spec)
        kind = spec.pop("type", "mixture")
        if kind == "gaussian":
            spec = {"w1": 1.0, "mu": 0.0, "sigma1": spec.pop("sigma", 1.0), "sigma2": 0.0, **spec}
        elif kind != "mixture":
            raise InvalidConfig(f"unknown generator type {kind!r}")
        unknown = set(spec) - {"w1", "mu", "sigma1", "sigma2"}
        if unknown:
            raise InvalidConfig(f"unknown generator fields: {sorted(unknown)}")
        mu = np.asarray(spec.get("mu", 0.0), dtype=float)
        if mu.ndim == 0:
            mu = np.full(d, float(mu))
        elif mu.shape != (d,):
            raise InvalidConfig(f"mu has length {mu.size}, expected {d}")
        return cls(w1=float(spec.get("w1", 1.0)), mu=mu, sigma1=spec.get("sigma1", 1.0),
                   sigma2=spec.get("sigma2", 0.0), seed=seed)

    def clean_subspace(self, k):
        """Top-k eigenvectors of sigma1: the principal subspace of the inlier component."""
        w, q = np.linalg.eigh(self.sigma1)
        return q[:, np.argsort(w)[::-1][:k]]


def _draw(rng, root, n, d):
    r, diagonal = root
    z = rng.standard_normal((n, d))
    return z * r if diagonal else z @ r.T


def sample_mixture(cfg: MixtureConfig, n, rng=None, return_clean=False):
    """Draw ``n`` rows; with ``return_clean`` also return the inlier part ``w1 * y1``."""
    if rng is None:
        rng = substream(cfg.seed)
    d = cfg.d
    r1, r2 = cfg._roots
    y1 = _draw(rng, r1, n, d)
    y2 = _draw(rng, r2, n, d) + cfg.mu
    clean = cfg.w1 * y1
    x = clean + (1.0 - cfg.w1) * y2
    return (x, clean) if return_clean else x
