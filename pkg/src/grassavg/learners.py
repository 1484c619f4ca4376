"""Online subspace learners.

RIGA and RRIGA cut the stream into blocks of K consecutive observations,
orthonormalize each block into a point of Gr(K, D) and average those points
with the inductive Fréchet mean (RIGA) or the stochastic Fréchet median
(RRIGA). Oja's rule and online EM-PCA are the classical baselines, and
`batch_pca` is the exact reference.

All learners share one interface::

    learner = make_learner(LearnerConfig("riga", k=2))
    learner.partial_fit(chunk)        # any number of rows, or a single vector
    learner.estimate().basis          # GrassmannPoint
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatch, InvalidConfig, InvalidInput, RankDeficient
from .geometry import GrassmannPoint, ball_radius
from .linalg import as_matrix, qr_orthonormalize, thin_svd

ALGORITHMS = ("riga", "rriga", "oja", "empca", "batch_pca")
DEFAULT_ALPHA = {"oja": 0.05, "empca": 0.7}
ALPHA_RANGE = {"oja": (0.005, 0.2), "empca": (0.6, 0.9)}


@dataclass(frozen=True)
class LearnerConfig:
    algorithm: str
    k: int
    alpha: float = None
    median_batch: int = 5
    seed: int = 0
    reorth_every: int = 100
    strict_alpha: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidConfig(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if int(self.k) != self.k or self.k < 1:
            raise InvalidConfig(f"k must be a positive integer, got {self.k!r}")
        if self.median_batch < 1:
            raise InvalidConfig("median_batch must be positive")
        if self.reorth_every < 1:
            raise InvalidConfig("reorth_every must be positive")
        if self.algorithm in DEFAULT_ALPHA:
            if self.alpha is None:
                object.__setattr__(self, "alpha", DEFAULT_ALPHA[self.algorithm])
            lo, hi = ALPHA_RANGE[self.algorithm]
            if self.strict_alpha and not lo <= self.alpha <= hi:
                raise InvalidConfig(
                    f"alpha={self.alpha} for {self.algorithm} is outside [{lo}, {hi}]; "
                    "pass strict_alpha=False to allow it")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "K" in d:
            d["k"] = d.pop("K")
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise InvalidConfig(f"unknown learner fields: {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from None

    def to_dict(self):
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    @property
    def label(self):
        if self.algorithm in DEFAULT_ALPHA:
            return f"{self.algorithm}(alpha={self.alpha:g})"
        if self.algorithm == "rriga" and self.median_batch != 5:
            return f"rriga(batch={self.median_batch})"
        return self.algorithm


@dataclass(frozen=True)
class SubspaceEstimate:
    basis: GrassmannPoint
    samples_seen: int
    blocks_seen: int
    skipped: int
    telemetry: dict = field(default_factory=dict)


class BlockAccumulator:
    """Groups a stream of D-vectors into orthonormalized D x K blocks."""

    def __init__(self, d, k):
        if not 1 <= k < d:
            raise InvalidInput(f"need 1 <= K < D, got K={k}, D={d}")
        self.d = d
        self.k = k
        self.pending = []
        self.block_index = 0
        self.dropped = 0

    def push(self, x):
        """Add one vector; return the block's GrassmannPoint once K have arrived."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DimensionMismatch(f"expected a vector of length {self.d}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInput("observation has non-finite entries")
        self.pending.append(x)
        if len(self.pending) < self.k:
            return None
        block = np.column_stack(self.pending)
        self.pending = []
        try:
            q = qr_orthonormalize(block)
        except RankDeficient:
            self.dropped += 1
            return None
        self.block_index += 1
        return GrassmannPoint(q)

    def finish(self):
        """Discard a trailing partial block; return how many vectors were dropped."""
        n = len(self.pending)
        self.pending = []
        return n


def absorb_block(acc: BlockAccumulator, x):
    point = acc.push(x)
    return acc, point


def oja_step(v, x, t, alpha, rng=None):
    """One normalised Oja update with step ``alpha / (D sqrt(t))``.

    If the update loses rank, the dependent columns are redrawn from ``rng``
    (or `RankDeficient` is raised when no generator is given).
    """
    v = as_matrix(v, "V")
    x = np.ascontiguousarray(x, dtype=float)
    gamma = alpha / (v.shape[0] * np.sqrt(t))
    w = v + gamma * np.outer(x, x @ v)
    q, ratio = kernels.orth(w)
    if ratio > kernels.RANK_TOL:
        return q
    if rng is None:
        raise RankDeficient("Oja update lost rank")
    return _reinit_columns(w, rng)


def _reinit_columns(w, rng, attempts=20):
    # unit columns, so a redrawn column is never negligible next to a huge one
    w = w / np.maximum(np.linalg.norm(w, axis=0), np.finfo(float).tiny)
    for _ in range(attempts):
        try:
            return qr_orthonormalize(w)
        except RankDeficient as exc:
            start, stop = exc.columns
            w = w.copy()
            fresh = rng.standard_normal((w.shape[0], stop - start))
            w[:, start:stop] = fresh / np.linalg.norm(fresh, axis=0)
    raise RankDeficient("could not reinitialise dependent Oja columns")


def empca_step(v, x, t, alpha, reorth_every=100):
    """One online EM-PCA update with step ``1 / t^alpha``.

    Returns ``v`` unchanged when the E-step is degenerate.
    """
    v = as_matrix(v, "V")
    x = np.ascontiguousarray(x, dtype=float)
    y = np.linalg.solve(v.T @ v, v.T @ x)
    yy = y @ y
    if yy < 1e-12:
        return v
    gamma = 1.0 / t ** alpha
    v = (1.0 - gamma) * v + gamma * np.outer(x, y / yy)
    if t % reorth_every == 0:
        v, _ = kernels.qr_pos(v)
    return v


def batch_pca(data, k) -> GrassmannPoint:
    """Span of the top-``k`` right singular vectors of the (centered) data."""
    data = as_matrix(data, "data")
    n, d = data.shape
    if not 1 <= k < d or n < k:
        raise InvalidInput(f"cannot extract {k} components from {n} x {d} data")
    res = thin_svd(data)
    s = res.singular_values
    if s[k - 1] <= kernels.RANK_TOL * s[0]:
        raise RankDeficient(f"data has rank below {k}", columns=(k - 1, k))
    return GrassmannPoint(np.ascontiguousarray(res.v[:, :k]))


class OnlineLearner:
    """Base class: input validation, chunk bookkeeping and counters."""

    def __init__(self, config: LearnerConfig, d=None):
        self.config = config
        self.k = config.k
        self.d = None
        self.samples_seen = 0
        self.telemetry = {}
        if d is not None:
            self._setup(d)

    def _setup(self, d):
        if not 1 <= self.k < d:
            raise InvalidInput(f"need 1 <= K < D, got K={self.k}, D={d}")
        self.d = d
        self._init_state()

    def _init_state(self):
        pass

    def _rows(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2:
            raise InvalidInput(f"expected a vector or a 2-D chunk, got shape {x.shape}")
        if self.d is None:
            self._setup(x.shape[1])
        if x.shape[1] != self.d:
            raise DimensionMismatch(f"expected {self.d} columns, got {x.shape[1]}")
        if not np.all(np.isfinite(x)):
            raise InvalidInput("observations have non-finite entries")
        return np.ascontiguousarray(x)

    def partial_fit(self, x):
        rows = self._rows(x)
        if rows.shape[0]:
            self._update(rows)
            self.samples_seen += rows.shape[0]
        return self

    step = partial_fit

    def _bump(self, key, n):
        self.telemetry[key] = self.telemetry.get(key, 0) + int(n)

    def finish(self):
        return self.estimate()

    def estimate(self) -> SubspaceEstimate:
        basis = self._basis()
        if basis is None:
            raise InvalidInput("no estimate yet: not enough data seen")
        return SubspaceEstimate(GrassmannPoint(basis), self.samples_seen, self._blocks(),
                                self._skipped(), dict(self.telemetry))

    def _blocks(self):
        return 0

    def _skipped(self):
        return 0


class _BlockLearner(OnlineLearner):
    def _init_state(self):
        self.m = np.zeros((self.d, self.k))
        self.count = 0
        self.blocks_total = 0
        self.pending = np.zeros((0, self.d))
        self.radius = ball_radius(self.k)
        for key in ("rank_dropped", "geodesic_skipped", "ball_violations"):
            self.telemetry.setdefault(key, 0)

    def _update(self, rows):
        if self.pending.shape[0]:
            rows = np.concatenate([self.pending, rows])
        full = rows.shape[0] - rows.shape[0] % self.k
        if full:
            self._run(np.ascontiguousarray(rows[:full]))
            self.blocks_total += full // self.k
        self.pending = rows[full:].copy()

    def _basis(self):
        return self.m if self.count else None

    def _blocks(self):
        return self.blocks_total - self.telemetry["rank_dropped"]

    def _skipped(self):
        return self.telemetry["rank_dropped"] + self.telemetry["geodesic_skipped"]

    def finish(self):
        self._bump("discarded_tail", self.pending.shape[0] if self.d else 0)
        if self.d:
            self.pending = np.zeros((0, self.d))
        return self.estimate()


class RIGA(_BlockLearner):
    def _run(self, rows):
        self.m, self.count, rank, geo, ball = kernels.riga_run(
            self.m, self.count, rows, self.k, self.radius)
        self._bump("rank_dropped", rank)
        self._bump("geodesic_skipped", geo)
        self._bump("ball_violations", ball)


class RRIGA(_BlockLearner):
    def _init_state(self):
        super()._init_state()
        self.buf = np.zeros((self.config.median_batch, self.d, self.k))
        self.nbuf = 0
        self.telemetry.setdefault("zero_distance", 0)

    def _run(self, rows):
        self.m, self.count, self.nbuf, rank, zero, ball = kernels.rriga_run(
            self.m, self.count, self.buf, self.nbuf, rows, self.k, self.radius)
        self._bump("rank_dropped", rank)
        self._bump("zero_distance", zero)
        self._bump("ball_violations", ball)

    def finish(self):
        if self.d and self.nbuf:
            self.m, self.count, skipped = kernels.median_flush(self.m, self.count, self.buf, self.nbuf)
            self._bump("zero_distance", skipped)
            self.nbuf = 0
        return super().finish()


class Oja(OnlineLearner):
    def _init_state(self):
        self.rng = np.random.default_rng(self.config.seed)
        self.v = qr_orthonormalize(self.rng.standard_normal((self.d, self.k)))
        self.t = 0
        self.telemetry.setdefault("reinitialized", 0)

    def _update(self, rows):
        while rows.shape[0]:
            self.v, self.t, stop = kernels.oja_run(self.v, self.t, rows, self.config.alpha)
            if stop < 0:
                break
            self.v = _reinit_columns(self.v, self.rng)
            self._bump("reinitialized", 1)
            rows = rows[stop + 1:]

    def _basis(self):
        return self.v

    def _skipped(self):
        return self.telemetry["reinitialized"]


class EMPCA(OnlineLearner):
    """Online EM-PCA; the reported estimate is the orthonormalized Polyak-Ruppert average.

    The step counter starts at t = 2 because a unit first step would collapse
    V to the rank-one M-step solution.
    """

    def _init_state(self):
        rng = np.random.default_rng(self.config.seed)
        self.v = qr_orthonormalize(rng.standard_normal((self.d, self.k)))
        self.avg = self.v.copy()
        self.n_avg = 1
        self.t = 1
        self.telemetry.setdefault("degenerate", 0)

    def _update(self, rows):
        self.v, self.avg, self.n_avg, self.t, skipped = kernels.empca_run(
            self.v, self.avg, self.n_avg, self.t, rows, self.config.alpha, self.config.reorth_every)
        self._bump("degenerate", skipped)

    def _basis(self):
        return qr_orthonormalize(self.avg)

    def _skipped(self):
        return self.telemetry["degenerate"]


class BatchPCA(OnlineLearner):
    """Exact PCA of everything seen so far (stores the rows)."""

    def _init_state(self):
        self.chunks = []

    def _update(self, rows):
        self.chunks.append(rows)

    def _basis(self):
        if not self.chunks or self.samples_seen < self.k:
            return None
        data = np.concatenate(self.chunks)
        self.chunks = [data]
        return batch_pca(data, self.k).basis


_CLASSES = {"riga": RIGA, "rriga": RRIGA, "oja": Oja, "empca": EMPCA, "batch_pca": BatchPCA}


def make_learner(config: LearnerConfig, d=None) -> OnlineLearner:
    return _CLASSES[config.algorithm](config, d)


def fit(data, config: LearnerConfig, chunk_size=4096) -> SubspaceEstimate:
    """Stream ``data`` (rows are observations) through one learner."""
    learner = make_learner(config)
    data = np.asarray(data, dtype=float)
    for start in range(0, data.shape[0], chunk_size):
        learner.partial_fit(data[start:start + chunk_size])
    return learner.finish()
