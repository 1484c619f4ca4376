"""Seeded multi-trial experiments with JSON + CSV reports."""
import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import GrassavgError, InvalidConfig, NumericalError
from ..geometry import GrassmannPoint
from ..learners import LearnerConfig, batch_pca, make_learner
from .. import metrics as M
from .data import MixtureConfig, derive_seed, sample_mixture, substream
from .io import read_matrix

METRICS = ("expressed_variance", "reconstruction_error", "subspace_error", "wall_time")
DEFAULT_METRICS = METRICS[:3]
CSV_COLUMNS = ("algorithm", "trial", "N_checkpoint", "expressed_variance",
               "reconstruction_error", "subspace_error", "wall_time_s")


def default_checkpoints(n):
    pts = []
    c = 1000
    while c < n:
        pts.append(c)
        c *= 2
    pts.append(n)
    return pts


@dataclass
class ExperimentSpec:
    d: int
    k: int
    n: int
    algorithms: list
    generator: dict
    trials: int = 1
    seed: int = 0
    metrics: tuple = DEFAULT_METRICS
    checkpoints: list = None
    truth: str = "batch_pca"
    fixed_data: bool = False
    shuffle: bool = False
    chunk_size: int = 4096
    jobs: int = 1
    output: str = None
    _mixture: MixtureConfig = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("d", "k", "n", "trials", "chunk_size", "jobs"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise InvalidConfig(f"{name} must be a positive integer, got {v!r}")
        if not self.k < self.d:
            raise InvalidConfig(f"need K < D, got K={self.k}, D={self.d}")
        self.algorithms = [a if isinstance(a, LearnerConfig) else
                           LearnerConfig.from_dict({"k": self.k, **a}) for a in self.algorithms]
        if not self.algorithms:
            raise InvalidConfig("no algorithms given")
        for a in self.algorithms:
            if a.k != self.k:
                raise InvalidConfig(f"{a.label} has k={a.k}, experiment has K={self.k}")
        labels = [a.label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            raise InvalidConfig(f"duplicate algorithm entries: {labels}")
        self.metrics = tuple(self.metrics)
        bad = set(self.metrics) - set(METRICS)
        if bad:
            raise InvalidConfig(f"unknown metrics {sorted(bad)}; choose from {METRICS}")
        if self.truth not in ("batch_pca", "population"):
            raise InvalidConfig("truth must be 'batch_pca' or 'population'")
        if self.checkpoints is None:
            self.checkpoints = default_checkpoints(self.n)
        self.checkpoints = [int(c) for c in self.checkpoints]
        if (not self.checkpoints or any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:]))
                or self.checkpoints[0] < 1 or self.checkpoints[-1] > self.n):
            raise InvalidConfig(f"checkpoints must increase strictly within [1, N]: {self.checkpoints}")
        kind = self.generator.get("type", "mixture")
        if kind == "file":
            if "path" not in self.generator:
                raise InvalidConfig("file generator needs a path")
            if self.truth == "population":
                raise InvalidConfig("population truth needs a synthetic generator")
        else:
            self._mixture = MixtureConfig.from_dict(self.generator, self.d, self.seed)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for alias, name in (("D", "d"), ("K", "k"), ("N", "n")):
            if alias in d:
                d[name] = d.pop(alias)
        unknown = set(d) - {f for f in cls.__dataclass_fields__ if not f.startswith("_")}
        if unknown:
            raise InvalidConfig(f"unknown spec fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from None

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as f:
                return cls.from_dict(json.load(f))
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: {exc}") from None
        except OSError as exc:
            raise InvalidConfig(f"cannot read spec: {exc}") from None

    def to_dict(self):
        return {
            "d": int(self.d), "k": int(self.k), "n": int(self.n), "trials": int(self.trials),
            "seed": int(self.seed),
            "algorithms": [a.to_dict() for a in self.algorithms],
            "generator": self.generator, "metrics": list(self.metrics),
            "checkpoints": list(self.checkpoints), "truth": self.truth,
            "fixed_data": self.fixed_data, "shuffle": self.shuffle,
            "chunk_size": int(self.chunk_size),
        }

    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunRecord:
    spec_hash: str
    seed: int
    spec: dict
    rows: list
    summary: list
    telemetry: list

    def to_json(self):
        return json.dumps({"spec_hash": self.spec_hash, "seed": self.seed, "spec": self.spec,
                           "records": self.rows, "summary": self.summary,
                           "telemetry": self.telemetry}, indent=1)

    def to_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r["algorithm"], r["trial"], r["N_checkpoint"]] +
                       [_fmt(r[c]) for c in CSV_COLUMNS[3:]])
        return out.getvalue()

    def write(self, prefix):
        """Write ``prefix.json`` and ``prefix.csv`` and check they agree."""
        os.makedirs(os.path.dirname(os.path.abspath(prefix)), exist_ok=True)
        paths = (f"{prefix}.json", f"{prefix}.csv")
        for path, text in zip(paths, (self.to_json(), self.to_csv())):
            with open(path, "w") as f:
                f.write(text)
        with open(paths[0]) as fj, open(paths[1], newline="") as fc:
            cross_check(json.load(fj)["records"], list(csv.DictReader(fc)))
        return paths


def _fmt(v):
    return "" if v is None else repr(float(v))


def cross_check(records, csv_rows):
    """Raise if the CSV rows and the JSON records disagree on any number."""
    if len(records) != len(csv_rows):
        raise GrassavgError(f"CSV has {len(csv_rows)} rows, JSON {len(records)}")
    for rec, row in zip(records, csv_rows):
        if (row["algorithm"], int(row["trial"]), int(row["N_checkpoint"])) != \
                (rec["algorithm"], rec["trial"], rec["N_checkpoint"]):
            raise GrassavgError(f"row key mismatch: {row} vs {rec}")
        for col in CSV_COLUMNS[3:]:
            a, b = rec[col], row[col]
            if (a is None) != (b == "") or (a is not None and float(b) != a):
                raise GrassavgError(f"{col} mismatch for {row['algorithm']} trial {row['trial']}")


def _trial_data(spec, trial):
    """Return (stream, eval_data, truth basis) for one trial."""
    data_trial = 0 if spec.fixed_data else trial
    if spec._mixture is None:
        x = read_matrix(spec.generator["path"], spec.generator.get("format"))
        if x.shape[1] != spec.d:
            raise InvalidConfig(f"file has {x.shape[1]} columns, spec says D={spec.d}")
        if x.shape[0] < spec.n:
            raise InvalidConfig(f"file has {x.shape[0]} rows, spec asks for N={spec.n}")
        x = x[:spec.n]
        clean = x
    else:
        x, clean = sample_mixture(spec._mixture, spec.n, substream(spec.seed, data_trial), return_clean=True)
    if spec.shuffle:
        perm = substream(spec.seed, trial, 1).permutation(spec.n)
        x, clean = x[perm], clean[perm]
    if spec.truth == "population":
        truth = GrassmannPoint(spec._mixture.clean_subspace(spec.k))
    else:
        truth = batch_pca(clean, spec.k)
    return np.ascontiguousarray(x), clean, truth


def _with_context(exc, msg):
    if isinstance(exc, GrassavgError):
        try:
            new = type(exc)(f"{msg}: {exc}")
        except TypeError:
            new = GrassavgError(f"{msg}: {exc}")
        return new
    if isinstance(exc, (np.linalg.LinAlgError, ArithmeticError)):
        return NumericalError(f"{msg}: {exc}")
    return exc


def run_trial(spec: ExperimentSpec, trial: int):
    x, clean, truth = _trial_data(spec, trial)
    rows, tele = [], []
    for idx, cfg in enumerate(spec.algorithms):
        cfg = replace(cfg, seed=derive_seed(spec.seed, trial, idx + 2, cfg.seed))
        learner = make_learner(cfg, spec.d)
        elapsed = 0.0
        seen = 0
        try:
            for cp in spec.checkpoints:
                while seen < cp:
                    stop = min(cp, seen + spec.chunk_size)
                    t0 = time.perf_counter()
                    learner.partial_fit(x[seen:stop])
                    elapsed += time.perf_counter() - t0
                    seen = stop
                t0 = time.perf_counter()
                est = learner.finish() if cp == spec.n else learner.estimate()
                elapsed += time.perf_counter() - t0
                rows.append(_row(spec, cfg, trial, cp, clean, est.basis, truth, elapsed))
        except Exception as exc:
            raise _with_context(exc, f"trial {trial}, {cfg.label}") from exc
        tele.append({"algorithm": cfg.label, "trial": trial, "blocks_seen": est.blocks_seen,
                     "skipped": est.skipped, **est.telemetry})
    return rows, tele


def _row(spec, cfg, trial, cp, clean, est, truth, elapsed):
    want = spec.metrics
    r = {"algorithm": cfg.label, "trial": trial, "N_checkpoint": cp}
    r["expressed_variance"] = M.expressed_variance(clean, est, truth) if "expressed_variance" in want else None
    r["reconstruction_error"] = M.reconstruction_error(clean, est) if "reconstruction_error" in want else None
    r["subspace_error"] = M.subspace_error(est, truth) if "subspace_error" in want else None
    r["wall_time_s"] = elapsed if "wall_time" in want else None
    return r


def summarize(rows):
    groups = {}
    for r in rows:
        groups.setdefault((r["algorithm"], r["N_checkpoint"]), []).append(r)
    out = []
    for (algo, cp), rs in groups.items():
        entry = {"algorithm": algo, "N_checkpoint": cp, "trials": len(rs)}
        for col in CSV_COLUMNS[3:]:
            vals = [r[col] for r in rs if r[col] is not None]
            if vals:
                entry[col] = {"mean": float(np.mean(vals)), "std": float(np.std(vals)),
                              "median": float(np.median(vals))}
        out.append(entry)
    return out


def run_experiment(spec: ExperimentSpec) -> RunRecord:
    trials = range(spec.trials)
    if spec.jobs > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(run_trial, [spec] * spec.trials, trials))
    else:
        results = [run_trial(spec, t) for t in trials]
    rows = [r for res in results for r in res[0]]
    rows.sort(key=lambda r: ([a.label for a in spec.algorithms].index(r["algorithm"]),
                             r["trial"], r["N_checkpoint"]))
    tele = [t for res in results for t in res[1]]
    for r in rows:
        for col in CSV_COLUMNS[3:]:
            if r[col] is not None and not math.isfinite(r[col]):
                raise NumericalError(f"non-finite {col} for {r['algorithm']} trial {r['trial']}")
    return RunRecord(spec.hash(), int(spec.seed), spec.to_dict(), rows, summarize(rows), tele)
