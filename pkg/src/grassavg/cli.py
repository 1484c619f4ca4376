"""Command line entry point: ``grassavg {bench,fit,eval,gen}``.

Exit codes: 0 success, 2 invalid configuration or input, 3 numerical failure.
"""
import argparse
import json
import logging
import sys

import numpy as np

from .errors import ConfigError, NumericalError
from .geometry import GrassmannPoint
from .harness.data import MixtureConfig, sample_mixture, substream
from .harness.experiment import ExperimentSpec, run_experiment
from .harness.io import FORMATS, iter_chunks, read_matrix, write_matrix
from .learners import ALGORITHMS, LearnerConfig, batch_pca, make_learner
from .linalg import qr_orthonormalize
from . import metrics as M

log = logging.getLogger("grassavg")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _emit(rows, fmt, out=None):
    out = out or sys.stdout
    if fmt == "json":
        json.dump(rows, out, indent=1)
        out.write("\n")
        return
    keys = list(rows[0])
    out.write(",".join(keys) + "\n")
    for r in rows:
        out.write(",".join("" if r[k] is None else (repr(r[k]) if isinstance(r[k], float) else str(r[k]))
                           for k in keys) + "\n")


def cmd_bench(args):
    spec = ExperimentSpec.from_json(args.spec)
    if args.seed is not None:
        spec = ExperimentSpec.from_dict({**spec.to_dict(), "seed": args.seed, "jobs": spec.jobs,
                                         "output": spec.output})
    if args.jobs:
        spec.jobs = args.jobs
    prefix = args.out or spec.output or "bench"
    record = run_experiment(spec)
    paths = record.write(prefix)
    log.info("wrote %s", ", ".join(paths))
    flat = []
    for s in record.summary:
        row = {"algorithm": s["algorithm"], "N_checkpoint": s["N_checkpoint"], "trials": s["trials"]}
        for col in ("expressed_variance", "reconstruction_error", "subspace_error", "wall_time_s"):
            st = s.get(col)
            row[f"{col}_mean"] = st["mean"] if st else None
            row[f"{col}_std"] = st["std"] if st else None
        flat.append(row)
    _emit(flat, args.format)


def cmd_gen(args):
    if args.spec:
        spec = ExperimentSpec.from_json(args.spec)
        gen, d, n = spec.generator, spec.d, spec.n
        seed = spec.seed if args.seed is None else args.seed
    else:
        if args.d is None:
            raise ConfigError("gen needs --spec or --d")
        gen, d, n = {"type": "gaussian", "sigma": 1.0}, args.d, None
        seed = args.seed or 0
    n = args.n or n
    if not n:
        raise ConfigError("number of rows unknown: pass --n")
    if gen.get("type") == "file":
        raise ConfigError("cannot generate from a file source")
    cfg = MixtureConfig.from_dict(gen, d, seed)
    x = sample_mixture(cfg, n, substream(seed, args.trial))
    write_matrix(args.out, x, args.data_format)
    log.info("wrote %d x %d matrix to %s", n, d, args.out)


def cmd_fit(args):
    cfg = LearnerConfig(args.algo, args.k, alpha=args.alpha, median_batch=args.median_batch,
                        seed=args.seed or 0)
    learner = make_learner(cfg)
    for chunk in iter_chunks(args.data, args.data_format):
        learner.partial_fit(chunk)
    est = learner.finish()
    write_matrix(args.out, est.basis.basis, args.basis_format)
    summary = {"algorithm": cfg.label, "samples_seen": est.samples_seen,
               "blocks_seen": est.blocks_seen, "skipped": est.skipped, **est.telemetry}
    _emit([summary], args.format, sys.stderr if args.out == "-" else sys.stdout)


def _point(path, fmt):
    a = read_matrix(path, fmt)
    return GrassmannPoint(qr_orthonormalize(a))


def cmd_eval(args):
    data = read_matrix(args.data, args.data_format)
    est = _point(args.basis, args.basis_format)
    if args.truth:
        truth = _point(args.truth, args.basis_format)
    else:
        truth = batch_pca(data, est.dim_subspace)
    rep = M.report(data, est, truth, samples=data.shape[0]).to_dict()
    rep.pop("wall_time")
    _emit([rep], args.format)


def build_parser():
    p = argparse.ArgumentParser(prog="grassavg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run an experiment spec")
    b.add_argument("--spec", required=True)
    b.add_argument("--seed", type=int)
    b.add_argument("--out", help="output prefix; writes PREFIX.json and PREFIX.csv")
    b.add_argument("--jobs", type=int)
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.set_defaults(func=cmd_bench)

    g = sub.add_parser("gen", help="write a synthetic dataset")
    g.add_argument("--spec")
    g.add_argument("--d", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--trial", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--data-format", choices=FORMATS)
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fit", help="stream a matrix file through one learner")
    f.add_argument("data")
    f.add_argument("--algo", choices=ALGORITHMS, required=True)
    f.add_argument("--k", type=int, required=True)
    f.add_argument("--alpha", type=float)
    f.add_argument("--median-batch", type=int, default=5)
    f.add_argument("--seed", type=int)
    f.add_argument("--out", required=True, help="basis file (raw-f64 unless it ends in .csv)")
    f.add_argument("--data-format", choices=FORMATS)
    f.add_argument("--basis-format", choices=FORMATS)
    f.add_argument("--format", choices=("csv", "json"), default="json")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="metrics for a basis against data")
    e.add_argument("data")
    e.add_argument("basis")
    e.add_argument("--truth", help="reference basis; defaults to batch PCA of the data")
    e.add_argument("--data-format", choices=FORMATS)
    e.add_argument("--basis-format", choices=FORMATS)
    e.add_argument("--format", choices=("csv", "json"), default="json")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
