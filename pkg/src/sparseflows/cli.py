"""Command-line entry points.

Subcommands compose the library end to end: ``gen`` draws synthetic
data, ``select``/``sparse`` choose kernels, ``fit`` trains an
interpolant with a chosen dictionary, ``predict`` evaluates a saved
model, and ``bench`` runs the fixed recovery suite.  Every run either
writes/prints a structured result or emits a machine-readable error
record on stderr and exits nonzero.

Set the ``SPARSEFLOWS_LOG`` environment variable (debug/info/warning/
error) to control log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .data import gen_gp_dataset, load_csv, load_table, save_csv
from .experiment import (
    ExperimentConfig,
    run_bench,
    run_experiment,
    write_report,
)
from .interpolation import (
    RKHSInterpolant,
    load_model,
    model_payload,
    save_model,
)
from .kernels import load_dictionary
from .kf_loss import KFConfig
from .mdl import OptConfig, SupportSet
from .sparse import DEFAULT_LAMBDAS

LOG_ENV = "SPARSEFLOWS_LOG"
logger = logging.getLogger("sparseflows")

__all__ = ["main", "build_parser"]


def _add_data_flag(parser, required=True):
    parser.add_argument("--data", required=required,
                        help="CSV file: feature columns then one target column")


def _add_dict_flag(parser):
    parser.add_argument("--dict", dest="dictionary", required=True,
                        help="kernel dictionary spec (YAML)")


def _add_common_flags(parser):
    parser.add_argument("--seed", type=int, default=0,
                        help="base seed for batches and optimization "
                             "(default: %(default)s)")
    parser.add_argument("--batches", type=int, default=32,
                        help="number of batch pairs per loss average "
                             "(default: %(default)s)")
    parser.add_argument("--batch-size", type=int, default=None,
                        help="points per batch (default: min(64, N))")
    parser.add_argument("--nugget", type=float, default=None,
                        help="diagonal regularization (default: "
                             "1e-8 times the mean Gram diagonal)")
    parser.add_argument("--iterations", type=int, default=500,
                        help="optimizer iterations (default: %(default)s)")
    parser.add_argument("--learn-beta", action="store_true",
                        help="also adapt kernel hyperparameters "
                             "(default: off)")


def _add_out_flag(parser, help_text="output file (default: stdout)"):
    parser.add_argument("--out", default=None, help=help_text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sparseflows",
        description="Kernel selection by subsample loss with an MDL "
                    "support penalty, plus RKHS interpolation.")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser(
        "fit", help="fit an interpolant with a fixed dictionary")
    _add_data_flag(fit)
    _add_dict_flag(fit)
    fit.add_argument("--nugget", type=float, default=None,
                     help="diagonal regularization (default: "
                          "1e-8 times the mean Gram diagonal)")
    _add_out_flag(fit, "model JSON path (default: print to stdout)")

    select = sub.add_parser(
        "select", help="exhaustive support selection with audit")
    _add_data_flag(select)
    _add_dict_flag(select)
    _add_common_flags(select)
    _add_out_flag(select, "report JSON path (default: stdout)")

    sparse = sub.add_parser(
        "sparse", help="L1 penalty sweep arbitrated by the support score")
    _add_data_flag(sparse)
    _add_dict_flag(sparse)
    _add_common_flags(sparse)
    sparse.add_argument("--lambda", dest="lambdas", type=float,
                        action="append", default=None, metavar="LAMBDA",
                        help="penalty value; repeat for a sweep "
                             f"(default: {list(DEFAULT_LAMBDAS)})")
    _add_out_flag(sparse, "report JSON path (default: stdout)")

    predict = sub.add_parser("predict", help="evaluate a saved model")
    predict.add_argument("--model", required=True,
                         help="model JSON written by 'fit'")
    _add_data_flag(predict)
    _add_out_flag(predict, "predictions CSV path (default: stdout)")

    gen = sub.add_parser(
        "gen", help="draw a synthetic dataset from a dictionary subset")
    _add_dict_flag(gen)
    gen.add_argument("--support", required=True,
                     help="comma-separated 1-based kernel indices, "
                          "e.g. 1,4")
    gen.add_argument("--n", type=int, default=400,
                     help="number of points (default: %(default)s)")
    gen.add_argument("--d", type=int, default=1,
                     help="input dimension (default: %(default)s)")
    gen.add_argument("--noise", type=float, default=0.05,
                     help="observation noise s.d. (default: %(default)s)")
    gen.add_argument("--seed", type=int, default=0,
                     help="generator seed (default: %(default)s)")
    gen.add_argument("--out", required=True, help="output CSV path")

    bench = sub.add_parser(
        "bench", help="run the fixed 2-of-6 recovery suite and BIC demo")
    bench.add_argument("--trials", type=int, default=50,
                       help="recovery trials (default: %(default)s)")
    bench.add_argument("--bic-trials", type=int, default=50,
                       help="degree-selection trials (default: %(default)s)")
    bench.add_argument("--seed", type=int, default=0,
                       help="base seed (default: %(default)s)")
    _add_out_flag(bench, "report JSON path (default: stdout)")

    return parser


def _configs_from_args(args):
    kf = KFConfig(batch_size=args.batch_size, n_batches=args.batches,
                  seed=args.seed, nugget=args.nugget)
    opt = OptConfig(iterations=args.iterations, seed=args.seed,
                    learn_beta=args.learn_beta)
    return kf, opt


def _emit(payload, out):
    if out is None:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        write_report(payload, out)
        logger.info("wrote %s", out)


def _cmd_fit(args):
    data = load_csv(args.data)
    dictionary = load_dictionary(args.dictionary)
    model = RKHSInterpolant(dictionary=dictionary,
                            nugget=args.nugget).fit(data.X, data.y)
    logger.info("fitted on %d points (norm^2 = %g)", data.n, model.norm_sq())
    if args.out is None:
        _emit(model_payload(model), None)
    else:
        save_model(model, args.out)
        logger.info("wrote %s", args.out)
    return 0


def _cmd_select(args):
    kf, opt = _configs_from_args(args)
    config = ExperimentConfig.from_files(
        args.dictionary, data_path=args.data, mode="exhaustive",
        kf_config=kf, opt_config=opt, output_path=args.out)
    report = run_experiment(config)
    logger.info("selected support %s (score %g)",
                report["exhaustive"]["support"],
                report["exhaustive"]["score"])
    if args.out is None:
        _emit(report, None)
    return 0


def _cmd_sparse(args):
    kf, opt = _configs_from_args(args)
    lambdas = tuple(args.lambdas) if args.lambdas else DEFAULT_LAMBDAS
    config = ExperimentConfig.from_files(
        args.dictionary, data_path=args.data, mode="sparse",
        lambdas=lambdas, kf_config=kf, opt_config=opt, output_path=args.out)
    report = run_experiment(config)
    logger.info("sweep selected support %s",
                report["sparse"]["selected_support"])
    if args.out is None:
        _emit(report, None)
    return 0


def _write_predictions(X, predictions, handle):
    import csv

    writer = csv.writer(handle)
    writer.writerow([f"x{j + 1}" for j in range(X.shape[1])] + ["prediction"])
    for point, value in zip(X, predictions):
        writer.writerow([repr(float(v)) for v in point]
                        + [repr(float(value))])


def _cmd_predict(args):
    model = load_model(args.model)
    d = model.n_features_in_
    _, table = load_table(args.data)
    if table.shape[1] < d:
        raise ValueError(
            f"model expects {d} feature column(s); {args.data} has "
            f"{table.shape[1]}")
    X = table[:, :d]
    predictions = model.predict(X)
    if args.out is None:
        _write_predictions(X, predictions, sys.stdout)
    else:
        with open(args.out, "w", newline="") as handle:
            _write_predictions(X, predictions, handle)
        logger.info("wrote %s", args.out)
    return 0


def _cmd_gen(args):
    dictionary = load_dictionary(args.dictionary)
    support = SupportSet(tuple(
        int(s) for s in args.support.split(",") if s.strip()))
    support.validate_against(dictionary.m)
    data = gen_gp_dataset(dictionary, support.positions, N=args.n, d=args.d,
                          noise_sd=args.noise, seed=args.seed)
    save_csv(data, args.out)
    logger.info("wrote %d points to %s", data.n, args.out)
    return 0


def _cmd_bench(args):
    report = run_bench(n_trials=args.trials, base_seed=args.seed,
                       bic_trials=args.bic_trials, output_path=args.out)
    logger.info("recovery rate %g, sweep match rate %g, BIC rate %g",
                report["recovery"]["exhaustive_recovery_rate"],
                report["recovery"]["sweep_match_rate"],
                report["bic"]["rate"])
    if args.out is None:
        _emit(report, None)
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "select": _cmd_select,
    "sparse": _cmd_sparse,
    "predict": _cmd_predict,
    "gen": _cmd_gen,
    "bench": _cmd_bench,
}


def _configure_logging():
    level = os.environ.get(LOG_ENV, "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - the CLI boundary
        record = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        json.dump(record, sys.stderr)
        sys.stderr.write("\n")
        logger.debug("traceback", exc_info=exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
