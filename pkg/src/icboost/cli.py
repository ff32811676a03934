"""Command-line interface: train, predict, validate, importance, benchmark.

Exit codes: 0 ok, 2 usage/configuration, 3 data, 4 loss-domain or
convexity, 5 I/O.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np
from scipy import special, stats

from . import dataio, ensemble, losses, model_io, validation
from .errors import (
    ConfigurationError,
    DataError,
    DomainError,
    IcBoostError,
)
from .losses import CLI_LOSS_NAMES, LossSpec
from .tree import SplitNode

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DOMAIN = 4
EXIT_IO = 5

_ALGORITHM_CHOICES = ("global-subset", "vanilla")

_FAMILY_LABELS = {
    "mse": "Gaussian regression",
    "logloss": "Classification",
    "gamma_neginv": "Gamma regression",
    "gamma_log": "Gamma regression",
    "poisson": "Poisson regression",
    "negbinom": "Negative binomial regression",
}


def _add_train_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--loss", required=True, choices=sorted(CLI_LOSS_NAMES))
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--algorithm", choices=_ALGORITHM_CHOICES, default="global-subset")
    p.add_argument("--dispersion", type=float, default=None)
    p.add_argument("--verbose", type=int, default=0, metavar="PERIOD")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--nsim", type=int, default=1000)
    p.add_argument("--max-iterations", type=int, default=30000)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icboost",
        description="Gradient tree boosting with automatic complexity selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on a labeled CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log-out", default=None, help="training log CSV (default: <out>.log.csv)")
    _add_train_options(p)

    p = sub.add_parser("predict", help="predict a feature CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target", default=None, help="label column to drop, if present")
    p.add_argument("--response-scale", action="store_true")

    p = sub.add_parser("validate", help="Kolmogorov-Smirnov goodness-of-fit test")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--hist-out", default="u_hist.csv", help="20-bin histogram CSV of u")

    p = sub.add_parser("importance", help="feature importance report")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--names", default=None, help="file with one feature name per line")

    p = sub.add_parser("benchmark", help="compare the two algorithms on one dataset")
    p.add_argument("--train", dest="train_csv", default=None)
    p.add_argument("--test", dest="test_csv", default=None)
    p.add_argument("--target", default=None)
    p.add_argument("--synthetic", choices=("gaussian", "binary"), default=None)
    p.add_argument("--n", type=int, default=1000, help="synthetic rows per split")
    p.add_argument("--m", type=int, default=5, help="synthetic feature count")
    p.add_argument("--auc", action="store_true", help="force AUC (logloss tasks only)")
    _add_train_options(p)

    return parser


def _train_config(args, algorithm: str | None = None) -> ensemble.TrainConfig:
    return ensemble.TrainConfig(
        delta=args.learning_rate,
        mode=(algorithm or args.algorithm).replace("-", "_"),
        verbose=args.verbose,
        seed=args.seed,
        n_sim=args.nsim,
        max_iterations=args.max_iterations,
    )


def _loss_spec(args) -> LossSpec:
    if args.loss == "negbinom" and args.dispersion is None:
        raise ConfigurationError("--dispersion is required for --loss negbinom")
    if args.loss != "negbinom" and args.dispersion is not None:
        raise ConfigurationError(f"--dispersion is only valid for negbinom, not {args.loss}")
    return LossSpec.from_cli_name(args.loss, args.dispersion)


def cmd_train(args) -> int:
    spec = _loss_spec(args)
    data = dataio.read_csv_dataset(args.data, target=args.target)
    model = ensemble.train(data.X, data.y, spec, _train_config(args))
    model_io.save(model, args.out)
    dataio.write_training_log_csv(args.log_out or f"{args.out}.log.csv", model.log)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = model_io.load(args.model)
    data = dataio.read_csv_dataset(args.data, target=args.target)
    if data.X.shape[1] != model.n_features:
        raise DataError(
            f"model expects {model.n_features} features, CSV has {data.X.shape[1]}"
        )
    if args.response_scale:
        values = ensemble.predict_response(model, data.X)
    else:
        values = ensemble.predict(model, data.X)
    dataio.write_predictions_csv(args.out, values)
    return EXIT_OK


def cmd_validate(args) -> int:
    model = model_io.load(args.model)
    data = dataio.read_csv_dataset(args.data, target=args.target)
    if data.X.shape[1] != model.n_features:
        raise DataError(
            f"model expects {model.n_features} features, CSV has {data.X.shape[1]}"
        )
    result = validation.ks_validate(model, data.y, data.X, rng=args.seed)
    print(_FAMILY_LABELS[model.loss.kind])
    print("One-sample Kolmogorov-Smirnov test")
    print("data:  u")
    print(f"D = {result.statistic:.6g}, p-value = {result.p_value:.6g}")
    print("alternative hypothesis: two-sided")
    for name, value in result.nuisance.items():
        print(f"estimated {name}: {value:.6g}")
    if args.hist_out:
        dataio.write_histogram_csv(args.hist_out, result.u)
    return EXIT_OK


def cmd_importance(args) -> int:
    model = model_io.load(args.model)
    imp = validation.feature_importance(model)
    if args.names:
        with open(args.names, encoding="utf-8") as fh:
            names = [line.strip() for line in fh if line.strip()]
        if len(names) != model.n_features:
            raise DataError(
                f"names file has {len(names)} entries, model has {model.n_features} features"
            )
    else:
        names = [f"feature_{j}" for j in range(model.n_features)]
    dataio.write_importance_csv(args.out, names, imp.raw, imp.share)
    return EXIT_OK


def _roc_auc(y: np.ndarray, scores: np.ndarray) -> float:
    """Trapezoidal AUC over ranked predictions (average ranks for ties)."""
    pos = y == 1.0
    n_pos = int(np.count_nonzero(pos))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ConfigurationError("AUC needs both classes present in the test labels")
    ranks = stats.rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _synthetic(kind: str, n: int, m: int, rng: np.random.Generator):
    X = rng.uniform(0.0, 5.0, size=(n, m))
    if kind == "gaussian":
        y = rng.normal(X[:, 0], 1.0)
    else:
        p = special.expit(1.5 * (X[:, 0] - 2.5))
        y = (rng.uniform(size=n) < p).astype(np.float64)
    return X, y


def cmd_benchmark(args) -> int:
    spec = _loss_spec(args)
    if args.auc and spec.kind != "logloss":
        raise ConfigurationError("AUC is only defined for the logloss task")
    want_auc = args.auc or spec.kind == "logloss"

    if args.synthetic is not None:
        if args.synthetic == "binary" and spec.kind != "logloss":
            raise ConfigurationError("--synthetic binary requires --loss logloss")
        if args.synthetic == "gaussian" and spec.kind == "logloss":
            raise ConfigurationError("--synthetic gaussian is a continuous task")
        rng = np.random.default_rng(args.seed)
        X_train, y_train = _synthetic(args.synthetic, args.n, args.m, rng)
        X_test, y_test = _synthetic(args.synthetic, args.n, args.m, rng)
    elif args.train_csv and args.test_csv and args.target:
        train_data = dataio.read_csv_dataset(args.train_csv, target=args.target)
        test_data = dataio.read_csv_dataset(args.test_csv, target=args.target)
        X_train, y_train = train_data.X, train_data.y
        X_test, y_test = test_data.X, test_data.y
    else:
        raise ConfigurationError(
            "benchmark needs --train/--test/--target CSVs or --synthetic"
        )

    header = f"{'algorithm':<14}{'loss':>10}{'auc':>10}{'time':>10}{'trees':>8}{'leaves':>8}{'features':>10}"
    print(header)
    for algorithm in ("vanilla", "global-subset"):
        t0 = time.perf_counter()
        model = ensemble.train(X_train, y_train, spec, _train_config(args, algorithm))
        elapsed = time.perf_counter() - t0
        pred = ensemble.predict(model, X_test)
        test_loss = float(np.mean(losses.loss_value(spec, y_test, pred)))
        auc = _roc_auc(y_test, pred) if want_auc else None
        n_leaves = sum(t.n_leaves for t in model.trees)
        used: set[int] = set()
        for t in model.trees:
            stack = [t.root]
            while stack:
                node = stack.pop()
                if isinstance(node, SplitNode):
                    used.add(node.feature)
                    stack.append(node.left)
                    stack.append(node.right)
        auc_text = f"{auc:.4f}" if auc is not None else "-"
        print(
            f"{algorithm:<14}{test_loss:>10.4f}{auc_text:>10}{elapsed:>10.3f}"
            f"{model.n_trees:>8}{n_leaves:>8}{len(used):>10}"
        )
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "validate": cmd_validate,
    "importance": cmd_importance,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"icboost: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"icboost: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DataError as exc:
        print(f"icboost: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except IcBoostError as exc:
        print(f"icboost: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"icboost: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
