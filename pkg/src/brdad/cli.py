"""Command-line entry point: ``brdad <command> ...``.

Exit codes: 0 success, 1 data error, 2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import DataError, Dataset, LabeledDataset, auto_bag_count, load_csv, write_csv
from .estimator import BagModel, detect, fit, score
from .evaluation import auc
from .experiments import DEFAULT_SIZES, bench, convergence_study
from .srm import solve_srm
from .synthetic import HuberSpec, sample_huber, sample_mixture, standard_normal, two_bump, two_bump_1d

log = logging.getLogger("brdad")


class UsageError(Exception):
    pass


def _bags(value: str):
    if value == "auto":
        return value
    try:
        b = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--bags must be an integer or 'auto', got {value!r}")
    if b < 1:
        raise argparse.ArgumentTypeError("--bags must be >= 1")
    return b


def _m_value(value: str):
    """Integer count, or a fraction strictly inside (0, 1)."""
    try:
        return int(value)
    except ValueError:
        pass
    try:
        f = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--m must be a count or a fraction, got {value!r}")
    if not 0.0 < f < 1.0:
        raise argparse.ArgumentTypeError(f"a fractional --m must lie in (0, 1), got {value}")
    return f


def _positive_int(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return v


def _int_list(value: str):
    try:
        out = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")
    if not out or any(v < 1 for v in out):
        raise argparse.ArgumentTypeError("list entries must be positive integers")
    return out


def _common_fit_args(p):
    p.add_argument("--input", required=True, help="CSV file with a header row")
    p.add_argument("--label-column", default=None,
                   help="name of a 0/1 label column to drop from the features")
    p.add_argument("--bags", type=_bags, default="auto",
                   help="bag count B, or 'auto' (1 / 5 / 10 by sample size)")
    p.add_argument("--seed", type=int, default=0, help="partition seed")
    p.add_argument("--no-scale", action="store_true",
                   help="disable min-max scaling of features to [0, 1]")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (default: all available cores)")


def _output_args(p):
    p.add_argument("--output", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brdad", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and write it as JSON")
    _common_fit_args(p)
    p.add_argument("--output", required=True, help="model JSON path")

    p = sub.add_parser("score", help="bagged regularized k-distance of every row")
    p.add_argument("--input", required=True, help="CSV file to score")
    p.add_argument("--model", default=None,
                   help="fitted model JSON; without it the input is fitted and scored in-sample")
    p.add_argument("--label-column", default=None, help="0/1 label column to drop (AUC is logged)")
    p.add_argument("--bags", type=_bags, default="auto", help="bag count when fitting")
    p.add_argument("--seed", type=int, default=0, help="partition seed when fitting")
    p.add_argument("--no-scale", action="store_true", help="disable min-max scaling when fitting")
    p.add_argument("--threads", type=_positive_int, default=None, help="worker threads")
    _output_args(p)

    p = sub.add_parser("detect", help="flag the m rows with the largest scores")
    p.add_argument("--input", required=True, help="CSV file to analyse")
    p.add_argument("--model", default=None,
                   help="fitted model JSON; without it the input is fitted and scored in-sample")
    p.add_argument("--label-column", default=None, help="0/1 label column to drop (AUC is logged)")
    p.add_argument("--bags", type=_bags, default="auto", help="bag count B or 'auto'")
    p.add_argument("--seed", type=int, default=0, help="partition seed")
    p.add_argument("--no-scale", action="store_true", help="disable min-max scaling")
    p.add_argument("--threads", type=_positive_int, default=None, help="worker threads")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--m", type=_m_value,
                   help="number of anomalies to flag; a value in (0, 1) is read as a fraction")
    g.add_argument("--m-frac", type=float, help="fraction of rows to flag (floored)")
    _output_args(p)

    p = sub.add_parser("convergence", help="median SR and MAE versus sample size (B=1)")
    p.add_argument("--sizes", type=_int_list, default=list(DEFAULT_SIZES), help="comma-separated n grid")
    p.add_argument("--reps", type=_positive_int, default=20, help="repetitions per n")
    p.add_argument("--eval-points", type=_positive_int, default=10_000, help="fresh points for MAE")
    p.add_argument("--dim", type=_positive_int, default=1, help="dimension of the N(0, I) target")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--threads", type=_positive_int, default=None, help="worker threads")
    p.add_argument("--report", default=None, help="per-run JSON-lines report path")
    p.add_argument("--output", default=None, help="curve CSV path (default: stdout)")

    p = sub.add_parser("bench", help="mean AUC per (dataset, B) and rank sums")
    p.add_argument("--input", required=True, nargs="+", help="labeled CSV files")
    p.add_argument("--label-column", default="y", help="label column name")
    p.add_argument("--bags", type=_int_list, default=[1, 5, 10, 20], help="comma-separated B values")
    p.add_argument("--reps", type=_positive_int, default=10, help="runs per (dataset, B)")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--no-scale", action="store_true", help="disable min-max scaling")
    p.add_argument("--threads", type=_positive_int, default=None, help="worker threads")
    p.add_argument("--report", default=None, help="per-run JSON-lines report path")
    p.add_argument("--output", default=None, help="table CSV path (default: stdout)")

    p = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    p.add_argument("--kind", choices=("huber", "normal", "mixture"), default="huber",
                   help="huber: truncated 0.4/0.6 mixture + uniform anomalies (labelled); "
                        "normal: N(0, I); mixture: two-bump mixture (1-D variant when --dim 1)")
    p.add_argument("--n", type=_positive_int, required=True, help="sample count")
    p.add_argument("--dim", type=_positive_int, default=2, help="dimension")
    p.add_argument("--contamination", type=float, default=0.05, help="anomaly proportion (huber)")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--label-column", default="y", help="label column name (huber)")
    p.add_argument("--output", default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("srm-solve", help="solve for SRM weights from an average-distance profile")
    p.add_argument("--input", default="-", help="file with one average i-distance per line ('-' = stdin)")
    p.add_argument("--bags", type=_positive_int, default=1, help="bag count B in the regularizer")
    p.add_argument("--s", type=int, default=None, help="fit-set size (default: profile length + 1)")
    return parser


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def _load(path, label_column):
    obj = load_csv(path, label_column)
    if isinstance(obj, LabeledDataset):
        return obj.data, obj.labels
    return obj, None


def _fit_from_args(args, data):
    B = auto_bag_count(data.n) if args.bags == "auto" else args.bags
    if data.n < 4 * B:
        raise UsageError(f"n={data.n} is too small for B={B} (need n >= 4B)")
    log.info("B=%d", B)
    return fit(data, B=B, seed=args.seed, scale=not args.no_scale, threads=args.threads)


def _write_scores(args, res, labels=None):
    n = res.scores.shape[0]
    rank = np.empty(n, dtype=np.intp)
    rank[res.order] = np.arange(1, n + 1)
    fh, close = _open_out(args.output)
    try:
        if args.format == "json":
            for i in range(n):
                row = {"index": i, "score": float(res.scores[i]), "rank": int(rank[i])}
                if res.flags is not None:
                    row["anomaly"] = int(res.flags[i])
                fh.write(json.dumps(row) + "\n")
        else:
            w = csv.writer(fh)
            header = ["index", "score", "rank"] + (["anomaly"] if res.flags is not None else [])
            w.writerow(header)
            for i in range(n):
                row = [i, repr(float(res.scores[i])), int(rank[i])]
                if res.flags is not None:
                    row.append(int(res.flags[i]))
                w.writerow(row)
    finally:
        if close:
            fh.close()
    if labels is not None and 0 < labels.sum() < labels.size:
        log.info("AUC=%.6f", auc(res.scores, labels))


def cmd_fit(args):
    data, _ = _load(args.input, args.label_column)
    model = _fit_from_args(args, data)
    model.save(args.output)
    log.info("wrote model with cutoffs %s to %s", model.cutoffs, args.output)
    return 0


def _scores_for(args, m=None):
    data, labels = _load(args.input, args.label_column)
    if args.model:
        model = BagModel.load(args.model)
        in_sample = False
    else:
        model = _fit_from_args(args, data)
        in_sample = True
    if m is None:
        res = score(model, data, in_sample=in_sample, threads=args.threads)
    else:
        res = detect(model, data, m(data.n), in_sample=in_sample, threads=args.threads)
    return res, labels


def cmd_score(args):
    res, labels = _scores_for(args)
    _write_scores(args, res, labels)
    return 0


def cmd_detect(args):
    def resolve_m(n):
        if isinstance(args.m, int):
            m = args.m
        else:
            frac = args.m if args.m is not None else args.m_frac
            if not 0.0 <= frac <= 1.0:
                raise UsageError("--m-frac must lie in [0, 1]")
            m = int(math.floor(frac * n + 1e-9))  # 0.29 * 100 is 28.999...
        if not 0 <= m <= n:
            raise UsageError(f"--m={m} must lie in [0, n={n}]")
        return m

    res, labels = _scores_for(args, resolve_m)
    _write_scores(args, res, labels)
    return 0


def cmd_convergence(args):
    summary = convergence_study(standard_normal(args.dim), args.sizes, args.reps, args.seed,
                                args.eval_points, args.threads)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            for r in summary.reports:
                fh.write(r.to_json() + "\n")
    fh, close = _open_out(args.output)
    try:
        w = csv.writer(fh)
        w.writerow(["n", "median_sr", "median_mae", "sr_mae_ratio"])
        for row in zip(summary.sizes, summary.median_sr, summary.median_mae, summary.ratio):
            w.writerow([row[0]] + [repr(v) for v in row[1:]])
    finally:
        if close:
            fh.close()
    return 0


def cmd_bench(args):
    datasets = {}
    for path in args.input:
        obj = load_csv(path, args.label_column if args.label_column else None)
        if not isinstance(obj, LabeledDataset):
            raise DataError(f"{path}: bench needs a label column")
        if not 0 < obj.labels.sum() < obj.n:
            raise DataError(f"{path}: labels must contain both classes")
        datasets[Path(path).stem] = obj
    min_n = min(ld.n for ld in datasets.values())
    too_big = [B for B in args.bags if 4 * B > min_n]
    if too_big:
        raise UsageError(f"B values {too_big} too large for the smallest dataset (n={min_n})")
    table, sums, reports = bench(datasets, args.bags, args.reps, args.seed, not args.no_scale, args.threads)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            for r in reports:
                fh.write(r.to_json() + "\n")
    configs = [f"B={B}" for B in args.bags]
    fh, close = _open_out(args.output)
    try:
        w = csv.writer(fh)
        w.writerow(["dataset"] + configs)
        for name, row in table.items():
            w.writerow([name] + [f"{row[c]:.4f}" for c in configs])
        w.writerow(["rank_sum"] + [f"{sums[c]:g}" for c in configs])
    finally:
        if close:
            fh.close()
    return 0


def cmd_synth(args):
    labels = None
    if args.kind == "huber":
        if not 0.0 < args.contamination < 1.0:
            raise UsageError("--contamination must lie strictly between 0 and 1")
        ld = sample_huber(HuberSpec(args.contamination, two_bump(args.dim)), args.n, args.seed)
        pts, labels = ld.data.points, ld.labels
    elif args.kind == "normal":
        pts = sample_mixture(standard_normal(args.dim), args.n, args.seed).points
    else:
        spec = two_bump_1d() if args.dim == 1 else two_bump(args.dim)
        pts = sample_mixture(spec, args.n, args.seed).points
    if args.output is None:
        tmp = sys.stdout
        w = csv.writer(tmp)
        header = [f"x{j}" for j in range(pts.shape[1])] + ([args.label_column] if labels is not None else [])
        w.writerow(header)
        for i, row in enumerate(pts):
            w.writerow([repr(float(v)) for v in row] + ([int(labels[i])] if labels is not None else []))
    else:
        write_csv(args.output, pts, labels, args.label_column)
    return 0


def cmd_srm_solve(args):
    text = sys.stdin.read() if args.input == "-" else Path(args.input).read_text()
    try:
        profile = np.array([float(line) for line in text.split() if line.strip()])
    except ValueError as exc:
        raise DataError(f"profile must contain one number per line: {exc}") from None
    if profile.size == 0:
        raise DataError("empty profile")
    try:
        wv = solve_srm(profile, args.bags, s=args.s)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    json.dump({"weights": wv.dense().tolist(), "cutoff": wv.cutoff, "mu": wv.mu,
               "s": args.s or profile.size + 1, "B": args.bags}, sys.stdout)
    sys.stdout.write("\n")
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "score": cmd_score,
    "detect": cmd_detect,
    "convergence": cmd_convergence,
    "bench": cmd_bench,
    "synth": cmd_synth,
    "srm-solve": cmd_srm_solve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except BrokenPipeError:
        # downstream reader (e.g. `head`) closed early; silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1
    except UsageError as exc:
        print(f"brdad {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"brdad {args.command}: data error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"brdad {args.command}: data error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
