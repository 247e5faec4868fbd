"""Command line entry point: train, baseline, sweep, gradcheck, gen-sbm.

Exit codes are 0 on success, 2 for usage or configuration errors and 1 for
runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import logging
import sys
from pathlib import Path

import numpy as np

from . import trainer
from .config import BASELINES, GRAPHMIXUP_METHODS, ExperimentConfig, load_config, validate
from .errors import ConfigError, GraphMixupError
from .graph import fixture_graph, generate_sbm, load_graph, save_graph
from .ndmath import grad_check_tensors

log = logging.getLogger("graphmixup")

GRAD_TOL = 1e-4
FLOAT_FMT = "{:.6f}"
METRIC_FIELDS = ("accuracy", "macro_f1", "auc_roc")


class UsageError(Exception):
    pass


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return "nan" if np.isnan(x) else FLOAT_FMT.format(float(x))
    return str(x)


def resolve_out_dir(out, force=False):
    """Return a fresh output directory; existing non-empty ones get a timestamp suffix."""
    out = Path(out)
    if out.exists() and any(out.iterdir()) and not force:
        stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S")
        out = out.with_name(f"{out.name}-{stamp}")
        n = 1
        while out.exists():
            out = out.with_name(f"{out.name.rsplit('.', 1)[0]}.{n}")
            n += 1
    out.mkdir(parents=True, exist_ok=True)
    return out


class Report:
    """Collects written files so the manifest lists every one of them."""

    def __init__(self, out):
        self.out = Path(out)
        self.files = []

    def write_csv(self, name, header, rows):
        path = self.out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.files.append(name)
        return path

    def write_text(self, name, text):
        (self.out / name).write_text(text)
        self.files.append(name)

    def finish(self):
        names = self.files + ["manifest.txt"]
        (self.out / "manifest.txt").write_text("\n".join(names) + "\n")
        return [self.out / n for n in names]


def load_dataset(cfg):
    missing = [k for k in ("edges", "features", "labels") if getattr(cfg, k) is None]
    if missing:
        raise ConfigError(missing[0], "dataset path is required")
    return load_graph(cfg.edges, cfg.features, cfg.labels)


def run_seeds(method, graph, cfg, seeds):
    runs = []
    for seed in seeds:
        split = trainer.split_for(graph, cfg, seed)
        log.info("%s seed %d: %d train / %d val / %d test", method, seed,
                 len(split.train), len(split.val), len(split.test))
        runs.append(trainer.run_method(method, graph, split, cfg, seed))
    return runs


def metric_rows(runs, prefix=()):
    rows = []
    for r in runs:
        rows.append([*prefix, r.method, r.seed, *(getattr(r.test, f) for f in METRIC_FIELDS),
                     r.val.macro_f1, r.best_epoch])
    for label, agg in (("mean", np.mean), ("std", np.std)):
        vals = [agg([getattr(r.test, f) for r in runs]) for f in METRIC_FIELDS]
        rows.append([*prefix, runs[0].method, label, *vals,
                     agg([r.val.macro_f1 for r in runs]), ""])
    return rows


METRIC_HEADER = ["method", "seed", "test_accuracy", "test_macro_f1", "test_auc_roc",
                 "val_macro_f1", "best_epoch"]


def write_run_report(report, runs):
    report.write_csv("metrics.csv", METRIC_HEADER, metric_rows(runs))
    alpha_keys = sorted({k for r in runs for row in r.history for k in row if k.startswith("alpha_")})
    rows = []
    for r in runs:
        for h in r.history:
            rows.append([r.method, r.seed, h["epoch"], h["L_node"], h["val_macro_f1"], h["kappa"],
                         *(h.get(k) for k in alpha_keys)])
    report.write_csv("history.csv", ["method", "seed", "epoch", "L_node", "val_macro_f1",
                                     "kappa", *alpha_keys], rows)
    pre_keys = ["L_dis", "L_rec", "L_local", "L_global", "L_edge"]
    rows = [[r.seed, h["epoch"], *(h[k] for k in pre_keys)]
            for r in runs for h in r.pretrain_history]
    report.write_csv("pretrain_history.csv", ["seed", "epoch", *pre_keys], rows)
    rows = [[r.method, r.seed, *t] for r in runs for t in r.rl_trace]
    report.write_csv("rl_trace.csv", ["method", "seed", "epoch", "kappa", "action", "reward",
                                      "val_macro_f1"], rows)


def _config_from_args(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if getattr(args, "method", None):
        changes["method"] = args.method
    if getattr(args, "seed", None) is not None:
        changes["seeds"] = (args.seed,)
    if changes:
        cfg = cfg.replace(**changes)
    validate(cfg)
    return cfg


def cmd_train(args, baseline=False):
    cfg = _config_from_args(args)
    allowed = BASELINES if baseline else GRAPHMIXUP_METHODS
    if cfg.method not in allowed:
        raise UsageError(f"method '{cfg.method}' is not valid here; choose from {', '.join(allowed)}")
    graph = load_dataset(cfg)
    runs = run_seeds(cfg.method, graph, cfg, cfg.seeds)
    report = Report(resolve_out_dir(args.out, args.force))
    report.write_text("config.txt", cfg.to_text())
    write_run_report(report, runs)
    for path in report.finish():
        print(path)
    mean = metric_rows(runs)[-2]
    print(f"{cfg.method}: test macro-F1 {_fmt(mean[3])}, accuracy {_fmt(mean[2])}, "
          f"AUC {_fmt(mean[4])} over {len(runs)} seed(s)")
    return 0


SWEEP_AXES = ("im_ratio", "fixed_scale")


def cmd_sweep(args):
    cfg = _config_from_args(args)
    if args.axis not in SWEEP_AXES:
        raise UsageError(f"axis must be one of {', '.join(SWEEP_AXES)}")
    values = [float(v) for v in args.values.split(",") if v.strip()] if args.values else []
    if not values:
        raise UsageError("sweep needs at least one value")
    methods = args.methods.split(",") if args.methods else [cfg.method]
    graph = load_dataset(cfg)
    rows, summary = [], []
    for value in values:
        for method in methods:
            run_cfg = validate(cfg.replace(method=method, **{args.axis: value}))
            runs = run_seeds(method, graph, run_cfg, run_cfg.seeds)
            seed_rows = metric_rows(runs, prefix=(value,))
            rows.extend(seed_rows[:-2])
            summary.extend(seed_rows[-2:-1])
    report = Report(resolve_out_dir(args.out, args.force))
    report.write_text("config.txt", cfg.to_text())
    header = [args.axis, *METRIC_HEADER]
    report.write_csv("sweep.csv", header, rows)
    report.write_csv("sweep_summary.csv", header, summary)
    for path in report.finish():
        print(path)
    for row in summary:
        print(f"{args.axis}={_fmt(row[0])} {row[1]}: test macro-F1 {_fmt(row[4])}")
    return 0


def gradcheck_report(cfg, corrupt=None, max_coords=40):
    """Max relative error per loss and the tensor where it occurs."""
    graph = fixture_graph()
    problems = trainer.gradcheck_problems(graph, cfg, seed=0, corrupt=corrupt)
    out = {}
    for name, (fn, params) in problems.items():
        per = grad_check_tensors(fn, params, max_coords=max_coords)
        worst = max(per, key=per.get)
        out[name] = (per[worst], worst)
    return out


def cmd_gradcheck(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    report = gradcheck_report(cfg, corrupt=args.corrupt)
    failed = False
    for name, (err, tensor) in report.items():
        ok = err < GRAD_TOL
        failed |= not ok
        print(f"{name:9s} max rel err {err:.3e} ({tensor}) {'PASS' if ok else 'FAIL'}")
    return 1 if failed else 0


def cmd_gen_sbm(args):
    g = generate_sbm(n_nodes=args.nodes, n_classes=args.classes, p_in=args.p_in,
                     p_out=args.p_out, n_features=args.features, class_sep=args.class_sep,
                     seed=args.seed or 0)
    out = resolve_out_dir(args.out, args.force)
    save_graph(g, out)
    (out / "graph.cfg").write_text("edges = edges.tsv\nfeatures = features.tsv\nlabels = labels.tsv\n")
    (out / "manifest.txt").write_text("edges.tsv\nfeatures.tsv\nlabels.tsv\ngraph.cfg\nmanifest.txt\n")
    print(out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="graphmixup", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, method=True):
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--seed", type=int, help="run this seed only")
        sp.add_argument("--out", default="runs/out", help="output directory")
        sp.add_argument("--force", action="store_true", help="write into a non-empty --out")
        if method:
            sp.add_argument("--method", help="override the configured method")

    common(sub.add_parser("train", help="run a GraphMixup variant"))
    common(sub.add_parser("baseline", help="run a baseline method"))
    sp = sub.add_parser("sweep", help="repeat a run over values of one setting")
    common(sp)
    sp.add_argument("--axis", required=True, help="im_ratio or fixed_scale")
    sp.add_argument("--values", default="", help="comma separated values")
    sp.add_argument("--methods", default="", help="comma separated methods (default: configured)")
    sp = sub.add_parser("gradcheck", help="finite-difference check of every loss")
    sp.add_argument("--config")
    sp.add_argument("--corrupt", help=argparse.SUPPRESS)
    sp = sub.add_parser("gen-sbm", help="write a seeded stochastic block model dataset")
    sp.add_argument("--out", default="data/sbm")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--force", action="store_true")
    sp.add_argument("--nodes", type=int, default=300)
    sp.add_argument("--classes", type=int, default=3)
    sp.add_argument("--p-in", type=float, default=0.03)
    sp.add_argument("--p-out", type=float, default=0.01)
    sp.add_argument("--features", type=int, default=16)
    sp.add_argument("--class-sep", type=float, default=1.0)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    commands = {
        "train": cmd_train,
        "baseline": lambda a: cmd_train(a, baseline=True),
        "sweep": cmd_sweep,
        "gradcheck": cmd_gradcheck,
        "gen-sbm": cmd_gen_sbm,
    }
    try:
        return commands[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (GraphMixupError, OSError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
