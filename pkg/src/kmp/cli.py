"""Command-line interface: ``kmp {synth,train,embed,eval,compare,grid}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import data as kdata
from .evaluation import fit_frozen, grid_search, knn_classify, make_synthetic
from .exceptions import KMPError
from .model import embed_oos, embed_train, load, save
from .optimizer import KMPConfig, fit

logger = logging.getLogger("kmp")

SUBSYSTEMS = ("gmm", "synth", "split", "cv")


def subsystem_seed(seed: int, name: str) -> int:
    """Deterministic per-subsystem seed derived from the single ``--seed`` flag."""
    ss = np.random.SeedSequence([int(seed), SUBSYSTEMS.index(name)])
    return int(ss.generate_state(1)[0])


def _sigma(value: str):
    if value.lower() in ("auto", "median"):
        return None
    out = float(value)
    if not out > 0:
        raise argparse.ArgumentTypeError(f"sigma must be positive or 'auto', got {value}")
    return out


def _add_hyper(p):
    g = p.add_argument_group("hyperparameters")
    g.add_argument("--dim", "-d", type=int, default=10, help="embedding dimension d")
    g.add_argument("--r", type=float, default=5.0, help="weight exponent r > 1 (default 5)")
    g.add_argument("--clusters", "-G", type=int, default=10, help="GMM clusters per view")
    g.add_argument("--max-atoms", "--epsilon", type=int, default=10, dest="max_atoms",
                   help="OMP sparsity budget")
    g.add_argument("--sigma", type=_sigma, nargs="+", default=None,
                   help="RBF bandwidth per view, or 'auto' for the median heuristic")
    g.add_argument("--ridge", type=float, default=1e-8)
    g.add_argument("--rank-tol", type=float, default=1e-3, dest="rank_tol")
    g.add_argument("--tol", type=float, default=1e-6)
    g.add_argument("--max-iters", type=int, default=50, dest="max_iters")
    g.add_argument("--seed", type=int, default=0)


def _config(args) -> KMPConfig:
    cfg = KMPConfig(d=args.dim, r=args.r, n_clusters=args.clusters, max_atoms=args.max_atoms,
                    sigmas=args.sigma, ridge=args.ridge, rank_tol=args.rank_tol,
                    max_iter=args.max_iters, tol=args.tol,
                    seed=subsystem_seed(args.seed, "gmm"))
    return cfg.validate()


def _write_report(path, rows):
    lines = ["method,d,accuracy,seconds"]
    lines += [f"{m},{d},{acc!r},{sec:.6f}" for m, d, acc, sec in rows]
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _write_plot_coords(path, Y, labels):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# dim1,dim2,label\n")
        for row, lab in zip(Y, labels):
            second = repr(float(row[1])) if Y.shape[1] > 1 else "0.0"
            fh.write(f"{float(row[0])!r},{second},{lab}\n")


# ---------------------------------------------------------------- commands

def cmd_synth(args):
    noise = args.noise if len(args.noise) > 1 else args.noise * args.views
    ds = make_synthetic(args.classes, args.per_class, args.views, noise,
                        seed=subsystem_seed(args.seed, "synth"), dims=args.dims)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    m = ds.n_views
    kdata.save_views(ds, [out / f"view{i + 1}.csv" for i in range(m)], out / "labels.txt")
    if args.split is not None:
        train, test = kdata.split(ds, args.split, subsystem_seed(args.seed, "split"))
        for name, part in (("train", train), ("test", test)):
            kdata.save_views(part, [out / f"{name}_view{i + 1}.csv" for i in range(m)],
                             out / f"{name}_labels.txt")
    logger.info("wrote %d samples x %d views to %s", ds.n_samples, m, out)


def cmd_train(args):
    ds = kdata.load_views(args.views)
    cfg = _config(args)
    model, report = fit(ds, cfg)
    save(model, args.out)
    if args.log:
        Path(args.log).write_text(report.to_log(), encoding="utf-8")
    logger.info("alpha=%s iterations=%d converged=%s", model.alpha.tolist(),
                report.iterations_used, report.converged)


def cmd_embed(args):
    model = load(args.model)
    ds = kdata.load_views(args.views)
    Y = embed_oos(model, ds.views)
    kdata.write_matrix(args.out, Y)


def cmd_eval(args):
    model = load(args.model)
    train_labels = kdata.read_labels(args.train_labels)
    test = kdata.load_views(args.test_views, args.test_labels)
    start = time.perf_counter()
    Ytr = embed_train(model)
    Yte = embed_oos(model, test.views)
    res = knn_classify(Ytr, train_labels, Yte, test.labels, k=args.k)
    _write_report(args.report, [("kmp", model.n_components, res.accuracy,
                                 time.perf_counter() - start)])
    if args.plot_coords:
        _write_plot_coords(args.plot_coords, Yte, test.labels)


def _train_test(args):
    if args.test_views:
        if not args.test_labels:
            raise KMPError("--test-views requires --test-labels")
        train = kdata.load_views(args.views, args.labels)
        test = kdata.load_views(args.test_views, args.test_labels)
    else:
        ds = kdata.load_views(args.views, args.labels)
        train, test = kdata.split(ds, args.train_fraction, subsystem_seed(args.seed, "split"))
    return train, test


def cmd_compare(args):
    train, test = _train_test(args)
    cfg = _config(args)
    rows = []
    methods = [("kmp", None, None), ("am", "weighted", None), ("gm", "geometric", None)]
    methods += [(f"view{i + 1}", "weighted", [i]) for i in range(train.n_views)]
    for name, fusion, views in methods:
        start = time.perf_counter()
        if fusion is None:
            model, _ = fit(train, cfg)
        else:
            model = fit_frozen(train, cfg, fusion=fusion, views=views)
        idx = range(train.n_views) if views is None else views
        Ytr = embed_train(model)
        Yte = embed_oos(model, [test.views[i] for i in idx])
        res = knn_classify(Ytr, train.labels, Yte, test.labels, k=args.k)
        rows.append((name, cfg.d, res.accuracy, time.perf_counter() - start))
        if args.plot_coords:
            _write_plot_coords(f"{args.plot_coords}_{name}.csv", Yte, test.labels)
    _write_report(args.out, rows)


def cmd_grid(args):
    ds = kdata.load_views(args.views, args.labels)
    grids = {"r": args.r_grid, "n_clusters": args.clusters_grid,
             "max_atoms": args.atoms_grid, "sigma_scale": args.sigma_scale_grid}
    cfg = _config(args)
    best, table = grid_search(ds, grids, folds=args.folds,
                              seed=subsystem_seed(args.seed, "cv"), base=cfg, k=args.k)
    lines = ["r,n_clusters,max_atoms,sigma_scale,cv_accuracy"]
    for params, score in table:
        lines.append(f"{params['r']!r},{params['n_clusters']},{params['max_atoms']},"
                     f"{params['sigma_scale']!r},{score!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    sys.stderr.write("best: " + json.dumps(best, sort_keys=True) + "\n")


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kmp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic multiview dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--views", type=int, default=2)
    p.add_argument("--dims", type=int, nargs="+", default=None)
    p.add_argument("--noise", type=float, nargs="+", default=[0.2],
                   help="noise per view in units of class-centre spacing")
    p.add_argument("--split", type=float, default=None,
                   help="also write a train/test split with this train fraction")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit a model and save it")
    p.add_argument("--views", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="write the per-iteration history here")
    _add_hyper(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("embed", help="embed samples with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--views", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("eval", help="k-NN accuracy of a saved model on a test set")
    p.add_argument("--model", required=True)
    p.add_argument("--train-labels", required=True)
    p.add_argument("--test-views", nargs="+", required=True)
    p.add_argument("--test-labels", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--report")
    p.add_argument("--plot-coords")
    p.set_defaults(func=cmd_eval)

    for name, helptext in (("compare", "KMP vs AM/GM fusion vs single views"),
                           ("grid", "cross-validated hyperparameter search")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--views", nargs="+", required=True)
        p.add_argument("--labels", required=True)
        p.add_argument("--k", type=int, default=1)
        p.add_argument("--out")
        _add_hyper(p)
        if name == "compare":
            p.add_argument("--test-views", nargs="+")
            p.add_argument("--test-labels")
            p.add_argument("--train-fraction", type=float, default=0.5)
            p.add_argument("--plot-coords", help="prefix for per-method coordinate files")
            p.set_defaults(func=cmd_compare)
        else:
            p.add_argument("--folds", type=int, default=10)
            p.add_argument("--r-grid", type=float, nargs="+", default=[5.0])
            p.add_argument("--clusters-grid", type=int, nargs="+", default=[10])
            p.add_argument("--atoms-grid", type=int, nargs="+", default=[10])
            p.add_argument("--sigma-scale-grid", type=float, nargs="+", default=[1.0])
            p.set_defaults(func=cmd_grid)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args.func(args)
    except (KMPError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        sys.stderr.write(f"kmp: error: {msg}\n")
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
