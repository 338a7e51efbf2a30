"""Command-line interface: ``featnet {generate,fit,evaluate,explain,curve}``.

Exit codes: 0 success, 1 usage error (bad flag or parameter value),
2 data error (unreadable or malformed input, infeasible request).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import DataFormatError, DomainError, FeatnetError
from .estimators import AddOne, EstimatorConfig, Floor, LlamaConfig, fit
from .evaluation import NEGATIVE_DOMAINS, cross_validate, pr_curve_arrays, aupr
from .synthgen import FAMILIES, GraphFamilySpec, IbpParams, generate_family

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _dataset_args(p):
    p.add_argument("--edges", required=True, type=Path, help="arc list TSV")
    p.add_argument("--features", required=True, type=Path, help="node-feature TSV")
    p.add_argument("--nodes", type=Path, help="node dictionary TSV (dense_id, label)")
    p.add_argument("--feature-dict", type=Path, help="feature dictionary TSV")
    p.add_argument("--mapping-dir", type=Path, help="write id dictionaries here")


def _estimator_args(p, choose=True):
    if choose:
        p.add_argument("--estimator", choices=("naive", "llama", "perceptron"),
                       default="llama")
    p.add_argument("--kappa", type=float, default=1.5)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--smoothing", choices=("floor", "add-one"), default="floor")
    p.add_argument("--floor", type=float, default=-50.0, help="Floor smoothing value")
    p.add_argument("--normalization", choices=("none", "row-l2"), default="none")
    p.add_argument("--ordering", default="random",
                   help="random, natural, or a file listing node labels in order")
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="featnet", description="Feature-feature link models for graphs.")
    top.add_argument("-v", "--verbose", action="store_true")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic dataset")
    g.add_argument("--family", choices=sorted(FAMILIES), required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--alpha", type=float, default=3.0)
    g.add_argument("--beta", type=float, default=0.5)
    g.add_argument("--c", type=float, default=0.0)
    g.add_argument("--out", type=Path, default=Path("."))

    f = sub.add_parser("fit", help="fit W and write it as TSV")
    _dataset_args(f)
    _estimator_args(f)
    f.add_argument("--out", type=Path, required=True)
    f.add_argument("--diagnostics", type=Path)

    for name, helptext in (("evaluate", "cross-validated AUPR"),
                           ("explain", "explainability of the features (Llama)")):
        e = sub.add_parser(name, help=helptext)
        _dataset_args(e)
        _estimator_args(e, choose=name == "evaluate")
        e.add_argument("--folds", type=int, default=10)
        e.add_argument("--negative-domain", choices=NEGATIVE_DOMAINS, default="test-induced")
        e.add_argument("--report", type=Path)
        e.add_argument("--curves-dir", type=Path)

    c = sub.add_parser("curve", help="precision-recall curve of a scored-pairs file")
    c.add_argument("--scored", type=Path, required=True,
                   help="TSV: src, dst, score, label (1 or -1)")
    c.add_argument("--out", type=Path, required=True)
    return top


def _ordering(args, node_labels):
    if args.ordering in ("random", "natural"):
        return args.ordering
    index = {lab: i for i, lab in enumerate(node_labels)}
    order = []
    for no, (label,) in io._rows(args.ordering, 1):
        if label not in index:
            raise DataFormatError(f"unknown node {label!r}", args.ordering, no)
        order.append(index[label])
    if len(set(order)) != len(order) or len(order) != len(node_labels):
        raise DataFormatError("ordering must list every node exactly once", args.ordering)
    return np.array(order, dtype=np.int64)


def _config(args, name, ordering="random") -> EstimatorConfig:
    smoothing = AddOne() if args.smoothing == "add-one" else Floor(args.floor)
    llama = LlamaConfig(args.kappa, args.normalization, ordering, args.seed, args.symmetric)
    return EstimatorConfig(name, llama, smoothing, args.lam)


def _load(args):
    paths = io.DatasetPaths(args.edges, args.features, args.nodes, args.feature_dict)
    data = io.load_dataset(paths, args.mapping_dir)
    args.data_loaded = True
    return data


def cmd_generate(args):
    if args.n < 1 or args.count < 1:
        raise DomainError("--n and --count must be positive")
    ibp = IbpParams(args.alpha, args.beta, args.c)
    spec = GraphFamilySpec.named(args.family, args.n, args.seed, ibp)
    for r, rep in enumerate(generate_family(spec, args.count)):
        out = args.out if args.count == 1 else args.out / f"rep{r}"
        io.save_dataset(rep.graph, rep.features, out)
        io.save_matrix(rep.w, out / "w_true.tsv")
        print(f"{out}: n={rep.graph.n} m={rep.features.m} arcs={rep.graph.num_arcs}")


def cmd_fit(args):
    _config(args, args.estimator)
    data = _load(args)
    cfg = _config(args, args.estimator, _ordering(args, data.node_labels))
    w, diag = fit(data.graph, data.features, cfg)
    io.ensure_parent(args.out)
    io.save_matrix(w, args.out)
    if args.diagnostics:
        io.ensure_parent(args.diagnostics)
        io.save_json(diag.to_dict(), args.diagnostics)
    print(f"wrote {args.out} (m={w.m}, mistakes={diag.mistakes}, "
          f"examples={diag.examples_seen})")


def cmd_evaluate(args, name=None):
    name = name or args.estimator
    _config(args, name)
    if args.folds < 2:
        raise DomainError("--folds must be at least 2")
    data = _load(args)
    cfg = _config(args, name, _ordering(args, data.node_labels))
    report = cross_validate(data.graph, data.features, cfg, args.folds, args.seed,
                            args.negative_domain, keep_curves=args.curves_dir is not None)
    if args.report:
        io.ensure_parent(args.report)
        io.save_report(report, args.report)
    if args.curves_dir:
        args.curves_dir.mkdir(parents=True, exist_ok=True)
        for fold, curve in zip(report.folds, report.curves):
            io.save_curve(curve, args.curves_dir / f"fold{fold}.csv")
    if not report.folds:
        raise DataFormatError("every fold was skipped: " + report.skipped[0][1])
    print(f"{name} AUPR {report.mean:.4f} ± {report.std:.4f} over {len(report.folds)} folds")


def cmd_curve(args):
    _, _, score, label = io.load_scored(args.scored)
    if not (label > 0).any():
        raise DataFormatError("no positive pairs", args.scored)
    curve = pr_curve_arrays(score, label)
    io.ensure_parent(args.out)
    io.save_curve(curve, args.out)
    print(f"AUPR {aupr(curve)!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handlers = {"generate": cmd_generate, "fit": cmd_fit, "evaluate": cmd_evaluate,
                "explain": lambda a: cmd_evaluate(a, "llama"), "curve": cmd_curve}
    try:
        handlers[args.command](args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DomainError as exc:
        # parameters are validated before any file is read
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA if getattr(args, "data_loaded", False) else EXIT_USAGE
    except (FeatnetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK
