"""Cross-validated link-prediction evaluation of fitted matrices.

Scores are the model's bilinear score (the argument of the activation).
Precision-recall curves treat runs of equal scores as one tie block whose
positives and negatives accrue linearly; between achieved points the curve is
interpolated linearly in TP/FP space, and the area is integrated exactly.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple

import numpy as np

from ._accel import thread_cap
from .errors import DomainError, FeatnetError
from .estimators import (EstimatorConfig, Examples, LlamaConfig, example_scores, fit)
from .model import FeatureAssignment, FeatureGraph, InteractionMatrix
from .sampling import as_seed_sequence, sample_non_arcs

log = logging.getLogger(__name__)

NEGATIVE_DOMAINS = ("test-induced", "global")
PLOT_POINTS = 100


# --------------------------------------------------------------------------
# folds


@dataclass
class FoldAssignment:
    k: int
    fold_of: np.ndarray

    def members(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.k)


def split_folds(n: int, k: int, seed=0) -> FoldAssignment:
    """Uniformly random partition of ``0..n-1`` into ``k`` near-equal folds."""
    if k < 2:
        raise DomainError(f"need at least 2 folds, got {k}")
    if k > n:
        raise DomainError(f"cannot split {n} nodes into {k} folds")
    perm = np.random.default_rng(as_seed_sequence(seed)).permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = np.arange(n) % k
    return FoldAssignment(k, fold_of)


class InducedSplit(NamedTuple):
    graph: FeatureGraph
    features: FeatureAssignment
    nodes: np.ndarray


def induce_training(g: FeatureGraph, z: FeatureAssignment, folds: FoldAssignment,
                    test_fold: int) -> InducedSplit:
    """Training view: nodes outside ``test_fold``, re-indexed densely.

    ``nodes[new_id]`` gives the original id.
    """
    if not 0 <= test_fold < folds.k:
        raise DomainError(f"test fold {test_fold} outside 0..{folds.k - 1}")
    nodes = np.flatnonzero(folds.fold_of != test_fold)
    return InducedSplit(g.induced(nodes), z.restrict(nodes), nodes)


def build_test_pairs(g: FeatureGraph, folds: FoldAssignment, test_fold: int,
                     negative_domain: str = "test-induced", seed=0) -> Examples:
    """Arcs inside the test fold plus as many uniformly drawn non-arcs.

    Non-arcs come from test x test pairs (``test-induced``) or from all of
    N x N (``global``).
    """
    if negative_domain not in NEGATIVE_DOMAINS:
        raise DomainError(f"unknown negative domain {negative_domain!r}")
    if not 0 <= test_fold < folds.k:
        raise DomainError(f"test fold {test_fold} outside 0..{folds.k - 1}")
    inside = folds.fold_of == test_fold
    src, dst = g.arcs()
    keep = inside[src] & inside[dst]
    ps, pd = src[keep], dst[keep]
    if ps.shape[0] == 0:
        raise DomainError(f"fold {test_fold} contains no internal arcs")
    domain = np.flatnonzero(inside) if negative_domain == "test-induced" else None
    rng = np.random.default_rng(as_seed_sequence(seed))
    ns, nd = sample_non_arcs(g, ps.shape[0], rng, domain)
    label = np.concatenate([np.ones(ps.shape[0], dtype=np.int8),
                            -np.ones(ns.shape[0], dtype=np.int8)])
    return Examples(np.concatenate([ps, ns]), np.concatenate([pd, nd]), label)


# --------------------------------------------------------------------------
# scoring


class ScoredPair(NamedTuple):
    src: int
    dst: int
    score: float
    label: int


@dataclass
class ScoredPairs:
    src: np.ndarray
    dst: np.ndarray
    score: np.ndarray
    label: np.ndarray

    def __len__(self):
        return int(self.score.shape[0])

    def __iter__(self) -> Iterator[ScoredPair]:
        for row in zip(self.src.tolist(), self.dst.tolist(), self.score.tolist(),
                       self.label.tolist()):
            yield ScoredPair(*row)


def score_pairs(examples: Examples, z: FeatureAssignment, w: InteractionMatrix,
                known: np.ndarray | None = None) -> ScoredPairs:
    """Model scores for labeled pairs.

    Features flagged False in ``known`` (never seen in training) contribute
    nothing, whatever ``w`` holds for them.
    """
    if z.m > w.m:
        raise DomainError(f"assignment uses {z.m} features but W has m={w.m}")
    if known is not None:
        known = np.ascontiguousarray(known, dtype=np.bool_)
    s = example_scores(w, examples, z, known)
    return ScoredPairs(np.asarray(examples.src), np.asarray(examples.dst), s,
                       np.asarray(examples.label))


# --------------------------------------------------------------------------
# precision-recall


@dataclass
class PrCurve:
    """Precision-recall curve.

    ``points`` is a (k, 2) array of (recall, precision) for plotting: the
    recall-0 start, every tie-block boundary and ``PLOT_POINTS`` evenly
    spaced recall levels. ``tp``/``fp`` hold the cumulative counts at block
    boundaries (starting at 0) and are what :func:`aupr` integrates.
    """

    points: np.ndarray
    positives: int
    negatives: int
    tp: np.ndarray
    fp: np.ndarray

    @property
    def recall(self):
        return self.points[:, 0]

    @property
    def precision(self):
        return self.points[:, 1]


def pr_curve_arrays(scores, labels) -> PrCurve:
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(labels) > 0
    if scores.shape != positive.shape:
        raise DomainError("scores and labels differ in length")
    if not np.all(np.isfinite(scores)):
        raise DomainError("scores must be finite")
    n_pos = int(positive.sum())
    if n_pos == 0:
        raise DomainError("a precision-recall curve needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = positive[order]
    starts = np.flatnonzero(np.concatenate([[True], s[1:] != s[:-1]]))
    block_pos = np.add.reduceat(y.astype(np.int64), starts)
    block_len = np.diff(np.append(starts, s.shape[0]))
    tp = np.concatenate([[0], np.cumsum(block_pos)])
    fp = np.concatenate([[0], np.cumsum(block_len - block_pos)])

    first = int(np.flatnonzero(block_pos > 0)[0])
    p0 = block_pos[first] / block_len[first] if fp[first] == 0 else 0.0
    ends = np.column_stack([tp[1:] / n_pos, tp[1:] / (tp[1:] + fp[1:])])

    r = np.linspace(0.0, 1.0, PLOT_POINTS)[1:]
    target = r * n_pos
    b = np.searchsorted(tp[1:], target, side="left")
    t0, f0 = tp[b], fp[b]
    frac = (target - t0) / (tp[b + 1] - t0)
    fp_at = f0 + frac * (fp[b + 1] - f0)
    interp = np.column_stack([r, target / (target + fp_at)])

    pts = np.vstack([[[0.0, p0]], ends, interp])
    pts = np.unique(pts, axis=0)
    pts = pts[np.lexsort((-pts[:, 1], pts[:, 0]))]
    return PrCurve(pts, n_pos, int(scores.shape[0] - n_pos), tp, fp)


def pr_curve(scored: ScoredPairs) -> PrCurve:
    return pr_curve_arrays(scored.score, scored.label)


def aupr(curve: PrCurve) -> float:
    """Exact area under the TP/FP-interpolated precision-recall curve."""
    tp0, fp0 = curve.tp[:-1].astype(np.float64), curve.fp[:-1].astype(np.float64)
    p = np.diff(curve.tp).astype(np.float64)
    q = np.diff(curve.fp).astype(np.float64)
    d = p + q
    c = tp0 + fp0
    area = p / np.where(d > 0, d, 1.0)
    tail = c > 0
    corr = np.zeros_like(area)
    corr[tail] = ((tp0[tail] * q[tail] - p[tail] * fp0[tail]) / d[tail] ** 2
                  * np.log1p(d[tail] / c[tail]))
    area = np.where(p > 0, area + corr, 0.0) * p / curve.positives
    return float(min(1.0, max(0.0, area.sum())))


# --------------------------------------------------------------------------
# cross-validation


@dataclass
class EvalReport:
    per_fold_aupr: list
    mean: float
    std: float
    folds: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    negative_domain: str = "test-induced"
    estimator: str = "llama"
    curves: list = field(default_factory=list)
    scored: list = field(default_factory=list)

    @classmethod
    def from_folds(cls, folds, values, **extra):
        values = [float(v) for v in values]
        arr = np.array(values) if values else np.array([np.nan])
        return cls(values, float(arr.mean()), float(arr.std()), list(folds), **extra)

    def to_dict(self):
        return {
            "estimator": self.estimator,
            "negative_domain": self.negative_domain,
            "folds": self.folds,
            "per_fold_aupr": self.per_fold_aupr,
            "mean": self.mean,
            "std": self.std,
            "skipped": [{"fold": f, "reason": r} for f, r in self.skipped],
        }


def _training_order(ordering, nodes):
    if isinstance(ordering, str):
        return ordering
    order = np.asarray(ordering, dtype=np.int64)
    new_id = np.full(max(int(order.max()) + 1, int(nodes.max()) + 1), -1, dtype=np.int64)
    new_id[nodes] = np.arange(nodes.shape[0])
    mapped = new_id[order]
    return mapped[mapped >= 0]


def _run_fold(g, z, cfg, folds, fold, fold_seed, negative_domain, keep):
    fit_ss, test_ss = fold_seed.spawn(2)
    train = induce_training(g, z, folds, fold)
    llama = replace(cfg.llama, seed=fit_ss,
                    ordering=_training_order(cfg.llama.ordering, train.nodes))
    try:
        test = build_test_pairs(g, folds, fold, negative_domain, test_ss)
        w, _ = fit(train.graph, train.features, replace(cfg, llama=llama))
    except FeatnetError as exc:
        return fold, None, str(exc), None, None
    known = train.features.owner_counts() > 0
    scored = score_pairs(test, z, w, known)
    curve = pr_curve(scored)
    return fold, aupr(curve), None, curve if keep else None, scored if keep else None


def cross_validate(g: FeatureGraph, z: FeatureAssignment, cfg: EstimatorConfig,
                   k: int = 10, seed=0, negative_domain: str = "test-induced",
                   keep_curves: bool = False, workers: int | None = None) -> EvalReport:
    """k-fold node cross-validation of one estimator.

    For every fold: fit on the graph induced by the other folds, score the
    test pairs, take the AUPR. Folds without internal arcs (or whose
    training graph cannot be fitted) are skipped and listed in the report.
    ``std`` is the population standard deviation over evaluated folds.
    """
    if g.n != z.n:
        raise DomainError("graph and assignment disagree on node count")
    if negative_domain not in NEGATIVE_DOMAINS:
        raise DomainError(f"unknown negative domain {negative_domain!r}")
    split_ss, *fold_ss = as_seed_sequence(seed).spawn(k + 1)
    folds = split_folds(g.n, k, split_ss)
    workers = min(workers or thread_cap(), k)
    jobs = [(g, z, cfg, folds, f, fold_ss[f], negative_domain, keep_curves) for f in range(k)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda a: _run_fold(*a), jobs))
    else:
        results = [_run_fold(*a) for a in jobs]

    done, values, skipped, curves, scored = [], [], [], [], []
    for fold, value, reason, curve, sp in results:
        if value is None:
            log.warning("fold %d skipped: %s", fold, reason)
            skipped.append((fold, reason))
            continue
        done.append(fold)
        values.append(value)
        curves.append(curve)
        scored.append(sp)
    return EvalReport.from_folds(done, values, skipped=skipped,
                                 negative_domain=negative_domain, estimator=cfg.name,
                                 curves=curves if keep_curves else [],
                                 scored=scored if keep_curves else [])


def explainability(g: FeatureGraph, z: FeatureAssignment,
                   llama: LlamaConfig = LlamaConfig(), k: int = 10, seed=0,
                   negative_domain: str = "test-induced", **kwargs) -> EvalReport:
    """Cross-validated AUPR of Llama's scores; ``report.mean`` is the headline."""
    return cross_validate(g, z, EstimatorConfig("llama", llama), k, seed,
                          negative_domain, **kwargs)
