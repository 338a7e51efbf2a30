"""Estimating the latent feature-feature matrix from arcs and features.

Three estimators share one balanced example sequence:

* ``naive_estimate`` -- log of the fraction of (N_h x N_k) pairs that are arcs;
* ``llama_fit`` -- single-pass passive-aggressive learner (Llama);
* ``perceptron_fit`` -- mistake-driven perceptron baseline.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Iterator, NamedTuple, Union

import numpy as np

from . import kernels
from .errors import DomainError, FeatnetError, InfeasibleSamplingError
from .model import (DEFAULT_DENSE_BUDGET, FeatureAssignment, FeatureGraph,
                    InteractionMatrix, _index_dtype)
from .sampling import as_seed_sequence, sample_non_arcs

_UNBOUNDED = 2**62


class SkippedExample(FeatnetError):
    """An example whose source or destination has no features."""


class LabeledExample(NamedTuple):
    src: int
    dst: int
    label: int


@dataclass
class Examples:
    """Columnar sequence of labeled node pairs (label +1 arc, -1 non-arc)."""

    src: np.ndarray
    dst: np.ndarray
    label: np.ndarray

    def __len__(self):
        return int(self.src.shape[0])

    def __iter__(self) -> Iterator[LabeledExample]:
        for s, d, y in zip(self.src.tolist(), self.dst.tolist(), self.label.tolist()):
            yield LabeledExample(s, d, y)

    def __getitem__(self, t) -> LabeledExample:
        return LabeledExample(int(self.src[t]), int(self.dst[t]), int(self.label[t]))

    @classmethod
    def from_list(cls, items):
        items = list(items)
        arr = np.array(items, dtype=np.int64).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2].astype(np.int8))


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Floor:
    """Zero co-occurrence pairs get a fixed large negative weight."""

    value: float = -50.0

    def __post_init__(self):
        if not (np.isfinite(self.value) and self.value < 0):
            raise DomainError(f"floor must be finite and negative, got {self.value}")


@dataclass(frozen=True)
class AddOne:
    """Use ``log(1 + p)`` in place of ``log(p)``."""


NaiveSmoothing = Union[Floor, AddOne]


@dataclass(frozen=True, eq=False)
class LlamaConfig:
    kappa: float = 1.5
    normalization: str = "none"
    ordering: object = "random"
    seed: object = 0
    symmetric: bool = False

    def __post_init__(self):
        if not (self.kappa > 0 and np.isfinite(self.kappa)):
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if self.normalization not in ("none", "row-l2"):
            raise DomainError(f"unknown normalization {self.normalization!r}")


@dataclass
class FitDiagnostics:
    mistakes: int = 0
    radius_sq: int = 0
    examples_seen: int = 0
    skipped: int = 0
    wall_time: float = 0.0

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class EstimatorConfig:
    """Which estimator to run and with what parameters."""

    name: str = "llama"
    llama: LlamaConfig = field(default_factory=LlamaConfig)
    smoothing: NaiveSmoothing = field(default_factory=Floor)
    lam: float = 1.0
    budget: int = DEFAULT_DENSE_BUDGET

    def __post_init__(self):
        if self.name not in ("naive", "llama", "perceptron"):
            raise DomainError(f"unknown estimator {self.name!r}")
        if not 0 < self.lam <= 1:
            raise DomainError(f"learning rate must lie in (0, 1], got {self.lam}")


# --------------------------------------------------------------------------
# example sequence


def node_order(n: int, ordering, rng: np.random.Generator) -> np.ndarray:
    if isinstance(ordering, str):
        if ordering == "random":
            return rng.permutation(n).astype(np.int64)
        if ordering == "natural":
            return np.arange(n, dtype=np.int64)
        raise DomainError(f"unknown ordering {ordering!r}")
    order = np.asarray(ordering, dtype=np.int64)
    if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
        raise DomainError("explicit node order must be a permutation of 0..n-1")
    return order


@dataclass
class ExampleSequence:
    """The training sequence kept in grouped form.

    For each node of ``order`` its arcs (CSR of the graph) come first, then
    its sampled non-arcs (``neg_indptr``/``neg_indices``).
    """

    order: np.ndarray
    pos_indptr: np.ndarray
    pos_indices: np.ndarray
    neg_indptr: np.ndarray
    neg_indices: np.ndarray

    def __len__(self):
        return int(self.pos_indices.shape[0] + self.neg_indices.shape[0])

    def materialize(self) -> Examples:
        pos_deg = np.diff(self.pos_indptr)[self.order]
        neg_deg = np.diff(self.neg_indptr)[self.order]
        total = len(self)
        src = np.repeat(np.repeat(self.order, 2), np.ravel(np.column_stack([pos_deg, neg_deg])))
        label = np.repeat(np.tile(np.array([1, -1], dtype=np.int8), self.order.shape[0]),
                          np.ravel(np.column_stack([pos_deg, neg_deg])))
        dst = np.empty(total, dtype=np.int64)
        at = 0
        for i in self.order.tolist():
            lo, hi = self.pos_indptr[i], self.pos_indptr[i + 1]
            dst[at:at + hi - lo] = self.pos_indices[lo:hi]
            at += hi - lo
            lo, hi = self.neg_indptr[i], self.neg_indptr[i + 1]
            dst[at:at + hi - lo] = self.neg_indices[lo:hi]
            at += hi - lo
        return Examples(src.astype(np.int64), dst, label)


def sequence_parts(g: FeatureGraph, ordering="random", seed=0) -> ExampleSequence:
    """Balanced sequence: every arc once, plus |A| distinct uniform non-arcs."""
    if g.num_arcs < 1:
        raise DomainError("the example sequence needs at least one arc")
    if g.num_arcs > g.n * g.n - g.num_arcs:
        raise InfeasibleSamplingError(
            f"{g.num_arcs} arcs exceed the {g.n * g.n - g.num_arcs} available non-arcs")
    order_ss, neg_ss = as_seed_sequence(seed).spawn(2)
    order = node_order(g.n, ordering, np.random.default_rng(order_ss))
    src, dst = sample_non_arcs(g, g.num_arcs, np.random.default_rng(neg_ss))
    neg_indptr = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=g.n), out=neg_indptr[1:])
    return ExampleSequence(order, g.indptr, g.indices, neg_indptr,
                           dst.astype(_index_dtype(g.n)))


def build_example_sequence(g: FeatureGraph, ordering="random", seed=0) -> Examples:
    return sequence_parts(g, ordering, seed).materialize()


# --------------------------------------------------------------------------
# Naive


def naive_estimate(g: FeatureGraph, z: FeatureAssignment,
                   smoothing: NaiveSmoothing = Floor(),
                   budget: int = DEFAULT_DENSE_BUDGET) -> InteractionMatrix:
    """``W[h,k] = log(|(N_h x N_k) & A| / (|N_h| |N_k|))`` with smoothing.

    Zero counts (including features nobody owns) become ``smoothing.value``
    under Floor and 0 under AddOne, which uses ``log1p`` of the fraction.
    """
    if g.n != z.n:
        raise DomainError("graph and assignment disagree on node count")
    m = z.m
    counts = InteractionMatrix.zeros(m, budget=budget)
    limit = _UNBOUNDED if counts.is_dense else counts.max_size
    start = 0
    k = kernels.impl()
    while True:
        start, counts.size, need = k.cooccurrence_counts(
            start, g.indptr, g.indices, z.indptr, z.indices,
            counts.dense, counts.keys, counts.vals, m, counts.size, limit)
        if start >= g.n:
            break
        counts.reserve(need)
        limit = counts.max_size

    owners = z.owner_counts().astype(np.float64)
    floor = smoothing.value if isinstance(smoothing, Floor) else None
    if counts.is_dense:
        c = counts.dense
        denom = np.outer(owners, owners)
        frac = np.divide(c, denom, out=np.zeros_like(c), where=denom > 0)
        if floor is None:
            w = np.log1p(frac)
        else:
            w = np.full_like(c, floor)
            np.log(frac, out=w, where=c > 0)
        return InteractionMatrix(m, dense=w, fill=0.0 if floor is None else floor)

    occupied = counts.keys >= 0
    keys = counts.keys[occupied]
    h = keys // m
    frac = counts.vals[occupied] / (owners[h] * owners[keys - h * m])
    out = InteractionMatrix(m, keys=counts.keys, vals=counts.vals, size=counts.size,
                            fill=0.0 if floor is None else floor)
    out.vals[occupied] = np.log1p(frac) if floor is None else np.log(frac)
    return out


# --------------------------------------------------------------------------
# online learners


def _ids(f):
    return np.ascontiguousarray(np.asarray(list(f) if not isinstance(f, np.ndarray) else f),
                                dtype=np.int32)


def llama_step(w: InteractionMatrix, fi, fj, label: int, cfg: LlamaConfig = LlamaConfig()):
    """One passive-aggressive update of ``w`` in place.

    Returns ``(delta, updated)``. Raises :class:`SkippedExample` when either
    feature set is empty (the step size is undefined there).
    """
    fi, fj = _ids(fi), _ids(fj)
    if fi.size == 0 or fj.size == 0:
        raise SkippedExample("empty feature set")
    for ids in (fi, fj):
        if ids.min() < 0 or ids.max() >= w.m:
            raise DomainError(f"feature id out of range [0, {w.m})")
    if label not in (1, -1):
        raise DomainError(f"label must be +1 or -1, got {label}")
    w.reserve(2 * fi.size * fj.size)
    out = np.empty(2)
    w.size += kernels.impl().pa_example(
        fi, fj, int(label), *w.kernel_args(), float(cfg.kappa),
        cfg.normalization == "row-l2", bool(cfg.symmetric), 0, 0.0, out)
    return float(out[0]), bool(out[0] != 0.0)


def _online_pass(seq: ExampleSequence, z: FeatureAssignment, w: InteractionMatrix,
                 kappa: float, row_l2: bool, symmetric: bool, mode: int,
                 lam: float) -> FitDiagnostics:
    stats = np.zeros(4, dtype=np.int64)
    k = kernels.impl()
    limit = _UNBOUNDED if w.is_dense else w.max_size
    t = 0
    started = time.perf_counter()
    while True:
        t, w.size, need = k.pa_pass(
            seq.order, t, seq.pos_indptr, seq.pos_indices, seq.neg_indptr,
            seq.neg_indices, z.indptr, z.indices, *w.kernel_args(),
            float(kappa), bool(row_l2), bool(symmetric), int(mode), float(lam),
            w.size, limit, stats)
        if t >= seq.order.shape[0]:
            break
        w.reserve(need)
        limit = w.max_size
    return FitDiagnostics(mistakes=int(stats[0]), radius_sq=int(stats[1]),
                          examples_seen=int(stats[2]), skipped=int(stats[3]),
                          wall_time=time.perf_counter() - started)


def llama_fit(g: FeatureGraph, z: FeatureAssignment, cfg: LlamaConfig = LlamaConfig(),
              budget: int = DEFAULT_DENSE_BUDGET, sequence: ExampleSequence | None = None):
    """Fit ``W`` with Llama: ``W <- 0`` then one pass over the sequence.

    Returns ``(W, FitDiagnostics)``; mistakes count examples whose score
    before the update had the wrong sign (a score of exactly 0 predicts no
    arc). ``wall_time`` covers sequence construction and the pass.
    """
    if g.n != z.n:
        raise DomainError("graph and assignment disagree on node count")
    started = time.perf_counter()
    if sequence is None:
        sequence = sequence_parts(g, cfg.ordering, cfg.seed)
    w = InteractionMatrix.zeros(z.m, symmetric=cfg.symmetric, budget=budget)
    diag = _online_pass(sequence, z, w, cfg.kappa, cfg.normalization == "row-l2",
                        cfg.symmetric, 0, 0.0)
    diag.wall_time = time.perf_counter() - started
    return w, diag


def perceptron_fit(g: FeatureGraph, z: FeatureAssignment, lam: float = 1.0,
                   ordering="random", seed=0, symmetric: bool = False,
                   budget: int = DEFAULT_DENSE_BUDGET):
    """Perceptron on the same sequence: on a mistake add ``y * lam`` to F_i x F_j."""
    if not 0 < lam <= 1:
        raise DomainError(f"learning rate must lie in (0, 1], got {lam}")
    if g.n != z.n:
        raise DomainError("graph and assignment disagree on node count")
    started = time.perf_counter()
    seq = sequence_parts(g, ordering, seed)
    w = InteractionMatrix.zeros(z.m, symmetric=symmetric, budget=budget)
    diag = _online_pass(seq, z, w, 1.0, False, symmetric, 1, lam)
    diag.wall_time = time.perf_counter() - started
    return w, diag


def fit(g: FeatureGraph, z: FeatureAssignment, cfg: EstimatorConfig):
    """Run the configured estimator; Naive diagnostics only carry wall_time."""
    if cfg.name == "naive":
        started = time.perf_counter()
        w = naive_estimate(g, z, cfg.smoothing, cfg.budget)
        return w, FitDiagnostics(wall_time=time.perf_counter() - started)
    if cfg.name == "llama":
        return llama_fit(g, z, cfg.llama, cfg.budget)
    ll = cfg.llama
    return perceptron_fit(g, z, cfg.lam, ll.ordering, ll.seed, ll.symmetric, cfg.budget)


# --------------------------------------------------------------------------
# bound diagnostics


def example_scores(w: InteractionMatrix, examples: Examples, z: FeatureAssignment,
                   known: np.ndarray | None = None) -> np.ndarray:
    src = np.ascontiguousarray(examples.src, dtype=np.int64)
    dst = np.ascontiguousarray(examples.dst, dtype=np.int64)
    if known is None:
        known = np.ones(w.m, dtype=np.bool_)
    out = np.empty(src.shape[0])
    kernels.impl().score_pairs(src, dst, z.indptr, z.indices, known,
                               *w.kernel_args(), out)
    return out


def hinge_loss(w: InteractionMatrix, examples: Examples, z: FeatureAssignment) -> float:
    """``sum max(0, 1 - y * score)`` over the examples."""
    s = example_scores(w, examples, z)
    return float(np.maximum(0.0, 1.0 - examples.label * s).sum())


def radius_sq(examples: Examples, z: FeatureAssignment) -> int:
    """``max |F_i| |F_j|`` over the examples."""
    counts = z.feature_counts()
    if len(examples) == 0:
        return 0
    return int((counts[examples.src] * counts[examples.dst]).max())


def pa_mistake_bound(w_ref: InteractionMatrix, examples: Examples,
                     z: FeatureAssignment, kappa: float) -> float:
    """``max(R^2, 1/kappa) * (2 kappa H(U) + ||U||_F^2)`` for comparison matrix U."""
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    r2 = radius_sq(examples, z)
    return max(r2, 1.0 / kappa) * (2.0 * kappa * hinge_loss(w_ref, examples, z)
                                   + w_ref.frobenius_sq())
