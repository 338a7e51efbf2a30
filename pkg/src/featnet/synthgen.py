"""Synthetic feature-rich graphs.

Node features come from a three-parameter Indian Buffet Process, the latent
matrix from one of four i.i.d. entry laws, and arcs are drawn independently
per ordered pair (self-loops included) through the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import exp, lgamma

import numpy as np

from . import kernels
from .errors import DomainError
from .model import (ActivationSpec, ExpClipped, FeatureAssignment, FeatureGraph,
                    InteractionMatrix, Sigmoid, Step, _index_dtype)
from .sampling import as_seed_sequence

# rows realized per kernel call are capped so uniforms stay ~32 MB
_ROW_BLOCK_CELLS = 4_000_000


@dataclass(frozen=True)
class IbpParams:
    """Three-parameter IBP: mass ``alpha``, discount ``beta``, concentration ``c``.

    Customer ``i`` (1-based) takes an existing dish ``k`` with probability
    ``(m_k - beta) / (i - 1 + c)`` and then
    ``Poisson(alpha * G(1+c) G(i-1+c+beta) / (G(i+c) G(c+beta)))`` new dishes,
    ``G`` being the gamma function. ``beta = 0`` gives the two-parameter IBP,
    ``beta = 0, c = 1`` the original one-parameter IBP. Every customer's dish
    count is marginally Poisson(alpha).
    """

    alpha: float = 3.0
    beta: float = 0.5
    c: float = 0.0
    seed: object = 0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise DomainError(f"alpha must be non-negative, got {self.alpha}")
        if not 0 <= self.beta < 1:
            raise DomainError(f"beta must lie in [0, 1), got {self.beta}")
        if not self.c > -self.beta:
            raise DomainError(f"c must exceed -beta, got {self.c}")


def new_dish_rate(i: int, p: IbpParams) -> float:
    if p.alpha == 0:
        return 0.0
    a, s, c = p.alpha, p.beta, p.c
    return a * exp(lgamma(1 + c) + lgamma(i - 1 + c + s) - lgamma(i + c) - lgamma(c + s))


def ibp_sample(n: int, params: IbpParams) -> FeatureAssignment:
    if n < 1:
        raise DomainError(f"need at least one node, got {n}")
    rng = np.random.default_rng(as_seed_sequence(params.seed))
    dish_counts = np.zeros(64, dtype=np.float64)
    m = 0
    nodes, feats = [], []
    for i in range(1, n + 1):
        if m:
            probs = (dish_counts[:m] - params.beta) / (i - 1 + params.c)
            taken = np.flatnonzero(rng.random(m) < probs)
        else:
            taken = np.empty(0, dtype=np.int64)
        fresh = int(rng.poisson(new_dish_rate(i, params)))
        if m + fresh > dish_counts.shape[0]:
            dish_counts = np.concatenate([dish_counts, np.zeros(max(m + fresh, dish_counts.shape[0]))])
        dish_counts[taken] += 1
        dish_counts[m:m + fresh] = 1
        row = np.concatenate([taken, np.arange(m, m + fresh)])
        m += fresh
        nodes.append(np.full(row.shape[0], i - 1, dtype=np.int64))
        feats.append(row)
    return FeatureAssignment.from_pairs(n, m, np.concatenate(nodes), np.concatenate(feats))


def left_order_form(z: np.ndarray) -> np.ndarray:
    """Columns sorted as binary numbers read top-down, largest first."""
    z = np.asarray(z)
    if z.shape[1] == 0:
        return z
    return z[:, np.lexsort(-z[::-1])]


# --------------------------------------------------------------------------
# latent matrix laws


WDIST_NAMES = ("bernoulli-ten", "normal-matched", "bernoulli-one", "normal-matched-one")


@dataclass(frozen=True)
class WDistribution:
    """I.i.d. entry law for W.

    ``bernoulli-ten``: 10 w.p. 10/m, else -1. ``bernoulli-one``: 1 w.p. 1/m,
    else -1. The ``normal-matched`` variants are Gaussians with the same mean
    and variance as their Bernoulli counterpart.
    """

    name: str = "bernoulli-ten"

    def __post_init__(self):
        if self.name not in WDIST_NAMES:
            raise DomainError(f"unknown W distribution {self.name!r}")

    @property
    def high(self) -> float:
        return 10.0 if self.name in ("bernoulli-ten", "normal-matched") else 1.0

    def prob(self, m: int) -> float:
        if m < self.high:
            raise DomainError(f"{self.name} needs m >= {self.high:g}, got m={m}")
        return self.high / m

    def moments(self, m: int):
        """Mean and variance of one entry."""
        p = self.prob(m)
        hi = self.high
        mean = hi * p - (1 - p)
        var = (hi + 1) ** 2 * p * (1 - p)
        return mean, var


def sample_w(m: int, dist: WDistribution, seed=0) -> InteractionMatrix:
    p = dist.prob(m)
    rng = np.random.default_rng(as_seed_sequence(seed))
    if dist.name.startswith("bernoulli"):
        w = np.where(rng.random((m, m)) < p, dist.high, -1.0)
    else:
        mean, var = dist.moments(m)
        w = rng.normal(mean, np.sqrt(var), size=(m, m))
    return InteractionMatrix.from_dense(w)


# --------------------------------------------------------------------------
# realization


def realize_graph(z: FeatureAssignment, w: InteractionMatrix, spec: ActivationSpec,
                  seed=0) -> FeatureGraph:
    """Draw every ordered pair independently with its link probability.

    Rows are processed in blocks, so memory stays O(n + |A|) apart from one
    block of uniforms. A Step activation consumes no randomness.
    """
    if z.m != w.m:
        raise DomainError(f"assignment has m={z.m} but W has m={w.m}")
    n = z.n
    dense_w = w.to_dense()
    kind, p0, p1 = spec.kernel_args()
    rng = np.random.default_rng(as_seed_sequence(seed))
    block = max(1, _ROW_BLOCK_CELLS // max(n, 1))
    k = kernels.impl()
    dtype = _index_dtype(n)
    degrees = np.zeros(n, dtype=np.int64)
    chunks = []
    for r0 in range(0, n, block):
        r1 = min(n, r0 + block)
        if kind == kernels.STEP:
            uniforms = np.zeros((0, 0))
        else:
            uniforms = rng.random((r1 - r0, n))
        buf = np.empty((r1 - r0) * n, dtype=dtype)
        counts = np.zeros(r1 - r0, dtype=np.int64)
        used = k.realize_rows(r0, r1, z.indptr, z.indices, dense_w, kind, p0, p1,
                              uniforms, counts, buf)
        degrees[r0:r1] = counts
        chunks.append(buf[:used].copy())
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])
    indices = np.concatenate(chunks) if chunks else np.empty(0, dtype=dtype)
    return FeatureGraph(n, indptr, indices.astype(dtype, copy=False))


# --------------------------------------------------------------------------
# families


FAMILIES = {
    "sigmoid-bernoulli": (Sigmoid(0.0, 5.0), "bernoulli-ten"),
    "sigmoid-normal": (Sigmoid(0.0, 5.0), "normal-matched"),
    "chi-bernoulli": (Step(0.0), "bernoulli-ten"),
    "chi-normal": (Step(0.0), "normal-matched"),
    "exp-bernoulli": (ExpClipped(), "bernoulli-one"),
    "exp-normal": (ExpClipped(), "normal-matched-one"),
}


@dataclass(frozen=True, eq=False)
class GraphFamilySpec:
    n: int
    activation: ActivationSpec
    wdist: WDistribution
    ibp: IbpParams = field(default_factory=IbpParams)
    seed: object = 0

    @classmethod
    def named(cls, family: str, n: int, seed=0, ibp: IbpParams | None = None):
        if family not in FAMILIES:
            raise DomainError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
        act, dist = FAMILIES[family]
        return cls(n, act, WDistribution(dist), ibp or IbpParams(), seed)


@dataclass
class Replicate:
    features: FeatureAssignment
    w: InteractionMatrix
    graph: FeatureGraph

    def __iter__(self):
        return iter((self.features, self.w, self.graph))


def generate_one(spec: GraphFamilySpec, seed) -> Replicate:
    ibp_ss, w_ss, arc_ss = as_seed_sequence(seed).spawn(3)
    p = spec.ibp
    z = ibp_sample(spec.n, IbpParams(p.alpha, p.beta, p.c, ibp_ss))
    w = sample_w(z.m, spec.wdist, w_ss)
    g = realize_graph(z, w, spec.activation, arc_ss)
    return Replicate(z, w, g)


def generate_family(spec: GraphFamilySpec, count: int) -> list[Replicate]:
    """``count`` independent replicates, each seeded from ``spec.seed``."""
    if count < 1:
        raise DomainError(f"count must be at least 1, got {count}")
    seeds = as_seed_sequence(spec.seed).spawn(count)
    return [generate_one(spec, s) for s in seeds]
