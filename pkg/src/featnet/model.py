"""Feature-rich graph model: data types, scores and activation functions.

A pair of nodes (i, j) forms an arc with probability
``phi(sum_{h in F_i} sum_{k in F_j} W[h, k])`` where ``F_i`` is the feature
set of node ``i`` and ``W`` the latent feature-feature matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from . import kernels
from .errors import DomainError
from .kernels import _hash

DEFAULT_DENSE_BUDGET = 512 * 2**20
_MAX_LOAD = 0.6


# --------------------------------------------------------------------------
# activation functions


@dataclass(frozen=True)
class Sigmoid:
    theta: float = 0.0
    k: float = 5.0

    def __post_init__(self):
        if not (self.k > 0 and np.isfinite(self.k)):
            raise DomainError(f"sigmoid steepness must be positive, got {self.k}")

    def kernel_args(self):
        return kernels.SIGMOID, float(self.theta), float(self.k)


@dataclass(frozen=True)
class Step:
    """Indicator of ``x > threshold`` (strict)."""

    threshold: float = 0.0

    def kernel_args(self):
        return kernels.STEP, float(self.threshold), 0.0


@dataclass(frozen=True)
class ExpClipped:
    """``min(1, exp(x))``."""

    def kernel_args(self):
        return kernels.EXP_CLIPPED, 0.0, 0.0


ActivationSpec = Union[Sigmoid, Step, ExpClipped]


def activate(spec: ActivationSpec, x):
    """Map scores to link probabilities; works on scalars and arrays."""
    kind, p0, p1 = spec.kernel_args()
    out = kernels._vector.activation_array(kind, p0, p1, x)
    if np.ndim(x) == 0:
        return float(out)
    return out


# --------------------------------------------------------------------------
# CSR helpers


def _index_dtype(bound):
    return np.int32 if bound < 2**31 else np.int64


def _csr_from_pairs(n_rows, n_cols, rows, cols):
    """Deduplicated, row-sorted CSR; also returns the duplicate count."""
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    if rows.shape != cols.shape:
        raise DomainError("row and column arrays differ in length")
    if rows.size:
        if rows.min() < 0 or rows.max() >= n_rows:
            raise DomainError(f"row id out of range [0, {n_rows})")
        if cols.min() < 0 or cols.max() >= n_cols:
            raise DomainError(f"column id out of range [0, {n_cols})")
    keys = np.unique(rows * n_cols + cols)
    dupes = rows.size - keys.size
    r = keys // max(n_cols, 1)
    indices = (keys - r * n_cols).astype(_index_dtype(n_cols))
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=n_rows), out=indptr[1:])
    return indptr, indices, int(dupes)


def _transpose_csr(n_rows, n_cols, indptr, indices):
    rows = np.repeat(np.arange(n_rows, dtype=np.int64), np.diff(indptr))
    order = np.argsort(indices, kind="stable")
    t_indices = rows[order].astype(_index_dtype(n_rows))
    t_indptr = np.zeros(n_cols + 1, dtype=np.int64)
    np.cumsum(np.bincount(indices, minlength=n_cols), out=t_indptr[1:])
    return t_indptr, t_indices


# --------------------------------------------------------------------------
# graph


class FeatureGraph:
    """Directed graph on nodes ``0..n-1`` stored as sorted out-adjacency.

    Self-loops are allowed; duplicate arcs are not.
    """

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        if n < 0 or indptr.shape != (n + 1,) or indptr[-1] != indices.shape[0]:
            raise DomainError("inconsistent CSR arrays for graph")
        self.n = int(n)
        self.indptr = indptr
        self.indices = indices

    @classmethod
    def from_arcs(cls, n, src, dst):
        return cls.from_arcs_counted(n, src, dst)[0]

    @classmethod
    def from_arcs_counted(cls, n, src, dst):
        """Build from arc arrays; returns ``(graph, duplicate_count)``."""
        indptr, indices, dupes = _csr_from_pairs(n, n, src, dst)
        return cls(n, indptr, indices), dupes

    @classmethod
    def empty(cls, n):
        return cls(n, np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int32))

    @classmethod
    def from_dense(cls, adjacency):
        a = np.asarray(adjacency)
        src, dst = np.nonzero(a)
        return cls.from_arcs(a.shape[0], src, dst)

    @property
    def num_arcs(self) -> int:
        return int(self.indices.shape[0])

    def out_adj(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def arcs(self):
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        return src, self.indices.astype(np.int64)

    def arc_set(self) -> set:
        src, dst = self.arcs()
        return set(zip(src.tolist(), dst.tolist()))

    def has_arc(self, i: int, j: int) -> bool:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise DomainError(f"node id out of range [0, {self.n})")
        row = self.out_adj(i)
        p = np.searchsorted(row, j)
        return bool(p < row.shape[0] and row[p] == j)

    def has_arcs(self, src, dst) -> np.ndarray:
        src = np.ascontiguousarray(src, dtype=np.int64)
        dst = np.ascontiguousarray(dst, dtype=np.int64)
        out = np.empty(src.shape[0], dtype=np.bool_)
        kernels.impl().has_arcs(self.indptr, self.indices, src, dst, out)
        return out

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int8)
        src, dst = self.arcs()
        a[src, dst] = 1
        return a

    def induced(self, nodes) -> "FeatureGraph":
        """Subgraph on ``nodes`` (sorted, unique), re-indexed densely."""
        nodes = np.asarray(nodes, dtype=np.int64)
        new_id = np.full(self.n, -1, dtype=np.int64)
        new_id[nodes] = np.arange(nodes.shape[0])
        src, dst = self.arcs()
        keep = (new_id[src] >= 0) & (new_id[dst] >= 0)
        return FeatureGraph.from_arcs(nodes.shape[0], new_id[src[keep]], new_id[dst[keep]])

    def __eq__(self, other):
        if not isinstance(other, FeatureGraph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self):
        return f"FeatureGraph(n={self.n}, arcs={self.num_arcs})"


# --------------------------------------------------------------------------
# node-feature assignment


class FeatureAssignment:
    """Binary node-feature incidence: ``F_i`` per node and ``N_k`` per feature."""

    def __init__(self, n: int, m: int, indptr: np.ndarray, indices: np.ndarray):
        if indptr.shape != (n + 1,) or indptr[-1] != indices.shape[0]:
            raise DomainError("inconsistent CSR arrays for feature assignment")
        self.n = int(n)
        self.m = int(m)
        self.indptr = indptr
        self.indices = indices
        self._owners = None

    @classmethod
    def from_pairs(cls, n, m, nodes, features):
        return cls.from_pairs_counted(n, m, nodes, features)[0]

    @classmethod
    def from_pairs_counted(cls, n, m, nodes, features):
        indptr, indices, dupes = _csr_from_pairs(n, m, nodes, features)
        return cls(n, m, indptr, indices), dupes

    @classmethod
    def from_lists(cls, lists: Sequence[Iterable[int]], m: int | None = None):
        lists = [list(f) for f in lists]
        nodes = np.repeat(np.arange(len(lists)), [len(f) for f in lists])
        feats = np.fromiter((k for f in lists for k in f), dtype=np.int64,
                            count=int(nodes.shape[0]))
        if m is None:
            m = int(feats.max()) + 1 if feats.size else 0
        return cls.from_pairs(len(lists), m, nodes, feats)

    @classmethod
    def from_dense(cls, z):
        z = np.asarray(z)
        nodes, feats = np.nonzero(z)
        return cls.from_pairs(z.shape[0], z.shape[1], nodes, feats)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n)
        return cls.from_pairs(n, n, idx, idx)

    def features_of(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def _owner_csr(self):
        if self._owners is None:
            self._owners = _transpose_csr(self.n, self.m, self.indptr, self.indices)
        return self._owners

    def owners_of(self, k: int) -> np.ndarray:
        t_indptr, t_indices = self._owner_csr()
        return t_indices[t_indptr[k]:t_indptr[k + 1]]

    def feature_counts(self) -> np.ndarray:
        """``|F_i|`` for every node."""
        return np.diff(self.indptr)

    def owner_counts(self) -> np.ndarray:
        """``|N_k|`` for every feature."""
        return np.bincount(self.indices, minlength=self.m).astype(np.int64)

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def pairs(self):
        nodes = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        return nodes, self.indices.astype(np.int64)

    def to_dense(self) -> np.ndarray:
        z = np.zeros((self.n, self.m), dtype=np.int8)
        nodes, feats = self.pairs()
        z[nodes, feats] = 1
        return z

    def restrict(self, nodes) -> "FeatureAssignment":
        """Rows ``nodes`` in the given order; the feature space is kept."""
        nodes = np.asarray(nodes, dtype=np.int64)
        counts = self.indptr[nodes + 1] - self.indptr[nodes]
        indptr = np.zeros(nodes.shape[0] + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        starts = np.repeat(self.indptr[nodes] - indptr[:-1], counts)
        indices = self.indices[np.arange(indptr[-1]) + starts]
        return FeatureAssignment(nodes.shape[0], self.m, indptr, indices)

    def permute_nodes(self, perm) -> "FeatureAssignment":
        """Node ``i`` receives the feature set of node ``perm[i]``."""
        return self.restrict(perm)

    def __eq__(self, other):
        if not isinstance(other, FeatureAssignment):
            return NotImplemented
        return (self.n == other.n and self.m == other.m
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self):
        return f"FeatureAssignment(n={self.n}, m={self.m}, nnz={self.nnz})"


@dataclass
class WeightedAssignment:
    """Real-valued incidence with the same support as a FeatureAssignment."""

    n: int
    m: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    def entries(self, i: int) -> list[tuple[int, float]]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return list(zip(self.indices[lo:hi].tolist(), self.weights[lo:hi].tolist()))


def _check_p(p):
    if not p >= 1:
        raise DomainError(f"norm order p must be >= 1, got {p}")


def column_normalize(z: FeatureAssignment, p: float) -> WeightedAssignment:
    """Divide every column by its l^p norm, i.e. weight ``|N_h|^(-1/p)``."""
    _check_p(p)
    owners = z.owner_counts().astype(np.float64)
    scale = np.zeros_like(owners)
    used = owners > 0
    scale[used] = owners[used] ** (-1.0 / p)
    return WeightedAssignment(z.n, z.m, z.indptr.copy(), z.indices.copy(),
                              scale[z.indices])


def row_normalize(z: FeatureAssignment, p: float) -> WeightedAssignment:
    """Divide every row by its l^p norm, i.e. weight ``|F_i|^(-1/p)``."""
    _check_p(p)
    counts = z.feature_counts().astype(np.float64)
    per_node = np.zeros_like(counts)
    used = counts > 0
    per_node[used] = counts[used] ** (-1.0 / p)
    return WeightedAssignment(z.n, z.m, z.indptr.copy(), z.indices.copy(),
                              np.repeat(per_node, np.diff(z.indptr)))


# --------------------------------------------------------------------------
# interaction matrix


def _pow2_at_least(x):
    c = 16
    while c < x:
        c *= 2
    return c


class InteractionMatrix:
    """Latent feature-feature matrix ``W`` (m x m, float64).

    Stored densely when ``8 * m**2`` fits ``budget`` bytes, otherwise as an
    open-addressed hash table keyed by ``h * m + k``. Entries never written
    hold ``fill`` (0 unless a Naive floor is in effect). Both layouts answer
    ``w[h, k]`` and ``w.add(h, k, delta)`` identically.
    """

    def __init__(self, m, *, dense=None, keys=None, vals=None, size=0,
                 fill=0.0, symmetric=False):
        self.m = int(m)
        self.fill = float(fill)
        self.symmetric = bool(symmetric)
        if dense is not None:
            if dense.shape != (self.m, self.m):
                raise DomainError("dense matrix must be m x m")
            self.dense = np.ascontiguousarray(dense, dtype=np.float64)
            self.keys = np.full(1, _hash.EMPTY, dtype=np.int64)
            self.vals = np.zeros(1)
            self.size = 0
        else:
            if keys is None:
                keys = np.full(16, _hash.EMPTY, dtype=np.int64)
                vals = np.zeros(16)
            self.dense = np.zeros((0, 0))
            self.keys = keys
            self.vals = vals
            self.size = int(size)

    @classmethod
    def zeros(cls, m, *, fill=0.0, symmetric=False, budget=DEFAULT_DENSE_BUDGET,
              storage=None):
        if storage is None:
            storage = "dense" if 8 * m * m <= budget else "sparse"
        if storage == "dense":
            return cls(m, dense=np.full((m, m), float(fill)), fill=fill,
                       symmetric=symmetric)
        if storage != "sparse":
            raise DomainError(f"unknown storage {storage!r}")
        return cls(m, fill=fill, symmetric=symmetric)

    @classmethod
    def from_dense(cls, array, *, symmetric=False, fill=0.0):
        a = np.array(array, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError("interaction matrix must be square")
        return cls(a.shape[0], dense=a, fill=fill, symmetric=symmetric)

    @classmethod
    def from_entries(cls, m, h, k, w, *, fill=0.0, symmetric=False,
                     budget=DEFAULT_DENSE_BUDGET, storage=None):
        out = cls.zeros(m, fill=fill, symmetric=symmetric, budget=budget,
                        storage=storage)
        h = np.asarray(h, dtype=np.int64)
        k = np.asarray(k, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        if h.size and (h.min() < 0 or h.max() >= m or k.min() < 0 or k.max() >= m):
            raise DomainError(f"feature id out of range [0, {m})")
        if out.is_dense:
            out.dense[h, k] = w
        else:
            out.reserve(h.shape[0])
            for a, b, v in zip(h.tolist(), k.tolist(), w.tolist()):
                out.size += _hash.table_set(out.keys, out.vals, a * m + b, v)
        return out

    @property
    def is_dense(self) -> bool:
        return self.dense.shape[0] > 0 or self.m == 0

    @property
    def storage(self) -> str:
        return "dense" if self.is_dense else "sparse"

    def kernel_args(self):
        """``(dense, keys, vals, fill, m)`` as the kernels expect them."""
        return self.dense, self.keys, self.vals, self.fill, self.m

    def reserve(self, extra: int):
        """Grow the hash table so ``extra`` more entries keep the load low."""
        if self.is_dense:
            return
        want = self.size + int(extra)
        if want <= _MAX_LOAD * self.keys.shape[0]:
            return
        cap = _pow2_at_least(int(want / _MAX_LOAD) + 1)
        new_keys = np.full(cap, _hash.EMPTY, dtype=np.int64)
        new_vals = np.zeros(cap)
        _hash.rehash(self.keys, self.vals, new_keys, new_vals)
        self.keys, self.vals = new_keys, new_vals

    @property
    def max_size(self) -> int:
        """Entry count the sparse table may reach before it must grow."""
        return int(_MAX_LOAD * self.keys.shape[0])

    def _check(self, h, k):
        if not (0 <= h < self.m and 0 <= k < self.m):
            raise DomainError(f"feature id out of range [0, {self.m})")

    def __getitem__(self, hk):
        h, k = int(hk[0]), int(hk[1])
        self._check(h, k)
        if self.is_dense:
            return float(self.dense[h, k])
        return float(_hash.table_get(self.keys, self.vals, h * self.m + k, self.fill))

    def __setitem__(self, hk, value):
        h, k = int(hk[0]), int(hk[1])
        self._check(h, k)
        if self.is_dense:
            self.dense[h, k] = value
        else:
            self.reserve(1)
            self.size += _hash.table_set(self.keys, self.vals, h * self.m + k, float(value))

    def add(self, h, k, delta):
        self[h, k] = self[h, k] + delta

    def entries(self, bitwise: bool = False):
        """``(h, k, w)`` arrays of entries differing from ``fill``, sorted.

        With ``bitwise`` a signed zero counts as differing from an unsigned one.
        """
        def differs(v):
            out = v != self.fill
            if bitwise:
                out |= np.signbit(v) != np.signbit(self.fill)
            return out

        if self.is_dense:
            h, k = np.nonzero(differs(self.dense))
            return h.astype(np.int64), k.astype(np.int64), self.dense[h, k].copy()
        occupied = self.keys != _hash.EMPTY
        keys = self.keys[occupied]
        vals = self.vals[occupied]
        keep = differs(vals)
        keys, vals = keys[keep], vals[keep]
        order = np.argsort(keys)
        keys, vals = keys[order], vals[order]
        h = keys // self.m
        return h, keys - h * self.m, vals

    def to_dense(self) -> np.ndarray:
        if self.is_dense:
            return self.dense.copy()
        out = np.full((self.m, self.m), self.fill)
        h, k, w = self.entries()
        out[h, k] = w
        return out

    def copy(self) -> "InteractionMatrix":
        if self.is_dense:
            return InteractionMatrix(self.m, dense=self.dense.copy(), fill=self.fill,
                                     symmetric=self.symmetric)
        return InteractionMatrix(self.m, keys=self.keys.copy(), vals=self.vals.copy(),
                                 size=self.size, fill=self.fill, symmetric=self.symmetric)

    def frobenius_sq(self) -> float:
        h, k, w = self.entries()
        rest = self.m * self.m - w.shape[0]
        return float(np.dot(w, w) + rest * self.fill * self.fill)

    def max_asymmetry(self) -> float:
        """``max |W[h,k] - W[k,h]|``."""
        if self.m == 0:
            return 0.0
        if self.is_dense:
            return float(np.abs(self.dense - self.dense.T).max())
        h, k, w = self.entries()
        worst = 0.0
        for a, b, v in zip(h.tolist(), k.tolist(), w.tolist()):
            worst = max(worst, abs(v - self[b, a]))
        return worst

    def __eq__(self, other):
        if not isinstance(other, InteractionMatrix):
            return NotImplemented
        if self.m != other.m or self.fill != other.fill:
            return False
        a, b = self.entries(), other.entries()
        return all(np.array_equal(x, y) for x, y in zip(a, b))

    def __repr__(self):
        return f"InteractionMatrix(m={self.m}, storage={self.storage}, fill={self.fill})"


# --------------------------------------------------------------------------
# scores


def _as_ids(ids, m):
    arr = np.asarray(list(ids) if not isinstance(ids, np.ndarray) else ids, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= m):
        raise DomainError(f"feature id out of range [0, {m})")
    return arr


def score(fi, fj, w: InteractionMatrix) -> float:
    """``sum_{h in fi} sum_{k in fj} W[h, k]``."""
    fi = _as_ids(fi, w.m)
    fj = _as_ids(fj, w.m)
    if w.is_dense:
        return float(w.dense[np.ix_(fi, fj)].sum())
    return float(sum(w[h, k] for h in fi for k in fj))


def score_weighted(zi, zj, w: InteractionMatrix) -> float:
    """Bilinear score for real-weighted incidences given as (id, weight) lists."""
    hi = _as_ids([h for h, _ in zi], w.m)
    hj = _as_ids([k for k, _ in zj], w.m)
    ai = np.array([x for _, x in zi], dtype=np.float64)
    aj = np.array([x for _, x in zj], dtype=np.float64)
    if hi.size == 0 or hj.size == 0:
        return 0.0
    if w.is_dense:
        block = w.dense[np.ix_(hi, hj)]
    else:
        block = np.array([[w[h, k] for k in hj] for h in hi])
    return float(ai @ block @ aj)


def link_probability(i: int, j: int, z: FeatureAssignment, w: InteractionMatrix,
                     spec: ActivationSpec) -> float:
    if not (0 <= i < z.n and 0 <= j < z.n):
        raise DomainError(f"node id out of range [0, {z.n})")
    return activate(spec, score(z.features_of(i), z.features_of(j), w))
