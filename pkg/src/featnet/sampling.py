"""Seeded uniform sampling of non-arc pairs."""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import InfeasibleSamplingError
from .model import FeatureGraph

# below this many candidate pairs, dense requests enumerate the complement
_ENUMERATE_LIMIT = 20_000_000
_BATCH = 1 << 22
_BITSET_BYTES = 1 << 28


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Fresh SeedSequence for ``seed``; spawning from it never mutates the input."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key,
                                      pool_size=seed.pool_size)
    return np.random.SeedSequence(seed)


def _arcs_within(g: FeatureGraph, domain: np.ndarray | None):
    src, dst = g.arcs()
    if domain is None:
        return src, dst
    inside = np.zeros(g.n, dtype=bool)
    inside[domain] = True
    keep = inside[src] & inside[dst]
    return src[keep], dst[keep]


class _TakenSet:
    """Membership of pair keys ``i * n + j`` in arcs plus accepted pairs.

    A bitset over N x N when it fits ``_BITSET_BYTES``, else sorted arrays.
    """

    def __init__(self, g: FeatureGraph):
        self.n = g.n
        src, dst = g.arcs()
        arc_keys = src.astype(np.int64) * g.n + dst
        self.bits = None
        if (g.n * g.n + 7) // 8 <= _BITSET_BYTES:
            self.bits = np.zeros((g.n * g.n + 7) // 8, dtype=np.uint8)
            self.add(arc_keys)
        else:
            self.g = g
            self.accepted = np.empty(0, dtype=np.int64)

    def accept(self, keys, limit):
        """Keys not yet taken, first occurrences only, in draw order; marks them taken."""
        if self.bits is not None:
            return kernels.impl().accept_new(keys, self.bits, limit)
        hit = self.g.has_arcs(keys // self.n, keys % self.n)
        if self.accepted.shape[0]:
            pos = np.minimum(np.searchsorted(self.accepted, keys), self.accepted.shape[0] - 1)
            hit |= self.accepted[pos] == keys
        keys = keys[~hit]
        _, first = np.unique(keys, return_index=True)
        keys = keys[np.sort(first)][:limit]
        self.add(keys)
        return keys

    def add(self, keys):
        if self.bits is not None:
            np.bitwise_or.at(self.bits, keys >> 3,
                             np.left_shift(1, keys & 7).astype(np.uint8))
        else:
            self.accepted = np.union1d(self.accepted, keys)


def sample_non_arcs(g: FeatureGraph, count: int, rng: np.random.Generator,
                    domain=None):
    """Draw ``count`` distinct pairs ``(i, j)`` not in ``g``, uniformly.

    Pairs range over ``domain x domain`` (all nodes when ``domain`` is None).
    The result is sorted by ``(i, j)``. Candidates are drawn i.i.d. and kept
    in draw order unless they are arcs or repeats, which makes every
    accepted pair uniform over the pairs still free. When the request covers
    most of a small complement, the complement is enumerated and subsampled
    instead; both procedures pick every ``count``-subset with equal chance.
    """
    n = g.n
    dom = np.arange(n, dtype=np.int64) if domain is None else np.unique(
        np.asarray(domain, dtype=np.int64))
    d = dom.shape[0]
    a_src, a_dst = _arcs_within(g, None if domain is None else dom)
    available = d * d - a_src.shape[0]
    if count > available:
        raise InfeasibleSamplingError(
            f"requested {count} non-arcs but only {available} exist in the domain")
    if count == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty

    if 2 * count > available and d * d <= _ENUMERATE_LIMIT:
        pos = np.searchsorted(dom, a_src) * d + np.searchsorted(dom, a_dst)
        mask = np.ones(d * d, dtype=bool)
        mask[pos] = False
        free = np.flatnonzero(mask)
        pick = np.sort(rng.choice(free.shape[0], size=count, replace=False))
        flat = free[pick]
        return dom[flat // d], dom[flat % d]

    taken = _TakenSet(g)
    parts = []
    got = 0
    while got < count:
        missing = count - got
        want = min(_BATCH, int(missing * 1.1 * d * d / (available - got)) + 64)
        keys = dom[rng.integers(0, d, size=want)] * n + dom[rng.integers(0, d, size=want)]
        keys = taken.accept(keys, missing)
        parts.append(keys)
        got += keys.shape[0]
    keys = np.sort(np.concatenate(parts))
    return keys // n, keys % n
