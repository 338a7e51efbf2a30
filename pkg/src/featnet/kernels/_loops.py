"""Explicit-loop kernels, compiled with numba.

Matrices are passed as ``(dense, keys, vals, fill, m)``: in dense mode
``dense`` is the m x m array and the table arrays are dummies; in sparse mode
``dense`` has shape (0, 0) and lookups go through the hash table.
"""

import math

import numpy as np

from .._accel import njit
from ._hash import table_add, table_get

SIGMOID = 0
STEP = 1
EXP_CLIPPED = 2


@njit(nogil=True)
def activation(kind, p0, p1, x):
    if kind == SIGMOID:
        z = p1 * (p0 - x)
        if z > 0.0:
            e = math.exp(-z)
            return e / (1.0 + e)
        return 1.0 / (1.0 + math.exp(z))
    if kind == STEP:
        return 1.0 if x > p0 else 0.0
    if x >= 0.0:
        return 1.0
    return math.exp(x)


@njit(nogil=True, inline="always")
def w_get(dense, keys, vals, fill, m, h, k):
    if dense.shape[0] > 0:
        return dense[h, k]
    return table_get(keys, vals, np.int64(h) * m + k, fill)


@njit(nogil=True, inline="always")
def w_add(dense, keys, vals, fill, m, h, k, delta):
    if dense.shape[0] > 0:
        dense[h, k] += delta
        return 0
    return table_add(keys, vals, np.int64(h) * m + k, delta, fill)


# Storage-specific accessors. The online pass is built once per storage kind
# so the dense copy is compiled without the hash-table code, which would
# otherwise slow its inner loop about threefold.


@njit(nogil=True, inline="always")
def _dense_get(dense, keys, vals, fill, m, h, k):
    return dense[h, k]


@njit(nogil=True, inline="always")
def _dense_add(dense, keys, vals, fill, m, h, k, delta):
    dense[h, k] += delta
    return 0


@njit(nogil=True)
def _table_get(dense, keys, vals, fill, m, h, k):
    return table_get(keys, vals, np.int64(h) * m + k, fill)


@njit(nogil=True)
def _table_add(dense, keys, vals, fill, m, h, k, delta):
    return table_add(keys, vals, np.int64(h) * m + k, delta, fill)


def _make_step(get, add):
    """Llama/perceptron step specialized for one storage kind."""

    @njit(nogil=True, inline="always")
    def step(fi, fj, label, dense, keys, vals, fill, m, kappa, row_l2, symmetric, mode, lam):
        ni = fi.shape[0]
        nj = fj.shape[0]
        mu = 0.0
        for a in range(ni):
            h = fi[a]
            for b in range(nj):
                mu += get(dense, keys, vals, fill, m, h, fj[b])
        if mode == 0:
            rho = 1.0 / (ni * nj)
            if row_l2:
                s = math.sqrt(rho)
                if label > 0:
                    delta = s * min(kappa, max(0.0, 1.0 - s * mu))
                else:
                    delta = -s * min(kappa, max(0.0, 1.0 + s * mu))
            else:
                if label > 0:
                    delta = min(kappa, max(0.0, rho * (1.0 - mu)))
                else:
                    delta = -min(kappa, max(0.0, rho * (1.0 + mu)))
        else:
            if (mu > 0.0) != (label > 0):
                delta = lam * label
            else:
                delta = 0.0
        new = 0
        if delta == 0.0:
            delta = 0.0
        else:
            for a in range(ni):
                h = fi[a]
                for b in range(nj):
                    k = fj[b]
                    new += add(dense, keys, vals, fill, m, h, k, delta)
                    if symmetric and h != k:
                        new += add(dense, keys, vals, fill, m, k, h, delta)
        return new, delta, mu

    return step


_dense_step = _make_step(_dense_get, _dense_add)
_table_step = _make_step(_table_get, _table_add)


@njit(nogil=True)
def pa_example(fi, fj, label, dense, keys, vals, fill, m,
               kappa, row_l2, symmetric, mode, lam, out):
    """One Llama (mode 0) or perceptron (mode 1) step; returns new slots."""
    if dense.shape[0] > 0:
        new, delta, mu = _dense_step(fi, fj, label, dense, keys, vals, fill, m,
                                     kappa, row_l2, symmetric, mode, lam)
    else:
        new, delta, mu = _table_step(fi, fj, label, dense, keys, vals, fill, m,
                                     kappa, row_l2, symmetric, mode, lam)
    out[0] = delta
    out[1] = mu
    return new


def _make_pass(step, sparse):
    """Online pass specialized for one storage kind."""

    @njit(nogil=True)
    def run(order, start, pos_indptr, pos_indices, neg_indptr, neg_indices,
            f_indptr, f_indices, dense, keys, vals, fill, m,
            kappa, row_l2, symmetric, mode, lam, size, max_size, stats):
        mult = 2 if symmetric else 1
        # counters stay in locals; per-example writes to ``stats`` are ~3x slower
        mistakes = 0
        r2max = stats[1]
        seen = 0
        skipped = 0
        t = start
        need = 0
        while t < order.shape[0]:
            i = order[t]
            fi = f_indices[f_indptr[i]:f_indptr[i + 1]]
            if fi.shape[0] == 0:
                skipped += (pos_indptr[i + 1] - pos_indptr[i]
                            + neg_indptr[i + 1] - neg_indptr[i])
                t += 1
                continue
            if sparse:
                for q in range(pos_indptr[i], pos_indptr[i + 1]):
                    j = pos_indices[q]
                    need += f_indptr[j + 1] - f_indptr[j]
                for q in range(neg_indptr[i], neg_indptr[i + 1]):
                    j = neg_indices[q]
                    need += f_indptr[j + 1] - f_indptr[j]
                need *= fi.shape[0] * mult
                if size + need > max_size:
                    break
                need = 0
            for label in (1, -1):
                if label > 0:
                    lo, hi, adj = pos_indptr[i], pos_indptr[i + 1], pos_indices
                else:
                    lo, hi, adj = neg_indptr[i], neg_indptr[i + 1], neg_indices
                for q in range(lo, hi):
                    j = adj[q]
                    fj = f_indices[f_indptr[j]:f_indptr[j + 1]]
                    if fj.shape[0] == 0:
                        skipped += 1
                        continue
                    seen += 1
                    r2max = max(r2max, fi.shape[0] * fj.shape[0])
                    new, delta, mu = step(fi, fj, label, dense, keys, vals, fill, m,
                                          kappa, row_l2, symmetric, mode, lam)
                    size += new
                    if (mu > 0.0) != (label > 0):
                        mistakes += 1
            t += 1
        stats[0] += mistakes
        stats[1] = r2max
        stats[2] += seen
        stats[3] += skipped
        return t, size, need

    return run


_dense_pass = _make_pass(_dense_step, False)
_table_pass = _make_pass(_table_step, True)


@njit(nogil=True)
def pa_pass(order, start, pos_indptr, pos_indices, neg_indptr, neg_indices,
            f_indptr, f_indices, dense, keys, vals, fill, m,
            kappa, row_l2, symmetric, mode, lam, size, max_size, stats):
    """Single pass over the implicit example sequence.

    For every node ``order[t]`` its arcs come first (label +1), then its
    sampled non-arcs (label -1). ``stats`` accumulates
    [mistakes, radius_sq, examples_seen, skipped]. Returns
    ``(t_next, size, need)``; ``t_next < len(order)`` means the table must
    grow to hold ``size + need`` entries before resuming at ``t_next``.
    """
    if dense.shape[0] > 0:
        return _dense_pass(order, start, pos_indptr, pos_indices, neg_indptr,
                           neg_indices, f_indptr, f_indices, dense, keys, vals, fill, m,
                           kappa, row_l2, symmetric, mode, lam, size, max_size, stats)
    return _table_pass(order, start, pos_indptr, pos_indices, neg_indptr,
                       neg_indices, f_indptr, f_indices, dense, keys, vals, fill, m,
                       kappa, row_l2, symmetric, mode, lam, size, max_size, stats)


@njit(nogil=True)
def cooccurrence_counts(start, indptr, indices, f_indptr, f_indices,
                        dense, keys, vals, m, size, max_size):
    """Count |(N_h x N_k) & A| for every feature pair, row by row."""
    n = indptr.shape[0] - 1
    for i in range(start, n):
        fi = f_indices[f_indptr[i]:f_indptr[i + 1]]
        if fi.shape[0] == 0:
            continue
        if dense.shape[0] == 0:
            need = 0
            for q in range(indptr[i], indptr[i + 1]):
                j = indices[q]
                need += f_indptr[j + 1] - f_indptr[j]
            need *= fi.shape[0]
            if size + need > max_size:
                return i, size, need
        for q in range(indptr[i], indptr[i + 1]):
            j = indices[q]
            for a in range(fi.shape[0]):
                h = fi[a]
                for b in range(f_indptr[j], f_indptr[j + 1]):
                    size += w_add(dense, keys, vals, 0.0, m, h, f_indices[b], 1.0)
    return n, size, 0


@njit(nogil=True)
def score_pairs(src, dst, f_indptr, f_indices, known, dense, keys, vals,
                fill, m, out):
    for t in range(src.shape[0]):
        i = src[t]
        j = dst[t]
        s = 0.0
        for a in range(f_indptr[i], f_indptr[i + 1]):
            h = f_indices[a]
            if not known[h]:
                continue
            for b in range(f_indptr[j], f_indptr[j + 1]):
                k = f_indices[b]
                if known[k]:
                    s += w_get(dense, keys, vals, fill, m, h, k)
        out[t] = s


@njit(nogil=True)
def realize_rows(r0, r1, f_indptr, f_indices, w, kind, p0, p1,
                 uniforms, counts, buf):
    """Draw the out-arcs of rows r0..r1-1; returns entries written to buf."""
    n = f_indptr.shape[0] - 1
    m = w.shape[0]
    v = np.empty(m)
    pos = 0
    for i in range(r0, r1):
        v[:] = 0.0
        for a in range(f_indptr[i], f_indptr[i + 1]):
            h = f_indices[a]
            for k in range(m):
                v[k] += w[h, k]
        c = 0
        for j in range(n):
            s = 0.0
            for b in range(f_indptr[j], f_indptr[j + 1]):
                s += v[f_indices[b]]
            if kind == STEP:
                hit = s > p0
            else:
                hit = uniforms[i - r0, j] < activation(kind, p0, p1, s)
            if hit:
                buf[pos] = j
                pos += 1
                c += 1
        counts[i - r0] = c
    return pos


@njit(nogil=True)
def has_arcs(indptr, indices, src, dst, out):
    for t in range(src.shape[0]):
        i = src[t]
        lo = indptr[i]
        hi = indptr[i + 1]
        if hi > lo:
            p = lo + np.searchsorted(indices[lo:hi], dst[t])
            out[t] = p < hi and indices[p] == dst[t]
        else:
            out[t] = False


@njit(nogil=True)
def accept_new(keys, bits, limit):
    """Keep keys whose bit is clear, in order, setting bits; stop at ``limit``."""
    out = np.empty(min(limit, keys.shape[0]), dtype=np.int64)
    got = 0
    for t in range(keys.shape[0]):
        if got == limit:
            break
        key = keys[t]
        byte = key >> 3
        mask = np.uint8(1 << (key & 7))
        if bits[byte] & mask:
            continue
        bits[byte] |= mask
        out[got] = key
        got += 1
    return out[:got]
