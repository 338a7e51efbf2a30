"""Pure-numpy kernels with the same signatures as ``_loops``.

Work is vectorized wherever the computation allows it. The online learners
are sequential by nature, so their fallback loops over examples and only
vectorizes inside one example.
"""

import numpy as np

from ._hash import table_add, table_get, table_set
from ._loops import EXP_CLIPPED, SIGMOID, STEP

_CHUNK = 1 << 20


def activation_array(kind, p0, p1, x):
    x = np.asarray(x, dtype=np.float64)
    if kind == SIGMOID:
        z = p1 * (p0 - x)
        out = np.empty_like(z)
        pos = z > 0
        e = np.exp(-z[pos])
        out[pos] = e / (1.0 + e)
        out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
        return out
    if kind == STEP:
        return (x > p0).astype(np.float64)
    return np.exp(np.minimum(x, 0.0))


def expand_pairs(src, dst, f_indptr, f_indices):
    """All (example, h, k) with h in F_src, k in F_dst, example-major."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    li = f_indptr[src + 1] - f_indptr[src]
    lj = f_indptr[dst + 1] - f_indptr[dst]
    per = li * lj
    total = int(per.sum())
    ex = np.repeat(np.arange(src.shape[0]), per)
    if total == 0:
        empty = np.empty(0, dtype=np.int64)
        return ex, empty, empty
    offset = np.arange(total) - np.repeat(np.cumsum(per) - per, per)
    lj_e = lj[ex]
    a = offset // lj_e
    b = offset - a * lj_e
    h = f_indices[f_indptr[src][ex] + a].astype(np.int64)
    k = f_indices[f_indptr[dst][ex] + b].astype(np.int64)
    return ex, h, k


def pa_example(fi, fj, label, dense, keys, vals, fill, m,
               kappa, row_l2, symmetric, mode, lam, out):
    fi = np.asarray(fi, dtype=np.int64)
    fj = np.asarray(fj, dtype=np.int64)
    ni, nj = fi.shape[0], fj.shape[0]
    is_dense = dense.shape[0] > 0
    if is_dense:
        # cumsum adds left to right like the compiled loop; sum() is pairwise and
        # would make the two backends drift apart in the last bits
        block = dense[np.ix_(fi, fj)].ravel()
        mu = float(np.cumsum(block)[-1]) if block.size else 0.0
    else:
        mu = 0.0
        for h in fi:
            for k in fj:
                mu += table_get(keys, vals, int(h) * m + int(k), fill)
    if mode == 0:
        rho = 1.0 / (ni * nj)
        if row_l2:
            s = np.sqrt(rho)
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
        delta = lam * label if (mu > 0.0) != (label > 0) else 0.0
    new = 0
    if delta == 0.0:
        delta = 0.0
    elif is_dense:
        dense[np.ix_(fi, fj)] += delta
        if symmetric:
            hh, kk = np.meshgrid(fi, fj, indexing="ij")
            off = hh != kk
            np.add.at(dense, (kk[off], hh[off]), delta)
    else:
        for h in fi:
            for k in fj:
                new += table_add(keys, vals, int(h) * m + int(k), delta, fill)
                if symmetric and h != k:
                    new += table_add(keys, vals, int(k) * m + int(h), delta, fill)
    out[0] = delta
    out[1] = mu
    return new


def pa_pass(order, start, pos_indptr, pos_indices, neg_indptr, neg_indices,
            f_indptr, f_indices, dense, keys, vals, fill, m,
            kappa, row_l2, symmetric, mode, lam, size, max_size, stats):
    out = np.empty(2)
    mult = 2 if symmetric else 1
    sparse = dense.shape[0] == 0
    counts = np.diff(f_indptr)
    for t in range(start, order.shape[0]):
        i = order[t]
        fi = f_indices[f_indptr[i]:f_indptr[i + 1]]
        pos = pos_indices[pos_indptr[i]:pos_indptr[i + 1]]
        neg = neg_indices[neg_indptr[i]:neg_indptr[i + 1]]
        if sparse:
            need = int(counts[pos].sum() + counts[neg].sum()) * fi.shape[0] * mult
            if size + need > max_size:
                return t, size, need
        for js, label in ((pos, 1), (neg, -1)):
            for j in js:
                fj = f_indices[f_indptr[j]:f_indptr[j + 1]]
                if fi.shape[0] == 0 or fj.shape[0] == 0:
                    stats[3] += 1
                    continue
                stats[2] += 1
                stats[1] = max(stats[1], fi.shape[0] * fj.shape[0])
                size += pa_example(fi, fj, label, dense, keys, vals, fill, m,
                                   kappa, row_l2, symmetric, mode, lam, out)
                if (out[1] > 0.0) != (label > 0):
                    stats[0] += 1
    return order.shape[0], size, 0


def cooccurrence_counts(start, indptr, indices, f_indptr, f_indices,
                        dense, keys, vals, m, size, max_size):
    n = indptr.shape[0] - 1
    src = np.repeat(np.arange(n), np.diff(indptr))[indptr[start]:]
    dst = indices[indptr[start]:]
    if dense.shape[0] > 0:
        for lo in range(0, src.shape[0], _CHUNK):
            _, h, k = expand_pairs(src[lo:lo + _CHUNK], dst[lo:lo + _CHUNK],
                                   f_indptr, f_indices)
            flat = np.bincount(h * m + k, minlength=m * m)
            dense += flat.reshape(m, m)
        return n, size, 0
    _, h, k = expand_pairs(src, dst, f_indptr, f_indices)
    uniq, cnt = np.unique(h * m + k, return_counts=True)
    fresh = [u for u in uniq if table_get(keys, vals, int(u), -1.0) == -1.0]
    if size + len(fresh) > max_size:
        return start, size, len(fresh)
    for u, c in zip(uniq, cnt):
        cur = table_get(keys, vals, int(u), 0.0)
        size += table_set(keys, vals, int(u), cur + float(c))
    return n, size, 0


def score_pairs(src, dst, f_indptr, f_indices, known, dense, keys, vals,
                fill, m, out):
    for lo in range(0, src.shape[0], _CHUNK):
        s = src[lo:lo + _CHUNK]
        ex, h, k = expand_pairs(s, dst[lo:lo + _CHUNK], f_indptr, f_indices)
        keep = known[h] & known[k]
        ex, h, k = ex[keep], h[keep], k[keep]
        if dense.shape[0] > 0:
            w = dense[h, k]
        else:
            w = np.array([table_get(keys, vals, int(a) * m + int(b), fill)
                          for a, b in zip(h, k)], dtype=np.float64)
        out[lo:lo + s.shape[0]] = np.bincount(ex, weights=w, minlength=s.shape[0])


def _dense_z(f_indptr, f_indices, m):
    n = f_indptr.shape[0] - 1
    z = np.zeros((n, m))
    z[np.repeat(np.arange(n), np.diff(f_indptr)), f_indices] = 1.0
    return z


def realize_rows(r0, r1, f_indptr, f_indices, w, kind, p0, p1,
                 uniforms, counts, buf):
    z = _dense_z(f_indptr, f_indices, w.shape[0])
    scores = (z[r0:r1] @ w) @ z.T
    if kind == STEP:
        hits = scores > p0
    else:
        hits = uniforms < activation_array(kind, p0, p1, scores)
    rows, cols = np.nonzero(hits)
    counts[:] = np.bincount(rows, minlength=r1 - r0)
    buf[:cols.shape[0]] = cols
    return cols.shape[0]


def has_arcs(indptr, indices, src, dst, out):
    n = indptr.shape[0] - 1
    keys = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr)) * n + indices
    q = np.asarray(src, dtype=np.int64) * n + dst
    p = np.searchsorted(keys, q)
    p = np.minimum(p, max(keys.shape[0] - 1, 0))
    out[:] = keys.shape[0] > 0
    if keys.shape[0]:
        out[:] = keys[p] == q


__all__ = [
    "EXP_CLIPPED", "SIGMOID", "STEP", "activation_array", "expand_pairs",
    "pa_example", "pa_pass", "cooccurrence_counts", "score_pairs",
    "realize_rows", "has_arcs", "accept_new",
]


def accept_new(keys, bits, limit):
    """Keep keys whose bit is clear, in order, setting bits; stop at ``limit``."""
    free = ((bits[keys >> 3] >> (keys & 7).astype(np.uint8)) & 1) == 0
    keys = keys[free]
    _, first = np.unique(keys, return_index=True)
    keys = keys[np.sort(first)][:limit]
    np.bitwise_or.at(bits, keys >> 3, np.left_shift(1, keys & 7).astype(np.uint8))
    return keys
