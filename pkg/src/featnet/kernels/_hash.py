"""Open-addressed (linear probing) float table keyed by ``h * m + k``.

Functions over two parallel arrays; compiled by numba when it is enabled and
plain Python otherwise, so both kernel backends share them. ``keys`` holds -1 in empty slots and
its length must be a power of two. The mixing below never overflows int64
for keys below ~1e11, i.e. for m up to about 3e5 features.
"""

from .._accel import njit

EMPTY = -1


@njit(nogil=True)
def probe(keys, key):
    mask = keys.shape[0] - 1
    x = key ^ (key >> 16)
    x = (x * 73244475) & 0x7FFFFFFFFFFF
    x = x ^ (x >> 16)
    i = x & mask
    while True:
        cur = keys[i]
        if cur == key or cur == EMPTY:
            return i
        i = (i + 1) & mask


@njit(nogil=True)
def table_get(keys, vals, key, fill):
    i = probe(keys, key)
    if keys[i] == key:
        return vals[i]
    return fill


@njit(nogil=True)
def table_add(keys, vals, key, delta, fill):
    """Add ``delta`` at ``key``; returns 1 if a new slot was occupied."""
    i = probe(keys, key)
    if keys[i] == key:
        vals[i] += delta
        return 0
    keys[i] = key
    vals[i] = fill + delta
    return 1


@njit(nogil=True)
def table_set(keys, vals, key, value):
    i = probe(keys, key)
    new = 0 if keys[i] == key else 1
    keys[i] = key
    vals[i] = value
    return new


@njit(nogil=True)
def rehash(keys, vals, new_keys, new_vals):
    for i in range(keys.shape[0]):
        key = keys[i]
        if key != EMPTY:
            j = probe(new_keys, key)
            new_keys[j] = key
            new_vals[j] = vals[i]
