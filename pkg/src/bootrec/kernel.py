"""Compiled bit-parallel update kernel.

The recovery rule is a symmetric threshold network (weight 1 on the closed
4-neighbourhood, threshold 2) and 2-neighbour bootstrap is one as well, so
under synchronous updates every orbit ends in a fixed point or a 2-cycle.
``evolve`` exploits that: a cycle is detected by comparing the new state with
the previous two, which is exact.

Only words whose neighbourhood differs between ``X_t`` and ``X_{t-2}`` can
differ between ``X_{t+1}`` and ``X_{t-1}``, so each step recomputes just the
neighbours of the words that changed in the previous step, writing in place
into the buffer that holds ``X_{t-1}``.  Period-2 oscillators that have
settled cost nothing; the work per step is proportional to the growth front.
"""

from __future__ import annotations

import numpy as np
from numba import njit

PERCOLATED = 0
CYCLE = 1
EXTINCT = 2
BUDGET = 3

_ZERO = np.uint64(0)
_ONE = np.uint64(1)
_S63 = np.uint64(63)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S56 = np.uint64(56)
_TWO = np.uint64(2)
_FOUR = np.uint64(4)


@njit(cache=True, inline="always")
def popcount64(x):
    x = x - ((x >> _ONE) & _M1)
    x = (x & _M2) + ((x >> _TWO) & _M2)
    x = (x + (x >> _FOUR)) & _M4
    return np.int64((x * _H01) >> _S56)


@njit(cache=True, inline="always")
def _update_word(src, r, w, h, nw, lastmask, recovery):
    c = src[r, w]
    left = c << _ONE
    if w > 0:
        left |= src[r, w - 1] >> _S63
    right = c >> _ONE
    if w < nw - 1:
        right |= src[r, w + 1] << _S63
    up = src[r + 1, w] if r + 1 < h else _ZERO
    down = src[r - 1, w] if r > 0 else _ZERO
    lr = left | right
    ud = up | down
    two = (left & right) | (up & down) | (lr & ud)
    if recovery:
        new = two | (c & (lr | ud))
    else:
        new = c | two
    if w == nw - 1:
        new &= lastmask
    return new


@njit(cache=True)
def _row_update(src, r, h, nw, lastmask, recovery, out):
    """Branch-light update of row ``r`` into ``out`` (vectorises well)."""
    cur = src[r]
    has_up = r + 1 < h
    has_down = r > 0
    up = src[r + 1] if has_up else src[r]
    down = src[r - 1] if has_down else src[r]
    for w in range(nw):
        c = cur[w]
        left = c << _ONE
        right = c >> _ONE
        if w > 0:
            left |= cur[w - 1] >> _S63
        if w < nw - 1:
            right |= cur[w + 1] << _S63
        u = up[w] if has_up else _ZERO
        dn = down[w] if has_down else _ZERO
        lr = left | right
        ud = u | dn
        two = (left & right) | (u & dn) | (lr & ud)
        if recovery:
            out[w] = two | (c & (lr | ud))
        else:
            out[w] = c | two
    out[nw - 1] &= lastmask


@njit(cache=True)
def step_rows(src, lastmask, recovery):
    """One synchronous update of a whole packed board."""
    h, nw = src.shape
    dst = np.empty_like(src)
    for r in range(h):
        _row_update(src, r, h, nw, lastmask, recovery, dst[r])
    return dst


@njit(cache=True)
def evolve(init, lastmask, recovery, target, max_steps):
    """Iterate until ``target`` is covered, the board dies, or a cycle closes.

    Returns ``(kind, t_stop, period)`` with ``kind`` one of the module
    constants.  ``max_steps < 0`` means no step budget.
    """
    h, nw = init.shape
    total = h * nw
    bufs = np.zeros((2, h, nw), dtype=np.uint64)
    tcount = 0
    pop0 = 0
    cov0 = 0
    diff = 0
    for r in range(h):
        for w in range(nw):
            v = init[r, w]
            bufs[0, r, w] = v
            tcount += popcount64(target[r, w])
            pop0 += popcount64(v)
            cov0 += popcount64(v & target[r, w])
            if v != _ZERO:
                diff += 1
    pop = np.zeros(2, dtype=np.int64)
    cov = np.zeros(2, dtype=np.int64)
    pop[0] = pop0
    cov[0] = cov0
    if cov0 == tcount:
        return PERCOLATED, 0, 0
    if pop0 == 0:
        return EXTINCT, 0, 0

    changed = np.empty(total, dtype=np.int64)
    fresh = np.empty(total, dtype=np.int64)
    cmask = np.empty(total, dtype=np.uint64)
    fmask = np.empty(total, dtype=np.uint64)
    stamp = np.full(total, -1, dtype=np.int64)
    row = np.empty(nw, dtype=np.uint64)
    nchanged = 0
    t = 0
    while True:
        if max_steps >= 0 and t >= max_steps:
            return BUDGET, t, 0
        s = t & 1
        d = 1 - s
        src = bufs[s]
        dst = bufs[d]
        nfresh = 0
        # dense phases are cheaper as a straight sweep
        if t < 2 or 3 * nchanged > total:
            for r in range(h):
                _row_update(src, r, h, nw, lastmask, recovery, row)
                for w in range(nw):
                    new = row[w]
                    old = dst[r, w]
                    if new != old:
                        tg = target[r, w]
                        pop[d] += popcount64(new) - popcount64(old)
                        cov[d] += popcount64(new & tg) - popcount64(old & tg)
                        o = src[r, w]
                        diff += np.int64(new != o) - np.int64(old != o)
                        dst[r, w] = new
                        fresh[nfresh] = r * nw + w
                        fmask[nfresh] = new ^ old
                        nfresh += 1
        else:
            for k in range(nchanged):
                idx = changed[k]
                r0 = idx // nw
                w0 = idx - r0 * nw
                delta = cmask[k]
                for m in range(5):
                    # a horizontal neighbour only sees the adjacent edge bit
                    if m == 3 and (delta & _ONE) == _ZERO:
                        continue
                    if m == 4 and (delta >> _S63) == _ZERO:
                        continue
                    r = r0
                    w = w0
                    if m == 1:
                        r = r0 - 1
                    elif m == 2:
                        r = r0 + 1
                    elif m == 3:
                        w = w0 - 1
                    elif m == 4:
                        w = w0 + 1
                    if r < 0 or r >= h or w < 0 or w >= nw:
                        continue
                    j = r * nw + w
                    if stamp[j] == t:
                        continue
                    stamp[j] = t
                    new = _update_word(src, r, w, h, nw, lastmask, recovery)
                    old = dst[r, w]
                    if new != old:
                        tg = target[r, w]
                        pop[d] += popcount64(new) - popcount64(old)
                        cov[d] += popcount64(new & tg) - popcount64(old & tg)
                        o = src[r, w]
                        diff += np.int64(new != o) - np.int64(old != o)
                        dst[r, w] = new
                        fresh[nfresh] = j
                        fmask[nfresh] = new ^ old
                        nfresh += 1
        t += 1
        if cov[d] == tcount:
            return PERCOLATED, t, 0
        if pop[d] == 0:
            return EXTINCT, t, 0
        if diff == 0:
            return CYCLE, t, 1
        if t >= 2 and nfresh == 0:
            return CYCLE, t, 2
        tmp = changed
        changed = fresh
        fresh = tmp
        tmpm = cmask
        cmask = fmask
        fmask = tmpm
        nchanged = nfresh


@njit(cache=True)
def evolve_batch(inits, lastmask, recovery, target, max_steps):
    """``evolve`` over a stack of boards; returns the outcome kinds."""
    out = np.empty(inits.shape[0], dtype=np.int64)
    for i in range(inits.shape[0]):
        out[i] = evolve(inits[i], lastmask, recovery, target, max_steps)[0]
    return out
