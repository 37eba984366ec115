"""Numba kernels for the per-scanline dynamic programs.

All kernels walk the lattice once (every node touched with at most three
incoming reads), so each pass is O(n*d).  Node kinds are encoded as
0 = match, 1 = left occlusion, 2 = right occlusion throughout; this matches
the tie-break order used by the Viterbi kernel.

Arc layout (incoming sets):
    match(i,j)      <- match/left/right at (i-1, j)
    right_occ(i,j)  <- match/right at (i-1, j-1)
    left_occ(i,j)   <- match/left at (i, j+1)        (within-column chain)

Entries are the match and right-occlusion nodes of column 0; every node of
column n-1 is a valid exit.

The sweep kernels fill caller-provided arrays and write every element, so
buffers can be recycled across scanlines; reallocating multi-megabyte
tables per row costs more in page faults than the sweeps themselves.
"""

import numpy as np
from numba import njit

MATCH = 0
LEFT_OCC = 1
RIGHT_OCC = 2


@njit(cache=True, nogil=True)
def forward_pass(pot, logpot, mass, acc, log_scale):
    """Scaled forward sweep carrying (mass, mass*log-mass) pairs.

    pot/logpot are (n, d, 3) node potentials and their logs.  Fills mass
    with the scaled per-node prefix path mass, acc with the matching sum of
    weight*log(weight), and log_scale with the cumulative per-column log of
    the scaling factors.  Returns the first column whose total mass
    vanished, or -1 on success.
    """
    n, d, _ = pot.shape
    running = 0.0
    for i in range(n):
        if i == 0:
            for j in range(d):
                w = pot[0, j, MATCH]
                mass[0, j, MATCH] = w
                acc[0, j, MATCH] = w * logpot[0, j, MATCH]
                w = pot[0, j, RIGHT_OCC]
                mass[0, j, RIGHT_OCC] = w
                acc[0, j, RIGHT_OCC] = w * logpot[0, j, RIGHT_OCC]
        else:
            for j in range(d):
                sw = mass[i - 1, j, MATCH] + mass[i - 1, j, LEFT_OCC] + mass[i - 1, j, RIGHT_OCC]
                sa = acc[i - 1, j, MATCH] + acc[i - 1, j, LEFT_OCC] + acc[i - 1, j, RIGHT_OCC]
                w = pot[i, j, MATCH] * sw
                mass[i, j, MATCH] = w
                acc[i, j, MATCH] = pot[i, j, MATCH] * sa + w * logpot[i, j, MATCH]
                if j > 0:
                    sw = mass[i - 1, j - 1, MATCH] + mass[i - 1, j - 1, RIGHT_OCC]
                    sa = acc[i - 1, j - 1, MATCH] + acc[i - 1, j - 1, RIGHT_OCC]
                    w = pot[i, j, RIGHT_OCC] * sw
                    mass[i, j, RIGHT_OCC] = w
                    acc[i, j, RIGHT_OCC] = pot[i, j, RIGHT_OCC] * sa + w * logpot[i, j, RIGHT_OCC]
                else:
                    mass[i, 0, RIGHT_OCC] = 0.0
                    acc[i, 0, RIGHT_OCC] = 0.0
        mass[i, d - 1, LEFT_OCC] = 0.0
        acc[i, d - 1, LEFT_OCC] = 0.0
        for j in range(d - 2, -1, -1):
            sw = mass[i, j + 1, MATCH] + mass[i, j + 1, LEFT_OCC]
            sa = acc[i, j + 1, MATCH] + acc[i, j + 1, LEFT_OCC]
            w = pot[i, j, LEFT_OCC] * sw
            mass[i, j, LEFT_OCC] = w
            acc[i, j, LEFT_OCC] = pot[i, j, LEFT_OCC] * sa + w * logpot[i, j, LEFT_OCC]
        alpha = 0.0
        for j in range(d):
            for k in range(3):
                v = mass[i, j, k]
                if v > alpha:
                    alpha = v
        if alpha <= 0.0 or not np.isfinite(alpha):
            return i
        la = np.log(alpha)
        for j in range(d):
            for k in range(3):
                acc[i, j, k] = (acc[i, j, k] - mass[i, j, k] * la) / alpha
                mass[i, j, k] /= alpha
        running += la
        log_scale[i] = running
    return -1


@njit(cache=True, nogil=True)
def backward_pass(pot, logpot, mass, acc, log_scale):
    """Scaled backward sweep; mass/acc exclude the node's own potential.

    Mirrors forward_pass against the arcs, with the within-column chain
    swept with disparity ascending.  Same conventions and return value.
    """
    n, d, _ = pot.shape
    running = 0.0
    for i in range(n - 1, -1, -1):
        seed = 1.0 if i == n - 1 else 0.0
        for j in range(d):
            # shared by the match node and the left-occlusion chain
            sw = seed
            sa = 0.0
            if i + 1 < n:
                p = pot[i + 1, j, MATCH]
                pw = p * mass[i + 1, j, MATCH]
                sw += pw
                sa += p * acc[i + 1, j, MATCH] + pw * logpot[i + 1, j, MATCH]
            if j > 0:
                p = pot[i, j - 1, LEFT_OCC]
                pw = p * mass[i, j - 1, LEFT_OCC]
                sw += pw
                sa += p * acc[i, j - 1, LEFT_OCC] + pw * logpot[i, j - 1, LEFT_OCC]
            mass[i, j, LEFT_OCC] = sw
            acc[i, j, LEFT_OCC] = sa
            # diagonal arc into the next column's right occlusion
            dw = 0.0
            da = 0.0
            if i + 1 < n and j + 1 < d:
                p = pot[i + 1, j + 1, RIGHT_OCC]
                pw = p * mass[i + 1, j + 1, RIGHT_OCC]
                dw = pw
                da = p * acc[i + 1, j + 1, RIGHT_OCC] + pw * logpot[i + 1, j + 1, RIGHT_OCC]
            mass[i, j, MATCH] = sw + dw
            acc[i, j, MATCH] = sa + da
            rw = seed + dw
            ra = da
            if i + 1 < n:
                p = pot[i + 1, j, MATCH]
                pw = p * mass[i + 1, j, MATCH]
                rw += pw
                ra += p * acc[i + 1, j, MATCH] + pw * logpot[i + 1, j, MATCH]
            mass[i, j, RIGHT_OCC] = rw
            acc[i, j, RIGHT_OCC] = ra
        alpha = 0.0
        for j in range(d):
            for k in range(3):
                v = mass[i, j, k]
                if v > alpha:
                    alpha = v
        if alpha <= 0.0 or not np.isfinite(alpha):
            return i
        la = np.log(alpha)
        for j in range(d):
            for k in range(3):
                acc[i, j, k] = (acc[i, j, k] - mass[i, j, k] * la) / alpha
                mass[i, j, k] /= alpha
        running += la
        log_scale[i] = running
    return -1


@njit(cache=True, nogil=True)
def viterbi_pass(cost, block_threshold, sp, bp):
    """Min-cost entry-to-exit path.

    Nodes with cost >= block_threshold are skipped outright.  Ties prefer
    lower disparity, then kind order match < left < right, both when
    scanning predecessors and when choosing the exit.  sp/bp are (n, d, 3)
    float64/int8 scratch tables, fully overwritten.  Returns the path as an
    (L, 3) array of (column, disparity, kind) rows plus its cost; an empty
    path with infinite cost means no exit was reachable.
    """
    n, d, _ = cost.shape
    INF = np.inf
    for i in range(n):
        for j in range(d):
            c = cost[i, j, MATCH]
            sp[i, j, MATCH] = INF
            bp[i, j, MATCH] = -2
            if c < block_threshold:
                if i == 0:
                    sp[i, j, MATCH] = c
                    bp[i, j, MATCH] = -1
                else:
                    best = INF
                    arg = -2
                    v = sp[i - 1, j, MATCH]
                    if v < best:
                        best = v
                        arg = MATCH
                    v = sp[i - 1, j, LEFT_OCC]
                    if v < best:
                        best = v
                        arg = LEFT_OCC
                    v = sp[i - 1, j, RIGHT_OCC]
                    if v < best:
                        best = v
                        arg = RIGHT_OCC
                    if arg != -2:
                        sp[i, j, MATCH] = c + best
                        bp[i, j, MATCH] = arg
            c = cost[i, j, RIGHT_OCC]
            sp[i, j, RIGHT_OCC] = INF
            bp[i, j, RIGHT_OCC] = -2
            if c < block_threshold:
                if i == 0:
                    sp[i, j, RIGHT_OCC] = c
                    bp[i, j, RIGHT_OCC] = -1
                elif j > 0:
                    best = INF
                    arg = -2
                    v = sp[i - 1, j - 1, MATCH]
                    if v < best:
                        best = v
                        arg = MATCH
                    v = sp[i - 1, j - 1, RIGHT_OCC]
                    if v < best:
                        best = v
                        arg = RIGHT_OCC
                    if arg != -2:
                        sp[i, j, RIGHT_OCC] = c + best
                        bp[i, j, RIGHT_OCC] = arg
        sp[i, d - 1, LEFT_OCC] = INF
        bp[i, d - 1, LEFT_OCC] = -2
        for j in range(d - 2, -1, -1):
            c = cost[i, j, LEFT_OCC]
            sp[i, j, LEFT_OCC] = INF
            bp[i, j, LEFT_OCC] = -2
            if c < block_threshold:
                best = INF
                arg = -2
                v = sp[i, j + 1, MATCH]
                if v < best:
                    best = v
                    arg = MATCH
                v = sp[i, j + 1, LEFT_OCC]
                if v < best:
                    best = v
                    arg = LEFT_OCC
                if arg != -2:
                    sp[i, j, LEFT_OCC] = c + best
                    bp[i, j, LEFT_OCC] = arg
    best = INF
    bj = -1
    bk = -1
    for j in range(d):
        for k in range(3):
            v = sp[n - 1, j, k]
            if v < best:
                best = v
                bj = j
                bk = k
    if bj < 0:
        return np.empty((0, 3), np.int64), INF
    maxlen = n * (d + 1)
    out = np.empty((maxlen, 3), np.int64)
    pos = maxlen
    i = n - 1
    j = bj
    k = bk
    while True:
        pos -= 1
        out[pos, 0] = i
        out[pos, 1] = j
        out[pos, 2] = k
        pk = bp[i, j, k]
        if pk < 0:
            break
        if k == MATCH:
            i = i - 1
        elif k == RIGHT_OCC:
            i = i - 1
            j = j - 1
        else:
            j = j + 1
        k = pk
    return out[pos:].copy(), best


@njit(cache=True, nogil=True)
def has_open_path(cost, block_threshold):
    """True iff some entry-to-exit path avoids every blocked node."""
    n, d, _ = cost.shape
    prev = np.zeros((d, 3), np.bool_)
    cur = np.zeros((d, 3), np.bool_)
    for i in range(n):
        for j in range(d):
            cur[j, MATCH] = False
            cur[j, LEFT_OCC] = False
            cur[j, RIGHT_OCC] = False
        for j in range(d):
            if cost[i, j, MATCH] < block_threshold:
                if i == 0:
                    cur[j, MATCH] = True
                else:
                    cur[j, MATCH] = prev[j, MATCH] or prev[j, LEFT_OCC] or prev[j, RIGHT_OCC]
            if cost[i, j, RIGHT_OCC] < block_threshold:
                if i == 0:
                    cur[j, RIGHT_OCC] = True
                elif j > 0:
                    cur[j, RIGHT_OCC] = prev[j - 1, MATCH] or prev[j - 1, RIGHT_OCC]
        for j in range(d - 2, -1, -1):
            if cost[i, j, LEFT_OCC] < block_threshold:
                cur[j, LEFT_OCC] = cur[j + 1, MATCH] or cur[j + 1, LEFT_OCC]
        tmp = prev
        prev = cur
        cur = tmp
    for j in range(d):
        for k in range(3):
            if prev[j, k]:
                return True
    return False
