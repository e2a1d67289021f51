"""Pure numpy / Python versions of the hot loops.

These are the reference path when numba is unavailable or disabled; they
must return exactly what the compiled kernels return.
"""
import itertools
import math

import numpy as np


def glauber_run(x, nbr, J, h, vertices, uniforms):
    # Sequential by nature; plain Python scalars are the fastest route here.
    q = h.shape[0]
    nbr_rows = [list(map(int, row)) for row in nbr.T]
    Jl = J.tolist()
    hl = h.tolist()
    xs = x.tolist()
    out = np.empty(vertices.shape[0], np.int64)
    for k, (v, u) in enumerate(zip(vertices.tolist(), uniforms.tolist())):
        energy = []
        for a in range(q):
            e = hl[a]
            Ja = Jl[a]
            for w in nbr_rows[v]:
                e += Ja[a] if w == v else Ja[xs[w]]
            energy.append(e)
        emin = min(energy)
        weight = [math.exp(-(e - emin)) for e in energy]
        total = 0.0
        for wt in weight:
            total += wt
        thr = u * total
        acc = 0.0
        choice = q - 1
        for a in range(q):
            acc += weight[a]
            if thr < acc:
                choice = a
                break
        xs[v] = choice
        out[k] = choice
    x[:] = xs
    return out


def ball_defect_mask(nbr, parent, letter, boundary_start, chunk=2048):
    L, n = nbr.shape
    B = parent.shape[0]
    bad = np.zeros(n, bool)
    for lo in range(0, n, chunk):
        vs = np.arange(lo, min(n, lo + chunk))
        m = vs.shape[0]
        img = np.empty((B, m), np.int64)
        img[0] = vs
        for k in range(1, B):
            img[k] = nbr[letter[k], img[parent[k]]]
        srt = np.sort(img, axis=0)
        fail = np.any(srt[1:] == srt[:-1], axis=0) if B > 1 else np.zeros(m, bool)
        # per-column membership through one globally sorted key array
        offset = np.arange(m, dtype=np.int64) * n
        keys = (srt + offset).T.ravel()
        for k in range(boundary_start, B):
            cancel = letter[k] ^ 1 if letter[k] >= 0 else -1
            for l in range(L):
                if l == cancel:
                    continue
                tgt = nbr[l, img[k]] + offset
                pos = np.searchsorted(keys, tgt)
                pos = np.minimum(pos, keys.shape[0] - 1)
                fail |= keys[pos] == tgt
        bad[lo : lo + m] = fail
    return bad


def brute_mcut(n, eu, ew, chunk=1 << 16):
    if n <= 1:
        return 0
    best = eu.shape[0] + 1
    weights = np.left_shift(np.int64(1), np.arange(1, n, dtype=np.int64))
    for k in sorted({n // 2, n - n // 2}):
        combos = itertools.combinations(range(n - 1), k)
        while True:
            block = list(itertools.islice(combos, chunk))
            if not block:
                break
            idx = np.asarray(block, dtype=np.int64).reshape(len(block), k)
            masks = weights[idx].sum(axis=1)
            cut = np.zeros(masks.shape[0], np.int64)
            for u, w in zip(eu.tolist(), ew.tolist()):
                cut += ((masks >> u) ^ (masks >> w)) & 1
            best = min(best, int(cut.min()))
    return best


def _gain_terms(nbr, side):
    nb_side = side[nbr]
    real = nbr != np.arange(nbr.shape[1])
    ext = ((nb_side != side) & real).sum(axis=0)
    inn = ((nb_side == side) & real).sum(axis=0)
    return (ext - inn).astype(np.int64)


def swap_descent(nbr, side):
    L, n = nbr.shape
    W = np.zeros((n, n), np.int64)
    for l in range(L):
        np.add.at(W, (np.arange(n), nbr[l]), 1)
    np.fill_diagonal(W, 0)
    while True:
        D = _gain_terms(nbr, side)
        s0 = np.flatnonzero(side == 0)
        s1 = np.flatnonzero(side == 1)
        if s0.size == 0 or s1.size == 0:
            break
        G = D[s0][:, None] + D[s1][None, :] - 2 * W[np.ix_(s0, s1)]
        flat = int(np.argmax(G))
        i, j = divmod(flat, s1.size)
        if G[i, j] <= 0:
            break
        side[s0[i]] = 1
        side[s1[j]] = 0
    real = nbr != np.arange(n)
    return int(((side[nbr] != side) & real).sum()) // 2
