"""numba-compiled hot loops. Each function mirrors one in ``_kernels_numpy``."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def glauber_run(x, nbr, J, h, vertices, uniforms):
    K = vertices.shape[0]
    q = h.shape[0]
    L = nbr.shape[0]
    out = np.empty(K, np.int64)
    energy = np.empty(q)
    weight = np.empty(q)
    for k in range(K):
        v = vertices[k]
        emin = np.inf
        for a in range(q):
            e = h[a]
            for l in range(L):
                w = nbr[l, v]
                if w == v:
                    e += J[a, a]
                else:
                    e += J[a, x[w]]
            energy[a] = e
            if e < emin:
                emin = e
        total = 0.0
        for a in range(q):
            weight[a] = math.exp(-(energy[a] - emin))
            total += weight[a]
        thr = uniforms[k] * total
        acc = 0.0
        choice = q - 1
        for a in range(q):
            acc += weight[a]
            if thr < acc:
                choice = a
                break
        x[v] = choice
        out[k] = choice
    return out


@njit(cache=True)
def ball_defect_mask(nbr, parent, letter, boundary_start):
    L, n = nbr.shape
    B = parent.shape[0]
    img = np.empty(B, np.int64)
    stamp = np.full(n, -1, np.int64)
    bad = np.zeros(n, np.bool_)
    for v in range(n):
        img[0] = v
        for k in range(1, B):
            img[k] = nbr[letter[k], img[parent[k]]]
        ok = True
        for k in range(B):
            if stamp[img[k]] == v:
                ok = False
                break
            stamp[img[k]] = v
        if ok:
            for k in range(boundary_start, B):
                cancel = letter[k] ^ 1 if letter[k] >= 0 else -1
                for l in range(L):
                    if l == cancel:
                        continue
                    if stamp[nbr[l, img[k]]] == v:
                        ok = False
                        break
                if not ok:
                    break
        if not ok:
            bad[v] = True
    return bad


@njit(cache=True)
def brute_mcut(n, eu, ew):
    if n <= 1:
        return 0
    m = n - 1
    best = eu.shape[0] + 1
    k_lo = n // 2
    k_hi = n - n // 2
    for k in range(k_lo, k_hi + 1):
        c = (1 << k) - 1
        while c < (1 << m):
            mask = c << 1
            cut = 0
            for e in range(eu.shape[0]):
                cut += ((mask >> eu[e]) ^ (mask >> ew[e])) & 1
            if cut < best:
                best = cut
            u = c & -c
            t = c + u
            c = t + (((t ^ c) // u) >> 2)
    return best


@njit(cache=True)
def _gain_terms(nbr, side, v):
    d = 0
    for l in range(nbr.shape[0]):
        w = nbr[l, v]
        if w == v:
            continue
        if side[w] != side[v]:
            d += 1
        else:
            d -= 1
    return d


@njit(cache=True)
def swap_descent(nbr, side):
    L, n = nbr.shape
    D = np.empty(n, np.int64)
    for v in range(n):
        D[v] = _gain_terms(nbr, side, v)
    while True:
        s0 = np.where(side == 0)[0]
        s1 = np.where(side == 1)[0]
        # stable sort on -D keeps ascending index within equal D
        o0 = s0[np.argsort(-D[s0], kind="mergesort")]
        o1 = s1[np.argsort(-D[s1], kind="mergesort")]
        if o0.shape[0] == 0 or o1.shape[0] == 0:
            break
        dmax1 = D[o1[0]]
        best = 0
        ba = -1
        bb = -1
        for ia in range(o0.shape[0]):
            a = o0[ia]
            top = D[a] + dmax1
            if top <= 0 or top < best:
                break
            for ib in range(o1.shape[0]):
                b = o1[ib]
                ub = D[a] + D[b]
                if ub <= 0 or ub < best:
                    break
                wab = 0
                for l in range(L):
                    if nbr[l, a] == b:
                        wab += 1
                g = ub - 2 * wab
                if g <= 0:
                    continue
                if g > best or (g == best and (a < ba or (a == ba and b < bb))):
                    best = g
                    ba = a
                    bb = b
        if ba < 0:
            break
        side[ba] = 1
        side[bb] = 0
        D[ba] = _gain_terms(nbr, side, ba)
        D[bb] = _gain_terms(nbr, side, bb)
        for l in range(L):
            w = nbr[l, ba]
            D[w] = _gain_terms(nbr, side, w)
            w = nbr[l, bb]
            D[w] = _gain_terms(nbr, side, w)
    cut = 0
    for v in range(n):
        for l in range(L):
            w = nbr[l, v]
            if w != v and side[w] != side[v]:
                cut += 1
    return cut // 2
