# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: brute-force loss enumeration, even-spacing
loss evaluation and the Monte Carlo block counter.

The callers (mpfec.exact, mpfec.evenfast, mpfec.sim) prepare plain
arrays; each function here has a numpy twin used when the extension is
not built.
"""

import numpy as np

from libc.stdlib cimport calloc, free

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef int _block_tables(double p, double q, int a, double* PB, double* PG) except -1:
    """Fill PB[b] = P(b of a consecutive packets lost | previous bad)
    and PG[b] = same given previous good; a >= 1."""
    cdef int size = a + 2
    cdef double* M = <double*> calloc(size * size, sizeof(double))
    cdef double* inter = <double*> calloc(size, sizeof(double))
    cdef double* tail = <double*> calloc(size, sizeof(double))
    cdef int i, m, nn, b
    cdef double first_change, stay, back, acc, pw
    cdef int pass_idx
    if M == NULL or inter == NULL or tail == NULL:
        free(M); free(inter); free(tail)
        raise MemoryError()
    for pass_idx in range(2):
        if pass_idx == 0:
            first_change = q; stay = 1.0 - p; back = p     # start bad, count losses
        else:
            first_change = p; stay = 1.0 - q; back = q     # start good, count good packets
        inter[1] = 1.0 - first_change
        tail[1] = 1.0
        pw = 1.0
        for i in range(2, size):
            inter[i] = first_change * pw * back
            tail[i] = first_change * pw
            pw *= stay
        for nn in range(size):
            M[nn] = 0.0
        for nn in range(1, size):
            M[size + nn] = tail[nn]
        for m in range(2, size):
            for nn in range(m, size):
                acc = 0.0
                for i in range(1, nn - m + 2):
                    acc += inter[i] * M[(m - 1) * size + nn - i]
                M[m * size + nn] = acc
        if pass_idx == 0:
            for b in range(a + 1):
                PB[b] = M[(b + 1) * size + a + 1]
        else:
            for b in range(a + 1):
                PG[b] = M[(a - b + 1) * size + a + 1]
    free(M); free(inter); free(tail)
    return 0


def exact_loss(long[::1] pos, long[::1] offsets, double[:, ::1] trans,
               double[::1] pib, int n, int k, bint systematic):
    """Effective loss rate by enumeration of all 2^n failure configs.

    pos: 0-based global packet positions, concatenated per path in
    per-path time order; offsets: per-path ranges into pos; trans: row
    i = (pGG, pGB, pBG, pBB) for the gap ending at pos[i] (first row of
    each path unused); pib: stationary loss rate per used path.
    """
    cdef int R = offsets.shape[0] - 1
    cdef unsigned long long c, total = (<unsigned long long>1) << n
    cdef unsigned long long data_mask = 0
    cdef int i, r, F, D, s, prev
    cdef long idx
    cdef double prob, acc = 0.0, comp = 0.0, y, t
    for i in range(k):
        data_mask |= (<unsigned long long>1) << i
    for c in range(total):
        F = __builtin_popcountll(c)
        if F <= n - k:
            continue
        if systematic:
            D = __builtin_popcountll(c & data_mask)
            if D == 0:
                continue
        else:
            D = k
        prob = 1.0
        for r in range(R):
            prev = 0
            for idx in range(offsets[r], offsets[r + 1]):
                s = <int>((c >> pos[idx]) & 1)
                if idx == offsets[r]:
                    prob *= pib[r] if s else 1.0 - pib[r]
                else:
                    prob *= trans[idx, 2 * prev + s]
                prev = s
        y = D * prob - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return acc / k


def even_loss(double[:, ::1] pp, int n, int k, bint systematic):
    """Effective loss rate for per-path even spacing: per-path loss
    count distributions and data-loss weights, convolved across paths.

    pp: one row per used path, (n_r, k_r, pi_bad, p_GB(T_r), p_BG(T_r)).
    """
    cdef int R = pp.shape[0]
    # one arena: P, W, newP, newW (n+1 each), then per-path scratch
    cdef int m = n + 1
    cdef double* buf = <double*> calloc(10 * m, sizeof(double))
    cdef double *P, *W, *newP, *newW, *A, *B, *PB, *PG, *AG, *AB
    cdef double nG_i, nB_i, prevG, prevB
    cdef int cur = 1, r, n_r, k_r, a, j, i, j2, step
    cdef double pg, pb, p, q, result
    if buf == NULL:
        raise MemoryError()
    P = buf; W = buf + m; newP = buf + 2 * m; newW = buf + 3 * m
    A = buf + 4 * m; B = buf + 5 * m; PB = buf + 6 * m; PG = buf + 7 * m
    AG = buf + 8 * m; AB = buf + 9 * m
    P[0] = 1.0
    try:
        for r in range(R):
            n_r = <int>pp[r, 0]
            k_r = <int>pp[r, 1]
            pb = pp[r, 2]
            pg = 1.0 - pb
            p = pp[r, 3]
            q = pp[r, 4]
            for j in range(n_r + 1):
                A[j] = 0.0
                B[j] = 0.0
            # A[j] = P(F_r = j)
            if n_r == 1:
                A[0] = pg
                A[1] = pb
            else:
                _block_tables(p, q, n_r - 1, PB, PG)
                for j in range(n_r + 1):
                    if j <= n_r - 1:
                        A[j] += pg * PG[j]
                    if j >= 1:
                        A[j] += pb * PB[j - 1]
            # B[j] = sum_i i * P(D_r = i, F_r = j)
            if k_r > 0:
                for i in range(k_r + 1):
                    AG[i] = 0.0
                    AB[i] = 0.0
                AG[0] = pg
                AB[1] = pb
                for step in range(k_r - 1):
                    prevG = 0.0
                    prevB = 0.0
                    for i in range(k_r + 1):
                        nG_i = AG[i] * (1.0 - p) + AB[i] * q
                        nB_i = prevG * p + prevB * (1.0 - q)
                        prevG = AG[i]
                        prevB = AB[i]
                        AG[i] = nG_i
                        AB[i] = nB_i
                a = n_r - k_r
                if a == 0:
                    for i in range(k_r + 1):
                        B[i] = i * (AG[i] + AB[i])
                else:
                    _block_tables(p, q, a, PB, PG)
                    for i in range(1, k_r + 1):
                        for j2 in range(a + 1):
                            B[i + j2] += i * (AG[i] * PG[j2] + AB[i] * PB[j2])
            # convolve (P, W) with (A, B)
            for j in range(cur + n_r):
                newP[j] = 0.0
                newW[j] = 0.0
            for j in range(cur):
                for j2 in range(n_r + 1):
                    newP[j + j2] += P[j] * A[j2]
                    newW[j + j2] += W[j] * A[j2] + P[j] * B[j2]
            for j in range(cur + n_r):
                P[j] = newP[j]
                W[j] = newW[j]
            cur += n_r
        result = 0.0
        for j in range(n - k + 1, n + 1):
            result += W[j] if systematic else P[j]
        if systematic:
            result /= k
    finally:
        free(buf)
    return result


def mc_count(double[:, ::1] u, long[::1] pos, long[::1] offsets,
             double[:, ::1] trans, double[::1] pib, int n, int k,
             bint systematic):
    """Count lost data packets over simulated blocks.

    u: uniforms, one row per block, columns in the same concatenated
    per-path order as pos/trans (see exact_loss).  Returns (sum of lost
    data counts, sum of their squares).
    """
    cdef long blocks = u.shape[0]
    cdef int R = offsets.shape[0] - 1
    cdef long b, idx
    cdef int r, F, Dd, D, prev, lost
    cdef double pB
    cdef long long sumD = 0, sumD2 = 0
    for b in range(blocks):
        F = 0
        Dd = 0
        for r in range(R):
            prev = 0
            for idx in range(offsets[r], offsets[r + 1]):
                if idx == offsets[r]:
                    pB = pib[r]
                else:
                    pB = trans[idx, 3] if prev else trans[idx, 1]
                lost = u[b, idx] < pB
                prev = lost
                if lost:
                    F += 1
                    if pos[idx] < k:
                        Dd += 1
        if F > n - k:
            D = Dd if systematic else k
            sumD += D
            sumD2 += D * D
    return sumD, sumD2
