# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of pedal._edit_py.

Same algorithms, same tie-breaking, integer arithmetic only, so results
are identical to the pure-Python kernel bit for bit.
"""

from libc.stdlib cimport free, malloc
from libc.string cimport memcpy


cdef int _ed(int* a, int na, int* b, int nb, int* row0, int* row1) noexcept nogil:
    cdef int i, j, c
    cdef int* prev = row0
    cdef int* cur = row1
    cdef int* tmp
    if na == 0:
        return nb
    if nb == 0:
        return na
    for j in range(nb + 1):
        prev[j] = j
    for i in range(1, na + 1):
        cur[0] = i
        for j in range(1, nb + 1):
            c = prev[j - 1] + (a[i - 1] != b[j - 1])
            if prev[j] + 1 < c:
                c = prev[j] + 1
            if cur[j - 1] + 1 < c:
                c = cur[j - 1] + 1
            cur[j] = c
        tmp = prev
        prev = cur
        cur = tmp
    return prev[nb]


cdef bint _block_in_ref(int* block, int length, int* ref, int m) noexcept nogil:
    cdef int s, k
    cdef bint ok
    for s in range(m - length + 1):
        ok = True
        for k in range(length):
            if ref[s + k] != block[k]:
                ok = False
                break
        if ok:
            return True
    return False


cdef int* _from_list(seq) except NULL:
    cdef int n = len(seq)
    cdef int* buf = <int*> malloc(sizeof(int) * (n if n > 0 else 1))
    cdef int i
    if buf == NULL:
        raise MemoryError()
    for i in range(n):
        buf[i] = seq[i]
    return buf


def edit_distance_ids(a, b):
    """Levenshtein distance with unit costs (see _edit_py twin)."""
    cdef int na = len(a)
    cdef int nb = len(b)
    cdef int* ca = _from_list(a)
    cdef int* cb = _from_list(b)
    cdef int* row0 = <int*> malloc(sizeof(int) * (nb + 1))
    cdef int* row1 = <int*> malloc(sizeof(int) * (nb + 1))
    cdef int result
    if row0 == NULL or row1 == NULL:
        free(ca); free(cb); free(row0); free(row1)
        raise MemoryError()
    try:
        result = _ed(ca, na, cb, nb, row0, row1)
    finally:
        free(ca); free(cb); free(row0); free(row1)
    return result


def levenshtein_breakdown_ids(hyp, ref):
    """(insertions, deletions, substitutions); backtrace order as in _edit_py."""
    cdef int n = len(hyp)
    cdef int m = len(ref)
    cdef int* h = _from_list(hyp)
    cdef int* r = _from_list(ref)
    cdef int* d = <int*> malloc(sizeof(int) * (n + 1) * (m + 1))
    cdef int i, j, c, w
    cdef int ins = 0, dels = 0, subs = 0
    if d == NULL:
        free(h); free(r)
        raise MemoryError()
    try:
        w = m + 1
        for j in range(m + 1):
            d[j] = j
        for i in range(1, n + 1):
            d[i * w] = i
            for j in range(1, m + 1):
                c = d[(i - 1) * w + (j - 1)] + (h[i - 1] != r[j - 1])
                if d[(i - 1) * w + j] + 1 < c:
                    c = d[(i - 1) * w + j] + 1
                if d[i * w + (j - 1)] + 1 < c:
                    c = d[i * w + (j - 1)] + 1
                d[i * w + j] = c
        i = n
        j = m
        while i > 0 and j > 0:
            if d[i * w + j] == d[(i - 1) * w + (j - 1)] + (h[i - 1] != r[j - 1]):
                if h[i - 1] != r[j - 1]:
                    subs += 1
                i -= 1
                j -= 1
            elif d[i * w + j] == d[i * w + (j - 1)] + 1:
                ins += 1
                j -= 1
            else:
                dels += 1
                i -= 1
        ins += j
        dels += i
    finally:
        free(h); free(r); free(d)
    return ins, dels, subs


def greedy_shift_ter_ids(hyp, ref, max_block):
    """Greedy block-shift loop; returns (shift count, final sequence).

    Semantics identical to _edit_py.greedy_shift_ter_ids.
    """
    cdef int n = len(hyp)
    cdef int m = len(ref)
    cdef int mb = max_block
    cdef int* cur = _from_list(hyp)
    cdef int* r = _from_list(ref)
    cdef int* best = <int*> malloc(sizeof(int) * (n if n > 0 else 1))
    cdef int* cand = <int*> malloc(sizeof(int) * (n if n > 0 else 1))
    cdef int* removed = <int*> malloc(sizeof(int) * (n if n > 0 else 1))
    cdef int* row0 = <int*> malloc(sizeof(int) * (m + 1))
    cdef int* row1 = <int*> malloc(sizeof(int) * (m + 1))
    cdef int shifts = 0
    cdef int cur_ed, best_delta, delta, i, length, top, j, nrem
    cdef bint have_best
    if best == NULL or cand == NULL or removed == NULL or row0 == NULL or row1 == NULL:
        free(cur); free(r); free(best); free(cand); free(removed); free(row0); free(row1)
        raise MemoryError()
    try:
        cur_ed = _ed(cur, n, r, m, row0, row1)
        while cur_ed > 0:
            best_delta = 0
            have_best = False
            for i in range(n):
                top = n - i
                if mb < top:
                    top = mb
                for length in range(1, top + 1):
                    if not _block_in_ref(cur + i, length, r, m):
                        continue
                    nrem = n - length
                    memcpy(removed, cur, sizeof(int) * i)
                    memcpy(removed + i, cur + i + length, sizeof(int) * (n - i - length))
                    for j in range(nrem + 1):
                        if j == i:
                            continue
                        memcpy(cand, removed, sizeof(int) * j)
                        memcpy(cand + j, cur + i, sizeof(int) * length)
                        memcpy(cand + j + length, removed + j, sizeof(int) * (nrem - j))
                        delta = cur_ed - _ed(cand, n, r, m, row0, row1)
                        if delta > best_delta:
                            best_delta = delta
                            memcpy(best, cand, sizeof(int) * n)
                            have_best = True
            if not have_best:
                break
            shifts += 1
            memcpy(cur, best, sizeof(int) * n)
            cur_ed -= best_delta
        result = [cur[i] for i in range(n)]
    finally:
        free(cur); free(r); free(best); free(cand); free(removed); free(row0); free(row1)
    return shifts, result
