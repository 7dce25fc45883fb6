"""Pure-Python edit-distance and greedy-shift kernels.

Sequences are lists of small integers (token ids); the string-to-id
mapping lives in pedal.metrics so this module and the compiled twin in
_edit_cy.pyx stay interchangeable.  All arithmetic is integer-only, so
both kernels return identical values bit for bit.

Tie-breaking contracts shared by both kernels:
  * greedy shift: strictly-better delta wins; among equals the first
    candidate in (source position asc, block length asc, destination asc)
    order is kept.
  * backtrace: diagonal (match/substitution), then insertion, then
    deletion, whenever costs tie.
"""

from __future__ import annotations


def edit_distance_ids(a: list[int], b: list[int]) -> int:
    """Levenshtein distance with unit costs, two-row DP."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    m = len(b)
    prev = list(range(m + 1))
    cur = [0] * (m + 1)
    for i in range(1, len(a) + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, m + 1):
            c = prev[j - 1] + (ai != b[j - 1])
            if prev[j] + 1 < c:
                c = prev[j] + 1
            if cur[j - 1] + 1 < c:
                c = cur[j - 1] + 1
            cur[j] = c
        prev, cur = cur, prev
    return prev[m]


def levenshtein_breakdown_ids(hyp: list[int], ref: list[int]) -> tuple[int, int, int]:
    """(insertions, deletions, substitutions) turning hyp into ref.

    Full-matrix DP with the fixed backtrace order documented above.
    """
    n, m = len(hyp), len(ref)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        d[i][0] = i
        hi = hyp[i - 1]
        row = d[i]
        prow = d[i - 1]
        for j in range(1, m + 1):
            c = prow[j - 1] + (hi != ref[j - 1])
            if prow[j] + 1 < c:
                c = prow[j] + 1
            if row[j - 1] + 1 < c:
                c = row[j - 1] + 1
            row[j] = c
    ins = dels = subs = 0
    i, j = n, m
    while i > 0 and j > 0:
        if d[i][j] == d[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]):
            if hyp[i - 1] != ref[j - 1]:
                subs += 1
            i -= 1
            j -= 1
        elif d[i][j] == d[i][j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    ins += j
    dels += i
    return ins, dels, subs


def _block_in_ref(block: list[int], ref: list[int]) -> bool:
    n, m = len(block), len(ref)
    for s in range(m - n + 1):
        if ref[s:s + n] == block:
            return True
    return False


def greedy_shift_ter_ids(
    hyp: list[int], ref: list[int], max_block: int
) -> tuple[int, list[int]]:
    """Greedy block-shift loop; returns (shift count, final sequence).

    A legal shift moves a contiguous block (length <= max_block) that
    matches a contiguous subsequence of the reference to any other
    position.  The shift with the largest edit-distance reduction is
    applied until no shift strictly reduces the distance.
    """
    cur = list(hyp)
    cur_ed = edit_distance_ids(cur, ref)
    shifts = 0
    while cur_ed > 0:
        best_delta = 0
        best: list[int] | None = None
        n = len(cur)
        for i in range(n):
            top = min(max_block, n - i)
            for length in range(1, top + 1):
                block = cur[i:i + length]
                if not _block_in_ref(block, ref):
                    continue
                removed = cur[:i] + cur[i + length:]
                for j in range(len(removed) + 1):
                    if j == i:
                        continue
                    cand = removed[:j] + block + removed[j:]
                    delta = cur_ed - edit_distance_ids(cand, ref)
                    if delta > best_delta:
                        best_delta = delta
                        best = cand
        if best is None:
            break
        shifts += 1
        cur = best
        cur_ed -= best_delta
    return shifts, cur
