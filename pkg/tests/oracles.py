"""Independent oracle implementations used to freeze expected values.

These stay deliberately naive (full-matrix DP, exhaustive search,
O(n^2) pair counting) and share no code with the implementations they
check.
"""

from __future__ import annotations

import math
from itertools import product


def oracle_edit_distance(a: list, b: list) -> int:
    """Plain full-matrix Levenshtein."""
    n, m = len(a), len(b)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i, j in product(range(1, n + 1), range(1, m + 1)):
        d[i][j] = min(
            d[i - 1][j] + 1,
            d[i][j - 1] + 1,
            d[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
        )
    return d[n][m]


def _legal_shifts(seq: list, ref: list, max_block: int):
    """Every single-shift result: the moved block must match a
    contiguous subsequence of ref."""
    ref_blocks = set()
    for i in range(len(ref)):
        for length in range(1, min(max_block, len(ref) - i) + 1):
            ref_blocks.add(tuple(ref[i:i + length]))
    n = len(seq)
    for i in range(n):
        for length in range(1, min(max_block, n - i) + 1):
            block = tuple(seq[i:i + length])
            if block not in ref_blocks:
                continue
            removed = seq[:i] + seq[i + length:]
            for j in range(len(removed) + 1):
                if j == i:
                    continue
                yield removed[:j] + list(block) + removed[j:]


def oracle_ter_edits(hyp: list, ref: list, max_depth: int = 3, max_block: int = 10) -> int:
    """Exhaustive minimum of shifts + edit distance over all shift
    sequences up to max_depth."""
    best = oracle_edit_distance(hyp, ref)
    frontier = {tuple(hyp)}
    seen = {tuple(hyp)}
    for depth in range(1, max_depth + 1):
        nxt = set()
        for seq in frontier:
            for cand in _legal_shifts(list(seq), ref, max_block):
                t = tuple(cand)
                if t not in seen:
                    seen.add(t)
                    nxt.add(t)
                    best = min(best, depth + oracle_edit_distance(cand, ref))
        frontier = nxt
        if not frontier:
            break
    return best


def oracle_kendall_tau_b(x: list, y: list) -> float | None:
    """Brute force over all pairs with explicit tie classes."""
    n = len(x)
    if n < 2:
        return None
    concordant = discordant = tied_x_only = tied_y_only = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = (x[i] > x[j]) - (x[i] < x[j])
            dy = (y[i] > y[j]) - (y[i] < y[j])
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                tied_x_only += 1
            elif dy == 0:
                tied_y_only += 1
            elif dx == dy:
                concordant += 1
            else:
                discordant += 1
    denom_x = concordant + discordant + tied_y_only
    denom_y = concordant + discordant + tied_x_only
    if denom_x == 0 or denom_y == 0:
        return None
    return (concordant - discordant) / math.sqrt(denom_x * denom_y)


def oracle_average_ranks(values: list) -> list[float]:
    ranks = []
    for v in values:
        less = sum(1 for w in values if w < v)
        equal = sum(1 for w in values if w == v)
        # average of ranks less+1 .. less+equal
        ranks.append(less + (equal + 1) / 2.0)
    return ranks


def oracle_spearman(x: list, y: list) -> float | None:
    rx = oracle_average_ranks(x)
    ry = oracle_average_ranks(y)
    n = len(x)
    if n < 2:
        return None
    mx = sum(rx) / n
    my = sum(ry) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = sum((a - mx) ** 2 for a in rx)
    syy = sum((b - my) ** 2 for b in ry)
    if sxx == 0 or syy == 0:
        return None
    return sxy / math.sqrt(sxx * syy)


def oracle_pearson(x: list, y: list) -> float | None:
    n = len(x)
    if n < 2:
        return None
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        return None
    return sxy / math.sqrt(sxx * syy)
