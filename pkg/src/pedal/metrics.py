"""Ground-truth measurement layer.

Word-level edit distance, translation error rate (TER) with block
shifts, per-corpus quality, and the regression/ranking statistics used
in run reports.

Kernel selection happens at import time: the compiled extension
(pedal._edit_cy) is preferred, the pure-Python twin (pedal._edit_py) is
the fallback.  Set PEDAL_PURE_PYTHON=1 to force the fallback.  Both
kernels are integer-only and return identical results, so the choice
never changes a score.

TER variant implemented here: uncased, punctuation-splitting
tokenization; a legal shift moves a contiguous block (max length 10)
that matches a contiguous subsequence of the reference to any other
position, at a cost of one edit.  Short inputs (both sides at most
EXACT_SEARCH_MAX_LEN tokens) are scored by an exact breadth-first
search over shift sequences, which returns the true minimum; longer
inputs use the standard greedy loop (take the shift with the largest
edit-distance reduction; ties broken by leftmost source position, then
shortest block, then leftmost destination).
"""

from __future__ import annotations

import math
import os
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

from . import _edit_py

if os.environ.get("PEDAL_PURE_PYTHON"):
    _kernel = _edit_py
else:
    try:
        from . import _edit_cy as _kernel  # type: ignore[no-redef]
    except ImportError:
        _kernel = _edit_py

#: Name of the active edit-distance kernel ("cython" or "python").
KERNEL_BACKEND = "python" if _kernel is _edit_py else "cython"

#: Maximum shifted-block length (standard TER constraint).
MAX_BLOCK = 10

#: Inputs with both sides at most this many tokens get the exact shift
#: search instead of the greedy loop.
EXACT_SEARCH_MAX_LEN = 6


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, punctuation as standalone tokens.

    Punctuation means Unicode category P*.  Deterministic; empty input
    gives an empty list.
    """
    out: list[str] = []
    buf: list[str] = []
    for ch in text.lower():
        if ch.isspace():
            if buf:
                out.append("".join(buf))
                buf = []
        elif unicodedata.category(ch).startswith("P"):
            if buf:
                out.append("".join(buf))
                buf = []
            out.append(ch)
        else:
            buf.append(ch)
    if buf:
        out.append("".join(buf))
    return out


def _intern(a: Sequence[str], b: Sequence[str]) -> tuple[list[int], list[int]]:
    table: dict[str, int] = {}

    def ids(tokens: Sequence[str]) -> list[int]:
        out = []
        for tok in tokens:
            v = table.get(tok)
            if v is None:
                v = len(table)
                table[tok] = v
            out.append(v)
        return out

    return ids(a), ids(b)


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Minimal insert/delete/substitute count between token sequences."""
    ia, ib = _intern(a, b)
    return _kernel.edit_distance_ids(ia, ib)


@dataclass(frozen=True)
class EditBreakdown:
    insertions: int
    deletions: int
    substitutions: int
    shifts: int

    @property
    def total(self) -> int:
        return self.insertions + self.deletions + self.substitutions + self.shifts


@dataclass(frozen=True)
class TerResult:
    edits: int
    ref_length: int
    score: float
    breakdown: EditBreakdown


def _shift_results(seq: list[int], ref_blocks: set[tuple[int, ...]]) -> Iterable[list[int]]:
    """All single-shift results of seq, in deterministic (i, length, j) order."""
    n = len(seq)
    for i in range(n):
        top = min(MAX_BLOCK, n - i)
        for length in range(1, top + 1):
            block = tuple(seq[i:i + length])
            if block not in ref_blocks:
                continue
            removed = seq[:i] + seq[i + length:]
            for j in range(len(removed) + 1):
                if j == i:
                    continue
                yield removed[:j] + list(block) + removed[j:]


def _ref_block_set(ref: list[int]) -> set[tuple[int, ...]]:
    blocks: set[tuple[int, ...]] = set()
    m = len(ref)
    for i in range(m):
        for length in range(1, min(MAX_BLOCK, m - i) + 1):
            blocks.add(tuple(ref[i:i + length]))
    return blocks


def _exact_shift_search(hyp: list[int], ref: list[int]) -> tuple[int, list[int]]:
    """Minimum shifts+edit-distance by breadth-first search over shift
    sequences.  Returns (shift count, final sequence) of the optimum;
    feasible only for short inputs (state space is bounded by the
    arrangements of the hypothesis tokens).
    """
    best_total = _kernel.edit_distance_ids(hyp, ref)
    best_depth = 0
    best_seq = list(hyp)
    if best_total == 0 or not hyp:
        return 0, best_seq
    ref_blocks = _ref_block_set(ref)
    frontier: list[tuple[int, ...]] = [tuple(hyp)]
    seen = {tuple(hyp)}
    depth = 0
    # A deeper level can only help while depth+1 (+ zero remaining
    # edits) still beats the incumbent.
    while frontier and depth + 1 < best_total:
        depth += 1
        nxt: list[tuple[int, ...]] = []
        for seq in frontier:
            for cand in _shift_results(list(seq), ref_blocks):
                key = tuple(cand)
                if key in seen:
                    continue
                seen.add(key)
                total = depth + _kernel.edit_distance_ids(cand, ref)
                if total < best_total:
                    best_total = total
                    best_depth = depth
                    best_seq = cand
                nxt.append(key)
        frontier = nxt
    return best_depth, best_seq


def ter(hypothesis: Sequence[str], reference: Sequence[str]) -> TerResult:
    """TER between token sequences: shifts + remaining edit distance,
    divided by reference length.

    Empty reference is an error (undefined denominator); empty
    hypothesis is valid (pure insertions).
    """
    if len(reference) == 0:
        raise ValueError("TER is undefined for an empty reference")
    hyp_ids, ref_ids = _intern(hypothesis, reference)
    if len(hyp_ids) <= EXACT_SEARCH_MAX_LEN and len(ref_ids) <= EXACT_SEARCH_MAX_LEN:
        shifts, final = _exact_shift_search(hyp_ids, ref_ids)
    else:
        shifts, final = _kernel.greedy_shift_ter_ids(hyp_ids, ref_ids, MAX_BLOCK)
    ins, dels, subs = _kernel.levenshtein_breakdown_ids(final, ref_ids)
    breakdown = EditBreakdown(ins, dels, subs, shifts)
    edits = breakdown.total
    return TerResult(
        edits=edits,
        ref_length=len(reference),
        score=edits / len(reference),
        breakdown=breakdown,
    )


def ter_texts(hypothesis: str, reference: str) -> TerResult:
    """TER of raw texts through the module tokenizer."""
    return ter(tokenize(hypothesis), tokenize(reference))


class _ScoredSegment(Protocol):
    reference: str | None

    def current_text(self) -> str: ...


def segment_quality(current_text: str, reference_text: str) -> float:
    """100 x (1 - TER), clamped below at zero."""
    ref_tokens = tokenize(reference_text)
    if not ref_tokens:
        raise ValueError("segment reference tokenizes to empty")
    q = 100.0 * (1.0 - ter(tokenize(current_text), ref_tokens).score)
    return q if q > 0.0 else 0.0


def corpus_quality(segments: Iterable[_ScoredSegment]) -> float:
    """Mean segment quality over the corpus's current texts, in [0, 100].

    Every segment must carry a reference.
    """
    values = []
    for seg in segments:
        if seg.reference is None:
            raise ValueError(f"segment {getattr(seg, 'id', '?')} has no reference")
        values.append(segment_quality(seg.current_text(), seg.reference))
    if not values:
        raise ValueError("corpus_quality of an empty corpus")
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class EvalStats:
    """Regression and ranking statistics of a prediction/target series.

    Correlations are None when undefined (n < 2 or a constant side).
    """

    n: int
    mae: float
    mse: float
    spearman_rho: float | None
    pearson_r: float | None
    kendall_tau: float | None

    def to_dict(self) -> dict:
        return {
            "samples": self.n,
            "mae": self.mae,
            "mse": self.mse,
            "spearman_rho": self.spearman_rho,
            "pearson_r": self.pearson_r,
            "kendall_tau": self.kendall_tau,
        }


def _average_ranks(values: Sequence[float]) -> list[float]:
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    n = len(x)
    if n < 2:
        return None
    xm = math.fsum(x) / n
    ym = math.fsum(y) / n
    sxx = math.fsum((a - xm) ** 2 for a in x)
    syy = math.fsum((b - ym) ** 2 for b in y)
    if sxx <= 0.0 or syy <= 0.0:
        return None
    if all(a == b for a, b in zip(x, y)):
        return 1.0  # exact self-correlation, no float residue
    sxy = math.fsum((a - xm) * (b - ym) for a, b in zip(x, y))
    r = sxy / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def _tie_pairs(sorted_values: Sequence) -> int:
    total = 0
    i = 0
    n = len(sorted_values)
    while i < n:
        j = i
        while j + 1 < n and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        run = j - i + 1
        total += run * (run - 1) // 2
        i = j + 1
    return total


def _count_inversions(values: Sequence[float]) -> int:
    """Strict inversions (values[i] > values[j] for i < j) via merge sort."""
    a = list(values)
    buf = [0.0] * len(a)

    def rec(lo: int, hi: int) -> int:
        if hi - lo <= 1:
            return 0
        mid = (lo + hi) // 2
        inv = rec(lo, mid) + rec(mid, hi)
        i, j, k = lo, mid, lo
        while i < mid and j < hi:
            if a[j] < a[i]:
                buf[k] = a[j]
                j += 1
                inv += mid - i
            else:
                buf[k] = a[i]
                i += 1
            k += 1
        while i < mid:
            buf[k] = a[i]
            i += 1
            k += 1
        while j < hi:
            buf[k] = a[j]
            j += 1
            k += 1
        a[lo:hi] = buf[lo:hi]
        return inv

    return rec(0, len(a))


def _kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Tie-corrected Kendall tau (tau-b) in O(n log n)."""
    n = len(x)
    if n < 2:
        return None
    order = sorted(range(n), key=lambda i: (x[i], y[i]))
    xs = [x[i] for i in order]
    ys = [y[i] for i in order]
    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(xs)
    n2 = _tie_pairs(sorted(ys))
    n3 = _tie_pairs(list(zip(xs, ys)))
    d1 = n0 - n1
    d2 = n0 - n2
    if d1 == 0 or d2 == 0:
        return None
    swaps = _count_inversions(ys)
    num = n0 - n1 - n2 + n3 - 2 * swaps
    return num / math.sqrt(d1 * d2)


def _spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    if len(x) < 2:
        return None
    return _pearson(_average_ranks(x), _average_ranks(y))


def eval_stats(predictions: Sequence[float], targets: Sequence[float]) -> EvalStats:
    """MAE, MSE, Pearson r, Spearman rho (average ranks), Kendall tau-b."""
    if len(predictions) != len(targets):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(targets)} targets"
        )
    n = len(predictions)
    if n == 0:
        raise ValueError("eval_stats of empty series")
    mae = math.fsum(abs(p - t) for p, t in zip(predictions, targets)) / n
    mse = math.fsum((p - t) ** 2 for p, t in zip(predictions, targets)) / n
    return EvalStats(
        n=n,
        mae=mae,
        mse=mse,
        spearman_rho=_spearman(predictions, targets),
        pearson_r=_pearson(predictions, targets),
        kendall_tau=_kendall_tau_b(predictions, targets),
    )
