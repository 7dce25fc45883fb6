#!/usr/bin/env python3
"""Benchmark the compiled edit-distance/TER kernel against the
pure-Python fallback on realistic sentence pairs.

Usage: python benchmarks/bench_kernels.py [--pairs N] [--tokens T] [--seed S]
"""

from __future__ import annotations

import argparse
import random
import time

from pedal import _edit_py

try:
    from pedal import _edit_cy
except ImportError:
    _edit_cy = None


def make_pairs(n_pairs: int, n_tokens: int, seed: int) -> list[tuple[list[int], list[int]]]:
    """Reference sentences with substitution noise and one block swap,
    the shape of real MT post-editing pairs."""
    rng = random.Random(seed)
    pairs = []
    for _ in range(n_pairs):
        ref = [rng.randrange(2000) for _ in range(n_tokens)]
        hyp = list(ref)
        for _ in range(max(1, n_tokens // 5)):
            hyp[rng.randrange(n_tokens)] = rng.randrange(2000)
        if n_tokens >= 8:
            i = rng.randrange(n_tokens - 6)
            hyp[i:i + 3], hyp[i + 3:i + 6] = hyp[i + 3:i + 6], hyp[i:i + 3]
        pairs.append((hyp, ref))
    return pairs


def bench(kernel, name: str, pairs) -> float:
    start = time.perf_counter()
    total_edits = 0
    for hyp, ref in pairs:
        shifts, final = kernel.greedy_shift_ter_ids(hyp, ref, 10)
        ins, dels, subs = kernel.levenshtein_breakdown_ids(final, ref)
        total_edits += shifts + ins + dels + subs
    elapsed = time.perf_counter() - start
    per_call = 1000.0 * elapsed / len(pairs)
    print(f"{name:<8} {elapsed:8.3f} s total   {per_call:8.3f} ms/pair   (edits {total_edits})")
    return elapsed


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=100)
    parser.add_argument("--tokens", type=int, default=25)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    pairs = make_pairs(args.pairs, args.tokens, args.seed)
    print(f"greedy TER + breakdown on {args.pairs} pairs of {args.tokens} tokens\n")
    t_py = bench(_edit_py, "python", pairs)
    if _edit_cy is None:
        print("\ncompiled kernel not built; install with the Cython extension to compare")
        return
    t_cy = bench(_edit_cy, "cython", pairs)

    mismatches = sum(
        _edit_py.greedy_shift_ter_ids(h, r, 10) != _edit_cy.greedy_shift_ter_ids(h, r, 10)
        for h, r in pairs
    )
    print(f"\nspeedup: {t_py / t_cy:.1f}x   result mismatches: {mismatches}")


if __name__ == "__main__":
    main()
