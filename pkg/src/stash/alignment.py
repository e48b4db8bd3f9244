"""Needleman-Wunsch global alignment scoring for primitive sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScoringScheme:
    match: int = 1
    mismatch: int = -2
    gap: int = -1


DEFAULT_SCHEME = ScoringScheme()


@dataclass(frozen=True)
class SimilarityScore:
    value: int
    len_a: int
    len_b: int

    def __int__(self):
        return self.value


def _codes(seq) -> np.ndarray:
    # Accepts strings, lists of symbols, or PrimitiveSequence.
    if hasattr(seq, "symbols"):
        seq = seq.symbols
    return np.array([ord(s) if isinstance(s, str) else s for s in seq], dtype=np.int64)


def nw_score(a, b, scheme: ScoringScheme = DEFAULT_SCHEME) -> int:
    """Maximum global-alignment score between `a` and `b`.

    Two-row integer DP. The left-neighbour dependency is folded into a
    running maximum so each row is a handful of vector operations:
    row[j] = max_{k<=j} (m[k] + gap*(j-k)) with m[j] the best of the
    diagonal and upper moves.
    """
    ca, cb = _codes(a), _codes(b)
    n, m = len(ca), len(cb)
    g = scheme.gap
    if n == 0 or m == 0:
        return g * (n + m)
    prev = g * np.arange(m + 1, dtype=np.int64)
    offsets = g * np.arange(1, m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        sub = np.where(cb == ca[i - 1], scheme.match, scheme.mismatch)
        best = np.maximum(prev[:-1] + sub, prev[1:] + g)
        # candidate entering row head: all-gap prefix of a
        head = g * i
        run = np.maximum.accumulate(np.concatenate(([head], best - offsets)))
        row = np.empty(m + 1, dtype=np.int64)
        row[0] = head
        row[1:] = run[1:] + offsets
        prev = row
    return int(prev[m])


def needleman_wunsch(a, b, scheme: ScoringScheme = DEFAULT_SCHEME) -> SimilarityScore:
    la = len(a.symbols) if hasattr(a, "symbols") else len(a)
    lb = len(b.symbols) if hasattr(b, "symbols") else len(b)
    return SimilarityScore(nw_score(a, b, scheme), la, lb)


def nw_score_many(seqs, b, scheme: ScoringScheme = DEFAULT_SCHEME) -> np.ndarray:
    """Score every sequence in `seqs` against `b` in one vectorized DP.

    Equivalent to [nw_score(s, b) for s in seqs] but runs the row recurrence
    for all pairs simultaneously; rows of already-exhausted sequences are
    frozen. Used on the hot paths (candidates vs. medoid, generated paths
    vs. medoid).
    """
    cb = _codes(b)
    m = len(cb)
    g = scheme.gap
    codes = [_codes(s) for s in seqs]
    lens = np.array([len(c) for c in codes], dtype=np.int64)
    k = len(codes)
    if k == 0:
        return np.zeros(0, dtype=np.int64)
    if m == 0:
        return g * lens
    n_max = int(lens.max())
    a_pad = np.zeros((k, max(n_max, 1)), dtype=np.int64)
    for idx, c in enumerate(codes):
        a_pad[idx, : len(c)] = c
    offsets = g * np.arange(1, m + 1, dtype=np.int64)
    prev = np.tile(g * np.arange(m + 1, dtype=np.int64), (k, 1))
    for i in range(1, n_max + 1):
        active = lens >= i
        sub = np.where(cb[None, :] == a_pad[:, i - 1, None], scheme.match, scheme.mismatch)
        best = np.maximum(prev[:, :-1] + sub, prev[:, 1:] + g)
        head = np.full((k, 1), g * i, dtype=np.int64)
        run = np.maximum.accumulate(np.concatenate([head, best - offsets], axis=1), axis=1)
        row = np.concatenate([head, run[:, 1:] + offsets], axis=1)
        prev = np.where(active[:, None], row, prev)
    return prev[:, m]


def pairwise_matrix(sequences, scheme: ScoringScheme = DEFAULT_SCHEME) -> np.ndarray:
    """Symmetric matrix of NW scores between all pairs (diagonal included)."""
    n = len(sequences)
    mat = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        scores = nw_score_many(sequences[i:], sequences[i], scheme)
        mat[i, i:] = scores
        mat[i:, i] = scores
    return mat
