"""Accept/reject decision thresholds for trajectory similarity scores.

Three threshold flavours:

* initial  -- affine in the reference-path length L (minutes); coefficients
  per trade-off weight alpha are shipped as package data.
* local    -- the integer threshold minimizing the combined error
  alpha*FRR + (1-alpha)*FAR over observed within/between score sets.
* mixed    -- convex blend of the two, weighted by a confidence factor
  lambda(n) = (n-1)/n that grows with the number of seen instances.

A candidate is accepted iff its similarity score is strictly greater than
the threshold; FRR(t) counts within-scores <= t, FAR(t) counts
between-scores > t. That convention is used consistently everywhere.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

from .errors import EmptyScores, InvalidCount, UnknownAlpha


def _load_table() -> dict[float, tuple[float, float]]:
    text = resources.files("stash.data").joinpath("initial_thresholds.csv").read_text()
    table = {}
    for row in csv.DictReader(text.splitlines()):
        table[float(row["alpha"])] = (float(row["slope"]), float(row["intercept"]))
    return table


INITIAL_THRESHOLD_TABLE = _load_table()


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def initial_coefficients(alpha: float) -> tuple[float, float]:
    """(slope, intercept) for the given alpha; linear interpolation between
    tabulated rows, no extrapolation outside [0.1, 0.9]."""
    table = INITIAL_THRESHOLD_TABLE
    key = round(alpha, 10)
    if key in table:
        return table[key]
    alphas = sorted(table)
    if not alphas[0] <= alpha <= alphas[-1]:
        raise UnknownAlpha(f"alpha {alpha} outside tabulated range [{alphas[0]}, {alphas[-1]}]")
    hi = next(a for a in alphas if a > alpha)
    lo = max(a for a in alphas if a < alpha)
    w = (alpha - lo) / (hi - lo)
    s_lo, i_lo = table[lo]
    s_hi, i_hi = table[hi]
    return (s_lo + w * (s_hi - s_lo), i_lo + w * (i_hi - i_lo))


def initial_threshold(length_min: float, alpha: float = 0.5) -> int:
    """Length-based decision threshold, rounded to an integer."""
    if length_min <= 0:
        raise ValueError("path length must be positive")
    slope, intercept = initial_coefficients(alpha)
    return _round_half_away(slope * length_min + intercept)


def combined_error(threshold: int, within, between, alpha: float) -> float:
    frr = sum(1 for s in within if s <= threshold) / len(within)
    far = sum(1 for s in between if s > threshold) / len(between)
    return alpha * frr + (1 - alpha) * far


def local_threshold(within_scores, between_scores, alpha: float = 0.5) -> int:
    """Integer threshold minimizing alpha*FRR + (1-alpha)*FAR.

    Among co-minimal thresholds the centermost one is returned: the midpoint
    (rounded down) of the longest contiguous run of minimizers, for maximum
    margin on both sides. Equal-length runs tie-break to the lowest one.
    """
    within = list(within_scores)
    between = list(between_scores)
    if not within or not between:
        raise EmptyScores("need both within- and between-class scores")
    lo = int(min(min(within), min(between))) - 1
    hi = int(max(max(within), max(between)))
    candidates = range(lo, hi + 1)
    errors = [combined_error(t, within, between, alpha) for t in candidates]
    best = min(errors)
    runs = []  # (length, start, end) of contiguous minimizer runs
    start = None
    for t, err in zip(candidates, errors):
        if err == best:
            if start is None:
                start = t
            end = t
        elif start is not None:
            runs.append((end - start, start, end))
            start = None
    if start is not None:
        runs.append((end - start, start, end))
    _, start, end = max(runs, key=lambda r: r[0])
    return (start + end) // 2


def confidence_factor(n: int) -> float:
    """lambda(n) = (n-1)/n; no confidence at n=1, full confidence at infinity.

    The float result is the correctly rounded value of the exact rational;
    the halving law (the distance to one halves at every doubling of n)
    holds exactly for the rational and is verified that way in tests.
    """
    if n < 1:
        raise InvalidCount(f"instance count must be >= 1, got {n}")
    return (n - 1) / n


def mixed_threshold(d_initial: float, d_local: float | None, n: int) -> float:
    """Convex combination lambda*d_local + (1-lambda)*d_initial.

    Kept real-valued: scores are integers, so comparing against a fractional
    threshold is well defined and loses nothing.
    """
    lam = confidence_factor(n)
    if d_local is None:
        return float(d_initial)
    return lam * d_local + (1 - lam) * d_initial


@dataclass
class ThresholdState:
    """Per-reference-path decision threshold bookkeeping."""

    d_initial: int
    n: int = 1
    d_local: float | None = None

    @property
    def lam(self) -> float:
        return confidence_factor(self.n)

    @property
    def d(self) -> float:
        return mixed_threshold(self.d_initial, self.d_local, self.n)

    def as_dict(self) -> dict:
        return {
            "d_initial": self.d_initial,
            "n": self.n,
            "d_local": self.d_local,
            "lambda": self.lam,
            "d": self.d,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdState":
        return cls(d_initial=d["d_initial"], n=d["n"], d_local=d["d_local"])
