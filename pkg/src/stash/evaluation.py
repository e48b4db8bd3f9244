"""FAR/FRR evaluation over route corpora: pooled statistics, leave-one-route-
out threshold fitting, and sweeps over length / instance count / alpha."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from statistics import median

import numpy as np

from . import trajectory
from .alignment import nw_score_many, pairwise_matrix
from .errors import (
    DegenerateDesign,
    EmptyScores,
    InsufficientInstances,
    TooFewRoutes,
)
from .pathmodel import fit_markov, sample_paths_matching
from .repository import select_medoid
from .thresholds import (
    INITIAL_THRESHOLD_TABLE,
    confidence_factor,
    initial_threshold,
    local_threshold,
)

DEFAULT_LENGTHS_MIN = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
MAX_COMBOS_PER_ROUTE = 500
BETWEEN_SAMPLES_PER_UPDATE = 200


def far_frr(within_scores, between_scores, threshold) -> tuple[float, float]:
    """FAR = impostor scores above the threshold; FRR = genuine scores at or
    below it (accept requires score strictly greater than threshold)."""
    within = list(within_scores)
    between = list(between_scores)
    if not within or not between:
        raise EmptyScores("need both genuine and impostor scores")
    far = sum(1 for s in between if s > threshold) / len(between)
    frr = sum(1 for s in within if s <= threshold) / len(within)
    return far, frr


def eer(within_scores, between_scores) -> dict:
    """Operating point where |FAR - FRR| is minimal over integer thresholds."""
    within = list(within_scores)
    between = list(between_scores)
    if not within or not between:
        raise EmptyScores("need both genuine and impostor scores")
    lo = int(min(min(within), min(between))) - 1
    hi = int(max(max(within), max(between)))
    best = None
    for t in range(lo, hi + 1):
        far, frr = far_frr(within, between, t)
        gap = abs(far - frr)
        if best is None or gap < best["gap"]:
            best = {"threshold": t, "far": far, "frr": frr, "gap": gap,
                    "eer": (far + frr) / 2}
    del best["gap"]
    return best


# ---------------------------------------------------------------------------
# corpus score cache
# ---------------------------------------------------------------------------

def prepared_instances(corpus, length_min: float):
    """Instances stripped of S and trimmed to `length_min`, per route."""
    window_s = length_min * 60.0
    return [
        [trajectory.strip_stationary(trajectory.trim_to_duration(inst, window_s))
         for inst in route.instances]
        for route in corpus
    ]


def corpus_scores(corpus, length_min: float):
    """Within-route pair scores and cross-route pair scores at one length.

    Returns (within, between): within[r] lists all unique pair scores inside
    route r; between[(r1, r2)] lists all instance pair scores across the two
    routes (r1 < r2). Cross pairs are counted once.
    """
    prepared = prepared_instances(corpus, length_min)
    within = []
    for seqs in prepared:
        mat = pairwise_matrix(seqs)
        iu = np.triu_indices(len(seqs), k=1)
        within.append(mat[iu].tolist())
    between = {}
    for r1 in range(len(prepared)):
        for r2 in range(r1 + 1, len(prepared)):
            scores = []
            for seq in prepared[r1]:
                scores.extend(nw_score_many(prepared[r2], seq).tolist())
            between[(r1, r2)] = scores
    return within, between


def _pool_between(between, exclude=None):
    pooled = []
    for (r1, r2), scores in between.items():
        if exclude is not None and exclude in (r1, r2):
            continue
        pooled.extend(scores)
    return pooled


def _route_between(between, route):
    scores = []
    for (r1, r2), vals in between.items():
        if route in (r1, r2):
            scores.extend(vals)
    return scores


# ---------------------------------------------------------------------------
# initial-threshold fitting
# ---------------------------------------------------------------------------

def fit_initial_coefficients(scores_by_length: dict, alphas=(0.5,)) -> dict:
    """Per-alpha OLS fit of optimal threshold vs. path length.

    `scores_by_length` maps length (minutes) to a (within, between) score
    pair. Returns alpha -> (slope, intercept, r). Needs at least two
    distinct lengths.
    """
    lengths = sorted(scores_by_length)
    if len(lengths) < 2:
        raise DegenerateDesign("need scores for at least two distinct lengths")
    out = {}
    for alpha in alphas:
        thresholds = [
            local_threshold(*scores_by_length[L], alpha=alpha) for L in lengths
        ]
        slope, intercept = np.polyfit(lengths, thresholds, 1)
        if np.std(thresholds) == 0:
            r = 0.0
        else:
            r = float(np.corrcoef(lengths, thresholds)[0, 1])
        out[alpha] = (float(slope), float(intercept), r)
    return out


def leave_one_route_out(corpus, alpha: float = 0.5,
                        lengths_min=DEFAULT_LENGTHS_MIN,
                        eval_length_min: float = 2.0) -> list[dict]:
    """Fit initial-threshold coefficients on all-but-one route, apply to the
    held-out route, and report its FAR/FRR at `eval_length_min`."""
    if len(corpus) < 2:
        raise TooFewRoutes("leave-one-route-out needs at least two routes")
    cache = {L: corpus_scores(corpus, L) for L in lengths_min}
    eval_within, eval_between = cache.get(eval_length_min) or corpus_scores(
        corpus, eval_length_min
    )
    results = []
    for held in range(len(corpus)):
        scores_by_length = {}
        for L in lengths_min:
            within, between = cache[L]
            pooled_within = [s for r, scores in enumerate(within) if r != held
                             for s in scores]
            pooled_between = _pool_between(between, exclude=held)
            scores_by_length[L] = (pooled_within, pooled_between)
        slope, intercept, r = fit_initial_coefficients(scores_by_length, (alpha,))[alpha]
        threshold = int(np.floor(slope * eval_length_min + intercept + 0.5))
        far, frr = far_frr(
            eval_within[held], _route_between(eval_between, held), threshold
        )
        results.append({
            "route_id": corpus[held].route_id,
            "slope": slope,
            "intercept": intercept,
            "r": r,
            "threshold": threshold,
            "far": far,
            "frr": frr,
        })
    return results


# ---------------------------------------------------------------------------
# scheme evaluation and sweeps
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    axis: str
    value: object
    scheme: str
    alpha: float
    length_min: float
    per_route: list = field(default_factory=list)  # dicts: route_id, far, frr
    pooled_far: float | None = None
    pooled_frr: float | None = None
    eer: float | None = None

    def _rates(self, key):
        return [row[key] for row in self.per_route]

    @property
    def median_far(self):
        return median(self._rates("far")) if self.per_route else None

    @property
    def median_frr(self):
        return median(self._rates("frr")) if self.per_route else None

    @property
    def mean_far(self):
        return float(np.mean(self._rates("far"))) if self.per_route else None

    @property
    def std_far(self):
        return float(np.std(self._rates("far"))) if self.per_route else None

    @property
    def mean_frr(self):
        return float(np.mean(self._rates("frr"))) if self.per_route else None

    @property
    def std_frr(self):
        return float(np.std(self._rates("frr"))) if self.per_route else None


def _combos(n_total, n_ref, max_combos, rng):
    combos = list(itertools.combinations(range(n_total), n_ref))
    if len(combos) > max_combos:
        idx = rng.choice(len(combos), size=max_combos, replace=False)
        combos = [combos[i] for i in sorted(idx)]
    return combos


def evaluate_schemes(corpus, n_instances: int, alpha: float = 0.5,
                     length_min: float = 2.0, seed: int = 0,
                     schemes=("initial", "local", "mixed"),
                     max_combos: int = MAX_COMBOS_PER_ROUTE) -> dict:
    """Per-route FAR/FRR for each threshold scheme at one instance count.

    Genuine trials enumerate reference/candidate splits of each route's
    instances (capped, seeded); impostor trials score all other routes'
    instances against the combo's medoid. Returns scheme -> per-route rows.
    """
    prepared = prepared_instances(corpus, length_min)
    max_available = min(len(seqs) for seqs in prepared)
    if n_instances > max_available:
        raise InsufficientInstances(
            f"routes hold {max_available} instances, need {n_instances}"
        )
    d_init = initial_threshold(length_min, alpha)
    rng = np.random.default_rng(seed)
    rows = {scheme: [] for scheme in schemes}
    for r, seqs in enumerate(prepared):
        others = [s for rr, other in enumerate(prepared) if rr != r for s in other]
        combos = _combos(len(seqs), n_instances, max_combos, rng)
        counts = {scheme: [0, 0, 0, 0] for scheme in schemes}  # fa, imp, fr, gen
        for c_idx, combo in enumerate(combos):
            refs = [seqs[i] for i in combo]
            held_out = [seqs[i] for i in range(len(seqs)) if i not in combo]
            mat = pairwise_matrix(refs)
            medoid_idx = select_medoid(refs, mat)
            medoid = refs[medoid_idx]
            thresholds = {}
            if "initial" in schemes:
                thresholds["initial"] = d_init
            if ("local" in schemes or "mixed" in schemes) and n_instances >= 2:
                iu = np.triu_indices(len(refs), k=1)
                within_refs = mat[iu].tolist()
                chain = fit_markov(refs)
                generated = sample_paths_matching(
                    chain, len(medoid), BETWEEN_SAMPLES_PER_UPDATE,
                    seed=seed * 1_000_003 + r * 1009 + c_idx,
                )
                gen_scores = nw_score_many(generated, medoid).tolist()
                d_loc = float(local_threshold(within_refs, gen_scores, alpha))
                if "local" in schemes:
                    thresholds["local"] = d_loc
                if "mixed" in schemes:
                    lam = confidence_factor(n_instances)
                    thresholds["mixed"] = lam * d_loc + (1 - lam) * d_init
            else:
                # with one instance there is no within-class data: the local
                # and mixed schemes coincide with the initial threshold
                for scheme in ("local", "mixed"):
                    if scheme in schemes:
                        thresholds[scheme] = d_init
            genuine = nw_score_many(held_out, medoid) if held_out else np.zeros(0)
            impostor = nw_score_many(others, medoid)
            for scheme, d in thresholds.items():
                fa = int((impostor > d).sum())
                fr = int((genuine <= d).sum())
                c = counts[scheme]
                c[0] += fa
                c[1] += len(impostor)
                c[2] += fr
                c[3] += len(genuine)
        for scheme in schemes:
            fa, imp, fr, gen = counts[scheme]
            rows[scheme].append({
                "route_id": corpus[r].route_id,
                "far": fa / imp if imp else 0.0,
                "frr": fr / gen if gen else 0.0,
            })
    return rows


def sweep(corpus, axis: str, alpha: float = 0.5, length_min: float = 2.0,
          seed: int = 0, values=None) -> list[EvalReport]:
    """One EvalReport per axis value (times three schemes for the instance
    sweep)."""
    reports = []
    if axis == "length":
        values = values or DEFAULT_LENGTHS_MIN
        for L in values:
            rows = evaluate_schemes(corpus, 1, alpha, L, seed, schemes=("initial",))
            reports.append(EvalReport(
                axis="length", value=L, scheme="initial", alpha=alpha,
                length_min=L, per_route=rows["initial"],
            ))
    elif axis == "n_instances":
        values = values or (1, 2, 3, 4, 5)
        for n in values:
            rows = evaluate_schemes(corpus, n, alpha, length_min, seed)
            for scheme, per_route in rows.items():
                reports.append(EvalReport(
                    axis="n_instances", value=n, scheme=scheme, alpha=alpha,
                    length_min=length_min, per_route=per_route,
                ))
    elif axis == "alpha":
        values = values or tuple(sorted(INITIAL_THRESHOLD_TABLE))
        within, between = corpus_scores(corpus, length_min)
        pooled_within = [s for scores in within for s in scores]
        pooled_between = _pool_between(between)
        for a in values:
            t = local_threshold(pooled_within, pooled_between, a)
            far, frr = far_frr(pooled_within, pooled_between, t)
            reports.append(EvalReport(
                axis="alpha", value=a, scheme="pooled-optimal", alpha=a,
                length_min=length_min, pooled_far=far, pooled_frr=frr,
            ))
    elif axis == "scheme":
        rows = evaluate_schemes(corpus, 5, alpha, length_min, seed)
        for scheme, per_route in rows.items():
            reports.append(EvalReport(
                axis="scheme", value=scheme, scheme=scheme, alpha=alpha,
                length_min=length_min, per_route=per_route,
            ))
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return reports


def pooled_eer(corpus, length_min: float = 2.0) -> dict:
    within, between = corpus_scores(corpus, length_min)
    pooled_within = [s for scores in within for s in scores]
    return eer(pooled_within, _pool_between(between))


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

DETAIL_COLUMNS = ("axis", "value", "scheme", "alpha", "length_min",
                  "route_id", "far", "frr")
SUMMARY_COLUMNS = ("axis", "value", "scheme", "length_min",
                   "mean_far", "std_far", "mean_frr", "std_frr",
                   "median_far", "median_frr", "pooled_far", "pooled_frr")


def emit_report(reports, path) -> None:
    """Detail CSV (one row per route and axis value) plus a summary CSV with
    mean/std columns alongside it (suffix `_summary.csv`)."""
    path = str(path)
    summary_path = path[:-4] + "_summary.csv" if path.endswith(".csv") \
        else path + "_summary.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(DETAIL_COLUMNS)
        for rep in reports:
            for row in rep.per_route:
                writer.writerow([
                    rep.axis, rep.value, rep.scheme, rep.alpha, rep.length_min,
                    row["route_id"], row["far"], row["frr"],
                ])
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for rep in reports:
            writer.writerow([
                rep.axis, rep.value, rep.scheme, rep.length_min,
                rep.mean_far, rep.std_far, rep.mean_frr, rep.std_frr,
                rep.median_far, rep.median_frr, rep.pooled_far, rep.pooled_frr,
            ])


def read_report(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
