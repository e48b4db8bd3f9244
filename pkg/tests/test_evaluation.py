import numpy as np
import pytest
from hypothesis import given, strategies as st

from stash.errors import DegenerateDesign, EmptyScores, TooFewRoutes
from stash.evaluation import (
    EvalReport,
    corpus_scores,
    eer,
    emit_report,
    evaluate_schemes,
    far_frr,
    fit_initial_coefficients,
    leave_one_route_out,
    pooled_eer,
    read_report,
    sweep,
)
from stash.pathmodel import NoiseModel, synthesize_corpus


def small_corpus(noise=None, seed=1):
    return synthesize_corpus(
        n_routes=5, instances_per_route=4, route_length_s=200.0,
        noise=noise if noise is not None else NoiseModel(), seed=seed,
        distinct_at_min=2.0,
    )


def test_far_frr_boundaries():
    within, between = [20, 22], [10, 19]
    assert far_frr(within, between, 5) == (1.0, 0.0)    # below all scores
    assert far_frr(within, between, 30) == (0.0, 1.0)   # above all scores


def test_far_frr_hand_count():
    far, frr = far_frr([20, 22], [10, 19], 18)
    assert (far, frr) == (0.5, 0.0)


def test_far_frr_rejects_empty():
    with pytest.raises(EmptyScores):
        far_frr([], [1], 0)
    with pytest.raises(EmptyScores):
        far_frr([1], [], 0)


@given(
    st.lists(st.integers(-20, 50), min_size=1, max_size=20),
    st.lists(st.integers(-20, 50), min_size=1, max_size=20),
)
def test_far_frr_monotone_in_threshold(within, between):
    prev_far, prev_frr = None, None
    for t in range(-21, 52):
        far, frr = far_frr(within, between, t)
        if prev_far is not None:
            assert far <= prev_far       # FAR non-increasing
            assert frr >= prev_frr       # FRR non-decreasing
        prev_far, prev_frr = far, frr


def test_eer_minimizes_far_frr_gap():
    within = [18, 20, 22, 25]
    between = [5, 9, 14, 19]
    point = eer(within, between)
    for t in range(4, 26):
        far, frr = far_frr(within, between, t)
        assert abs(point["far"] - point["frr"]) <= abs(far - frr)
    assert point["eer"] == (point["far"] + point["frr"]) / 2


def test_leave_one_route_out_cardinality():
    corpus = small_corpus()
    results = leave_one_route_out(corpus, lengths_min=(1.0, 2.0, 3.0))
    assert len(results) == 5
    for row in results:
        assert 0.0 <= row["far"] <= 1.0
        assert 0.0 <= row["frr"] <= 1.0
        assert "slope" in row and "intercept" in row


def test_leave_one_route_out_zero_noise_has_zero_frr():
    corpus = small_corpus(noise=NoiseModel.zero())
    results = leave_one_route_out(corpus, lengths_min=(1.0, 2.0, 3.0))
    assert all(row["frr"] == 0.0 for row in results)


def test_leave_one_route_out_slope_positive_and_rates_match_direct_loop():
    corpus = small_corpus(noise=NoiseModel.zero(), seed=3)
    results = leave_one_route_out(corpus, lengths_min=(1.0, 2.0, 3.0),
                                  eval_length_min=2.0)
    assert all(row["slope"] > 0 for row in results)
    # independent evaluation loop for the held-out route
    from stash.alignment import nw_score
    from stash.trajectory import strip_stationary, trim_to_duration

    for held, row in enumerate(results):
        t = row["threshold"]
        held_cut = [strip_stationary(trim_to_duration(i, 120.0))
                    for i in corpus[held].instances]
        within = [nw_score(a, b) for k, a in enumerate(held_cut)
                  for b in held_cut[k + 1:]]
        between = []
        for other in range(len(corpus)):
            if other == held:
                continue
            for inst in corpus[other].instances:
                cut = strip_stationary(trim_to_duration(inst, 120.0))
                between.extend(nw_score(cut, h) for h in held_cut)
        far = sum(1 for s in between if s > t) / len(between)
        frr = sum(1 for s in within if s <= t) / len(within)
        assert (row["far"], row["frr"]) == (far, frr)


def test_leave_one_route_out_needs_two_routes():
    corpus = small_corpus()[:1]
    with pytest.raises(TooFewRoutes):
        leave_one_route_out(corpus)


def test_fit_two_points_exact_line():
    scores = {
        1.0: ([10, 11], [2, 3]),
        2.0: ([20, 21], [12, 13]),
    }
    coeffs = fit_initial_coefficients(scores, alphas=(0.5,))
    slope, intercept, r = coeffs[0.5]
    assert r == pytest.approx(1.0)
    t1 = slope * 1.0 + intercept
    t2 = slope * 2.0 + intercept
    # fitted line passes through the two optimal thresholds exactly
    from stash.thresholds import local_threshold
    assert t1 == pytest.approx(local_threshold([10, 11], [2, 3]))
    assert t2 == pytest.approx(local_threshold([20, 21], [12, 13]))


def test_fit_recovers_synthetic_slope():
    rng = np.random.default_rng(0)
    true_slope, true_intercept = 9.0, -1.0
    scores = {}
    for L in (1.0, 2.0, 3.0, 4.0, 5.0, 6.0):
        center = true_slope * L + true_intercept
        within = (center + 6 + rng.normal(0, 0.8, 300)).astype(int).tolist()
        between = (center - 6 + rng.normal(0, 0.8, 300)).astype(int).tolist()
        scores[L] = (within, between)
    slope, intercept, r = fit_initial_coefficients(scores, alphas=(0.5,))[0.5]
    assert slope == pytest.approx(true_slope, rel=0.05)
    assert r > 0.99


def test_fit_requires_two_lengths():
    with pytest.raises(DegenerateDesign):
        fit_initial_coefficients({2.0: ([1], [0])})


def test_fit_alpha_trend_lowers_thresholds():
    # with overlapping score distributions, weighting FRR more (larger
    # alpha) pushes the fitted threshold level down at every length,
    # mirroring the shipped table where D(L) at fixed L decreases in alpha
    rng = np.random.default_rng(5)
    scores = {}
    for L in (1.0, 2.0, 4.0, 6.0):
        center = 9.0 * L
        within = (center + rng.normal(2.0, 3.0, 400)).astype(int).tolist()
        between = (center + rng.normal(-2.0, 3.0, 400)).astype(int).tolist()
        scores[L] = (within, between)
    coeffs = fit_initial_coefficients(scores, alphas=(0.2, 0.5, 0.8))
    for L in (1.0, 2.0, 4.0, 6.0):
        predicted = [coeffs[a][0] * L + coeffs[a][1] for a in (0.2, 0.5, 0.8)]
        assert predicted[0] >= predicted[1] >= predicted[2]


def test_alpha_sweep_endpoints_trade_off(default_corpus):
    reports = sweep(default_corpus, "alpha", values=(0.1, 0.9))
    low, high = reports[0], reports[1]
    # large alpha prioritizes FRR, small alpha prioritizes FAR
    assert high.pooled_frr <= low.pooled_frr
    assert low.pooled_far <= high.pooled_far


def test_instance_sweep_n1_mixed_equals_initial():
    corpus = small_corpus(seed=5)
    rows = evaluate_schemes(corpus, 1, seed=0)
    for a, b in zip(rows["initial"], rows["mixed"]):
        assert a == b


def test_scheme_sweep_shapes():
    corpus = small_corpus(seed=6)
    reports = sweep(corpus, "n_instances", values=(1, 2), seed=0)
    assert len(reports) == 6  # two values x three schemes
    for rep in reports:
        assert len(rep.per_route) == 5
        assert rep.median_far is not None


def test_sweep_unknown_axis():
    with pytest.raises(ValueError):
        sweep([], "bogus")


def test_sweep_insufficient_instances():
    from stash.errors import InsufficientInstances

    corpus = small_corpus(seed=11)  # four instances per route
    with pytest.raises(InsufficientInstances):
        evaluate_schemes(corpus, 9)


def test_pooled_eer_low_on_clean_corpus():
    corpus = small_corpus(noise=NoiseModel.zero(), seed=7)
    point = pooled_eer(corpus, 2.0)
    assert point["eer"] == 0.0


def test_emit_report_files(tmp_path):
    corpus = small_corpus(seed=8)
    reports = sweep(corpus, "length", values=(1.0, 2.0), seed=0)
    out = tmp_path / "report.csv"
    emit_report(reports, out)
    detail = read_report(out)
    assert len(detail) == 10  # 5 routes x 2 lengths
    assert list(detail[0].keys()) == [
        "axis", "value", "scheme", "alpha", "length_min", "route_id", "far", "frr",
    ]
    summary = read_report(tmp_path / "report_summary.csv")
    assert len(summary) == 2
    assert "mean_far" in summary[0] and "std_frr" in summary[0]


def test_emit_report_empty_is_header_only(tmp_path):
    out = tmp_path / "empty.csv"
    emit_report([], out)
    assert read_report(out) == []
    header = out.read_text().strip().split(",")
    assert header == list(
        ("axis", "value", "scheme", "alpha", "length_min", "route_id", "far", "frr")
    )


def test_report_determinism(tmp_path):
    corpus = small_corpus(seed=9)
    for name in ("a.csv", "b.csv"):
        emit_report(sweep(corpus, "n_instances", values=(1, 2), seed=4), tmp_path / name)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a_summary.csv").read_bytes() == (tmp_path / "b_summary.csv").read_bytes()
