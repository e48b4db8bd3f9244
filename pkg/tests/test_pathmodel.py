import numpy as np
import pytest
from hypothesis import given, strategies as st

from stash.alignment import nw_score
from stash.errors import EmptyCorpus, RejectionExhausted
from stash.pathmodel import (
    MarkovChain,
    NoiseModel,
    fit_markov,
    load_corpus,
    perturb_instance,
    sample_path,
    sample_symbols,
    save_corpus,
    synthesize_corpus,
)
from stash.thresholds import initial_threshold
from stash.trajectory import serialize, trim_to_duration


def test_fit_markov_hand_count_with_smoothing():
    chain = fit_markov(["MMMM"])
    # three M->M transitions, add-one over the 3-state alphabet
    assert chain.transition[0, 0] == pytest.approx(4 / 6)
    assert chain.transition[0, 1] == pytest.approx(1 / 6)
    assert chain.transition[0, 2] == pytest.approx(1 / 6)


def test_fit_markov_smoothing_keeps_unseen_states_reachable():
    chain = fit_markov(["MMRMMRM", "MRMMM"])
    assert (chain.transition[:, 1] > 0).all()  # no L anywhere, still reachable


@given(st.lists(st.text(alphabet="MLR", min_size=1, max_size=30), min_size=1, max_size=5))
def test_fit_markov_rows_sum_to_one(seqs):
    chain = fit_markov(seqs)
    assert np.allclose(chain.transition.sum(axis=1), 1.0, atol=1e-9)
    assert np.isclose(chain.initial.sum(), 1.0, atol=1e-9)


def test_fit_markov_ignores_stationary_symbols():
    chain = fit_markov(["MSM"])
    # S is stripped: one M->M transition observed, add-one over 3 states
    assert chain.transition[0, 0] == pytest.approx(2 / 4)
    assert fit_markov(["MSM"]).transition.tolist() == fit_markov(["MM"]).transition.tolist()


def test_fit_markov_rejects_empty():
    with pytest.raises(EmptyCorpus):
        fit_markov([])
    with pytest.raises(EmptyCorpus):
        fit_markov(["", "SS"])


def test_sample_absorbing_chain():
    chain = MarkovChain(np.eye(3)[[0, 0, 0]], np.array([1.0, 0.0, 0.0]))
    assert sample_path(chain, 7, seed=0).symbols == "MMMMMMM"


def test_sample_deterministic_for_seed():
    chain = fit_markov(["MMRMLMMRM"])
    a = sample_path(chain, 50, seed=11)
    b = sample_path(chain, 50, seed=11)
    assert a == b
    assert sample_symbols(chain, 20, 5, seed=3) == sample_symbols(chain, 20, 5, seed=3)


def test_sample_empirical_frequencies_converge():
    transition = np.array([
        [0.8, 0.1, 0.1],
        [0.3, 0.6, 0.1],
        [0.3, 0.1, 0.6],
    ])
    chain = MarkovChain(transition, np.array([1 / 3, 1 / 3, 1 / 3]))
    text = sample_symbols(chain, 10_000, 1, seed=2)[0]
    idx = {"M": 0, "L": 1, "R": 2}
    counts = np.zeros((3, 3))
    for a, b in zip(text, text[1:]):
        counts[idx[a], idx[b]] += 1
    empirical = counts / counts.sum(axis=1, keepdims=True)
    assert np.abs(empirical - transition).max() < 0.02


def test_fit_sample_roundtrip_recovers_chain():
    transition = np.array([
        [0.7, 0.2, 0.1],
        [0.4, 0.5, 0.1],
        [0.25, 0.15, 0.6],
    ])
    chain = MarkovChain(transition, np.array([1.0, 0.0, 0.0]))
    text = sample_symbols(chain, 20_000, 1, seed=8)[0]
    fitted = fit_markov([text])
    assert np.abs(fitted.transition - transition).max() < 0.02


def test_markov_chain_validation():
    with pytest.raises(ValueError):
        MarkovChain(np.full((3, 3), 0.5), np.array([1.0, 0, 0]))
    with pytest.raises(ValueError):
        MarkovChain(np.eye(3), np.array([0.5, 0.2, 0.2]))


def test_zero_noise_instances_identical(default_corpus):
    routes = synthesize_corpus(
        n_routes=3, instances_per_route=4, route_length_s=180.0,
        noise=NoiseModel.zero(), seed=1,
    )
    for route in routes:
        for inst in route.instances:
            assert inst == route.ground_truth


def test_corpus_shape_matches_request(default_corpus):
    assert len(default_corpus) == 20
    assert all(len(r.instances) == 8 for r in default_corpus)
    assert all(r.ground_truth.duration_s >= 300.0 for r in default_corpus)


def test_ground_truths_are_pairwise_distinct(default_corpus):
    threshold = initial_threshold(2.0, alpha=0.5)
    cuts = [trim_to_duration(r.ground_truth, 120.0) for r in default_corpus]
    for i in range(len(cuts)):
        for j in range(i + 1, len(cuts)):
            assert nw_score(cuts[i], cuts[j]) < threshold


def test_within_scores_dominate_between_scores(default_corpus):
    rng = np.random.default_rng(0)
    within, between = [], []
    for r, route in enumerate(default_corpus[:6]):
        cuts = [trim_to_duration(i, 120.0) for i in route.instances]
        within.extend(nw_score(cuts[0], c) for c in cuts[1:])
        other = default_corpus[(r + 1) % 6].instances
        between.extend(
            nw_score(cuts[0], trim_to_duration(o, 120.0)) for o in other[:4]
        )
    assert min(within) > max(0, np.median(between))
    assert np.median(within) > np.percentile(between, 95)


def test_corpus_reproducible_byte_for_byte():
    a = synthesize_corpus(n_routes=4, instances_per_route=3, route_length_s=150.0, seed=9)
    b = synthesize_corpus(n_routes=4, instances_per_route=3, route_length_s=150.0, seed=9)
    text_a = "".join(serialize(i) for r in a for i in r.instances)
    text_b = "".join(serialize(i) for r in b for i in r.instances)
    assert text_a == text_b
    c = synthesize_corpus(n_routes=4, instances_per_route=3, route_length_s=150.0, seed=10)
    text_c = "".join(serialize(i) for r in c for i in r.instances)
    assert text_a != text_c


def test_rejection_exhaustion_raises():
    # tiny distinctness threshold: short mostly-M routes always collide
    with pytest.raises(RejectionExhausted):
        synthesize_corpus(n_routes=10, instances_per_route=1,
                          route_length_s=60.0, seed=0,
                          distinct_at_min=0.5, max_rejects=5)


def test_perturb_jitters_turn_counts():
    routes = synthesize_corpus(n_routes=1, instances_per_route=1,
                               route_length_s=200.0, seed=4)
    plan = routes[0].plan
    rng = np.random.default_rng(0)
    noisy = perturb_instance(plan, NoiseModel(p_drop=0.0, p_insert=0.0,
                                              turn_jitter_deg=40.0), rng)
    clean = perturb_instance(plan, NoiseModel.zero(), rng)
    assert noisy.symbols != clean.symbols  # huge jitter must change runs


def test_corpus_save_load_roundtrip(tmp_path):
    routes = synthesize_corpus(n_routes=2, instances_per_route=3,
                               route_length_s=150.0, seed=5)
    save_corpus(routes, tmp_path / "corpus")
    loaded = load_corpus(tmp_path / "corpus")
    assert len(loaded) == 2
    for orig, back in zip(routes, loaded):
        assert back.ground_truth == orig.ground_truth
        assert back.instances == orig.instances


def test_parameter_validation():
    with pytest.raises(ValueError):
        synthesize_corpus(n_routes=0)
    with pytest.raises(ValueError):
        NoiseModel(p_drop=1.5)
    with pytest.raises(ValueError):
        sample_symbols(fit_markov(["MM"]), 0, 1)
