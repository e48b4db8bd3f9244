"""Acceptance suite: one test per shipped criterion, each printing a
PASS line with its runtime. Run with `pytest tests/test_acceptance.py -v -s`.
"""

import itertools
import time
from fractions import Fraction
from statistics import median

import numpy as np
import pytest

from stash.alignment import nw_score
from stash.evaluation import evaluate_schemes, pooled_eer
from stash.imu import LabelRingBuffer, RingBufferSpec, SampleRingBuffer, buffer_memory_bytes
from stash.imu_synth import TurnSpec, yaw_rate_profile
from stash.movement import HmmParams, viterbi_path
from stash.repository import select_medoid
from stash.thresholds import confidence_factor, initial_threshold
from stash.turns import TurnDetectorConfig, condition_gyro, detect_turns, integrate_heading


def report(number, name, elapsed_s, budget_s):
    print(f"\n[criterion {number}] {name}: PASS ({elapsed_s:.3f}s, budget {budget_s}s)")
    assert elapsed_s < budget_s


def test_c1_threshold_formula_reproduction():
    initial_threshold(1, alpha=0.5)  # warm the table cache
    t0 = time.perf_counter()
    values = (
        initial_threshold(1, alpha=0.5),
        initial_threshold(2, alpha=0.5),
        initial_threshold(5, alpha=0.5),
    )
    elapsed = time.perf_counter() - t0
    assert values == (8, 18, 47)
    report(1, "threshold formula reproduction", elapsed, 0.001)


def test_c2_confidence_factor_laws():
    t0 = time.perf_counter()
    assert confidence_factor(1) == 0.0
    assert confidence_factor(2) == 0.5
    assert confidence_factor(5) == 0.8
    for n in range(1, 1001):
        lam_n = Fraction(n - 1, n)
        lam_2n = Fraction(2 * n - 1, 2 * n)
        assert 1 - lam_2n == (1 - lam_n) / 2  # halving law, exact rationals
        assert confidence_factor(n) == float(lam_n)  # correctly rounded float
    report(2, "confidence-factor laws", time.perf_counter() - t0, 1.0)


def _align_recursive(a, b):
    if not a and not b:
        return 0
    options = []
    if a and b:
        options.append(_align_recursive(a[:-1], b[:-1]) + (1 if a[-1] == b[-1] else -2))
    if a:
        options.append(_align_recursive(a[:-1], b) - 1)
    if b:
        options.append(_align_recursive(a, b[:-1]) - 1)
    return max(options)


def _align_memo(a, b, memo):
    key = (len(a), len(b))
    if key in memo:
        return memo[key]
    if not a and not b:
        return 0
    options = []
    if a and b:
        options.append(_align_memo(a[:-1], b[:-1], memo) + (1 if a[-1] == b[-1] else -2))
    if a:
        options.append(_align_memo(a[:-1], b, memo) - 1)
    if b:
        options.append(_align_memo(a, b[:-1], memo) - 1)
    memo[key] = max(options)
    return memo[key]


def test_c3_alignment_oracle_equivalence():
    t0 = time.perf_counter()
    alphabet = "MLR"
    short = [""]
    for length in range(1, 5):
        short.extend("".join(p) for p in itertools.product(alphabet, repeat=length))
    # every pair up to length 4, plain exponential enumeration
    for a in short:
        for b in short:
            assert nw_score(a, b) == _align_recursive(a, b)
    # 10,000 random pairs up to length 6, memoized enumeration
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        la, lb = rng.integers(0, 7, size=2)
        a = "".join(alphabet[i] for i in rng.integers(0, 3, la))
        b = "".join(alphabet[i] for i in rng.integers(0, 3, lb))
        assert nw_score(a, b) == _align_memo(a, b, {})
    report(3, "alignment oracle equivalence", time.perf_counter() - t0, 30.0)


def _viterbi_brute_force(obs_text, params):
    """Max log-probability over all 2^T state paths plus the argmax set,
    accumulated in the DP's own operation order for exact float equality."""
    obs = np.array(["MS".index(o) for o in obs_text])
    T = len(obs)
    with np.errstate(divide="ignore"):
        log_a = np.log(params.transition)
        log_b = np.log(params.emission)
        log_pi = np.log(np.array(params.initial))
    bits = (np.arange(2 ** T)[:, None] >> np.arange(T)[None, :]) & 1
    lp = log_pi[bits[:, 0]] + log_b[bits[:, 0], obs[0]]
    for t in range(1, T):
        lp = lp + log_a[bits[:, t - 1], bits[:, t]]
        lp = lp + log_b[bits[:, t], obs[t]]
    best = lp.max()
    argmax = {"".join("MS"[s] for s in bits[i]) for i in np.flatnonzero(lp == best)}
    return argmax, best


def test_c4_viterbi_oracle_equivalence():
    t0 = time.perf_counter()
    params = HmmParams()
    rng = np.random.default_rng(1)
    for _ in range(200):
        T = int(rng.integers(1, 13))
        obs = "".join("MS"[b] for b in rng.integers(0, 2, T))
        decoded = viterbi_path(obs, params)
        argmax, _ = _viterbi_brute_force(obs, params)
        assert decoded in argmax
        if len(argmax) == 1:
            assert decoded == next(iter(argmax))
    report(4, "Viterbi oracle equivalence", time.perf_counter() - t0, 10.0)


def test_c5_turn_quantization():
    t0 = time.perf_counter()
    specs = [TurnSpec(90.0, 6.0), TurnSpec(-47.0, 4.0), TurnSpec(15.0, 2.0)]
    cfg = TurnDetectorConfig()
    for seed in range(50):
        yaw = yaw_rate_profile(specs, noise_std_dps=0.5, seed=seed)
        cond = condition_gyro(yaw, cfg, rate_hz=20.0)
        trace = integrate_heading(cond, window_s=cfg.window_s)
        events = detect_turns(trace, cfg, rate_hz=20.0)
        assert [(e.count, e.direction) for e in events] == \
            [(6, "R"), (3, "L"), (1, "R")]
    report(5, "turn quantization", time.perf_counter() - t0, 10.0)


def test_c6_relay_attack_blocking():
    from stash.protocol import SessionResult
    from stash.scenarios import build_world, run_scenario

    t0 = time.perf_counter()
    world = build_world(seed=0)
    gated = run_scenario("relay", world=world, seed=0, sessions=100, transport="tcp")
    gated_successes = sum(o.verifier_accepted for o, _ in gated)
    assert gated_successes == 0
    assert all(o.result == SessionResult.REJECTED for o, _ in gated)

    ungated = run_scenario("relay-nogate", world=world, seed=1, sessions=100,
                           transport="tcp")
    ungated_successes = sum(o.verifier_accepted for o, _ in ungated)
    assert ungated_successes == 100
    report(6, "relay-attack blocking (0/100 gated, 100/100 ungated, TCP)",
           time.perf_counter() - t0, 30.0)


def test_c7_corpus_trend_reproduction(default_corpus):
    t0 = time.perf_counter()
    point = pooled_eer(default_corpus, 2.0)
    assert point["eer"] <= 0.10

    rows1 = evaluate_schemes(default_corpus, 1, seed=0)
    rows5 = evaluate_schemes(default_corpus, 5, seed=0)
    med_far_1 = median(r["far"] for r in rows1["initial"])
    med_frr_1 = median(r["frr"] for r in rows1["initial"])
    med_far_5 = median(r["far"] for r in rows5["mixed"])
    med_frr_5 = median(r["frr"] for r in rows5["mixed"])
    assert med_far_5 <= med_far_1
    assert med_frr_5 <= med_frr_1 + 0.01
    elapsed = time.perf_counter() - t0
    print(f"\n    EER@2min = {point['eer']:.4f} (threshold {point['threshold']}); "
          f"median FAR {med_far_1:.4f} -> {med_far_5:.4f}, "
          f"median FRR {med_frr_1:.4f} -> {med_frr_5:.4f}")
    report(7, "corpus trend reproduction", elapsed, 300.0)


def test_c8_medoid_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    for _ in range(1000):
        n = int(rng.integers(1, 11))
        mat = rng.integers(-50, 80, size=(n, n))
        mat = mat + mat.T
        best, best_sum = 0, None
        for i in range(n):
            s = sum(int(mat[i, j]) for j in range(n) if j != i)
            if best_sum is None or s > best_sum:
                best, best_sum = i, s
        assert select_medoid([None] * n, mat) == best
    report(8, "medoid correctness", time.perf_counter() - t0, 5.0)


def test_c9_pipeline_determinism(tmp_path, default_model):
    from stash import imu
    from stash.imu_synth import route_recording
    from stash.movement import movement_primitives
    from stash.pathmodel import RouteSegment
    from stash.protocol import static_source, verify_proximity
    from stash.repository import Repository, enroll
    from stash.trajectory import merge_streams, serialize
    from stash.turns import turns_from_stream

    t0 = time.perf_counter()
    plan = [
        RouteSegment("move", move_blocks=5),
        RouteSegment("turn", angle_deg=88.0, turn_s=5.0),
        RouteSegment("move", move_blocks=6),
        RouteSegment("turn", angle_deg=-52.0, turn_s=4.0),
        RouteSegment("move", move_blocks=5),
    ]
    rec_path = tmp_path / "fixed.csv"
    imu.save_recording(route_recording(plan, rate_hz=100.0, seed=21), rec_path)
    model, hmm = default_model

    def run_once():
        raw = imu.load_recording(rec_path)
        stream = imu.resample(raw, 20.0)
        gravity = imu.estimate_gravity(stream)
        events = turns_from_stream(stream, gravity)
        ms = movement_primitives(stream, model, hmm)
        merged = merge_streams(ms, events)
        text = serialize(merged)
        repo = Repository()
        enroll(repo, "gate", merged, length_min=1.0)
        decision = verify_proximity(
            repo.paths["gate"][0], static_source(merged), max_attempts=10
        )
        return text, (decision.passed, decision.attempts_used, decision.best_score)

    text_a, gate_a = run_once()
    text_b, gate_b = run_once()
    assert text_a.encode() == text_b.encode()  # byte-identical sequence files
    assert gate_a == gate_b
    assert gate_a[0] is True
    report(9, "pipeline determinism", time.perf_counter() - t0, 60.0)


def test_c10_memory_budget():
    t0 = time.perf_counter()
    spec = RingBufferSpec(capacity_duration_s=3600.0, rate_hz=20.0, precision_bits=32)
    samples = SampleRingBuffer(spec)
    labels = LabelRingBuffer(capacity_duration_s=3600.0, rate_hz=1.0)
    total = buffer_memory_bytes(samples, labels)
    assert total < 5 * 1024 * 1024
    print(f"\n    one-hour buffers: {total / 1e6:.3f} MB (raw {samples.nbytes / 1e6:.3f} "
          f"+ labels {labels.nbytes / 1e3:.1f} kB)")
    report(10, "memory budget", time.perf_counter() - t0, 60.0)
