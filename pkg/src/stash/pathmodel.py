"""Generative path models: first-order Markov chain over primitives, plus a
synthetic route corpus that stands in for real-world recordings.

The Markov chain serves two purposes: generating between-class score samples
for local-threshold updates (so thresholds never over-learn on the few real
paths seen), and synthesizing whole evaluation corpora with a controllable
noise model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import trajectory
from .alignment import nw_score
from .errors import EmptyCorpus, RejectionExhausted
from .thresholds import initial_threshold
from .trajectory import Primitive, PrimitiveSequence

CHAIN_STATES = ("M", "L", "R")
MOVE_BLOCK_NS = trajectory.MOVEMENT_BLOCK_NS


@dataclass(frozen=True)
class NoiseModel:
    """Instance-to-instance variation applied to a ground-truth route."""

    p_drop: float = 0.05        # per-symbol deletion probability
    p_insert: float = 0.03      # per-gap spurious symbol probability
    turn_jitter_deg: float = 5.0  # angle noise applied before quantization

    def __post_init__(self):
        if not (0 <= self.p_drop < 1 and 0 <= self.p_insert < 1):
            raise ValueError("probabilities must lie in [0, 1)")
        if self.turn_jitter_deg < 0:
            raise ValueError("turn jitter must be non-negative")

    @classmethod
    def zero(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0)


@dataclass
class MarkovChain:
    transition: np.ndarray  # (3, 3) row-stochastic over (M, L, R)
    initial: np.ndarray     # (3,)
    states: tuple = CHAIN_STATES

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=float)
        self.initial = np.asarray(self.initial, dtype=float)
        if self.transition.shape != (3, 3):
            raise ValueError("transition matrix must be 3x3")
        if (self.transition < 0).any() or (self.initial < 0).any():
            raise ValueError("probabilities must be non-negative")
        if not np.allclose(self.transition.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("transition rows must sum to 1")
        if not np.isclose(self.initial.sum(), 1.0, atol=1e-9):
            raise ValueError("initial distribution must sum to 1")


def fit_markov(sequences) -> MarkovChain:
    """Add-one-smoothed transition counts over the M/L/R alphabet.

    S symbols are ignored (they are stripped before any comparison, so the
    chain models comparison-ready paths).
    """
    index = {s: i for i, s in enumerate(CHAIN_STATES)}
    counts = np.zeros((3, 3))
    starts = np.zeros(3)
    saw_any = False
    for seq in sequences:
        symbols = [p.symbol for p in seq if p.symbol != "S"] if hasattr(seq, "primitives") \
            else [s for s in seq if s != "S"]
        if not symbols:
            continue
        saw_any = True
        starts[index[symbols[0]]] += 1
        for a, b in zip(symbols, symbols[1:]):
            counts[index[a], index[b]] += 1
    if not saw_any:
        raise EmptyCorpus("need at least one non-empty sequence")
    transition = (counts + 1.0) / (counts.sum(axis=1, keepdims=True) + 3.0)
    initial = (starts + 1.0) / (starts.sum() + 3.0)
    return MarkovChain(transition, initial)


def _advance_ns(symbol: str) -> int:
    # M covers a 5 s block; turn symbols are events within a run
    return MOVE_BLOCK_NS if symbol == "M" else 0


def sample_symbols(chain: MarkovChain, length: int, count: int, seed: int = 0) -> list[str]:
    """`count` symbol strings of `length` draws each, sampled in one
    vectorized walk (inverse-CDF per step across all paths)."""
    if length <= 0 or count < 0:
        raise ValueError("length must be positive and count non-negative")
    rng = np.random.default_rng(seed)
    cum_init = np.cumsum(chain.initial)
    cum_rows = np.cumsum(chain.transition, axis=1)
    u = rng.random((count, length))
    states = np.empty((count, length), dtype=np.int8)
    states[:, 0] = np.searchsorted(cum_init, u[:, 0], side="right").clip(max=2)
    for t in range(1, length):
        rows = cum_rows[states[:, t - 1]]
        states[:, t] = (u[:, t, None] >= rows[:, :2]).sum(axis=1)
    lookup = np.array(CHAIN_STATES)
    return ["".join(row) for row in lookup[states]]


def sample_path(chain: MarkovChain, length: int, seed: int = 0) -> PrimitiveSequence:
    """Draw `length` symbols from the chain; deterministic for a fixed seed.

    M symbols advance time by one 5 s block, turn symbols share the
    timestamp of the position they occur at, mirroring real encodings.
    """
    symbols = sample_symbols(chain, length, 1, seed)[0]
    out = []
    t = 0
    for sym in symbols:
        out.append(Primitive(sym, t))
        t += _advance_ns(sym)
    return PrimitiveSequence(tuple(out))


def sample_paths_matching(chain: MarkovChain, length: int, count: int, seed: int = 0):
    """`count` independent sampled symbol strings of the given length,
    ready for alignment scoring."""
    return sample_symbols(chain, length, count, seed)


# ---------------------------------------------------------------------------
# synthetic routes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RouteSegment:
    kind: str            # "move" | "turn"
    move_blocks: int = 0
    angle_deg: float = 0.0
    turn_s: float = 4.0


@dataclass
class SyntheticRoute:
    route_id: int
    plan: list[RouteSegment]
    ground_truth: PrimitiveSequence
    instances: list[PrimitiveSequence] = field(default_factory=list)


def _round_half_away(x: float) -> int:
    return int(np.floor(abs(x) + 0.5))


def _plan_to_sequence(plan) -> PrimitiveSequence:
    prims = []
    t = 0
    for seg in plan:
        if seg.kind == "move":
            for _ in range(seg.move_blocks):
                prims.append(Primitive("M", t))
                t += MOVE_BLOCK_NS
        else:
            n = _round_half_away(seg.angle_deg / 15.0)
            sym = "R" if seg.angle_deg > 0 else "L"
            for _ in range(n):
                prims.append(Primitive(sym, t))
            t += int(seg.turn_s * 1e9)
    return PrimitiveSequence(tuple(prims))


def _random_plan(rng, route_length_s: float) -> list[RouteSegment]:
    plan = []
    elapsed = 0.0
    while elapsed < route_length_s:
        blocks = int(rng.integers(2, 8))
        plan.append(RouteSegment("move", move_blocks=blocks))
        elapsed += blocks * 5.0
        if elapsed >= route_length_s:
            break
        angle = float(rng.uniform(20.0, 120.0)) * (1 if rng.random() < 0.5 else -1)
        turn_s = 2.0 + abs(angle) / 30.0
        plan.append(RouteSegment("turn", angle_deg=angle, turn_s=turn_s))
        elapsed += turn_s
    return plan


def perturb_instance(plan, noise: NoiseModel, rng) -> PrimitiveSequence:
    """One noisy traversal of the planned route.

    Turn angles are jittered before quantization; every emitted symbol may
    be dropped; spurious symbols appear between survivors.
    """
    prims = []
    t = 0
    for seg in plan:
        if seg.kind == "move":
            for _ in range(seg.move_blocks):
                if rng.random() >= noise.p_drop:
                    prims.append(Primitive("M", t))
                t += MOVE_BLOCK_NS
        else:
            angle = seg.angle_deg + rng.normal(0.0, noise.turn_jitter_deg) \
                if noise.turn_jitter_deg > 0 else seg.angle_deg
            n = _round_half_away(angle / 15.0)
            sym = "R" if angle > 0 else "L"
            for _ in range(n):
                if rng.random() >= noise.p_drop:
                    prims.append(Primitive(sym, t))
            t += int(seg.turn_s * 1e9)
    if noise.p_insert > 0 and len(prims) > 1:
        with_inserts = [prims[0]]
        for a, b in zip(prims, prims[1:]):
            if rng.random() < noise.p_insert:
                sym = CHAIN_STATES[int(rng.integers(0, 3))]
                with_inserts.append(Primitive(sym, (a.t_ns + b.t_ns) // 2))
            with_inserts.append(b)
        prims = with_inserts
    return PrimitiveSequence(tuple(prims))


def synthesize_corpus(
    n_routes: int = 20,
    instances_per_route: int = 8,
    route_length_s: float = 360.0,
    noise: NoiseModel = NoiseModel(),
    seed: int = 42,
    distinct_at_min: float = 2.0,
    max_rejects: int = 500,
) -> list[SyntheticRoute]:
    """Generate a corpus of distinct routes with noisy instances.

    Ground truths are rejection-sampled so that every pair, trimmed to
    `distinct_at_min` minutes, scores below the alpha=0.5 initial threshold;
    routes that would confuse the matcher by construction are not allowed.
    """
    if n_routes < 1 or instances_per_route < 1 or route_length_s <= 0:
        raise ValueError("corpus parameters must be positive")
    threshold = initial_threshold(distinct_at_min, alpha=0.5)
    seed_seq = np.random.SeedSequence(seed)
    route_seeds = seed_seq.spawn(n_routes)
    routes = []
    trimmed = []
    for route_id, route_seed in enumerate(route_seeds):
        rng = np.random.default_rng(route_seed)
        for attempt in range(max_rejects):
            plan = _random_plan(rng, route_length_s)
            gt = _plan_to_sequence(plan)
            cut = trajectory.trim_to_duration(gt, distinct_at_min * 60.0)
            if all(nw_score(cut, other) < threshold for other in trimmed):
                break
        else:
            raise RejectionExhausted(
                f"route {route_id}: no distinct ground truth in {max_rejects} tries"
            )
        trimmed.append(cut)
        route = SyntheticRoute(route_id, plan, gt)
        for _ in range(instances_per_route):
            route.instances.append(perturb_instance(plan, noise, rng))
        routes.append(route)
    return routes


def save_corpus(routes, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"n_routes": len(routes), "routes": []}
    for route in routes:
        rdir = out / f"route_{route.route_id:02d}"
        rdir.mkdir(exist_ok=True)
        trajectory.save(route.ground_truth, rdir / "ground_truth.seq")
        for i, inst in enumerate(route.instances):
            trajectory.save(inst, rdir / f"instance_{i:02d}.seq")
        manifest["routes"].append(
            {"route_id": route.route_id, "instances": len(route.instances)}
        )
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))


def load_corpus(corpus_dir) -> list[SyntheticRoute]:
    root = Path(corpus_dir)
    manifest = json.loads((root / "manifest.json").read_text())
    routes = []
    for entry in manifest["routes"]:
        rdir = root / f"route_{entry['route_id']:02d}"
        gt = trajectory.load(rdir / "ground_truth.seq")
        instances = [
            trajectory.load(rdir / f"instance_{i:02d}.seq")
            for i in range(entry["instances"])
        ]
        routes.append(SyntheticRoute(entry["route_id"], [], gt, instances))
    return routes
