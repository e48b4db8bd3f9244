"""Canned end-to-end scenarios wiring the repository, gate, and protocol."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .pathmodel import NoiseModel, perturb_instance, synthesize_corpus
from .protocol import (
    KEY_LEN,
    Prover,
    RelayAdversary,
    SessionOutcome,
    Verifier,
    run_session,
    static_source,
    stationary_source,
)
from .repository import Repository, enroll

import numpy as np


@dataclass
class DemoWorld:
    repo: Repository
    verifier_id: str
    keys: dict
    route_plan: list
    length_min: float

    def benign_source(self, seed: int = 0):
        """A fresh noisy traversal of the enrolled route, as a co-located
        prover would record on approach."""
        rng = np.random.default_rng(seed)
        seq = perturb_instance(self.route_plan, NoiseModel(), rng)
        return static_source(seq)

    def medoid_source(self):
        return static_source(self.repo.paths[self.verifier_id][0].medoid)


def build_world(seed: int = 0, length_min: float = 2.0,
                route_length_s: float = 240.0) -> DemoWorld:
    corpus = synthesize_corpus(
        n_routes=1, instances_per_route=1, route_length_s=route_length_s, seed=seed
    )
    route = corpus[0]
    verifier_id = "gate-1"
    repo = Repository()
    enroll(repo, verifier_id, route.ground_truth, length_min)
    key = random.Random(seed ^ 0x5117).randbytes(KEY_LEN)
    return DemoWorld(repo, verifier_id, {verifier_id: key}, route.plan, length_min)


SCENARIO_NAMES = ("benign", "relay", "relay-nogate")


def run_scenario(
    name: str,
    transport: str = "inproc",
    seed: int = 0,
    sessions: int = 1,
    relay_latency_s: float = 0.0,
    user_confirms: bool = False,
    world: DemoWorld | None = None,
) -> list[tuple[SessionOutcome, list]]:
    """Run one of the canned scenarios for a number of sessions.

    benign       co-located prover, gate enabled, no adversary
    relay        stationary prover behind a message relay, gate enabled
    relay-nogate same relay but the gate switched off (the baseline
                 vulnerability the gate exists to close)
    """
    if name not in SCENARIO_NAMES:
        raise ValueError(f"unknown scenario {name!r}; choose from {SCENARIO_NAMES}")
    world = world or build_world(seed)
    results = []
    for i in range(sessions):
        session_seed = seed * 100_003 + i
        if name == "benign":
            source = world.benign_source(seed=session_seed)
            relay = None
            gate_enabled = True
        elif name == "relay":
            source = stationary_source
            relay = RelayAdversary(latency_s=relay_latency_s)
            gate_enabled = True
        else:
            source = stationary_source
            relay = RelayAdversary(latency_s=relay_latency_s)
            gate_enabled = False
        prover = Prover(
            world.keys, world.repo, source,
            gate_enabled=gate_enabled, user_confirms=user_confirms,
        )
        verifier = Verifier(world.verifier_id, world.keys[world.verifier_id])
        transcript = []
        outcome = run_session(
            prover, verifier, transport=transport, relay=relay,
            seed=session_seed, transcript=transcript,
        )
        results.append((outcome, transcript))
    return results
