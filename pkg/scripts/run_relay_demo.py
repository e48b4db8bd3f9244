#!/usr/bin/env python3
"""Relay-attack demonstration over TCP loopback.

Runs three scenario batches against the same enrolled reference path:
benign approach, relay with a stationary prover (gate enabled), and the
same relay with the gate disabled. The gate blocks every relayed session;
disabling it restores the baseline vulnerability.
"""

import argparse
from collections import Counter

from stash.scenarios import build_world, run_scenario


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sessions", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--transport", choices=("inproc", "tcp"), default="tcp")
    args = parser.parse_args()

    world = build_world(seed=args.seed)
    ref = world.repo.paths[world.verifier_id][0]
    print(f"enrolled reference path: {len(ref.medoid)} symbols, "
          f"threshold {ref.threshold_state.d:.1f}\n")

    for name in ("benign", "relay", "relay-nogate"):
        results = run_scenario(name, world=world, seed=args.seed,
                               sessions=args.sessions, transport=args.transport)
        outcomes = Counter(o.result.value for o, _ in results)
        accepted = sum(o.verifier_accepted for o, _ in results)
        print(f"{name:13s} {dict(outcomes)}  verifier accepts: "
              f"{accepted}/{args.sessions}")
    print("\nwith the gate on, the relayed stationary prover never answers the "
          "challenge; with it off, every relayed session authenticates.")


if __name__ == "__main__":
    main()
