#!/usr/bin/env python3
"""Full evaluation experiment on the default synthetic corpus.

Generates the 20-route x 8-instance corpus, then reports:
  * pooled within/between score separation and EER at 2 minutes,
  * FAR/FRR vs. reference-path length (initial threshold),
  * FAR/FRR vs. instance count for initial / local / mixed thresholds,
  * leave-one-route-out refit of the initial-threshold coefficients.

Writes detail and summary CSVs next to --out.
"""

import argparse
import time

import numpy as np

from stash.evaluation import emit_report, leave_one_route_out, pooled_eer, sweep
from stash.pathmodel import synthesize_corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--routes", type=int, default=20)
    parser.add_argument("--instances", type=int, default=8)
    parser.add_argument("--route-length", type=float, default=360.0)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--alpha", type=float, default=0.5)
    parser.add_argument("--out", default="corpus_eval.csv")
    args = parser.parse_args()

    t0 = time.perf_counter()
    corpus = synthesize_corpus(
        n_routes=args.routes,
        instances_per_route=args.instances,
        route_length_s=args.route_length,
        seed=args.seed,
    )
    print(f"corpus: {args.routes} routes x {args.instances} instances "
          f"({time.perf_counter() - t0:.1f}s)")

    point = pooled_eer(corpus, 2.0)
    print(f"pooled EER at 2 min: {point['eer']:.4f} "
          f"(threshold {point['threshold']}, FAR {point['far']:.4f}, FRR {point['frr']:.4f})")

    print("\nFAR/FRR vs. length (initial threshold, n=1):")
    length_reports = sweep(corpus, "length", alpha=args.alpha, seed=args.seed)
    for rep in length_reports:
        print(f"  L={rep.value:.0f} min  mean FAR {rep.mean_far:.3f} +/- {rep.std_far:.3f}  "
              f"mean FRR {rep.mean_frr:.3f} +/- {rep.std_frr:.3f}")

    print("\nFAR/FRR vs. instance count (2 min paths):")
    instance_reports = sweep(corpus, "n_instances", alpha=args.alpha, seed=args.seed)
    for rep in instance_reports:
        print(f"  n={rep.value} {rep.scheme:8s} median FAR {rep.median_far:.4f}  "
              f"median FRR {rep.median_frr:.4f}")

    print("\nleave-one-route-out initial-threshold refit:")
    loro = leave_one_route_out(corpus, alpha=args.alpha)
    slopes = [row["slope"] for row in loro]
    fars = [row["far"] for row in loro]
    frrs = [row["frr"] for row in loro]
    print(f"  slope {np.mean(slopes):.3f} +/- {np.std(slopes):.3f}  "
          f"FAR {np.mean(fars):.4f}  FRR {np.mean(frrs):.4f}")

    emit_report(length_reports + instance_reports, args.out)
    print(f"\nwrote {args.out} and summary ({time.perf_counter() - t0:.1f}s total)")


if __name__ == "__main__":
    main()
