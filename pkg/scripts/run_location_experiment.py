#!/usr/bin/env python3
"""Cross-location comparison of trajectory features against raw IQ.

Builds a deterministic synthetic fleet, trains a softmax probe per
representation on the first location (and optionally pooled locations), and
reports held-out same-location accuracy plus accuracy at every other
location.

Usage: python scripts/run_location_experiment.py [--devices N] [--seed N] [--out DIR]
"""

import argparse
import json
from pathlib import Path

from fractalrf.core import RandomSource
from fractalrf.experiments import build_fleet_examples, location_experiment
from fractalrf.features import Representation


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--devices", type=int, default=10)
    parser.add_argument("--seed", type=int, default=101)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--lr", type=float, default=0.5)
    parser.add_argument("--pool-two", action="store_true",
                        help="also train on loc1+loc2 pooled")
    parser.add_argument("--out", default="results/location")
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    fleet = build_fleet_examples(args.devices, RandomSource(args.seed))
    train_pools = [("loc1",)]
    if args.pool_two:
        train_pools.append(("loc1", "loc2"))

    results = []
    for train_locs in train_pools:
        for rep, pool in ((Representation.VFDT, fleet.vfdt), (Representation.RAWIQ, fleet.rawiq)):
            report = location_experiment(
                pool, rep, train_locations=train_locs,
                epochs=args.epochs, learning_rate=args.lr,
            )
            results.append({
                "representation": rep.value,
                "train_locations": list(train_locs),
                "same_location_accuracy": report.same_location_accuracy,
                "cross_location_accuracy": report.cross_location_accuracy,
                "per_location_accuracy": report.per_location_accuracy,
            })
            locs = "+".join(train_locs)
            print(f"{rep.value:>6} trained on {locs}: "
                  f"same={report.same_location_accuracy:.3f} "
                  f"cross={report.cross_location_accuracy:.3f} "
                  f"per-loc={ {k: round(v, 3) for k, v in report.per_location_accuracy.items()} }")

    out_path = out_dir / "location_experiment.json"
    out_path.write_text(json.dumps({
        "seed": args.seed, "devices": args.devices, "results": results,
    }, indent=2, sort_keys=True) + "\n")
    print(f"-> {out_path}")


if __name__ == "__main__":
    main()
