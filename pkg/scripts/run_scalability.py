#!/usr/bin/env python3
"""Device-count scalability of trajectory fingerprints across locations.

Builds one 30-device fleet and evaluates cross-location accuracy for nested
device subsets of growing size.

Usage: python scripts/run_scalability.py [--seed N] [--out DIR]
"""

import argparse
import json
from pathlib import Path

from fractalrf.core import RandomSource
from fractalrf.experiments import (
    SCALABILITY_LOCATIONS,
    SCALABILITY_SPREAD,
    build_fleet_examples,
    scalability_sweep,
)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=101)
    parser.add_argument("--counts", type=int, nargs="+", default=[10, 15, 20, 25, 30])
    parser.add_argument("--out", default="results/scalability")
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    fleet = build_fleet_examples(
        max(args.counts),
        RandomSource(args.seed),
        locations=SCALABILITY_LOCATIONS,
        spread=SCALABILITY_SPREAD,
    )
    reports = scalability_sweep(fleet.vfdt, device_counts=tuple(args.counts))
    rows = []
    for count, report in reports.items():
        rows.append({
            "devices": count,
            "same_location_accuracy": report.same_location_accuracy,
            "cross_location_accuracy": report.cross_location_accuracy,
            "per_location_accuracy": report.per_location_accuracy,
        })
        print(f"{count:>3} devices: same={report.same_location_accuracy:.3f} "
              f"cross={report.cross_location_accuracy:.3f}")
    spread = max(r["cross_location_accuracy"] for r in rows) - min(
        r["cross_location_accuracy"] for r in rows
    )
    print(f"cross-location spread across counts: {100 * spread:.1f} points")
    out_path = out_dir / "scalability.json"
    out_path.write_text(json.dumps({"seed": args.seed, "rows": rows}, indent=2) + "\n")
    print(f"-> {out_path}")


if __name__ == "__main__":
    main()
