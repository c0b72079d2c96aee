#!/usr/bin/env python3
"""Export the pinned 10-device probe fleet as example files.

Produces `examples_vfdt.bin` and `examples_rawiq.bin` (all locations, labels
embedded per record) for consumers that speak only the example-file format,
such as the reference CNN package.

Usage: python scripts/export_probe_fleet.py --out DIR [--devices N] [--seed N]
"""

import argparse
from pathlib import Path

from fractalrf.core import RandomSource
from fractalrf.experiments import build_fleet_examples
from fractalrf.features import FeatureConfig, write_examples


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--devices", type=int, default=10)
    parser.add_argument("--seed", type=int, default=101)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    fleet = build_fleet_examples(args.devices, RandomSource(args.seed))
    for name, by_loc in (("vfdt", fleet.vfdt), ("rawiq", fleet.rawiq)):
        examples = [ex for loc in sorted(by_loc) for ex in by_loc[loc]]
        path = out_dir / f"examples_{name}.bin"
        write_examples(examples, path, FeatureConfig() if name == "vfdt" else None)
        print(f"wrote {len(examples)} {name} examples -> {path}")


if __name__ == "__main__":
    main()
