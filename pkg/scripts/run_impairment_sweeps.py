#!/usr/bin/env python3
"""Run the three single-impairment sweeps and dump JSON + tidy CSV per sweep.

Usage: python scripts/run_impairment_sweeps.py [--seed N] [--out DIR]
"""

import argparse
import csv
import json
from dataclasses import asdict
from pathlib import Path

from fractalrf.core import RandomSource
from fractalrf.experiments import (
    run_imbalance_sweep,
    run_pa_sweep,
    run_phase_noise_sweep,
)


def dump(sweep, out_dir: Path) -> None:
    payload = asdict(sweep)
    json_path = out_dir / f"sweep_{sweep.impairment}.json"
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    csv_path = out_dir / f"sweep_{sweep.impairment}.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["setting", "mean_vfdt_i", "mean_vfdt_q", "mean_vfdt_mag"])
        for i, setting in enumerate(sweep.settings):
            writer.writerow(
                [setting, sweep.mean_vfdt_i[i], sweep.mean_vfdt_q[i], sweep.mean_vfdt_mag[i]]
            )
    print(f"{sweep.impairment} ({sweep.setting_label}):")
    for i, setting in enumerate(sweep.settings):
        print(
            f"  {setting:>8.1f}: I={sweep.mean_vfdt_i[i]:.5f} "
            f"Q={sweep.mean_vfdt_q[i]:.5f} mag={sweep.mean_vfdt_mag[i]:.5f} "
            f"phase={sweep.mean_vfdt_phase[i]:.5f}"
        )
    print(f"  -> {json_path}, {csv_path}")


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="results/sweeps")
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = RandomSource(args.seed)
    dump(run_pa_sweep(rng), out_dir)
    dump(run_imbalance_sweep(rng), out_dir)
    dump(run_phase_noise_sweep(rng), out_dir)


if __name__ == "__main__":
    main()
