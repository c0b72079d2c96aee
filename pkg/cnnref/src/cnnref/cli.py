"""Command line for the reference CNN: layer audit and training runs."""

from __future__ import annotations

import argparse
import json
import sys

from cnnref.datafile import FileFormatMismatchError
from cnnref.model import BadClassCountError, build_model, layer_table
from cnnref.train import train_cnn


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cnnref")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="print the per-stage shape table")
    p.add_argument("--devices", type=int, default=30)

    p = sub.add_parser("train", help="train on an example file")
    p.add_argument("--examples", required=True)
    p.add_argument("--train-locations", nargs="+", default=["loc1"])
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "audit":
            model = build_model(args.devices)
            print(json.dumps(layer_table(model), indent=2))
            return 0
        report = train_cnn(
            args.examples, args.out,
            train_locations=tuple(args.train_locations),
            epochs=args.epochs, seed=args.seed,
        )
        print(
            f"{report['representation']}: same-location "
            f"{report['same_location_accuracy']:.4f}, cross-location "
            f"{report['cross_location_accuracy']:.4f} -> {args.out}"
        )
        return 0
    except (FileFormatMismatchError, BadClassCountError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
