"""Command-line driver for corpus synthesis, feature extraction, and experiments.

Exit codes: 0 success, 1 domain error (bad data, impossible request),
2 usage error (bad flags, missing files). ``VFDT_RF_SEED`` provides a global
seed fallback; explicit ``--seed`` flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from fractalrf import classify, dataio, experiments
from fractalrf.core import DomainError, IQSignal, RandomSource, WindowConfig
from fractalrf.features import (
    FeatureConfig,
    Representation,
    make_examples,
    make_raw_examples,
    read_examples,
    split_dataset,
    write_examples,
)
from fractalrf.classify import ModelKind
from fractalrf.txchain import ChannelProfile, ProfileSpread, synth_fleet
from fractalrf.vfdt import VarianceMode, vfdt_trajectory

USAGE_ERROR = 2
DOMAIN_ERROR = 1


class UsageError(Exception):
    """Bad invocation: missing inputs the user was expected to provide."""


@dataclass(frozen=True)
class ExperimentSpec:
    """One cross-location experiment, assembled from flags and/or a spec file.

    Echoed verbatim into every report for provenance.
    """

    train_locations: tuple[str, ...]
    test_locations: tuple[str, ...]
    representations: tuple[str, ...]
    device_subset_size: int | None
    seed: int
    model: str
    epochs: int
    learning_rate: float

    def __post_init__(self):
        if not self.train_locations:
            raise UsageError("train_locations must be nonempty")
        if not self.test_locations:
            raise UsageError("test_locations must be nonempty")
        if self.device_subset_size is not None and self.device_subset_size < 2:
            raise UsageError(
                f"device_subset_size must be >= 2, got {self.device_subset_size}"
            )

    def as_dict(self) -> dict:
        return asdict(self)


def _default_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("VFDT_RF_SEED", "0"))


def _feature_config(args) -> FeatureConfig:
    return FeatureConfig(
        window_len=args.window,
        window_offset=args.offset,
        mode=VarianceMode(args.mode),
    )


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = _default_seed(args)
    locations = [
        ChannelProfile(gain_db=-0.3 * i, snr_db=args.snr_db - 7.0 * i, location_id=f"loc{i + 1}")
        for i in range(args.locations)
    ]
    recordings = synth_fleet(
        args.devices,
        locations,
        RandomSource(seed),
        spread=ProfileSpread(),
        n_bits=args.frame_bits,
        samples_per_symbol=args.sps,
        sample_rate_hz=args.fs,
        payload_repeats=args.repeats,
    )
    for rec in recordings:
        meta = dataio.RecordingMeta(
            device_id=rec.device_id,
            location_id=rec.location_id,
            sample_rate_hz=rec.signal.sample_rate_hz,
            center_freq_hz=dataio.DEFAULT_CENTER_FREQ_HZ,
            capture_notes=json.dumps(asdict(rec.profile)),
        )
        dataio.write_iq(rec.signal, meta, out / f"{rec.device_id}_{rec.location_id}.iq")
    corpus = dataio.build_manifest(out)
    print(f"wrote {len(corpus)} recordings to {out} (manifest: {corpus.manifest_path.name})")
    return 0


def cmd_extract(args) -> int:
    corpus_dir = Path(args.corpus)
    if not (corpus_dir / dataio.MANIFEST_NAME).exists():
        raise UsageError(
            f"no {dataio.MANIFEST_NAME} in {corpus_dir}; run `simulate` or point "
            f"--corpus at a directory with a manifest"
        )
    corpus = dataio.load_manifest(corpus_dir)
    rep = Representation(args.rep)
    cfg = _feature_config(args)
    out = Path(args.out) if args.out else corpus_dir
    out.mkdir(parents=True, exist_ok=True)
    device_ids = sorted({meta.device_id for meta, _ in corpus.recordings})
    label = {d: i for i, d in enumerate(device_ids)}

    def extract_one(item):
        meta, path = item
        sig, _ = dataio.read_iq(path)
        if rep is Representation.VFDT:
            return make_examples(sig, label[meta.device_id], meta.location_id, cfg)
        return make_raw_examples(sig, label[meta.device_id], meta.location_id)

    examples = []
    failures = 0
    # Recordings are independent; numpy releases the GIL in the window
    # reductions, so threads bounded by --jobs give real overlap.
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = [pool.submit(extract_one, item) for item in corpus.recordings]
        for (meta, path), future in zip(corpus.recordings, futures):
            try:
                examples.extend(future.result())
            except DomainError as exc:
                failures += 1
                print(f"skipping {path.name}: {exc}", file=sys.stderr)
    if not examples:
        raise DomainError("no recording yielded any examples")
    out_path = out / f"examples_{rep.value}.bin"
    write_examples(examples, out_path, cfg if rep is Representation.VFDT else None)
    print(
        f"wrote {len(examples)} {rep.value} examples to {out_path}"
        + (f" ({failures} recordings skipped)" if failures else "")
    )
    return 0


def _split_examples(path, train_fraction, seed):
    examples, header = read_examples(path)
    return split_dataset(examples, train_fraction, RandomSource(seed).child(0)), header


def cmd_train(args) -> int:
    (train_set, _), header = _split_examples(args.examples, args.train_fraction, _default_seed(args))
    model = classify.train(
        ModelKind(args.model),
        train_set,
        epochs=args.epochs,
        learning_rate=args.lr,
        rng=RandomSource(_default_seed(args)).child(1),
    )
    classify.save_checkpoint(model, args.out)
    print(f"trained {args.model} on {len(train_set)} examples ({header['representation']}) -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    (_, test_set), _ = _split_examples(args.examples, args.train_fraction, _default_seed(args))
    model = classify.load_checkpoint(args.checkpoint)
    report = classify.evaluate(model, test_set)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    classify.report_to_json(report, out / "report.json")
    classify.report_to_csv(report, out / "confusion.csv")
    print(f"accuracy {report.accuracy:.4f} on {len(test_set)} examples -> {out}")
    return 0


def _experiment_spec(args) -> ExperimentSpec:
    from_file = {}
    if args.spec:
        from_file = json.loads(Path(args.spec).read_text())
    train_locs = tuple(args.train_locations or from_file.get("train_locations", ["loc1"]))
    test_locs = tuple(args.test_locations or from_file.get("test_locations", ())) or ("*",)
    reps = tuple(args.rep or from_file.get("representations", ["vfdt", "rawiq"]))
    subset = args.devices if args.devices is not None else from_file.get("device_subset_size")
    seed = from_file.get("seed", _default_seed(args)) if args.seed is None else args.seed
    return ExperimentSpec(
        train_locations=train_locs,
        test_locations=test_locs,
        representations=reps,
        device_subset_size=subset,
        seed=int(seed),
        model=args.model,
        epochs=args.epochs,
        learning_rate=args.lr,
    )


def cmd_train_eval(args) -> int:
    spec = _experiment_spec(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for rep_name in spec.representations:
        rep = Representation(rep_name)
        path = Path(args.examples_dir) / f"examples_{rep.value}.bin"
        if not path.exists():
            raise DomainError(f"missing example file {path}; run extract --rep {rep.value}")
        examples, _ = read_examples(path)
        by_loc: dict[str, list] = {}
        for ex in examples:
            by_loc.setdefault(ex.location_label, []).append(ex)
        wanted = set(spec.train_locations)
        if spec.test_locations != ("*",):
            wanted |= set(spec.test_locations)
        missing = sorted(loc for loc in wanted if loc not in by_loc)
        if missing:
            raise DomainError(f"missing locations {missing} in {path}")
        report = experiments.location_experiment(
            by_loc,
            rep,
            train_locations=spec.train_locations,
            kind=ModelKind(spec.model),
            epochs=spec.epochs,
            learning_rate=spec.learning_rate,
            split_rng=RandomSource(spec.seed).child(0),
            train_rng=RandomSource(spec.seed).child(1),
            device_subset=spec.device_subset_size,
        )
        per_location = report.per_location_accuracy
        if spec.test_locations != ("*",):
            keep = set(spec.test_locations) | set(spec.train_locations)
            per_location = {k: v for k, v in per_location.items() if k in keep}
        payload = {
            "representation": rep.value,
            "train_locations": list(spec.train_locations),
            "same_location_accuracy": report.same_location_accuracy,
            "cross_location_accuracy": report.cross_location_accuracy,
            "per_location_accuracy": per_location,
            "spec": spec.as_dict(),
        }
        report_path = out / f"report_{rep.value}.json"
        report_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        for loc, acc in per_location.items():
            rows.append(("+".join(spec.train_locations), loc, rep.value, acc))
        print(
            f"{rep.value}: same-location {report.same_location_accuracy:.4f}, "
            f"cross-location {report.cross_location_accuracy:.4f} -> {report_path}"
        )
    with (out / "accuracy.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["train_locs", "test_loc", "representation", "accuracy"])
        writer.writerows(rows)
    return 0


def cmd_vfdt(args) -> int:
    sig, _ = dataio.read_iq(args.recording)
    cfg = WindowConfig(args.window, args.offset)
    mode = VarianceMode(args.mode)
    ti = vfdt_trajectory(sig.i_samples, cfg, mode)
    tq = vfdt_trajectory(sig.q_samples, cfg, mode)
    with Path(args.out).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_index", "vfdt_i", "vfdt_q"])
        for i, (a, b) in enumerate(zip(ti.values, tq.values)):
            writer.writerow([i, repr(float(a)), repr(float(b))])
    print(f"wrote {len(ti)} trajectory points to {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    rng = RandomSource(_default_seed(args))
    gen = rng.generator()
    from fractalrf.features import LabeledExample, FEATURE_SHAPE

    batch = [
        LabeledExample(gen.standard_normal(FEATURE_SHAPE), int(i % args.classes), "loc1",
                       Representation.VFDT)
        for i in range(args.batch)
    ]
    worst = 0.0
    for kind in (ModelKind.SOFTMAX, ModelKind.MLP1):
        report = classify.gradient_check(kind, batch, tolerance=args.tolerance, rng=rng.child(1))
        status = "ok" if report.passed else "FAIL"
        print(
            f"{kind.value}: max relative error {report.max_relative_error:.3e} "
            f"over {report.n_checked} weights [{status}]"
        )
        worst = max(worst, report.max_relative_error)
    if worst >= args.tolerance:
        raise DomainError(f"gradient check failed at tolerance {args.tolerance}")
    return 0


def cmd_export_plot(args) -> int:
    src = Path(args.source)
    out = Path(args.out)
    if not src.exists():
        raise DomainError(f"nothing to export: {src} does not exist")
    if args.kind == "trajectory":
        rows = list(csv.reader(src.open()))
        if not rows or rows[0][:3] != ["window_index", "vfdt_i", "vfdt_q"]:
            raise DomainError(f"{src} is not a trajectory dump")
        out.write_text("\n".join(",".join(r) for r in rows) + "\n")
    elif args.kind == "sweep":
        sweep = json.loads(src.read_text())
        with out.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["setting", "mean_vfdt_i", "mean_vfdt_q", "mean_vfdt_mag"])
            for i, setting in enumerate(sweep["settings"]):
                writer.writerow([
                    setting,
                    sweep["mean_vfdt_i"][i],
                    sweep["mean_vfdt_q"][i],
                    sweep["mean_vfdt_mag"][i],
                ])
    elif args.kind == "accuracy":
        reports = sorted(src.glob("report_*.json")) if src.is_dir() else [src]
        if not reports:
            raise DomainError(f"nothing to export: no report_*.json under {src}")
        with out.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["train_locs", "test_loc", "representation", "accuracy"])
            for rp in reports:
                payload = json.loads(rp.read_text())
                train = "+".join(payload["train_locations"])
                for loc, acc in sorted(payload["per_location_accuracy"].items()):
                    writer.writerow([train, loc, payload["representation"], acc])
    print(f"exported {args.kind} CSV to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fractalrf",
        description="Variance-fractal-dimension fingerprinting experiments",
    )
    parser.add_argument("--jobs", type=int, default=1, help="parallel worker bound")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a labeled IQ corpus")
    p.add_argument("--devices", type=int, required=True)
    p.add_argument("--locations", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--frame-bits", type=int, default=1024)
    p.add_argument("--repeats", type=int, default=8)
    p.add_argument("--sps", type=int, default=4)
    p.add_argument("--fs", type=float, default=1e6)
    p.add_argument("--snr-db", type=float, default=30.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extract", help="turn a corpus into example files")
    p.add_argument("--corpus", required=True)
    p.add_argument("--rep", choices=["vfdt", "rawiq"], required=True)
    p.add_argument("--window", type=int, default=256)
    p.add_argument("--offset", type=int, default=64)
    p.add_argument("--mode", choices=["amplitude", "increment"], default="amplitude")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train one model on an example file")
    p.add_argument("--examples", required=True)
    p.add_argument("--model", choices=[k.value for k in ModelKind], default="softmax")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--train-fraction", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on held-out examples")
    p.add_argument("--examples", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--train-fraction", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-eval", help="cross-location experiment on example files")
    p.add_argument("--examples-dir", required=True)
    p.add_argument("--rep", action="append", choices=["vfdt", "rawiq"], default=None)
    p.add_argument("--train-locations", nargs="+", default=None)
    p.add_argument("--test-locations", nargs="+", default=None,
                   help="default: every location present in the example file")
    p.add_argument("--devices", type=int, default=None)
    p.add_argument("--model", choices=[k.value for k in ModelKind], default="softmax")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--spec", default=None, help="JSON experiment spec file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_eval)

    p = sub.add_parser("vfdt", help="dump the trajectory of one recording to CSV")
    p.add_argument("recording")
    p.add_argument("--window", type=int, default=256)
    p.add_argument("--offset", type=int, default=64)
    p.add_argument("--mode", choices=["amplitude", "increment"], default="amplitude")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vfdt)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("export-plot", help="tidy CSVs for plotting")
    p.add_argument("--kind", choices=["trajectory", "sweep", "accuracy"], required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR
    except (UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
