"""Command-line surface: corpus generation, training, classification,
evaluation grids, hierarchy replay and latency benchmarking."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import bench as bench_mod
from . import dfam, evaluate, pipeline, synth
from .classifiers import FeatureModel
from .dfam import BinLayout, DfamModel
from .errors import CarError, ConfigError
from .hierarchy import DEFAULT_RESET_PERIOD, HierarchicalCar, write_events_jsonl
from .signals import DEFAULT_CUTOFF_HZ, DEVICES, SENSORS, read_recording

STANDARD_WINDOW_SIZES = (32, 64, 128, 256, 512)

REPORT_COLUMNS = (
    "protocol",
    "model",
    "W",
    "g",
    "sensors",
    "seed",
    "n",
    "accuracy",
    "precision_weighted",
    "recall_weighted",
    "f1_weighted",
    "precision_micro",
    "recall_micro",
    "f1_micro",
    "precision_macro",
    "recall_macro",
    "f1_macro",
    "mean_participant_accuracy",
)


def _comma_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in _comma_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _validate_w(values, allow_any: bool) -> None:
    for w in values:
        if w not in STANDARD_WINDOW_SIZES and not allow_any:
            raise ConfigError(
                f"W={w} is outside the standard set {STANDARD_WINDOW_SIZES}; "
                "pass --allow-any-w to override"
            )


def _validate_sensors(sensors) -> tuple[str, ...]:
    if not sensors:
        raise ConfigError("sensor set must not be empty")
    for s in sensors:
        if s not in SENSORS:
            raise ConfigError(f"unknown sensor {s!r}, expected subset of {SENSORS}")
    return tuple(s for s in SENSORS if s in sensors)


def _validate_devices(devices) -> tuple[str, ...]:
    if not devices:
        raise ConfigError("device set must not be empty")
    for d in devices:
        if d not in DEVICES:
            raise ConfigError(f"unknown device {d!r}, expected subset of {DEVICES}")
    return tuple(d for d in DEVICES if d in devices)


def _max_workers() -> int:
    env = os.environ.get("DFAM_CAR_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"DFAM_CAR_THREADS must be an integer, got {env!r}")
        if cap < 1:
            raise ConfigError("DFAM_CAR_THREADS must be >= 1")
        return cap
    return min(4, os.cpu_count() or 1)


# ------------------------------------------------------------------- commands

def cmd_gen(args) -> int:
    placements = _comma_list(args.placements)
    for p in placements:
        if p not in synth.PLACEMENTS:
            raise ConfigError(f"unknown placement {p!r}, expected subset of {synth.PLACEMENTS}")
    recordings = synth.make_corpus(
        participants=args.participants,
        duration_s=args.duration,
        sample_rate_hz=args.fs,
        noise_std=args.noise,
        seed=args.seed,
        placements=placements,
        phase_jitter_std=args.jitter,
    )
    synth.write_corpus(recordings, args.out)
    print(f"wrote {len(recordings)} recordings to {args.out}")
    return 0


def _filter_placement(recordings, placement_filter):
    if not placement_filter:
        return recordings
    keep = set(placement_filter)
    return [r for r in recordings if r.placement in keep]


def cmd_train(args) -> int:
    spec = pipeline.ModelSpec.parse(args.model)
    sensors = _validate_sensors(_comma_list(args.sensors))
    devices = _validate_devices(_comma_list(args.devices))
    _validate_w([args.W], args.allow_any_w)
    recordings = _filter_placement(
        pipeline.load_corpus(args.corpus, args.fs, sensors),
        _comma_list(args.placement) if args.placement else None,
    )
    layout = BinLayout.equal_width(args.g, args.fs)
    instances = pipeline.instances_for(
        spec, recordings, args.W, layout, sensors, args.cutoff, devices
    )
    if args.relabel == "moving":
        instances = pipeline.relabel_moving(instances)
    elif args.relabel == "distracted":
        instances = pipeline.relabel_distracted(instances)
    train_fn, _ = pipeline.trainer_for(spec, layout, args.W, args.seed)
    model = train_fn(sorted(instances, key=lambda i: (i.label, i.block or "", i.participant or "")))
    if not isinstance(model, DfamModel):
        # stamp the windowing config so classify can run from the file alone
        model = FeatureModel(
            model.kind,
            model.labels,
            model.schema,
            {**model.params, "window_size": args.W, "sample_rate_hz": args.fs},
        )
    pipeline.save_any_model(model, args.out)
    print(f"trained {spec} on {len(instances)} instances -> {args.out}")
    return 0


def cmd_classify(args) -> int:
    model = pipeline.load_any_model(args.model_file)
    sensors = _validate_sensors(_comma_list(args.sensors))
    series = read_recording(args.recording, args.fs, sensors)
    if isinstance(model, DfamModel):
        window_size = model.window_size
        fs = model.layout.sample_rate_hz
    else:
        window_size = args.W or model.params.get("window_size")
        fs = model.params.get("sample_rate_hz", args.fs)
        if window_size is None:
            raise ConfigError("feature model file carries no window size; pass --W")
    bundles = pipeline.prepare_bundles(series, int(window_size), args.cutoff, sensors)
    rows = []
    for i, bundle in enumerate(bundles):
        if isinstance(model, DfamModel):
            if len(bundle) != model.axes:
                raise ConfigError(
                    f"model expects {model.axes} axes but the recording/sensor "
                    f"selection yields {len(bundle)}"
                )
            sig = dfam.extract_signature(pipeline.bundle_spectra(bundle, fs), model.layout)
            result = dfam.classify(sig, model)
            rows.append((i, result.label, repr(result.scores[result.label])))
        else:
            from .classifiers import predict
            from .features import extract_features

            label = predict(model, extract_features(bundle, fs))
            rows.append((i, label, ""))
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("window_index,label,score\n")
        for i, label, score in rows:
            fh.write(f"{i},{label},{score}\n")
    print(f"classified {len(rows)} windows -> {args.out}")
    return 0


def _evaluate_cell(recordings, protocol, spec_text, w, g, sensors, cutoff, fs, seed, k):
    spec = pipeline.ModelSpec.parse(spec_text)
    layout = BinLayout.equal_width(g, fs)
    instances = pipeline.instances_for(spec, recordings, w, layout, sensors, cutoff)
    train_fn, predict_fn = pipeline.trainer_for(spec, layout, w, seed)
    mean_participant = ""
    if protocol == "kfold":
        report = evaluate.kfold(instances, train_fn, predict_fn, k=k, seed=seed)
    elif protocol == "loocv":
        report = evaluate.loocv_blocks(instances, train_fn, predict_fn)
    elif protocol == "loso":
        loso_report = evaluate.loso(instances, train_fn, predict_fn)
        report = loso_report.pooled
        mean_participant = repr(loso_report.mean_accuracy)
    else:
        raise ConfigError(f"unknown protocol {protocol!r}")
    row = {
        "protocol": protocol,
        "model": str(spec),
        "W": str(w),
        "g": str(g),
        "sensors": "+".join(sensors),
        "seed": str(seed),
        "n": str(report.confusion.total),
        "accuracy": repr(report.accuracy),
        "mean_participant_accuracy": mean_participant,
    }
    for method in ("weighted", "micro", "macro"):
        avg = report.averages[method]
        row[f"precision_{method}"] = repr(avg.precision)
        row[f"recall_{method}"] = repr(avg.recall)
        row[f"f1_{method}"] = repr(avg.f1)
    return row, report


def cmd_evaluate(args) -> int:
    sensors = _validate_sensors(_comma_list(args.sensors))
    ws = args.W
    gs = args.g
    _validate_w(ws, args.allow_any_w)
    models = _comma_list(args.models)
    for m in models:
        pipeline.ModelSpec.parse(m)  # fail fast on bad specs
    recordings = _filter_placement(
        pipeline.load_corpus(args.corpus, args.fs, sensors),
        _comma_list(args.placement) if args.placement else None,
    )
    cells = [(m, w, g) for m in models for w in ws for g in gs]
    results = {}
    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        futures = {
            pool.submit(
                _evaluate_cell,
                recordings,
                args.protocol,
                m,
                w,
                g,
                sensors,
                args.cutoff,
                args.fs,
                args.seed,
                args.k,
            ): (m, w, g)
            for (m, w, g) in cells
        }
        for fut, key in futures.items():
            results[key] = fut.result()
    rows = [results[key][0] for key in sorted(results)]
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    if args.json:
        payload = [
            {"cell": results[key][0], "report": results[key][1].to_dict()}
            for key in sorted(results)
        ]
        with open(args.json, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
    print(f"evaluated {len(rows)} cells -> {args.out}")
    return 0


def _read_context(path) -> dict[int, bool]:
    flags: dict[int, bool] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["window_index", "smartphone_in_use"]:
            from .errors import ParseError

            raise ParseError(f"bad context header {header!r}", 1)
        for row in reader:
            if not row:
                continue
            flags[int(row[0])] = row[1].strip().lower() in ("1", "true", "yes")
    return flags


def cmd_replay(args) -> int:
    s1_model = pipeline.load_any_model(args.s1_model)
    s3_model = pipeline.load_any_model(args.s3_model)
    if not isinstance(s1_model, DfamModel) or not isinstance(s3_model, DfamModel):
        raise ConfigError("replay requires DFAM model files for S1 and S3")
    sensors = _validate_sensors(_comma_list(args.sensors))
    series = read_recording(args.recording, args.fs, sensors)
    bundles = pipeline.prepare_bundles(series, s3_model.window_size, args.cutoff, sensors)
    flags = _read_context(args.context) if args.context else {}
    channels = sorted(bundles[0]) if bundles else []
    s1_axes = None
    if args.s1_channels == "phone":
        s1_axes = [i for i, ch in enumerate(channels) if ch.device == "phone"]
    machine = HierarchicalCar(s1_model, s3_model, args.reset, s1_axes=s1_axes)
    fs = s3_model.layout.sample_rate_hz
    for i, bundle in enumerate(bundles):
        machine.process(pipeline.bundle_spectra(bundle, fs), flags.get(i, False))
    write_events_jsonl(machine.events, args.out)
    print(
        f"replayed {len(bundles)} windows: {len(machine.events)} events, "
        f"S1 invocations {machine.s1_invocations}, S3 invocations {machine.s3_invocations}, "
        f"watch windows processed {machine.watch_windows_processed} -> {args.out}"
    )
    return 0


def cmd_bench(args) -> int:
    specs = [pipeline.ModelSpec.parse(m) for m in _comma_list(args.models)]
    _validate_w([args.W], args.allow_any_w)
    results = bench_mod.run_benchmark(
        specs,
        train_size=args.train_size,
        n_test=args.windows,
        window_size=args.W,
        g=args.g,
        sample_rate_hz=args.fs,
        seed=args.seed,
        repetitions=args.reps,
        noise_std=args.noise,
        cutoff_hz=args.cutoff,
    )
    text = json.dumps(results, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
        print(f"benchmarked {len(specs)} models -> {args.out}")
    else:
        print(text)
    return 0


# -------------------------------------------------------------------- parser

def _add_common(p, cutoff=True):
    p.add_argument("--fs", type=float, default=50.0, help="sample rate in Hz")
    p.add_argument("--seed", type=int, default=0)
    if cutoff:
        p.add_argument(
            "--cutoff", type=float, default=DEFAULT_CUTOFF_HZ, help="low-pass cutoff in Hz"
        )
        p.add_argument("--sensors", default="acc,gyr", help="comma list from {acc,gyr}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dfam-car",
        description="Concurrent activity recognition via dominant-frequency matching.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic labeled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--participants", type=int, default=5)
    p.add_argument("--duration", type=float, default=30.0, help="seconds per recording")
    p.add_argument("--noise", type=float, default=0.0, help="gaussian noise std")
    p.add_argument("--jitter", type=float, default=synth.DEFAULT_PHASE_JITTER_STD)
    p.add_argument("--placements", default=",".join(synth.PLACEMENTS))
    _add_common(p, cutoff=False)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train one model over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", default="dfam", help="dfam | nb | knn<k> | dt | rf | svm")
    p.add_argument("--W", type=int, default=128)
    p.add_argument("--g", type=int, default=3)
    p.add_argument("--placement", default=None, help="keep only these placements")
    p.add_argument("--devices", default="phone,watch", help="comma list from {phone,watch}")
    p.add_argument(
        "--relabel",
        choices=("none", "moving", "distracted"),
        default="none",
        help="binary relabeling for hierarchy state models",
    )
    p.add_argument("--allow-any-w", action="store_true")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="label a recording window by window")
    p.add_argument("--model-file", required=True)
    p.add_argument("--recording", required=True)
    p.add_argument("--W", type=int, default=None, help="override window size (feature models)")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="run a protocol over a (model, W, g) grid")
    p.add_argument("--corpus", required=True)
    p.add_argument("--protocol", choices=("kfold", "loocv", "loso"), default="kfold")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--models", "--model", default="dfam")
    p.add_argument("--W", type=_int_list, default=[128])
    p.add_argument("--g", type=_int_list, default=[3])
    p.add_argument("--placement", default=None)
    p.add_argument("--allow-any-w", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--json", default=None, help="also write full reports as JSON")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("replay", help="run the hierarchical recognizer over a recording")
    p.add_argument("--recording", required=True)
    p.add_argument("--context", default=None, help="CSV of window_index,smartphone_in_use")
    p.add_argument("--s1-model", required=True)
    p.add_argument("--s3-model", required=True)
    p.add_argument("--reset", type=int, default=DEFAULT_RESET_PERIOD)
    p.add_argument("--s1-channels", choices=("all", "phone"), default="all")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("bench", help="measure per-window classification latency")
    p.add_argument("--models", "--model", default="dfam,knn3")
    p.add_argument("--train-size", type=int, default=500)
    p.add_argument("--windows", type=int, default=40)
    p.add_argument("--W", type=int, default=512)
    p.add_argument("--g", type=int, default=3)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--allow-any-w", action="store_true")
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
