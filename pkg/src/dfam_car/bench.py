"""Per-window classification latency measurements.

The timed region covers exactly what runs per window at inference time:
signature generation plus score matching for the frequency matcher, feature
extraction plus prediction for the baselines. Corpus generation, filtering,
segmentation and model training happen outside the clock, mirroring a
deployment where block acquisition cost is shared by every technique.
"""

from __future__ import annotations

import math
import time
from typing import Sequence

import numpy as np

from . import classifiers, dfam
from .dfam import BinLayout
from .errors import ConfigError
from .features import extract_features
from .pipeline import ModelSpec, bundle_spectra, feature_train_fn, prepare_bundles
from .evaluate import Instance
from .signals import DEFAULT_CUTOFF_HZ, SENSORS
from .synth import default_activity_set, make_corpus


def build_bench_windows(
    train_size: int,
    n_test: int,
    window_size: int = 512,
    sample_rate_hz: float = 50.0,
    seed: int = 0,
    noise_std: float = 0.3,
    cutoff_hz: float | None = DEFAULT_CUTOFF_HZ,
    sensors: Sequence[str] = SENSORS,
):
    """Labeled window bundles, interleaved across activities for balance."""
    if train_size < 1 or n_test < 1:
        raise ConfigError("train_size and n_test must be >= 1")
    activities = default_activity_set()
    per_class = math.ceil((train_size + n_test) / len(activities)) + 1
    duration_s = per_class * window_size / sample_rate_hz
    recordings = make_corpus(
        1, activities, duration_s, sample_rate_hz, noise_std, seed
    )
    per_recording = [
        (str(rec.label), prepare_bundles(rec.series, window_size, cutoff_hz, sensors))
        for rec in recordings
    ]
    labeled = []
    for i in range(per_class):
        for label, bundles in per_recording:
            if i < len(bundles):
                labeled.append((label, bundles[i]))
    if len(labeled) < train_size + n_test:
        raise ConfigError("not enough windows generated for the requested sizes")
    return labeled[:train_size], labeled[train_size : train_size + n_test]


def _timed_classifier(spec: ModelSpec, train_set, layout, window_size, fs, seed):
    """Train outside the clock; return the per-window closure to time."""
    if spec.kind == "dfam":
        pairs = [
            (label, dfam.extract_signature(bundle_spectra(bundle, fs), layout))
            for label, bundle in train_set
        ]
        model = dfam.train_from_signatures(pairs, layout, window_size, seed)

        def run(bundle):
            sig = dfam.extract_signature(bundle_spectra(bundle, fs), layout)
            return dfam.classify(sig, model).label

        return run

    instances = [
        Instance(label, extract_features(bundle, fs)) for label, bundle in train_set
    ]
    model = feature_train_fn(spec, seed)(instances)

    def run(bundle):
        return classifiers.predict(model, extract_features(bundle, fs))

    return run


def run_benchmark(
    model_specs: Sequence[ModelSpec],
    train_size: int = 500,
    n_test: int = 40,
    window_size: int = 512,
    g: int = 3,
    sample_rate_hz: float = 50.0,
    seed: int = 0,
    repetitions: int = 10,
    noise_std: float = 0.3,
    cutoff_hz: float | None = DEFAULT_CUTOFF_HZ,
) -> dict:
    """Min / median / p95 per-window latency per model.

    The headline number is the median of per-repetition medians; raw
    per-repetition medians are included for inspection.
    """
    train_set, test_set = build_bench_windows(
        train_size, n_test, window_size, sample_rate_hz, seed, noise_std, cutoff_hz
    )
    layout = BinLayout.equal_width(g, sample_rate_hz)
    results = {}
    for spec in model_specs:
        run = _timed_classifier(
            spec, train_set, layout, window_size, sample_rate_hz, seed
        )
        for _, bundle in test_set[:3]:  # warm caches and allocator
            run(bundle)
        rep_medians = []
        pooled = []
        for _ in range(repetitions):
            times = []
            for _, bundle in test_set:
                t0 = time.perf_counter()
                run(bundle)
                times.append((time.perf_counter() - t0) * 1000.0)
            rep_medians.append(float(np.median(times)))
            pooled.extend(times)
        results[str(spec)] = {
            "median_ms": float(np.median(rep_medians)),
            "min_ms": float(np.min(pooled)),
            "p95_ms": float(np.percentile(pooled, 95)),
            "rep_medians_ms": rep_medians,
            "windows": len(test_set),
            "repetitions": repetitions,
            "train_size": train_size,
            "window_size": window_size,
        }
    return results
