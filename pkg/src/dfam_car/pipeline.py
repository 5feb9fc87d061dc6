"""Glue between corpora on disk, window bundles and trained models."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import classifiers, dfam
from .dfam import ActivityLabel, BinLayout, DfamModel
from .errors import ConfigError, ParseError
from .evaluate import Instance
from .features import extract_features
from .hierarchy import (
    DISTRACTED_LABEL,
    MOVING_LABEL,
    NOT_DISTRACTED_LABEL,
    NOT_MOVING_LABEL,
)
from .signals import (
    DEFAULT_CUTOFF_HZ,
    DEVICES,
    SENSORS,
    Channel,
    Spectrum,
    TimeSeries,
    Window,
    low_pass_filter,
    read_recording,
    spectrum,
    window_bundles,
)
from .synth import Recording


def load_corpus(
    corpus_dir, sample_rate_hz: float = 50.0, sensors: Sequence[str] = SENSORS
) -> list[Recording]:
    """Read labels.csv plus one CSV per recording from a corpus directory."""
    root = Path(corpus_dir)
    labels_path = root / "labels.csv"
    if not labels_path.exists():
        raise ParseError(f"missing labels file {labels_path}")
    recordings = []
    with open(labels_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["recording_id", "participant_id", "label", "placement"]:
            raise ParseError(f"bad labels header {header!r}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", lineno)
            rec_id, participant, label_text, placement = row
            series = read_recording(root / f"{rec_id}.csv", sample_rate_hz, sensors)
            recordings.append(
                Recording(rec_id, participant, ActivityLabel.parse(label_text), placement, series)
            )
    return recordings


def prepare_bundles(
    series_by_channel: Mapping[Channel, TimeSeries],
    window_size: int,
    cutoff_hz: float | None = DEFAULT_CUTOFF_HZ,
    sensors: Sequence[str] = SENSORS,
    devices: Sequence[str] = DEVICES,
) -> list[dict[Channel, Window]]:
    """Low-pass filter (optional), then segment and align all channels."""
    selected = {
        ch: s
        for ch, s in series_by_channel.items()
        if ch.sensor in sensors and ch.device in devices
    }
    if cutoff_hz is not None:
        selected = {ch: low_pass_filter(s, cutoff_hz) for ch, s in selected.items()}
    return window_bundles(selected, window_size)


def bundle_spectra(
    bundle: Mapping[Channel, Window], sample_rate_hz: float
) -> list[Spectrum]:
    """Per-axis spectra in canonical channel order."""
    return [spectrum(bundle[ch], sample_rate_hz) for ch in sorted(bundle)]


def signature_instances(
    recordings: Sequence[Recording],
    window_size: int,
    layout: BinLayout,
    sensors: Sequence[str] = SENSORS,
    cutoff_hz: float | None = DEFAULT_CUTOFF_HZ,
    devices: Sequence[str] = DEVICES,
) -> list[Instance]:
    out = []
    for rec in recordings:
        fs = next(iter(rec.series.values())).sample_rate_hz
        for bundle in prepare_bundles(rec.series, window_size, cutoff_hz, sensors, devices):
            sig = dfam.extract_signature(bundle_spectra(bundle, fs), layout)
            out.append(Instance(str(rec.label), sig, rec.participant_id, rec.recording_id))
    return out


def feature_instances(
    recordings: Sequence[Recording],
    window_size: int,
    sensors: Sequence[str] = SENSORS,
    cutoff_hz: float | None = DEFAULT_CUTOFF_HZ,
    devices: Sequence[str] = DEVICES,
) -> list[Instance]:
    out = []
    for rec in recordings:
        fs = next(iter(rec.series.values())).sample_rate_hz
        for bundle in prepare_bundles(rec.series, window_size, cutoff_hz, sensors, devices):
            vec = extract_features(bundle, fs)
            out.append(Instance(str(rec.label), vec, rec.participant_id, rec.recording_id))
    return out


# ------------------------------------------------------------- model wiring

@dataclass(frozen=True)
class ModelSpec:
    """Parsed --model flag: dfam | nb | dt | rf | svm | knn<k>."""

    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        text = text.strip()
        if text == "dfam":
            return cls("dfam")
        if text == "nb":
            return cls("naive_bayes")
        if text == "dt":
            return cls("decision_tree")
        if text == "rf":
            return cls("random_forest")
        if text == "svm":
            return cls("svm")
        if text.startswith("knn"):
            try:
                k = int(text[3:]) if text[3:] else 3
            except ValueError:
                raise ConfigError(f"bad knn spec {text!r}") from None
            return cls("knn", {"k": k})
        raise ConfigError(f"unknown model spec {text!r}")

    @property
    def uses_features(self) -> bool:
        return self.kind != "dfam"

    def __str__(self) -> str:
        if self.kind == "knn":
            return f"knn{self.params['k']}"
        short = {"naive_bayes": "nb", "decision_tree": "dt", "random_forest": "rf"}
        return short.get(self.kind, self.kind)


def dfam_train_fn(layout: BinLayout, window_size: int, seed: int = 0):
    def train_fn(instances: Sequence[Instance]) -> DfamModel:
        return dfam.train_from_signatures(
            [(inst.label, inst.payload) for inst in instances], layout, window_size, seed
        )

    return train_fn


def dfam_predict_fn(model: DfamModel, instance: Instance) -> str:
    return dfam.classify(instance.payload, model).label


def feature_train_fn(spec: ModelSpec, seed: int = 0):
    def train_fn(instances: Sequence[Instance]):
        dataset = classifiers.FeatureDataset.from_vectors(
            [(inst.label, inst.payload) for inst in instances]
        )
        if spec.kind == "naive_bayes":
            return classifiers.train_nb(dataset)
        if spec.kind == "knn":
            return classifiers.train_knn(dataset, spec.params.get("k", 3))
        if spec.kind == "decision_tree":
            return classifiers.train_dt(
                dataset,
                max_depth=spec.params.get("max_depth", 10),
                min_leaf=spec.params.get("min_leaf", 1),
            )
        if spec.kind == "random_forest":
            return classifiers.train_rf(
                dataset,
                n_trees=spec.params.get("n_trees", 25),
                max_depth=spec.params.get("max_depth", 10),
                seed=seed,
            )
        if spec.kind == "svm":
            return classifiers.train_svm(
                dataset,
                lam=spec.params.get("lam", 1e-4),
                epochs=spec.params.get("epochs", 60),
                seed=seed,
            )
        raise ConfigError(f"unknown model kind {spec.kind!r}")

    return train_fn


def feature_predict_fn(model, instance: Instance) -> str:
    return classifiers.predict(model, instance.payload)


def trainer_for(spec: ModelSpec, layout: BinLayout, window_size: int, seed: int = 0):
    """(train_fn, predict_fn) pair appropriate for the model kind."""
    if spec.kind == "dfam":
        return dfam_train_fn(layout, window_size, seed), dfam_predict_fn
    return feature_train_fn(spec, seed), feature_predict_fn


def instances_for(
    spec: ModelSpec,
    recordings: Sequence[Recording],
    window_size: int,
    layout: BinLayout,
    sensors: Sequence[str] = SENSORS,
    cutoff_hz: float | None = DEFAULT_CUTOFF_HZ,
    devices: Sequence[str] = DEVICES,
) -> list[Instance]:
    if spec.kind == "dfam":
        return signature_instances(recordings, window_size, layout, sensors, cutoff_hz, devices)
    return feature_instances(recordings, window_size, sensors, cutoff_hz, devices)


# --------------------------------------------------------- hierarchy helpers

def relabel_moving(instances: Sequence[Instance]) -> list[Instance]:
    """Map activity labels to the binary moving/not-moving gate labels."""
    out = []
    for inst in instances:
        moving = ActivityLabel.parse(inst.label).is_moving
        out.append(
            Instance(
                MOVING_LABEL if moving else NOT_MOVING_LABEL,
                inst.payload,
                inst.participant,
                inst.block,
            )
        )
    return out


def relabel_distracted(instances: Sequence[Instance]) -> list[Instance]:
    """Map moving-window labels to binary distracted/not-distracted; drops
    windows whose locomotion is not a moving one."""
    out = []
    for inst in instances:
        label = ActivityLabel.parse(inst.label)
        if not label.is_moving:
            continue
        out.append(
            Instance(
                DISTRACTED_LABEL if label.distraction is not None else NOT_DISTRACTED_LABEL,
                inst.payload,
                inst.participant,
                inst.block,
            )
        )
    return out


# --------------------------------------------------------- model file dispatch

def save_any_model(model, path) -> None:
    if isinstance(model, DfamModel):
        dfam.save_model(model, path)
    else:
        classifiers.save_feature_model(model, path)


def load_any_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith("DFAM v1"):
        return dfam.load_model(path)
    if first.startswith("MODEL v1"):
        return classifiers.load_feature_model(path)
    raise ParseError(f"unrecognized model file header {first!r}", 1)
