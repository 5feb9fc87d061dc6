"""Window-level time and frequency domain features for the baseline classifiers."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import AlignmentError
from .signals import AXES, Channel, Window

AXIS_FEATURES = ("mean", "min", "max", "std", "var", "fft_energy", "spectral_entropy")
SENSOR_FEATURES = ("rms_mag", "corr_xy", "corr_yz", "corr_xz")
ACC_FEATURES = ("speed_mean", "speed_median", "speed_max")
GYR_FEATURES = ("roll_mean", "roll_median", "roll_max")

Schema = tuple[tuple[str, str], ...]


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    schema: Schema

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if len(arr) != len(self.schema):
            raise AlignmentError(
                f"{len(arr)} values do not match schema of length {len(self.schema)}"
            )

    def schema_hash(self) -> str:
        return hashlib.sha256(repr(self.schema).encode()).hexdigest()


def fft_energy(values: np.ndarray) -> float:
    """Mean squared magnitude over the full spectrum, folded from the
    one-sided bins; by Parseval this equals sum(x**2)."""
    mags2 = np.abs(np.fft.rfft(values)) ** 2
    w = len(values)
    total = mags2[0] + 2.0 * np.sum(mags2[1 : (w + 1) // 2])
    if w % 2 == 0:
        total += mags2[-1]
    return float(total / w)


def spectral_entropy(values: np.ndarray) -> float:
    """Shannon entropy of the magnitude-normalized one-sided spectrum,
    scaled to [0, 1]: 0 for a single line, 1 for a flat spectrum."""
    mags = np.abs(np.fft.rfft(values))
    total = mags.sum()
    if total <= 0.0:
        return 0.0
    p = mags / total
    p = p[p > 0.0]
    h = float(-(p * np.log(p)).sum())
    return h / float(np.log(len(mags)))


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    # zero-variance axes correlate as 0 by convention
    sa, sb = np.std(a), np.std(b)
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def instantaneous_speed(magnitude: np.ndarray, sample_rate_hz: float) -> np.ndarray:
    """Trapezoidal integral of the mean-subtracted magnitude signal,
    zero initial velocity per window."""
    return cumulative_trapezoid(
        magnitude - magnitude.mean(), dx=1.0 / sample_rate_hz, initial=0.0
    )


def extract_features(
    bundle: Mapping[Channel, Window], sample_rate_hz: float
) -> FeatureVector:
    """Feature vector over one aligned multi-channel window set.

    Per axis: mean, min, max, population std/var, FFT energy and spectral
    entropy. Per (device, sensor): RMS of the 3-axis magnitude plus the
    three pairwise correlations. Accelerometers additionally contribute
    mean/median/max of the windowed instantaneous speed, gyroscopes
    mean/median/max of the roll velocity (their x channel).
    """
    if not bundle:
        raise AlignmentError("empty window bundle")
    lengths = {len(w) for w in bundle.values()}
    indices = {w.index for w in bundle.values()}
    if len(lengths) != 1 or len(indices) != 1:
        raise AlignmentError("bundle windows are not aligned")
    groups: dict[tuple[str, str], dict[str, np.ndarray]] = {}
    for ch, win in bundle.items():
        groups.setdefault((ch.device, ch.sensor), {})[ch.axis] = win.values
    names: list[tuple[str, str]] = []
    values: list[float] = []
    for (device, sensor) in sorted(groups):
        by_axis = groups[(device, sensor)]
        if set(by_axis) != set(AXES):
            raise AlignmentError(f"{device}/{sensor} is missing an axis")
        for axis in AXES:
            x = by_axis[axis]
            key = f"{device}_{sensor}_{axis}"
            names += [(f, key) for f in AXIS_FEATURES]
            values += [
                float(x.mean()),
                float(x.min()),
                float(x.max()),
                float(x.std()),
                float(x.var()),
                fft_energy(x),
                spectral_entropy(x),
            ]
        key = f"{device}_{sensor}"
        mag = np.sqrt(by_axis["x"] ** 2 + by_axis["y"] ** 2 + by_axis["z"] ** 2)
        names += [(f, key) for f in SENSOR_FEATURES]
        values += [
            float(np.sqrt(np.mean(mag**2))),
            _pearson(by_axis["x"], by_axis["y"]),
            _pearson(by_axis["y"], by_axis["z"]),
            _pearson(by_axis["x"], by_axis["z"]),
        ]
        if sensor == "acc":
            speed = instantaneous_speed(mag, sample_rate_hz)
            names += [(f, key) for f in ACC_FEATURES]
            values += [float(speed.mean()), float(np.median(speed)), float(speed.max())]
        elif sensor == "gyr":
            roll = by_axis["x"]
            names += [(f, key) for f in GYR_FEATURES]
            values += [float(roll.mean()), float(np.median(roll)), float(roll.max())]
    return FeatureVector(np.array(values), tuple(names))


def features_to_csv(path, vectors: Sequence[FeatureVector], labels=None) -> None:
    """Export a feature matrix with a schema header row (optional label column)."""
    if not vectors:
        raise AlignmentError("no feature vectors to export")
    schema = vectors[0].schema
    for v in vectors:
        if v.schema != schema:
            raise AlignmentError("feature vectors have differing schemas")
    if labels is not None and len(labels) != len(vectors):
        raise AlignmentError("labels do not match feature vectors")
    header = [f"{name}:{key}" for name, key in schema]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if labels is not None:
            fh.write("label," + ",".join(header) + "\n")
        else:
            fh.write(",".join(header) + "\n")
        for i, v in enumerate(vectors):
            row = ",".join(repr(float(x)) for x in v.values)
            if labels is not None:
                fh.write(f"{labels[i]},{row}\n")
            else:
                fh.write(row + "\n")
