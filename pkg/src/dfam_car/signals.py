"""Raw motion time series: ingestion, filtering, segmentation and spectra.

All operations are pure functions over immutable values; arrays are stored
read-only so instances can be shared freely across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy import signal as _sps

from .errors import AlignmentError, ConfigError, DataQualityError, NotEnoughDataError, ParseError

DEVICES = ("phone", "watch")
SENSORS = ("acc", "gyr")
AXES = ("x", "y", "z")

DEFAULT_SAMPLE_RATE_HZ = 50.0
DEFAULT_CUTOFF_HZ = 10.0

CSV_FIELDS = ("timestamp_ms", "device", "sensor", "x", "y", "z")


class Channel(NamedTuple):
    """One (device, sensor, axis) stream. Tuple order gives the canonical sort."""

    device: str
    sensor: str
    axis: str

    @property
    def key(self) -> str:
        return f"{self.device}_{self.sensor}_{self.axis}"


def all_channels(sensors: Sequence[str] = SENSORS) -> tuple[Channel, ...]:
    """Canonical channel ordering: device-major, then sensor, then axis."""
    for s in sensors:
        if s not in SENSORS:
            raise ConfigError(f"unknown sensor {s!r}, expected one of {SENSORS}")
    return tuple(
        Channel(d, s, a) for d in DEVICES for s in SENSORS if s in sensors for a in AXES
    )


def _readonly(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SensorRecord:
    timestamp_ms: float
    device: str
    sensor: str
    x: float
    y: float
    z: float


@dataclass(frozen=True, eq=False)
class TimeSeries:
    channel: Channel
    sample_rate_hz: float
    values: np.ndarray

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ConfigError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.ndim != 1:
            raise DataQualityError("series values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise DataQualityError(f"non-finite sample in channel {self.channel.key}")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class Window:
    values: np.ndarray
    index: int
    channel: Channel

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided magnitude spectrum of a window, bins k = 0 .. W/2."""

    bin_magnitudes: np.ndarray
    bin_width_hz: float

    def __post_init__(self):
        object.__setattr__(self, "bin_magnitudes", _readonly(self.bin_magnitudes))

    @property
    def n_bins(self) -> int:
        return len(self.bin_magnitudes)

    @property
    def window_size(self) -> int:
        return 2 * (self.n_bins - 1)

    @property
    def sample_rate_hz(self) -> float:
        return self.bin_width_hz * self.window_size

    @property
    def nyquist_hz(self) -> float:
        return self.bin_width_hz * (self.n_bins - 1)


def low_pass_filter(series: TimeSeries, cutoff_hz: float = DEFAULT_CUTOFF_HZ) -> TimeSeries:
    """Second-order Butterworth low-pass (biquad), zero initial state.

    DC gain is unity; roll-off is monotone above the cutoff.
    """
    if not (0.0 < cutoff_hz < series.sample_rate_hz / 2.0):
        raise ConfigError(
            f"cutoff must lie in (0, {series.sample_rate_hz / 2.0}) Hz, got {cutoff_hz}"
        )
    if not np.all(np.isfinite(series.values)):
        raise DataQualityError(f"non-finite sample in channel {series.channel.key}")
    b, a = _sps.butter(2, cutoff_hz, btype="low", fs=series.sample_rate_hz)
    filtered = _sps.lfilter(b, a, series.values)
    return TimeSeries(series.channel, series.sample_rate_hz, filtered)


def segment(series: TimeSeries, window_size: int) -> list[Window]:
    """Split into consecutive non-overlapping windows; trailing remainder is dropped."""
    if int(window_size) != window_size or window_size < 2:
        raise ConfigError(f"window_size must be an integer >= 2, got {window_size}")
    window_size = int(window_size)
    n = len(series) // window_size
    if n == 0:
        raise NotEnoughDataError(
            f"series of length {len(series)} is shorter than one window of {window_size}"
        )
    return [
        Window(series.values[i * window_size : (i + 1) * window_size], i, series.channel)
        for i in range(n)
    ]


def spectrum(window: Window, sample_rate_hz: float) -> Spectrum:
    """Magnitude of the DFT at frequencies k*fs/W for k = 0 .. W/2.

    Magnitudes are unnormalized, so Parseval reads
    sum(x**2) == sum(|X_k|**2 over all W bins) / W.
    """
    w = len(window)
    if w < 2 or (w & (w - 1)) != 0:
        raise ConfigError(f"window length must be a power of two, got {w}")
    if sample_rate_hz <= 0:
        raise ConfigError(f"sample_rate_hz must be positive, got {sample_rate_hz}")
    mags = np.abs(np.fft.rfft(window.values))
    return Spectrum(mags, sample_rate_hz / w)


def window_bundles(
    series_by_channel: Mapping[Channel, TimeSeries], window_size: int
) -> list[dict[Channel, Window]]:
    """Segment every channel and zip windows by time index.

    Channels are ordered canonically; all channels must yield the same
    number of windows.
    """
    if not series_by_channel:
        raise AlignmentError("no channels to bundle")
    channels = sorted(series_by_channel)
    per_channel = {}
    counts = set()
    for ch in channels:
        wins = segment(series_by_channel[ch], window_size)
        per_channel[ch] = wins
        counts.add(len(wins))
    if len(counts) != 1:
        raise AlignmentError(f"channels yield differing window counts: {sorted(counts)}")
    n = counts.pop()
    return [{ch: per_channel[ch][i] for ch in channels} for i in range(n)]


def _parse_float(text: str, what: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"bad {what} {text!r}", line) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite {what} {text!r}", line)
    return value


def iter_records(path):
    """Yield SensorRecord rows from a session CSV, validating as it goes.

    Expected header: timestamp_ms,device,sensor,x,y,z. Timestamps within one
    (device, sensor) stream must be non-decreasing.
    """
    last_ts: dict[tuple[str, str], float] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        if tuple(h.strip() for h in header) != CSV_FIELDS:
            raise ParseError(f"bad header {header!r}, expected {','.join(CSV_FIELDS)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise ParseError(f"expected 6 fields, got {len(row)}", lineno)
            ts = _parse_float(row[0], "timestamp", lineno)
            device, sensor = row[1].strip(), row[2].strip()
            if device not in DEVICES:
                raise ParseError(f"unknown device {device!r}", lineno)
            if sensor not in SENSORS:
                raise ParseError(f"unknown sensor {sensor!r}", lineno)
            x, y, z = (_parse_float(row[i], "sample", lineno) for i in (3, 4, 5))
            key = (device, sensor)
            if key in last_ts and ts < last_ts[key]:
                raise ParseError(f"timestamp went backwards for {device}/{sensor}", lineno)
            last_ts[key] = ts
            yield SensorRecord(ts, device, sensor, x, y, z)


def read_recording(
    path,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    sensors: Sequence[str] = SENSORS,
) -> dict[Channel, TimeSeries]:
    """Read one recording session CSV into per-channel series.

    Samples are assumed uniform at the declared rate (no resampling).
    """
    wanted = set(sensors)
    samples: dict[tuple[str, str], list[tuple[float, float, float]]] = {}
    for rec in iter_records(path):
        if rec.sensor in wanted:
            samples.setdefault((rec.device, rec.sensor), []).append((rec.x, rec.y, rec.z))
    out: dict[Channel, TimeSeries] = {}
    for (device, sensor), rows in sorted(samples.items()):
        arr = np.asarray(rows, dtype=np.float64)
        for j, axis in enumerate(AXES):
            ch = Channel(device, sensor, axis)
            out[ch] = TimeSeries(ch, sample_rate_hz, arr[:, j])
    return out


def write_recording(path, series_by_channel: Mapping[Channel, TimeSeries]) -> None:
    """Write per-channel series as one session CSV (LF line endings, UTF-8)."""
    groups: dict[tuple[str, str], dict[str, TimeSeries]] = {}
    for ch, series in series_by_channel.items():
        groups.setdefault((ch.device, ch.sensor), {})[ch.axis] = series
    rows = []
    for (device, sensor), by_axis in sorted(groups.items()):
        if set(by_axis) != set(AXES):
            raise AlignmentError(f"{device}/{sensor} is missing an axis")
        n = {len(s) for s in by_axis.values()}
        if len(n) != 1:
            raise AlignmentError(f"{device}/{sensor} axes have differing lengths")
        rate = by_axis["x"].sample_rate_hz
        for i in range(n.pop()):
            ts = round(i * 1000.0 / rate)
            rows.append(
                (
                    ts,
                    device,
                    sensor,
                    repr(float(by_axis["x"].values[i])),
                    repr(float(by_axis["y"].values[i])),
                    repr(float(by_axis["z"].values[i])),
                )
            )
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_FIELDS) + "\n")
        for ts, device, sensor, x, y, z in rows:
            fh.write(f"{ts},{device},{sensor},{x},{y},{z}\n")
