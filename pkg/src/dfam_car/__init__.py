"""Concurrent activity recognition for distracted-pedestrian detection.

Dominant-frequency signature matching over smartphone and smartwatch motion
data, five from-scratch baseline classifiers, cross-validation protocols, a
hierarchical recognizer and a synthetic IMU corpus generator.
"""

__version__ = "0.1.0"

from .dfam import ActivityLabel, BinLayout, DfamModel, Signature, classify, extract_signature, match_score
from .errors import (
    AlignmentError,
    CarError,
    ConfigError,
    DataQualityError,
    NotEnoughDataError,
    ParseError,
    TrainingError,
)
from .signals import Channel, Spectrum, TimeSeries, Window, low_pass_filter, segment, spectrum

__all__ = [
    "ActivityLabel",
    "AlignmentError",
    "BinLayout",
    "CarError",
    "Channel",
    "ConfigError",
    "DataQualityError",
    "DfamModel",
    "NotEnoughDataError",
    "ParseError",
    "Signature",
    "Spectrum",
    "TimeSeries",
    "TrainingError",
    "Window",
    "classify",
    "extract_signature",
    "low_pass_filter",
    "match_score",
    "segment",
    "spectrum",
    "__version__",
]
