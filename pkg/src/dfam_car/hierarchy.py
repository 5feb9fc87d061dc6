"""Hierarchical three-state recognizer: gate on motion, branch on context,
then run concurrent-distraction recognition.

S1 watches for a moving pedestrian using a binary moving/not-moving model.
S2 consults the smartphone-in-use context flag: if set, a smartphone
distraction is reported straight away and the flow returns to S1; otherwise
S3 runs a binary distracted/not-distracted model on every window until the
periodic reset pulls the machine back to S1. Classification happens only in
the state that owns it, so the S3 (watch-heavy) model runs on a fraction of
the stream; the number of S3 invocations doubles as the energy proxy for
how often the watch channels had to be processed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .dfam import DfamModel, classify, extract_signature
from .errors import ConfigError
from .signals import Spectrum

S1, S2, S3 = "S1", "S2", "S3"

MOVING_LABEL = "moving"
NOT_MOVING_LABEL = "not_moving"
DISTRACTED_LABEL = "distracted"
NOT_DISTRACTED_LABEL = "not_distracted"

EVENT_SMARTPHONE = "smartphone_distraction"
EVENT_MOTION = "non_smartphone_distraction"

DEFAULT_RESET_PERIOD = 30


@dataclass(frozen=True)
class HierarchicalState:
    state: str = S1
    windows_since_reset: int = 0
    reset_period: int = DEFAULT_RESET_PERIOD

    def __post_init__(self):
        if self.state not in (S1, S2, S3):
            raise ConfigError(f"unknown state {self.state!r}")
        if self.reset_period < 1:
            raise ConfigError("reset_period must be >= 1")


@dataclass(frozen=True)
class ContextFlags:
    smartphone_in_use: bool = False


@dataclass(frozen=True)
class DistractionEvent:
    window_index: int
    state: str
    event_type: str
    label: str
    score: float

    def to_dict(self) -> dict:
        return {
            "window_index": self.window_index,
            "state": self.state,
            "event_type": self.event_type,
            "label": self.label,
            "score": self.score,
        }


def _require_binary(model: DfamModel | None, expected: set[str], state: str) -> None:
    if model is None:
        raise ConfigError(f"state {state} requires a trained model")
    if set(model.labels) != expected:
        raise ConfigError(
            f"state {state} model must expose exactly the labels {sorted(expected)}, "
            f"got {list(model.labels)}"
        )


def step(
    state: HierarchicalState,
    spectra: Sequence[Spectrum],
    context: ContextFlags,
    s1_model: DfamModel,
    s3_model: DfamModel,
    s1_axes: Sequence[int] | None = None,
    s3_axes: Sequence[int] | None = None,
    window_index: int = 0,
) -> tuple[HierarchicalState, DistractionEvent | None]:
    """Process one window in the current state and advance the machine.

    The reset counter ticks on every window; when it reaches the period the
    machine returns to S1 unconditionally, overriding the computed move.
    """
    _require_binary(s1_model, {MOVING_LABEL, NOT_MOVING_LABEL}, S1)
    _require_binary(s3_model, {DISTRACTED_LABEL, NOT_DISTRACTED_LABEL}, S3)
    event = None
    if state.state == S1:
        pick = spectra if s1_axes is None else [spectra[i] for i in s1_axes]
        result = classify(extract_signature(pick, s1_model.layout), s1_model)
        next_state = S2 if result.label == MOVING_LABEL else S1
    elif state.state == S2:
        if context.smartphone_in_use:
            event = DistractionEvent(window_index, S2, EVENT_SMARTPHONE, "using_smartphone", 1.0)
            next_state = S1
        else:
            next_state = S3
    else:
        pick = spectra if s3_axes is None else [spectra[i] for i in s3_axes]
        result = classify(extract_signature(pick, s3_model.layout), s3_model)
        if result.label == DISTRACTED_LABEL:
            event = DistractionEvent(
                window_index, S3, EVENT_MOTION, result.label, result.scores[result.label]
            )
        next_state = S3
    ticks = state.windows_since_reset + 1
    if ticks >= state.reset_period:
        return HierarchicalState(S1, 0, state.reset_period), event
    return HierarchicalState(next_state, ticks, state.reset_period), event


class HierarchicalCar:
    """Stateful wrapper around step() that keeps counters and the event log.

    One instance per stream; not shared across threads.
    """

    def __init__(
        self,
        s1_model: DfamModel,
        s3_model: DfamModel,
        reset_period: int = DEFAULT_RESET_PERIOD,
        s1_axes: Sequence[int] | None = None,
        s3_axes: Sequence[int] | None = None,
    ):
        _require_binary(s1_model, {MOVING_LABEL, NOT_MOVING_LABEL}, S1)
        _require_binary(s3_model, {DISTRACTED_LABEL, NOT_DISTRACTED_LABEL}, S3)
        self.s1_model = s1_model
        self.s3_model = s3_model
        self.s1_axes = tuple(s1_axes) if s1_axes is not None else None
        self.s3_axes = tuple(s3_axes) if s3_axes is not None else None
        self.state = HierarchicalState(S1, 0, reset_period)
        self.s1_invocations = 0
        self.s3_invocations = 0
        self.events: list[DistractionEvent] = []
        self.trace: list[str] = []
        self._window_index = 0

    @property
    def watch_windows_processed(self) -> int:
        # the watch sleeps outside S3, so its channels are touched once per S3 step
        return self.s3_invocations

    def process(
        self, spectra: Sequence[Spectrum], smartphone_in_use: bool = False
    ) -> DistractionEvent | None:
        self.trace.append(self.state.state)
        if self.state.state == S1:
            self.s1_invocations += 1
        elif self.state.state == S3:
            self.s3_invocations += 1
        self.state, event = step(
            self.state,
            spectra,
            ContextFlags(smartphone_in_use),
            self.s1_model,
            self.s3_model,
            self.s1_axes,
            self.s3_axes,
            self._window_index,
        )
        self._window_index += 1
        if event is not None:
            self.events.append(event)
        return event

    def run(
        self, stream: Sequence[tuple[Sequence[Spectrum], bool]]
    ) -> list[DistractionEvent]:
        for spectra, flag in stream:
            self.process(spectra, flag)
        return self.events


def write_events_jsonl(events: Sequence[DistractionEvent], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ev in events:
            fh.write(json.dumps(ev.to_dict(), sort_keys=True) + "\n")
