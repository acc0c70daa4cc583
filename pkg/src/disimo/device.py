"""The device controller: a pure, deterministic state machine.

Consumes timestamped events (HRV updates, grasp/release, clock ticks,
session snapshots, invites) and emits actuator action descriptions (audio,
light, fan, status publication).  No I/O and no wall clock live here: time
is carried by the events, and timer expiry is evaluated lazily on the next
event, so drivers must supply ticks at >= 1 Hz simulated cadence.

Modes: Idle -> (low HRV sustained) Reminding -> (ignored) Snoozed ->
(still low) Reminding again; grasping from any of those enters Active, and
a High HRV sample while grasped enters Coherent (fan on).  Release returns
to Idle.
"""

from __future__ import annotations

import enum
import heapq
import json
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Sequence

from .audio import BreathPattern
from .cluster import SessionSnapshot
from .hrv import (
    HRV_HIGH_BPM,
    HRV_LOW_BPM,
    HRV_WINDOW_S,
    BeatEvent,
    BeatIngester,
    HrvClass,
    HrvSample,
    classify,
)


class Mode(enum.Enum):
    IDLE = "idle"
    REMINDING = "reminding"
    SNOOZED = "snoozed"
    ACTIVE = "active"
    COHERENT = "coherent"


GRASPED_MODES = (Mode.ACTIVE, Mode.COHERENT)


@dataclass(frozen=True)
class DeviceConfig:
    low_trigger: float = 600.0
    guide_cycles: int = 4
    snooze: float = 60.0
    fade: float = 2.0
    user_color: tuple[int, int, int] = (120, 180, 255)
    hrv_window: float = HRV_WINDOW_S
    low_threshold: float = HRV_LOW_BPM
    high_threshold: float = HRV_HIGH_BPM
    pattern: BreathPattern = field(default_factory=BreathPattern)

    def __post_init__(self):
        for name in ("low_trigger", "snooze", "fade", "hrv_window"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.guide_cycles < 1:
            raise ValueError("guide_cycles must be >= 1")
        if len(self.user_color) != 3 or any(
            not 0 <= c <= 255 for c in self.user_color
        ):
            raise ValueError(f"user_color channels must be in [0, 255]")

    @property
    def guide_seconds(self) -> float:
        return self.guide_cycles * self.pattern.cycle


# --- events ---------------------------------------------------------------
# The integer is the tie-break rank when several events share a timestamp.


@dataclass(frozen=True)
class Tick:
    t: float
    ORDER = 0


@dataclass(frozen=True)
class Hrv:
    """An HRV update; ``cls`` is None iff the sample is undefined."""

    t: float
    sample: HrvSample
    cls: HrvClass | None
    ORDER = 1


@dataclass(frozen=True)
class Grasp:
    t: float
    ORDER = 2


@dataclass(frozen=True)
class Release:
    t: float
    ORDER = 3


@dataclass(frozen=True)
class Snapshot:
    t: float
    snapshot: SessionSnapshot
    ORDER = 4


@dataclass(frozen=True)
class Invite:
    t: float
    ORDER = 5


DeviceEvent = Tick | Hrv | Grasp | Release | Snapshot | Invite


def hrv_event(sample: HrvSample, config: DeviceConfig) -> Hrv:
    """Wrap an HRV sample as an event, classifying it when defined."""
    cls = (
        classify(sample, config.low_threshold, config.high_threshold)
        if sample.defined
        else None
    )
    return Hrv(t=sample.t, sample=sample, cls=cls)


# --- actions ----------------------------------------------------------------


@dataclass(frozen=True)
class StartAudio:
    cycles: int


@dataclass(frozen=True)
class FadeAudio:
    fade_s: float


@dataclass(frozen=True)
class StopAudio:
    pass


@dataclass(frozen=True)
class SetLight:
    color: tuple[int, int, int]
    brightness: float


@dataclass(frozen=True)
class PulseLight:
    pass


@dataclass(frozen=True)
class FanOn:
    pass


@dataclass(frozen=True)
class FanOff:
    pass


@dataclass(frozen=True)
class PublishStatus:
    active: bool
    coherent: bool


Action = (
    StartAudio
    | FadeAudio
    | StopAudio
    | SetLight
    | PulseLight
    | FanOn
    | FanOff
    | PublishStatus
)

LIGHT_OFF = SetLight(color=(0, 0, 0), brightness=0.0)


@dataclass(frozen=True)
class DeviceState:
    mode: Mode = Mode.IDLE
    low_since: float | None = None
    mode_entered: float = 0.0
    latest_class: HrvClass | None = None
    last_t: float = 0.0


def initial_state(t: float = 0.0) -> DeviceState:
    return DeviceState(mode=Mode.IDLE, mode_entered=t, last_t=t)


def step(
    state: DeviceState, event: DeviceEvent, config: DeviceConfig
) -> tuple[DeviceState, list[Action]]:
    """Apply one event; returns the new state and the actions to perform.

    Pure: same (state, event, config) always yields the same result.
    Raises ValueError if the event timestamp precedes an applied one.
    """
    t = event.t
    if t < state.last_t:
        raise ValueError(f"out-of-order event: t={t} after t={state.last_t}")

    mode = state.mode
    low_since = state.low_since
    latest = state.latest_class
    mode_entered = state.mode_entered
    actions: list[Action] = []

    def enter(new_mode: Mode) -> None:
        nonlocal mode, mode_entered, low_since
        mode = new_mode
        mode_entered = t
        if new_mode not in (Mode.IDLE, Mode.SNOOZED):
            low_since = None  # the low timer only runs while idle or snoozed

    if isinstance(event, Hrv):
        if event.cls is None:
            # Undefined HRV: no data, so the low timer must not accumulate
            # across the gap.
            latest = None
            low_since = None
        else:
            latest = event.cls
            if mode in (Mode.IDLE, Mode.SNOOZED):
                if latest is HrvClass.LOW:
                    if low_since is None:
                        low_since = t
                else:
                    low_since = None

    if isinstance(event, (Tick, Hrv)):
        # Lazy timer evaluation; at >= 1 Hz tick cadence at most one timer
        # boundary can pass between events.
        if mode is Mode.IDLE:
            if low_since is not None and t - low_since >= config.low_trigger:
                enter(Mode.REMINDING)
                actions.append(StartAudio(cycles=config.guide_cycles))
        elif mode is Mode.REMINDING:
            if t - mode_entered >= config.guide_seconds:
                enter(Mode.SNOOZED)
                actions.append(StopAudio())
        elif mode is Mode.SNOOZED:
            if latest is not None and latest is not HrvClass.LOW:
                enter(Mode.IDLE)  # state improved: reminder cycle cancelled
            elif latest is HrvClass.LOW and t - mode_entered >= config.snooze:
                enter(Mode.REMINDING)
                actions.append(StartAudio(cycles=config.guide_cycles))
        elif mode is Mode.ACTIVE:
            if isinstance(event, Hrv) and event.cls is HrvClass.HIGH:
                enter(Mode.COHERENT)
                actions.append(FanOn())
                actions.append(PublishStatus(active=True, coherent=True))
        elif mode is Mode.COHERENT:
            if (
                isinstance(event, Hrv)
                and event.cls is not None
                and event.cls is not HrvClass.HIGH
            ):
                enter(Mode.ACTIVE)
                actions.append(FanOff())
                actions.append(PublishStatus(active=True, coherent=False))

    elif isinstance(event, Grasp):
        if mode not in GRASPED_MODES:
            enter(Mode.ACTIVE)
            actions.append(FadeAudio(fade_s=config.fade))
            actions.append(StartAudio(cycles=config.guide_cycles))
            actions.append(SetLight(color=config.user_color, brightness=1.0))
            actions.append(PublishStatus(active=True, coherent=False))

    elif isinstance(event, Release):
        if mode in GRASPED_MODES:
            if mode is Mode.COHERENT:
                actions.append(FanOff())  # fan only runs in Coherent
            actions.append(StopAudio())
            actions.append(LIGHT_OFF)
            actions.append(PublishStatus(active=False, coherent=False))
            enter(Mode.IDLE)

    elif isinstance(event, Snapshot):
        if mode in GRASPED_MODES:
            # Cluster feedback overrides the local light while grasped.
            actions.append(
                SetLight(
                    color=event.snapshot.color,
                    brightness=event.snapshot.brightness,
                )
            )

    elif isinstance(event, Invite):
        if mode is Mode.IDLE:
            actions.append(PulseLight())

    new_state = replace(
        state,
        mode=mode,
        low_since=low_since,
        latest_class=latest,
        mode_entered=mode_entered,
        last_t=t,
    )
    return new_state, actions


def merge_events(*streams: Iterable[DeviceEvent]) -> list[DeviceEvent]:
    """Merge time-ordered event streams; ties break by event kind rank."""
    return list(heapq.merge(*streams, key=lambda e: (e.t, e.ORDER)))


def beats_to_hrv_events(
    beats: Iterable[BeatEvent], config: DeviceConfig
) -> list[Hrv]:
    """The HRV event stream of a beat stream (artifact-filtered)."""
    ingester = BeatIngester(window=config.hrv_window)
    events = []
    for beat in beats:
        sample = ingester.add_beat(beat)
        if sample is not None:
            events.append(hrv_event(sample, config))
    return events


def run_device(
    beats: Iterable[BeatEvent],
    events: Iterable[DeviceEvent],
    config: DeviceConfig,
    state: DeviceState | None = None,
) -> list[tuple[float, Action]]:
    """Fold the merged beat-derived HRV stream and external events through step.

    Both inputs must be time-ordered.  Returns the ordered action trace as
    (timestamp, action) pairs.
    """
    if state is None:
        state = initial_state()
    trace: list[tuple[float, Action]] = []
    for event in merge_events(beats_to_hrv_events(beats, config), events):
        state, actions = step(state, event, config)
        trace.extend((event.t, action) for action in actions)
    return trace


# --- trace serialization ----------------------------------------------------


def action_record(t: float, action: Action) -> dict:
    """JSON-ready record of one timed action."""
    rec: dict = {"t": t, "action": type(action).__name__}
    for f in fields(action):
        value = getattr(action, f.name)
        rec[f.name] = list(value) if isinstance(value, tuple) else value
    return rec


def trace_to_jsonl(trace: Sequence[tuple[float, Action]]) -> str:
    """Newline-delimited JSON action trace, one record per line."""
    return "".join(
        json.dumps(action_record(t, action), separators=(",", ":")) + "\n"
        for t, action in trace
    )
