"""Heart rate variability from beat streams.

A beat stream is a strictly increasing sequence of heartbeat timestamps.
Each pair of successive beats yields an instantaneous heart rate sample
(60 / RR interval, stamped at the closing beat).  HRV is quantified as the
max-min range of those samples over a sliding window, classified as
Low (< 2 bpm), High (> 5 bpm) or Mid against fixed thresholds.
"""

from __future__ import annotations

import bisect
import enum
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

HRV_WINDOW_S = 15.0
HRV_LOW_BPM = 2.0
HRV_HIGH_BPM = 5.0

# Plausibility bounds for RR intervals; anything outside is treated as a
# sensor artifact (double detection or dropout), not physiology.
MIN_RR_S = 0.25
MAX_RR_S = 3.0


@dataclass(frozen=True)
class BeatEvent:
    """A single heartbeat at time ``t`` (seconds, monotonic simulated clock)."""

    t: float


@dataclass(frozen=True)
class HrSample:
    """Instantaneous heart rate at ``t``: 60 / RR of the interval ending here."""

    t: float
    hr: float


@dataclass(frozen=True)
class HrvSample:
    """Windowed HRV at ``t``.

    ``range`` is max-min of instantaneous HR over samples in ``(t - W, t]``.
    ``defined`` is False when fewer than 2 samples fall in the window; the
    range value then carries no meaning (absence of data is not zero HRV).
    """

    t: float
    range: float
    defined: bool


class HrvClass(enum.Enum):
    LOW = "low"
    MID = "mid"
    HIGH = "high"


def instantaneous_hr(prev_beat: BeatEvent, beat: BeatEvent) -> HrSample:
    """Heart rate of the RR interval between two successive beats.

    Raises ValueError if the timestamps are not strictly increasing.
    """
    rr = beat.t - prev_beat.t
    if rr <= 0:
        raise ValueError(
            f"non-increasing beat timestamps: {prev_beat.t} -> {beat.t}"
        )
    return HrSample(t=beat.t, hr=60.0 / rr)


def hrv_range(
    samples: Sequence[HrSample], t: float, window: float = HRV_WINDOW_S
) -> HrvSample:
    """HRV range over HR samples with timestamp in ``(t - window, t]``.

    ``samples`` must be ordered by timestamp.  Returns defined=False when
    fewer than 2 samples fall in the window.
    """
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    times = [s.t for s in samples]
    lo = bisect.bisect_right(times, t - window)
    hi = bisect.bisect_right(times, t)
    in_window = samples[lo:hi]
    if len(in_window) < 2:
        return HrvSample(t=t, range=0.0, defined=False)
    hrs = [s.hr for s in in_window]
    return HrvSample(t=t, range=max(hrs) - min(hrs), defined=True)


def classify(
    h: HrvSample, low: float = HRV_LOW_BPM, high: float = HRV_HIGH_BPM
) -> HrvClass:
    """Classify a defined HRV sample against the Low/High thresholds.

    Boundary values (exactly ``low`` or ``high``) classify as Mid, matching
    the strict inequalities of the thresholds.
    """
    if not h.defined:
        raise ValueError("cannot classify an undefined HRV sample")
    if h.range < low:
        return HrvClass.LOW
    if h.range > high:
        return HrvClass.HIGH
    return HrvClass.MID


class BeatIngester:
    """Incremental beat-stream consumer producing HR and HRV samples.

    Feeds beats one at a time, rejecting implausible RR intervals
    (< MIN_RR_S or > MAX_RR_S) with a warning.  A too-short interval drops
    the closing beat entirely (spurious double detection); a too-long one
    emits no HR sample but resets the reference beat so the stream recovers
    after a dropout.

    Stateful, single-owner; distinct instances are independent.
    """

    def __init__(
        self,
        window: float = HRV_WINDOW_S,
        min_rr: float = MIN_RR_S,
        max_rr: float = MAX_RR_S,
    ):
        self.window = window
        self.min_rr = min_rr
        self.max_rr = max_rr
        self._prev: BeatEvent | None = None
        self._samples: list[HrSample] = []
        self.rejected: list[BeatEvent] = []

    def add_beat(self, beat: BeatEvent) -> HrvSample | None:
        """Consume one beat; return the HRV sample at its timestamp.

        Returns None for the first beat and for rejected artifacts.
        Raises ValueError on non-increasing timestamps.
        """
        if self._prev is None:
            self._prev = beat
            return None
        rr = beat.t - self._prev.t
        if rr <= 0:
            raise ValueError(
                f"non-increasing beat timestamps: {self._prev.t} -> {beat.t}"
            )
        if rr < self.min_rr:
            logger.warning("rejected beat at t=%.3f: RR %.3f s too short", beat.t, rr)
            self.rejected.append(beat)
            return None
        if rr > self.max_rr:
            logger.warning("rejected beat at t=%.3f: RR %.3f s too long", beat.t, rr)
            self.rejected.append(beat)
            self._prev = beat  # resync after dropout
            return None
        sample = instantaneous_hr(self._prev, beat)
        self._prev = beat
        self._samples.append(sample)
        self._trim(sample.t)
        return hrv_range(self._samples, sample.t, self.window)

    def hrv_at(self, t: float) -> HrvSample:
        """HRV over the retained samples at an arbitrary time ``t``."""
        return hrv_range(self._samples, t, self.window)

    def _trim(self, now: float) -> None:
        # Keep one window plus slack so hrv_at() stays valid for recent t.
        cutoff = now - 2 * self.window
        drop = 0
        while drop < len(self._samples) and self._samples[drop].t <= cutoff:
            drop += 1
        if drop:
            del self._samples[:drop]


def hr_series(beats: Sequence[BeatEvent]) -> list[HrSample]:
    """All instantaneous HR samples of an ordered beat stream (no artifact filter)."""
    return [
        instantaneous_hr(prev, beat) for prev, beat in zip(beats, beats[1:])
    ]


def read_beats(path) -> list[BeatEvent]:
    """Read a beat-timestamp file: one timestamp in seconds per line.

    Blank lines and ``#`` comments are allowed; timestamps must be strictly
    increasing.  Raises ValueError with the offending line number otherwise.
    """
    beats: list[BeatEvent] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                t = float(line)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a timestamp: {line!r}")
            if beats and t <= beats[-1].t:
                raise ValueError(
                    f"{path}:{lineno}: timestamps must be strictly increasing"
                    f" ({beats[-1].t} -> {t})"
                )
            beats.append(BeatEvent(t=t))
    return beats


def write_beats(path, beats: Iterable[BeatEvent]) -> None:
    """Write a beat stream in the timestamp-per-line file format."""
    with open(path, "w", encoding="utf-8") as fh:
        for beat in beats:
            fh.write(f"{beat.t!r}\n")
