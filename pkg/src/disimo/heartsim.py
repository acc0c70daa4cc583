"""Synthetic heartbeat source with controllable respiratory sinus arrhythmia.

Heart rate oscillates sinusoidally around a base rate, coupled to a virtual
breathing frequency; beats are emitted by integrate-and-fire over the
instantaneous rate.  Slow breathing gets a large coupling amplitude and fast
breathing a small one (see ``coupling_for_pace``), so steering the breathing
pace alone moves the produced HRV range across the Low/High thresholds.

Everything is seed-deterministic: the same model yields bit-identical beat
streams on every run.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, replace

import numpy as np

from .hrv import BeatEvent

# Breathing-pace tuning curve: peak RSA amplitude at slow paced breathing,
# shrinking linearly toward fast, shallow breathing.
PACE_PEAK_HZ = 0.1
PACE_PEAK_COUPLING = 6.0
PACE_FAST_HZ = 0.4
PACE_FAST_COUPLING = 0.5

_INTEGRATION_STEP_S = 0.001
_CHUNK_S = 30.0

# Jitter is an AR(1) walk on a 1 s grid, clamped to +-4 standard deviations
# and linearly interpolated, so hr_at stays a pure function of (model, t).
_JITTER_GRID_S = 1.0
_JITTER_RHO = 0.7
_JITTER_CLAMP_SD = 4.0


def coupling_for_pace(breath_freq: float) -> float:
    """RSA amplitude (bpm) for a breathing frequency, per the tuning curve.

    Triangular: 0.5 bpm at 0 Hz, peak 6 bpm at 0.1 Hz, back down to 0.5 bpm
    at 0.4 Hz and above.
    """
    return float(
        np.interp(
            breath_freq,
            [0.0, PACE_PEAK_HZ, PACE_FAST_HZ],
            [PACE_FAST_COUPLING, PACE_PEAK_COUPLING, PACE_FAST_COUPLING],
        )
    )


@dataclass(frozen=True)
class HeartModel:
    """Immutable parameters of the synthetic heart.

    hr(t) = hr_base + coupling * sin(2*pi*breath_freq*t + phase) + jitter walk.
    The invariant hr_base - coupling - 4*jitter > 20 keeps every produced RR
    interval physiologically plausible.
    """

    breath_freq: float
    coupling: float
    hr_base: float = 70.0
    phase: float = 0.0
    seed: int = 0
    jitter: float = 0.2

    def __post_init__(self):
        if self.breath_freq < 0:
            raise ValueError(f"breath_freq must be >= 0, got {self.breath_freq}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        if self.jitter < 0:
            raise ValueError(f"jitter must be >= 0, got {self.jitter}")
        floor = self.hr_base - self.coupling - 4.0 * self.jitter
        if floor <= 20.0:
            raise ValueError(
                f"model can reach implausible rates: "
                f"hr_base - coupling - 4*jitter = {floor:.1f} bpm (needs > 20)"
            )


def for_pace(
    breath_freq: float, hr_base: float = 70.0, seed: int = 0, jitter: float = 0.2
) -> HeartModel:
    """Model for a breathing pace, with coupling from the tuning curve."""
    return HeartModel(
        breath_freq=breath_freq,
        coupling=coupling_for_pace(breath_freq),
        hr_base=hr_base,
        seed=seed,
        jitter=jitter,
    )


def repaced(model: HeartModel, breath_freq: float, at_t: float,
            coupling: float | None = None) -> HeartModel:
    """The model retuned to a new breathing pace at time ``at_t``.

    The sine phase is adjusted so the breathing angle is continuous at the
    switch (no phase jump; the rate may still step if coupling changes).
    Coupling defaults to the tuning-curve value for the new pace.
    """
    if coupling is None:
        coupling = coupling_for_pace(breath_freq)
    old_angle = 2.0 * math.pi * model.breath_freq * at_t + model.phase
    new_phase = (old_angle - 2.0 * math.pi * breath_freq * at_t) % (2.0 * math.pi)
    return replace(
        model, breath_freq=breath_freq, coupling=coupling, phase=new_phase
    )


class _JitterWalk:
    """Seeded unit-variance AR(1) walk on a 1 s grid, extended lazily."""

    def __init__(self, seed: int):
        self._rng = np.random.Generator(np.random.PCG64(seed))
        self._values = np.array([self._rng.standard_normal()])
        self._lock = threading.Lock()

    def at(self, t: np.ndarray) -> np.ndarray:
        need = int(np.max(t) / _JITTER_GRID_S) + 2
        with self._lock:
            if need > len(self._values):
                extra = need - len(self._values)
                steps = self._rng.standard_normal(extra)
                out = np.empty(extra)
                prev = self._values[-1]
                scale = math.sqrt(1.0 - _JITTER_RHO**2)
                for i in range(extra):
                    prev = _JITTER_RHO * prev + scale * steps[i]
                    out[i] = prev
                self._values = np.concatenate([self._values, out])
            grid_vals = np.clip(self._values, -_JITTER_CLAMP_SD, _JITTER_CLAMP_SD)
        grid_t = np.arange(len(grid_vals)) * _JITTER_GRID_S
        return np.interp(t, grid_t, grid_vals)


_walks: dict[int, _JitterWalk] = {}
_walks_lock = threading.Lock()


def _walk_for(seed: int) -> _JitterWalk:
    with _walks_lock:
        walk = _walks.get(seed)
        if walk is None:
            walk = _walks[seed] = _JitterWalk(seed)
        return walk


def hr_at(model: HeartModel, t):
    """Instantaneous heart rate (bpm) at time(s) ``t`` >= 0.

    Accepts a scalar or an array; deterministic for a given model.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    hr = model.hr_base + model.coupling * np.sin(
        2.0 * math.pi * model.breath_freq * t_arr + model.phase
    )
    if model.jitter > 0:
        hr = hr + model.jitter * _walk_for(model.seed).at(t_arr)
    return float(hr) if np.isscalar(t) or t_arr.ndim == 0 else hr


class BeatGenerator:
    """Incremental integrate-and-fire beat emitter.

    Accumulates the integral of hr(t)/60 on a <= 1 ms grid and emits a beat
    at every integer crossing.  The accumulator survives model swaps, so a
    pace change mid-stream never breaks the beat rhythm.
    """

    def __init__(self, model: HeartModel, start_t: float = 0.0):
        self.model = model
        self._t = start_t
        self._acc = 0.0
        self._emitted = 0

    def set_model(self, model: HeartModel) -> None:
        self.model = model

    def set_pace(self, breath_freq: float, coupling: float | None = None) -> None:
        """Retune the breathing pace, keeping the breathing angle continuous."""
        self.model = repaced(self.model, breath_freq, self._t, coupling)

    def advance(self, to_t: float) -> list[BeatEvent]:
        """Emit all beats with timestamps in (current time, to_t]."""
        if to_t < self._t:
            raise ValueError(f"cannot advance backwards: {self._t} -> {to_t}")
        beats: list[BeatEvent] = []
        while self._t < to_t:
            chunk_end = min(self._t + _CHUNK_S, to_t)
            beats.extend(self._advance_chunk(chunk_end))
        return beats

    def _advance_chunk(self, to_t: float) -> list[BeatEvent]:
        span = to_t - self._t
        n = max(1, math.ceil(span / _INTEGRATION_STEP_S))
        grid = np.linspace(self._t, to_t, n + 1)
        hr = hr_at(self.model, grid)
        # Trapezoid rule on hr/60 gives cumulative beat count along the grid.
        increments = (hr[:-1] + hr[1:]) * (np.diff(grid) / 120.0)
        acc = self._acc + np.concatenate([[0.0], np.cumsum(increments)])
        acc_end = float(acc[-1])
        first = self._emitted + 1
        last = math.floor(acc_end)
        beats = []
        if last >= first:
            crossings = np.arange(first, last + 1, dtype=float)
            times = np.interp(crossings, acc, grid)
            beats = [BeatEvent(t=float(bt)) for bt in times]
            self._emitted = last
        self._t = to_t
        self._acc = acc_end
        return beats


def generate_beats(model: HeartModel, duration: float) -> list[BeatEvent]:
    """All beats of ``model`` in (0, duration]."""
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    return BeatGenerator(model).advance(duration)


def parse_model(descriptor: str) -> HeartModel:
    """Parse a ``synth:hr=70,breath=0.125,coupling=6,seed=1`` descriptor.

    Recognized keys: hr, breath, coupling, phase, jitter, seed.  ``coupling``
    may be omitted or set to ``auto`` to follow the pace tuning curve.
    Raises ValueError on anything malformed.
    """
    if not descriptor.startswith("synth:"):
        raise ValueError(f"not a synth descriptor: {descriptor!r}")
    body = descriptor[len("synth:"):]
    fields: dict[str, str] = {}
    for part in body.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"bad descriptor field {part!r} in {descriptor!r}")
        key, value = part.split("=", 1)
        fields[key.strip()] = value.strip()
    known = {"hr", "breath", "coupling", "phase", "jitter", "seed"}
    unknown = set(fields) - known
    if unknown:
        raise ValueError(f"unknown descriptor keys {sorted(unknown)} in {descriptor!r}")

    def num(key: str, default: float) -> float:
        try:
            return float(fields.get(key, default))
        except ValueError:
            raise ValueError(f"bad number for {key!r} in {descriptor!r}")

    breath = num("breath", 0.25)
    coupling_raw = fields.get("coupling", "auto")
    coupling = (
        coupling_for_pace(breath) if coupling_raw == "auto" else float(coupling_raw)
    )
    return HeartModel(
        breath_freq=breath,
        coupling=coupling,
        hr_base=num("hr", 70.0),
        phase=num("phase", 0.0),
        jitter=num("jitter", 0.2),
        seed=int(num("seed", 0)),
    )
