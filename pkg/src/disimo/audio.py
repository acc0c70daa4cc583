"""The breathing guide: pink noise amplitude-modulated by a breath cycle.

One cycle is a raised-cosine swell over the inhale, a raised-cosine decay
over the exhale, then silence for the pause; the default cycle is 8 s
(3 1/3 s in, 3 1/3 s out, 1 1/3 s pause = 7.5 breaths/min), with the exhale
phase, pause included, longer than the inhale.  The carrier is 16-row
Voss-McCartney pink noise, seed-deterministic.
"""

from __future__ import annotations

import logging
import struct
import wave
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE = 44100
DEFAULT_CYCLES = 4
DEFAULT_PEAK_GAIN = 0.3
FADE_OUT_S = 2.0


@dataclass(frozen=True)
class BreathPattern:
    """Durations of the inhale / exhale / pause phases, in seconds."""

    t_in: float = 10.0 / 3.0
    t_out: float = 10.0 / 3.0
    t_pause: float = 4.0 / 3.0

    def __post_init__(self):
        for name in ("t_in", "t_out", "t_pause"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.t_out + self.t_pause <= self.t_in:
            raise ValueError("exhale phase (incl. pause) must exceed the inhale")

    @property
    def cycle(self) -> float:
        return self.t_in + self.t_out + self.t_pause

    @property
    def breaths_per_minute(self) -> float:
        return 60.0 / self.cycle


def envelope(pattern: BreathPattern, t):
    """Guide amplitude in [0, 1] at time ``t`` (scalar or array), t >= 0.

    Raised cosine 0->1 over the inhale, 1->0 over the exhale, exactly 0
    during the pause; continuous everywhere and periodic in the cycle.
    """
    t_arr = np.asarray(t, dtype=float)
    tau = np.mod(t_arr, pattern.cycle)
    rising = tau < pattern.t_in
    falling = ~rising & (tau < pattern.t_in + pattern.t_out)
    out = np.zeros_like(tau)
    out[rising] = 0.5 * (1.0 - np.cos(np.pi * tau[rising] / pattern.t_in))
    out[falling] = 0.5 * (
        1.0 + np.cos(np.pi * (tau[falling] - pattern.t_in) / pattern.t_out)
    )
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


class PinkNoise:
    """Voss-McCartney pink noise generator (16 rows).

    Row k holds a uniform [-1, 1] value refreshed every 2^(k+1) samples; the
    output is the row sum scaled by 1/16, so the peak never exceeds 1.
    Identical seeds produce identical sample sequences, and consecutive
    calls continue the same stream.  Single-owner state; use one instance
    per stream.
    """

    ROWS = 16

    def __init__(self, seed: int = 0):
        self.seed = seed
        children = np.random.SeedSequence(seed).spawn(self.ROWS + 1)
        self._row_rng = [
            np.random.Generator(np.random.PCG64(c)) for c in children[: self.ROWS]
        ]
        init = np.random.Generator(np.random.PCG64(children[self.ROWS]))
        self._rows = init.uniform(-1.0, 1.0, self.ROWS)
        self._counter = 0

    def samples(self, n: int) -> np.ndarray:
        """The next ``n`` samples, floats in [-1, 1]."""
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        total = np.zeros(n)
        c = self._counter
        for k in range(self.ROWS):
            period = 1 << (k + 1)
            first = ((1 << k) - c - 1) % period
            if first >= n:
                total += self._rows[k]
                continue
            updates = np.arange(first, n, period)
            vals = self._row_rng[k].uniform(-1.0, 1.0, len(updates))
            run_lengths = np.diff(np.concatenate([[0], updates, [n]]))
            total += np.repeat(np.concatenate([[self._rows[k]], vals]), run_lengths)
            self._rows[k] = vals[-1]
        self._counter = c + n
        return total / self.ROWS


@dataclass(frozen=True)
class GuideSpec:
    """Parameters of one synthesized guide clip.

    The default is 4 full cycles of the 8 s pattern (32 s).  The guide is a
    finite clip, not a loop: it plays once per trigger.
    """

    pattern: BreathPattern = field(default_factory=BreathPattern)
    cycles: int = DEFAULT_CYCLES
    sample_rate: int = DEFAULT_SAMPLE_RATE
    peak_gain: float = DEFAULT_PEAK_GAIN
    seed: int = 0

    def __post_init__(self):
        if self.cycles < 1:
            raise ValueError(f"cycles must be >= 1, got {self.cycles}")
        if self.sample_rate < 1:
            raise ValueError(f"sample_rate must be >= 1, got {self.sample_rate}")
        if not 0.0 <= self.peak_gain <= 1.0:
            raise ValueError(f"peak_gain must be in [0, 1], got {self.peak_gain}")

    @property
    def duration(self) -> float:
        return self.cycles * self.pattern.cycle

    @property
    def n_samples(self) -> int:
        return round(self.duration * self.sample_rate)


def synthesize_guide(spec: GuideSpec) -> np.ndarray:
    """Mono float PCM of the guide: peak_gain * envelope * pink noise."""
    n = spec.n_samples
    t = np.arange(n) / spec.sample_rate
    env = envelope(spec.pattern, t)
    noise = PinkNoise(spec.seed).samples(n)
    return spec.peak_gain * env * noise


def apply_fade_out(
    buffer: np.ndarray, sample_rate: int, fade_s: float = FADE_OUT_S
) -> np.ndarray:
    """Copy of ``buffer`` with a linear gain ramp to 0 over its last ``fade_s``."""
    if fade_s <= 0:
        raise ValueError(f"fade_s must be positive, got {fade_s}")
    out = np.array(buffer, dtype=float)
    n_fade = min(len(out), int(round(fade_s * sample_rate)))
    if n_fade:
        out[-n_fade:] *= np.linspace(1.0, 0.0, n_fade + 1)[1:]
    return out


def write_wav(buffer: np.ndarray, sample_rate: int, path) -> None:
    """Write mono 16-bit signed little-endian PCM (standard 44-byte header).

    Samples are expected in [-1, 1]; anything outside is clipped with a
    warning.  Values map to int16 as round(s * 32767).
    """
    data = np.asarray(buffer, dtype=float)
    clipped = np.count_nonzero((data < -1.0) | (data > 1.0))
    if clipped:
        logger.warning("clipping %d out-of-range samples in %s", clipped, path)
        data = np.clip(data, -1.0, 1.0)
    ints = np.round(data * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sample_rate)
        wav.writeframes(ints.tobytes())


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read back a mono 16-bit WAV as (int16 array, sample_rate)."""
    with wave.open(str(path), "rb") as wav:
        if wav.getnchannels() != 1 or wav.getsampwidth() != 2:
            raise ValueError(f"{path}: expected mono 16-bit PCM")
        rate = wav.getframerate()
        raw = wav.readframes(wav.getnframes())
    count = len(raw) // 2
    return np.array(struct.unpack(f"<{count}h", raw), dtype=np.int16), rate
