"""Dišimo: an ambient, shareable heart-rate-variability biofeedback system.

Simulator and networked runtime: HRV estimation from beat streams
(``hrv``), synthetic hearts with respiratory sinus arrhythmia
(``heartsim``), the paced-breathing audio guide (``audio``), the device
state machine (``device``), shared-session aggregation (``cluster``), and
the hub / device-host / scenario runtime (``hub``, ``host``, ``scenario``).
"""

from .audio import BreathPattern, GuideSpec, PinkNoise, envelope, synthesize_guide, write_wav
from .cluster import MemberStatus, Session, SessionSnapshot, brightness, mix_colors
from .device import (
    DeviceConfig,
    DeviceState,
    Mode,
    initial_state,
    run_device,
    step,
)
from .heartsim import BeatGenerator, HeartModel, coupling_for_pace, generate_beats, hr_at
from .hrv import (
    BeatEvent,
    BeatIngester,
    HrSample,
    HrvClass,
    HrvSample,
    classify,
    hrv_range,
    instantaneous_hr,
)

__version__ = "0.1.0"

__all__ = [
    "BeatEvent",
    "BeatGenerator",
    "BeatIngester",
    "BreathPattern",
    "DeviceConfig",
    "DeviceState",
    "GuideSpec",
    "HeartModel",
    "HrSample",
    "HrvClass",
    "HrvSample",
    "MemberStatus",
    "Mode",
    "PinkNoise",
    "Session",
    "SessionSnapshot",
    "brightness",
    "classify",
    "coupling_for_pace",
    "envelope",
    "generate_beats",
    "hr_at",
    "hrv_range",
    "initial_state",
    "instantaneous_hr",
    "mix_colors",
    "run_device",
    "step",
    "synthesize_guide",
    "write_wav",
]
