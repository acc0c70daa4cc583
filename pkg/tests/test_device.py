"""Controller tests: every transition rule, timer behavior, composition.

End-to-end checks drive the composed pipeline (synthetic beats -> HRV ->
classify -> step) and assert against the behavior the rules promise.
"""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disimo import heartsim
from disimo.cluster import SessionSnapshot
from disimo.device import (
    DeviceConfig,
    FadeAudio,
    FanOff,
    FanOn,
    Grasp,
    Hrv,
    Invite,
    Mode,
    PublishStatus,
    PulseLight,
    Release,
    SetLight,
    Snapshot,
    StartAudio,
    StopAudio,
    Tick,
    action_record,
    hrv_event,
    initial_state,
    merge_events,
    run_device,
    step,
    trace_to_jsonl,
)
from disimo.hrv import HrvClass, HrvSample

CFG = DeviceConfig()


def low(t):
    return Hrv(t=t, sample=HrvSample(t=t, range=1.0, defined=True), cls=HrvClass.LOW)


def mid(t):
    return Hrv(t=t, sample=HrvSample(t=t, range=3.0, defined=True), cls=HrvClass.MID)


def high(t):
    return Hrv(t=t, sample=HrvSample(t=t, range=9.0, defined=True), cls=HrvClass.HIGH)


def undefined(t):
    return Hrv(t=t, sample=HrvSample(t=t, range=0.0, defined=False), cls=None)


def fold(events, config=CFG, state=None):
    state = state or initial_state()
    trace = []
    for event in events:
        state, actions = step(state, event, config)
        trace.extend((event.t, a) for a in actions)
    return state, trace


def names(trace):
    return [(t, type(a).__name__) for t, a in trace]


# --- rule (a): sustained low HRV triggers the reminder -------------------------


def test_reminder_fires_after_ten_minutes_of_low():
    events = [low(float(t)) for t in range(0, 700)]
    state, trace = fold(events)
    starts = [t for t, a in trace if isinstance(a, StartAudio)]
    assert starts and starts[0] == 600.0
    assert state.mode in (Mode.REMINDING, Mode.SNOOZED)


def test_no_reminder_before_ten_minutes():
    events = [low(float(t)) for t in range(0, 600)]  # last event at 599
    state, trace = fold(events)
    assert trace == []
    assert state.mode is Mode.IDLE


def test_mid_hrv_never_triggers_anything():
    events = [mid(float(t)) for t in range(0, 1500)]
    state, trace = fold(events)
    assert trace == []
    assert state.mode is Mode.IDLE


def test_single_mid_sample_resets_the_low_timer():
    events = [low(float(t)) for t in range(0, 300)]
    events += [mid(300.0)]
    events += [low(float(t)) for t in range(301, 1000)]
    _, trace = fold(events)
    starts = [t for t, a in trace if isinstance(a, StartAudio)]
    assert starts and starts[0] == 901.0  # 301 + 600


def test_undefined_gap_resets_the_low_timer():
    events = [low(float(t)) for t in range(0, 300)]
    events += [undefined(300.0)]
    events += [low(float(t)) for t in range(301, 1000)]
    _, trace = fold(events)
    starts = [t for t, a in trace if isinstance(a, StartAudio)]
    assert starts and starts[0] == 901.0


def test_undefined_samples_cause_no_transition():
    events = [undefined(float(t)) for t in range(0, 1200)]
    state, trace = fold(events)
    assert trace == []
    assert state.mode is Mode.IDLE


def test_ticks_alone_can_fire_the_lazy_timer():
    events = [low(0.0)] + [Tick(float(t)) for t in range(1, 700)]
    _, trace = fold(events)
    starts = [t for t, a in trace if isinstance(a, StartAudio)]
    assert starts and starts[0] == 600.0


# --- rules (b)/(c): unattended guide end and snoozed resume ----------------------


def test_unattended_guide_stops_after_guide_length():
    events = [low(float(t)) for t in range(0, 601)]
    events += [Tick(float(t)) for t in range(601, 700)]
    _, trace = fold(events)
    stops = [t for t, a in trace if isinstance(a, StopAudio)]
    assert stops and stops[0] == 600.0 + CFG.guide_seconds == 632.0


def test_snoozed_resumes_while_low_persists():
    events = [low(float(t)) for t in range(0, 800)]
    _, trace = fold(events)
    starts = [t for t, a in trace if isinstance(a, StartAudio)]
    stops = [t for t, a in trace if isinstance(a, StopAudio)]
    assert starts[0] == 600.0 and stops[0] == 632.0
    assert starts[1] == 632.0 + CFG.snooze == 692.0


def test_snoozed_returns_to_idle_on_improvement():
    events = [low(float(t)) for t in range(0, 633)]  # reminder + snooze entry
    state, _ = fold(events)
    assert state.mode is Mode.SNOOZED
    state, actions = step(state, mid(633.0), CFG)
    assert state.mode is Mode.IDLE
    assert actions == []


# --- rule (d): grasp ---------------------------------------------------------------


@pytest.mark.parametrize("prelude", [[], [low(float(t)) for t in range(0, 601)]])
def test_grasp_activates_from_idle_and_reminding(prelude):
    state, _ = fold(prelude)
    state, actions = step(state, Grasp(t=650.0), CFG)
    assert state.mode is Mode.ACTIVE
    assert actions == [
        FadeAudio(fade_s=CFG.fade),
        StartAudio(cycles=CFG.guide_cycles),
        SetLight(color=CFG.user_color, brightness=1.0),
        PublishStatus(active=True, coherent=False),
    ]


def test_second_grasp_does_not_retrigger_the_guide():
    state, _ = fold([Grasp(0.0)])
    state, actions = step(state, Grasp(t=5.0), CFG)
    assert state.mode is Mode.ACTIVE
    assert actions == []


# --- rules (e)/(f): coherence ----------------------------------------------------


def test_high_hrv_while_active_starts_the_fan():
    state, _ = fold([Grasp(0.0)])
    state, actions = step(state, high(10.0), CFG)
    assert state.mode is Mode.COHERENT
    assert actions == [FanOn(), PublishStatus(active=True, coherent=True)]


def test_dropping_below_high_stops_the_fan():
    state, _ = fold([Grasp(0.0), high(10.0)])
    state, actions = step(state, mid(20.0), CFG)
    assert state.mode is Mode.ACTIVE
    assert actions == [FanOff(), PublishStatus(active=True, coherent=False)]


def test_undefined_sample_keeps_coherent():
    state, _ = fold([Grasp(0.0), high(10.0)])
    state, actions = step(state, undefined(20.0), CFG)
    assert state.mode is Mode.COHERENT
    assert actions == []


def test_high_while_idle_does_nothing():
    state, actions = step(initial_state(), high(10.0), CFG)
    assert state.mode is Mode.IDLE
    assert actions == []


# --- rule (g): release -------------------------------------------------------------


def test_release_from_coherent_shuts_everything_down():
    state, _ = fold([Grasp(0.0), high(10.0)])
    state, actions = step(state, Release(t=30.0), CFG)
    assert state.mode is Mode.IDLE
    assert actions == [
        FanOff(),
        StopAudio(),
        SetLight(color=(0, 0, 0), brightness=0.0),
        PublishStatus(active=False, coherent=False),
    ]


def test_release_from_active_emits_no_fan_off():
    # The fan never ran, and FanOn/FanOff must strictly alternate.
    state, _ = fold([Grasp(0.0)])
    state, actions = step(state, Release(t=30.0), CFG)
    assert state.mode is Mode.IDLE
    assert actions == [
        StopAudio(),
        SetLight(color=(0, 0, 0), brightness=0.0),
        PublishStatus(active=False, coherent=False),
    ]


def test_release_while_idle_is_ignored():
    state, actions = step(initial_state(), Release(t=1.0), CFG)
    assert state.mode is Mode.IDLE and actions == []


# --- rules (h)/(i): invite and cluster feedback -------------------------------------


def test_invite_pulses_only_in_idle():
    state, actions = step(initial_state(), Invite(t=1.0), CFG)
    assert actions == [PulseLight()]
    state, _ = fold([Grasp(0.0)])
    state, actions = step(state, Invite(t=1.0), CFG)
    assert actions == []


def test_snapshot_overrides_light_while_grasped():
    snap = SessionSnapshot(color=(10, 20, 30), brightness=0.5, active_count=2, member_count=3)
    state, _ = fold([Grasp(0.0)])
    state, actions = step(state, Snapshot(t=2.0, snapshot=snap), CFG)
    assert actions == [SetLight(color=(10, 20, 30), brightness=0.5)]


def test_snapshot_ignored_when_not_grasped():
    snap = SessionSnapshot(color=(10, 20, 30), brightness=0.5, active_count=2, member_count=3)
    state, actions = step(initial_state(), Snapshot(t=2.0, snapshot=snap), CFG)
    assert actions == []


# --- step mechanics ------------------------------------------------------------------


def test_out_of_order_events_rejected():
    state, _ = step(initial_state(), Tick(10.0), CFG)
    with pytest.raises(ValueError):
        step(state, Tick(9.0), CFG)


def test_step_is_pure():
    state = initial_state()
    event = low(1.0)
    assert step(state, event, CFG) == step(state, event, CFG)


def test_every_mode_event_pair_is_handled():
    mode_states = {
        Mode.IDLE: initial_state(),
        Mode.REMINDING: fold([low(float(t)) for t in range(0, 601)])[0],
        Mode.SNOOZED: fold([low(float(t)) for t in range(0, 633)])[0],
        Mode.ACTIVE: fold([Grasp(0.0)])[0],
        Mode.COHERENT: fold([Grasp(0.0), high(1.0)])[0],
    }
    snap = SessionSnapshot(color=(1, 2, 3), brightness=0.0, active_count=0, member_count=1)
    for mode, state in mode_states.items():
        assert state.mode is mode
        t = state.last_t + 1.0
        events = [
            Tick(t), low(t), mid(t), high(t), undefined(t),
            Grasp(t), Release(t), Snapshot(t, snap), Invite(t),
        ]
        for event in events:
            new_state, actions = step(state, event, CFG)
            assert new_state.mode in Mode
            assert isinstance(actions, list)


def test_config_validation():
    with pytest.raises(ValueError):
        DeviceConfig(low_trigger=0.0)
    with pytest.raises(ValueError):
        DeviceConfig(user_color=(300, 0, 0))
    with pytest.raises(ValueError):
        DeviceConfig(guide_cycles=0)


# --- action stream properties ---------------------------------------------------------

event_kinds = st.sampled_from(["tick", "low", "mid", "high", "undef", "grasp", "release", "invite"])


def build_event(kind, t):
    return {
        "tick": Tick(t),
        "low": low(t),
        "mid": mid(t),
        "high": high(t),
        "undef": undefined(t),
        "grasp": Grasp(t),
        "release": Release(t),
        "invite": Invite(t),
    }[kind]


@given(kinds=st.lists(event_kinds, min_size=1, max_size=300))
@settings(max_examples=200, deadline=None)
def test_audio_bracketing_and_fan_alternation(kinds):
    # Compress time so low-trigger reminders occur within short random runs.
    config = DeviceConfig(low_trigger=5.0, snooze=3.0, guide_cycles=1)
    events = [build_event(kind, float(i)) for i, kind in enumerate(kinds)]
    _, trace = fold(events, config=config)

    audio_open = False
    fan_on = False
    for _, action in trace:
        if isinstance(action, StartAudio):
            # Between two StartAudio there must be a stop (StopAudio or the
            # grasp-time FadeAudio that precedes a restart).
            assert not audio_open
            audio_open = True
        elif isinstance(action, (StopAudio, FadeAudio)):
            audio_open = False
        elif isinstance(action, FanOn):
            assert not fan_on
            fan_on = True
        elif isinstance(action, FanOff):
            assert fan_on
            fan_on = False


@given(kinds=st.lists(event_kinds, min_size=1, max_size=200))
@settings(max_examples=100, deadline=None)
def test_actions_never_reference_other_members(kinds):
    config = DeviceConfig(low_trigger=5.0, snooze=3.0, guide_cycles=1)
    events = [build_event(kind, float(i)) for i, kind in enumerate(kinds)]
    _, trace = fold(events, config=config)
    allowed = {
        "t", "action", "cycles", "fade_s", "color", "brightness",
        "active", "coherent",
    }
    for t, action in trace:
        record = action_record(t, action)
        assert set(record) <= allowed


# --- run_device: the composed pipeline -------------------------------------------------


def test_low_coupling_stream_reminds_once_then_stops():
    model = heartsim.HeartModel(breath_freq=0.4, coupling=0.5, seed=8)
    beats = heartsim.generate_beats(model, 700.0)
    ticks = [Tick(float(t)) for t in range(0, 701)]
    trace = run_device(beats, ticks, CFG)
    starts = [t for t, a in trace if isinstance(a, StartAudio)]
    early = [t for t in starts if t <= 650.0]
    assert len(early) == 1
    assert 600.0 <= early[0] <= 620.0  # window fill delays the first Low sample
    stops = [t for t, a in trace if isinstance(a, StopAudio)]
    assert stops and 32.0 <= stops[0] - early[0] <= 33.0
    # Reminders are local: nothing is published to the session.
    assert not any(isinstance(a, PublishStatus) for _, a in trace)


def test_grasp_then_paced_breathing_reaches_coherence():
    gen = heartsim.BeatGenerator(heartsim.for_pace(0.4, seed=8))
    beats = gen.advance(650.0)
    gen.set_pace(0.125)
    beats += gen.advance(750.0)
    ticks = [Tick(float(t)) for t in range(0, 751)]
    trace = run_device(beats, merge_events(ticks, [Grasp(650.0)]), CFG)
    kinds = names(trace)
    t_fade = next(t for t, n in kinds if n == "FadeAudio")
    t_start = next(t for t, n in kinds if n == "StartAudio" and t >= 650.0)
    t_fan = next((t for t, n in kinds if n == "FanOn"), None)
    assert t_fade == 650.0 and t_start == 650.0
    assert t_fan is not None and t_fan > 650.0


def test_empty_streams_give_empty_trace():
    assert run_device([], [], CFG) == []


# --- trace serialization -----------------------------------------------------------


def test_trace_jsonl_golden():
    state, trace = fold([Grasp(1.5), high(2.0)])
    text = trace_to_jsonl(trace)
    assert text == (
        '{"t":1.5,"action":"FadeAudio","fade_s":2.0}\n'
        '{"t":1.5,"action":"StartAudio","cycles":4}\n'
        '{"t":1.5,"action":"SetLight","color":[120,180,255],"brightness":1.0}\n'
        '{"t":1.5,"action":"PublishStatus","active":true,"coherent":false}\n'
        '{"t":2.0,"action":"FanOn"}\n'
        '{"t":2.0,"action":"PublishStatus","active":true,"coherent":true}\n'
    )
    for line in text.splitlines():
        record = json.loads(line)
        assert {"t", "action"} <= set(record)


def test_merge_events_tie_break_order():
    snap = SessionSnapshot(color=(0, 0, 0), brightness=0.0, active_count=0, member_count=0)
    events = merge_events(
        [Invite(1.0)], [Tick(1.0)], [Grasp(1.0)], [low(1.0)],
        [Release(1.0)], [Snapshot(1.0, snap)],
    )
    assert [type(e).__name__ for e in events] == [
        "Tick", "Hrv", "Grasp", "Release", "Snapshot", "Invite",
    ]


def test_hrv_event_uses_config_thresholds():
    config = DeviceConfig(low_threshold=1.0, high_threshold=2.0)
    assert hrv_event(HrvSample(t=0.0, range=3.0, defined=True), config).cls is HrvClass.HIGH
    assert hrv_event(HrvSample(t=0.0, range=0.0, defined=False), config).cls is None
