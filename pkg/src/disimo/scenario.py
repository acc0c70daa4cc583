"""Scenario-driven batch simulation: an in-process hub plus hosted devices.

A scenario file describes simulated users (id, color, heart source, and a
timeline of grasp / release / pace-change operations) plus a duration and
tick rate.  The runner wires one ``DeviceHostCore`` per user straight into
a ``HubCore`` (no sockets), steps a simulated clock, and records a merged
newline-JSON trace of every device action and every hub emission.  With
fixed seeds the trace is byte-identical across runs; the accelerate factor
only changes how fast the wall clock is allowed to advance.

Schema (JSON)::

    {
      "duration": 120,            // simulated seconds, > 0
      "tick_hz": 1,               // optional, default 1
      "users": [
        {
          "id": "ana",
          "color": [230, 60, 60],
          "source": "synth:hr=68,breath=0.4,seed=11",   // or "file:beats.txt"
          "events": [
            {"t": 5, "op": "grasp"},
            {"t": 7, "op": "set_pace", "value": 7.5},
            {"t": 60, "op": "release"}
          ]
        }
      ]
    }

Trace records (one JSON object per line)::

    {"t": ..., "device": ID, "control": OP, ...}      injected operation
    {"t": ..., "device": ID, "action": NAME, ...}     device action
    {"t": ..., "wire": {...}}                         hub broadcast (snapshot)
    {"t": ..., "wire": {"type": "invite"}, "to": ID}  invite delivery
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import heartsim, protocol
from .audio import GuideSpec, synthesize_guide, write_wav
from .device import DeviceConfig, action_record
from .host import DeviceHostCore
from .hrv import read_beats
from .hub import HubCore

SCENARIO_OPS = ("grasp", "release", "set_pace")

_OPERATOR_CONN = 0


class ScenarioError(ValueError):
    """A scenario file that violates the schema; message carries the path."""


@dataclass(frozen=True)
class UserOp:
    t: float
    op: str
    value: float | None = None


@dataclass(frozen=True)
class ScenarioUser:
    id: str
    color: tuple[int, int, int]
    source: str
    events: tuple[UserOp, ...] = ()


@dataclass(frozen=True)
class Scenario:
    duration: float
    users: tuple[ScenarioUser, ...]
    tick_hz: float = 1.0


def _fail(where: str, problem: str):
    raise ScenarioError(f"{where}: {problem}")


def _require_number(value, where: str, minimum=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(where, f"expected a number, got {value!r}")
    if minimum is not None and value <= minimum:
        _fail(where, f"must be > {minimum}, got {value!r}")
    return float(value)


def _require_color(value, where: str) -> tuple[int, int, int]:
    if (
        not isinstance(value, list)
        or len(value) != 3
        or any(not isinstance(c, int) or isinstance(c, bool) or not 0 <= c <= 255 for c in value)
    ):
        _fail(where, f"expected [r, g, b] ints in [0, 255], got {value!r}")
    return (value[0], value[1], value[2])


def parse_scenario(data, where: str = "scenario") -> Scenario:
    """Validate raw JSON data into a Scenario; diagnostics name the field."""
    if not isinstance(data, dict):
        _fail(where, "top level must be a JSON object")
    unknown = set(data) - {"duration", "tick_hz", "users"}
    if unknown:
        _fail(where, f"unknown fields {sorted(unknown)}")
    duration = _require_number(data.get("duration"), f"{where}.duration", minimum=0)
    tick_hz = _require_number(data.get("tick_hz", 1.0), f"{where}.tick_hz", minimum=0)
    raw_users = data.get("users")
    if not isinstance(raw_users, list):
        _fail(where + ".users", "expected a list")
    users = []
    seen_ids = set()
    for i, raw in enumerate(raw_users):
        u_where = f"{where}.users[{i}]"
        if not isinstance(raw, dict):
            _fail(u_where, "expected an object")
        unknown = set(raw) - {"id", "color", "source", "events"}
        if unknown:
            _fail(u_where, f"unknown fields {sorted(unknown)}")
        uid = raw.get("id")
        if not isinstance(uid, str) or not uid:
            _fail(f"{u_where}.id", f"expected a non-empty string, got {uid!r}")
        if uid in seen_ids:
            _fail(f"{u_where}.id", f"duplicate user id {uid!r}")
        seen_ids.add(uid)
        color = _require_color(raw.get("color"), f"{u_where}.color")
        source = raw.get("source")
        if not isinstance(source, str) or not source:
            _fail(f"{u_where}.source", "expected a source descriptor string")
        ops = []
        raw_events = raw.get("events", [])
        if not isinstance(raw_events, list):
            _fail(f"{u_where}.events", "expected a list")
        for j, raw_op in enumerate(raw_events):
            e_where = f"{u_where}.events[{j}]"
            if not isinstance(raw_op, dict):
                _fail(e_where, "expected an object")
            t = _require_number(raw_op.get("t"), f"{e_where}.t")
            if not 0 <= t <= duration:
                _fail(f"{e_where}.t", f"{t} outside [0, duration={duration}]")
            op = raw_op.get("op")
            if op not in SCENARIO_OPS:
                _fail(f"{e_where}.op", f"unknown op {op!r}, expected one of {SCENARIO_OPS}")
            value = None
            if op == "set_pace":
                value = _require_number(raw_op.get("value"), f"{e_where}.value", minimum=0)
            ops.append(UserOp(t=t, op=op, value=value))
        ops.sort(key=lambda o: o.t)
        users.append(
            ScenarioUser(id=uid, color=color, source=source, events=tuple(ops))
        )
    return Scenario(duration=duration, users=tuple(users), tick_hz=tick_hz)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")
    return parse_scenario(data, where=str(path))


def _build_source(descriptor: str, base_dir: Path):
    if descriptor.startswith("file:"):
        return read_beats(base_dir / descriptor[len("file:"):])
    return heartsim.parse_model(descriptor)


@dataclass
class ScenarioResult:
    records: list[dict] = field(default_factory=list)

    def jsonl(self) -> str:
        return "".join(
            json.dumps(rec, separators=(",", ":")) + "\n" for rec in self.records
        )

    def snapshots(self) -> list[dict]:
        return [
            {"t": rec["t"], **rec["wire"]}
            for rec in self.records
            if "wire" in rec and rec["wire"].get("type") == "snapshot"
        ]

    @property
    def final_snapshot(self) -> dict | None:
        snaps = self.snapshots()
        return snaps[-1] if snaps else None


def run_scenario(
    scenario: Scenario,
    accelerate: float = 1.0,
    base_dir: Path | None = None,
    wav_dir: Path | None = None,
) -> ScenarioResult:
    """Run the scenario on a simulated clock; returns the merged trace.

    ``accelerate`` >= 1 scales simulated-vs-wall time (it never changes the
    trace).  ``base_dir`` anchors relative ``file:`` sources; ``wav_dir``,
    when given, receives a synthesized ``guide.wav`` artifact.
    """
    if accelerate < 1.0:
        raise ValueError(f"accelerate must be >= 1, got {accelerate}")
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    result = ScenarioResult()
    hub = HubCore()
    hub.connect(_OPERATOR_CONN)

    hosts: dict[int, DeviceHostCore] = {}
    conn_of_user: dict[str, int] = {}

    def route(fx, t: float) -> None:
        snapshot_logged = False
        for conn_id, msg in fx.sends:
            kind = msg.get("type")
            if kind == "snapshot":
                if not snapshot_logged:
                    result.records.append({"t": t, "wire": msg})
                    snapshot_logged = True
            elif kind == "invite":
                target = hosts[conn_id].device_id
                result.records.append({"t": t, "wire": msg, "to": target})
            elif kind == "error":
                result.records.append({"t": t, "wire": msg})
            if conn_id in hosts:
                hosts[conn_id].on_wire(msg)

    for index, user in enumerate(scenario.users):
        conn_id = index + 1
        source = _build_source(user.source, base_dir)
        host = DeviceHostCore(
            device_id=user.id,
            color=user.color,
            source=source,
            config=DeviceConfig(user_color=user.color),
        )
        hosts[conn_id] = host
        conn_of_user[user.id] = conn_id
        hub.connect(conn_id)
        route(hub.handle_message(conn_id, host.hello()), 0.0)

    pending_ops = [
        (op.t, index, op)
        for index, user in enumerate(scenario.users)
        for op in user.events
    ]
    pending_ops.sort(key=lambda item: (item[0], item[1]))
    next_op = 0

    n_ticks = int(scenario.duration * scenario.tick_hz)
    started = time.perf_counter()
    for k in range(1, n_ticks + 1):
        t = k / scenario.tick_hz
        while next_op < len(pending_ops) and pending_ops[next_op][0] <= t:
            _, index, op = pending_ops[next_op]
            next_op += 1
            user = scenario.users[index]
            record = {"t": t, "device": user.id, "control": op.op}
            if op.value is not None:
                record["value"] = op.value
            result.records.append(record)
            msg = protocol.control_msg(user.id, op.op, op.value)
            route(hub.handle_message(_OPERATOR_CONN, msg), t)

        for index in range(len(scenario.users)):
            conn_id = index + 1
            host = hosts[conn_id]
            before = len(host.trace)
            outbound = host.tick(t)
            for at, action in host.trace[before:]:
                record = action_record(at, action)
                result.records.append(
                    {"t": record.pop("t"), "device": host.device_id, **record}
                )
            for msg in outbound:
                route(hub.handle_message(conn_id, msg), t)

        if accelerate != float("inf"):
            deadline = t / accelerate
            lag = deadline - (time.perf_counter() - started)
            if lag > 0:
                time.sleep(lag)

    if wav_dir is not None:
        wav_dir = Path(wav_dir)
        wav_dir.mkdir(parents=True, exist_ok=True)
        spec = GuideSpec()
        write_wav(synthesize_guide(spec), spec.sample_rate, wav_dir / "guide.wav")

    return result
