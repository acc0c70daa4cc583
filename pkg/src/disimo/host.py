"""The device host: runs one device's sensing-to-actuation loop against a hub.

``DeviceHostCore`` is transport-free and clocked from outside: every tick
it advances its heart source, feeds fresh beats through the HRV pipeline
into the controller, and translates the resulting actions to wire messages
(``PublishStatus`` becomes a ``status`` message; everything, plus the mode,
goes out as a ``report`` for whoever watches this device).  Incoming wire
messages are queued and applied as device events on the next tick.

Time is simulated seconds; the live CLI paces ticks with the wall clock,
the scenario runner paces them as fast as the accelerate factor allows.
"""

from __future__ import annotations

import asyncio
import logging
from typing import Sequence

from . import protocol
from .device import (
    Action,
    DeviceConfig,
    DeviceEvent,
    Grasp,
    Invite,
    PublishStatus,
    Release,
    Snapshot,
    Tick,
    action_record,
    hrv_event,
    initial_state,
    merge_events,
    step,
)
from .heartsim import BeatGenerator, HeartModel
from .hrv import BeatEvent, BeatIngester

logger = logging.getLogger(__name__)


class ConnectivityError(RuntimeError):
    """Hub unreachable after the configured retries."""


class _ReplaySource:
    """Beat playback from a prerecorded stream (ignores pace changes)."""

    def __init__(self, beats: Sequence[BeatEvent]):
        self._beats = list(beats)
        self._pos = 0

    def advance(self, to_t: float) -> list[BeatEvent]:
        out = []
        while self._pos < len(self._beats) and self._beats[self._pos].t <= to_t:
            out.append(self._beats[self._pos])
            self._pos += 1
        return out

    def set_pace(self, breath_freq: float) -> None:
        logger.warning("replay source cannot change pace; ignoring")


class DeviceHostCore:
    """One hosted device: heart source + HRV pipeline + controller."""

    def __init__(
        self,
        device_id: str,
        color: tuple[int, int, int],
        source: HeartModel | Sequence[BeatEvent],
        config: DeviceConfig | None = None,
        start_t: float = 0.0,
    ):
        self.device_id = device_id
        self.color = color
        self.config = config or DeviceConfig(user_color=color)
        self.source = (
            BeatGenerator(source, start_t=start_t)
            if isinstance(source, HeartModel)
            else _ReplaySource(source)
        )
        self.ingester = BeatIngester(window=self.config.hrv_window)
        self.state = initial_state(start_t)
        self.now = start_t
        self.trace: list[tuple[float, Action]] = []
        self._pending_events: list[DeviceEvent] = []
        self._pending_paces: list[float] = []
        self._reported_mode: str | None = None

    @property
    def mode(self) -> str:
        return self.state.mode.value

    def hello(self) -> dict:
        return protocol.hello_msg(self.device_id, self.color)

    def on_wire(self, msg: dict) -> None:
        """Queue a hub message for the next tick."""
        kind = msg.get("type")
        if kind == "snapshot":
            snap = protocol.snapshot_from_msg(msg)
            self._pending_events.append(Snapshot(t=self.now, snapshot=snap))
        elif kind == "invite":
            self._pending_events.append(Invite(t=self.now))
        elif kind == "control":
            self._on_control(msg)
        elif kind == "error":
            logger.warning(
                "%s: hub error %s: %s", self.device_id, msg.get("code"), msg.get("msg")
            )
        else:
            logger.debug("%s: ignoring message type %r", self.device_id, kind)

    def _on_control(self, msg: dict) -> None:
        op = msg.get("op")
        if op == "grasp":
            self._pending_events.append(Grasp(t=self.now))
        elif op == "release":
            self._pending_events.append(Release(t=self.now))
        elif op == "set_pace":
            pace = float(msg.get("value", 0))
            if pace > 0:
                self._pending_paces.append(pace / 60.0)  # breaths/min -> Hz
        else:
            logger.debug("%s: ignoring control op %r", self.device_id, op)

    def tick(self, t: float) -> list[dict]:
        """Advance simulated time to ``t``; returns outbound wire messages."""
        for breath_freq in self._pending_paces:
            self.source.set_pace(breath_freq)
        self._pending_paces.clear()

        beats = self.source.advance(t)
        hrv_events = []
        for beat in beats:
            sample = self.ingester.add_beat(beat)
            if sample is not None:
                hrv_events.append(hrv_event(sample, self.config))

        # Pending events were stamped at the tick of their arrival, which is
        # <= t, so they sort ahead of this tick's fresh HRV samples.
        external = list(self._pending_events)
        self._pending_events.clear()

        outbound: list[dict] = []
        tick_actions: list[dict] = []
        for event in merge_events([Tick(t=t)], hrv_events, external):
            self.state, actions = step(self.state, event, self.config)
            for action in actions:
                self.trace.append((event.t, action))
                tick_actions.append(action_record(event.t, action))
                if isinstance(action, PublishStatus):
                    outbound.append(
                        protocol.status_msg(
                            self.device_id, action.active, action.coherent
                        )
                    )
        self.now = t

        if tick_actions or self.mode != self._reported_mode:
            self._reported_mode = self.mode
            outbound.append(
                protocol.report_msg(self.device_id, t, self.mode, tick_actions)
            )
        return outbound


async def run_host(
    core: DeviceHostCore,
    hub_host: str,
    hub_port: int,
    tick_hz: float = 1.0,
    retries: int = 4,
    backoff_s: float = 0.25,
) -> None:
    """Live client: connect (bounded retries), then tick at wall-clock pace."""
    reader = writer = None
    for attempt in range(retries):
        try:
            reader, writer = await asyncio.open_connection(hub_host, hub_port)
            break
        except OSError as exc:
            logger.warning(
                "hub %s:%s unreachable (%s), retry %d/%d",
                hub_host, hub_port, exc, attempt + 1, retries,
            )
            await asyncio.sleep(backoff_s * 2**attempt)
    if reader is None:
        raise ConnectivityError(f"cannot reach hub at {hub_host}:{hub_port}")

    async def send(msg: dict) -> None:
        writer.write(protocol.encode(msg).encode("utf-8"))
        await writer.drain()

    await send(core.hello())

    async def read_loop() -> None:
        while True:
            line = await reader.readline()
            if not line:
                raise ConnectionResetError("hub closed the connection")
            if line.strip():
                core.on_wire(protocol.parse_line(line))

    async def tick_loop() -> None:
        dt = 1.0 / tick_hz
        while True:
            await asyncio.sleep(dt)
            for msg in core.tick(core.now + dt):
                await send(msg)

    read_task = asyncio.create_task(read_loop())
    tick_task = asyncio.create_task(tick_loop())
    try:
        done, _ = await asyncio.wait(
            [read_task, tick_task], return_when=asyncio.FIRST_EXCEPTION
        )
        for task in done:
            exc = task.exception()
            if exc is not None:
                raise exc
    finally:
        read_task.cancel()
        tick_task.cancel()
        writer.close()
