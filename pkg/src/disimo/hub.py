"""The session hub: one shared relaxation session served over TCP and WebSocket.

``HubCore`` is the transport-free heart: it maps inbound wire messages to
session mutations and outbound sends, one call at a time.  All of a
session's messages are processed in arrival order (the async transports
funnel every connection through a single dispatch queue), so the broadcast
snapshot stream is always explainable by some total order of receipts.

Routing rules:
  * ``snapshot`` broadcasts go to every open connection (they carry no
    identity, so watchers and members alike may see them).
  * ``invite`` goes to the device connections of all other members when a
    member turns active; the broadcast deliberately omits who initiated it.
  * ``control`` messages are relayed to the connection hosting the target
    device (``watch`` and ``set_color`` are handled by the hub itself).
  * ``report`` feeds (a device's own mode/actions) are relayed only to
    connections that sent ``control {op: "watch"}`` for that device.
"""

from __future__ import annotations

import asyncio
import itertools
import logging
from dataclasses import dataclass, field

from . import protocol
from .cluster import MemberStatus, Session, UnknownMemberError
from .protocol import (
    ERR_BAD_MSG,
    ERR_DUP_ID,
    ERR_NOT_MEMBER,
    ERR_UNKNOWN_TYPE,
    ProtocolError,
)

logger = logging.getLogger(__name__)


@dataclass
class Effects:
    """What the transport layer must do after one core call."""

    sends: list[tuple[int, dict]] = field(default_factory=list)
    closes: list[int] = field(default_factory=list)

    def send(self, conn_id: int, msg: dict) -> None:
        self.sends.append((conn_id, msg))


class HubCore:
    """Single-session hub logic; the caller serializes all calls."""

    def __init__(self):
        self.session = Session()
        self._conns: set[int] = set()
        self._conn_device: dict[int, str] = {}
        self._device_conn: dict[str, int] = {}
        self._watchers: dict[str, list[int]] = {}

    def connect(self, conn_id: int) -> Effects:
        self._conns.add(conn_id)
        return Effects()

    def disconnect(self, conn_id: int) -> Effects:
        """Connection gone: implicit bye for its device, drop its watches."""
        fx = Effects()
        device = self._conn_device.pop(conn_id, None)
        if device is not None:
            self._device_conn.pop(device, None)
            self._broadcast_snapshot(fx, self.session.remove(device))
        for watch_list in self._watchers.values():
            if conn_id in watch_list:
                watch_list.remove(conn_id)
        self._conns.discard(conn_id)
        return fx

    def handle_line(self, conn_id: int, line: str | bytes) -> Effects:
        """Process one wire line; fault replies never tear the session down."""
        try:
            msg = protocol.parse_line(line)
        except ProtocolError as exc:
            fx = Effects()
            fx.send(conn_id, protocol.error_msg(exc.code, exc.msg))
            return fx
        return self.handle_message(conn_id, msg)

    def handle_message(self, conn_id: int, msg: dict) -> Effects:
        fx = Effects()
        try:
            self._dispatch(conn_id, msg, fx)
        except ProtocolError as exc:
            fx.send(conn_id, protocol.error_msg(exc.code, exc.msg))
        return fx

    # --- message handlers ---------------------------------------------------

    def _dispatch(self, conn_id: int, msg: dict, fx: Effects) -> None:
        kind = msg["type"]
        if kind == "hello":
            self._on_hello(conn_id, msg, fx)
        elif kind == "status":
            self._on_status(conn_id, msg, fx)
        elif kind == "bye":
            self._on_bye(conn_id, msg, fx)
        elif kind == "control":
            self._on_control(conn_id, msg, fx)
        elif kind == "report":
            self._on_report(conn_id, msg, fx)
        else:
            raise ProtocolError(ERR_UNKNOWN_TYPE, f"unknown message type {kind!r}")

    def _on_hello(self, conn_id: int, msg: dict, fx: Effects) -> None:
        device = protocol.field_str(msg, "device")
        color = protocol.field_color(msg)
        if device in self._device_conn:
            fx.send(
                conn_id,
                protocol.error_msg(ERR_DUP_ID, f"device id {device!r} already live"),
            )
            fx.closes.append(conn_id)
            return
        if conn_id in self._conn_device:
            raise ProtocolError(
                ERR_BAD_MSG, "connection already introduced itself"
            )
        self._conn_device[conn_id] = device
        self._device_conn[device] = conn_id
        self._broadcast_snapshot(fx, self.session.register(device, color))

    def _own_device(self, conn_id: int, msg: dict) -> str:
        device = protocol.field_str(msg, "device")
        if self._conn_device.get(conn_id) != device:
            raise ProtocolError(
                ERR_NOT_MEMBER, f"connection does not host device {device!r}"
            )
        return device

    def _on_status(self, conn_id: int, msg: dict, fx: Effects) -> None:
        device = self._own_device(conn_id, msg)
        active = protocol.field_bool(msg, "active")
        coherent = protocol.field_bool(msg, "coherent") and active
        member = self.session.members[device]
        status = MemberStatus(
            device_id=device, color=member.color, active=active, coherent=coherent
        )
        try:
            snap, invite_targets = self.session.on_member_change(status)
        except UnknownMemberError as exc:
            raise ProtocolError(ERR_NOT_MEMBER, str(exc))
        self._broadcast_snapshot(fx, snap)
        for target in invite_targets:
            target_conn = self._device_conn.get(target)
            if target_conn is not None:
                fx.send(target_conn, protocol.invite_msg())

    def _on_bye(self, conn_id: int, msg: dict, fx: Effects) -> None:
        device = self._own_device(conn_id, msg)
        del self._conn_device[conn_id]
        del self._device_conn[device]
        self._broadcast_snapshot(fx, self.session.remove(device))

    def _on_control(self, conn_id: int, msg: dict, fx: Effects) -> None:
        device = protocol.field_str(msg, "device")
        op = protocol.field_str(msg, "op")
        if op not in protocol.CONTROL_OPS:
            raise ProtocolError(ERR_BAD_MSG, f"control: unknown op {op!r}")
        if op == "watch":
            # Watching is by name and survives the device being away, so a
            # UI may attach before (or across restarts of) its device host.
            watch_list = self._watchers.setdefault(device, [])
            if conn_id not in watch_list:
                watch_list.append(conn_id)
            fx.send(conn_id, protocol.snapshot_msg(self.session.snapshot()))
            return
        if device not in self._device_conn:
            raise ProtocolError(ERR_NOT_MEMBER, f"no live device {device!r}")
        if op == "set_color":
            color = protocol.field_color(msg, "value")
            self._broadcast_snapshot(fx, self.session.set_color(device, color))
        else:
            relay = protocol.control_msg(device, op)
            if op == "set_pace":
                value = protocol.field_number(msg, "value")
                if value <= 0:
                    raise ProtocolError(ERR_BAD_MSG, "set_pace: value must be > 0")
                relay["value"] = value
            fx.send(self._device_conn[device], relay)

    def _on_report(self, conn_id: int, msg: dict, fx: Effects) -> None:
        device = self._own_device(conn_id, msg)
        for watcher in self._watchers.get(device, []):
            fx.send(watcher, msg)

    def _broadcast_snapshot(self, fx: Effects, snap) -> None:
        if snap is None:
            return
        msg = protocol.snapshot_msg(snap)
        for conn_id in sorted(self._conns):
            fx.send(conn_id, msg)


# --- async transports ---------------------------------------------------------


class HubServer:
    """Serves one HubCore over raw TCP lines and WebSocket text frames."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, ws_port: int | None = None):
        self.core = HubCore()
        self.host = host
        self.port = port
        self.ws_port = ws_port
        self._conn_ids = itertools.count(1)
        self._writers: dict[int, object] = {}
        self._closers: dict[int, object] = {}
        self._queue: asyncio.Queue = asyncio.Queue()
        self._tcp_server = None
        self._ws_server = None
        self._dispatcher: asyncio.Task | None = None

    async def start(self) -> None:
        self._tcp_server = await asyncio.start_server(
            self._tcp_connection, self.host, self.port
        )
        self.port = self._tcp_server.sockets[0].getsockname()[1]
        if self.ws_port is not None:
            import websockets

            self._ws_server = await websockets.serve(
                self._ws_connection, self.host, self.ws_port
            )
            self.ws_port = next(iter(self._ws_server.sockets)).getsockname()[1]
        self._dispatcher = asyncio.create_task(self._dispatch_loop())
        logger.info("hub listening on tcp %s:%s ws %s", self.host, self.port, self.ws_port)

    async def close(self) -> None:
        if self._dispatcher:
            self._dispatcher.cancel()
        if self._tcp_server:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()
        if self._ws_server:
            self._ws_server.close()
            await self._ws_server.wait_closed()

    async def serve_forever(self) -> None:
        await self._tcp_server.serve_forever()

    # Mutations funnel through one queue: per-session handling is serialized.
    async def _dispatch_loop(self) -> None:
        while True:
            kind, conn_id, payload = await self._queue.get()
            if kind == "connect":
                fx = self.core.connect(conn_id)
            elif kind == "line":
                fx = self.core.handle_line(conn_id, payload)
            else:
                fx = self.core.disconnect(conn_id)
            await self._apply(fx)

    async def _apply(self, fx) -> None:
        # A dying peer must never take the dispatcher down; its reader will
        # notice and queue the disconnect.  (WebSocket sends raise library
        # exceptions that are not OSError subclasses.)
        for conn_id, msg in fx.sends:
            writer = self._writers.get(conn_id)
            if writer is None:
                continue
            try:
                await writer(protocol.encode(msg))
            except Exception as exc:
                logger.debug("send to conn %d failed: %s", conn_id, exc)
        for conn_id in fx.closes:
            closer = self._closers.get(conn_id)
            if closer is not None:
                try:
                    await closer()
                except Exception as exc:
                    logger.debug("close of conn %d failed: %s", conn_id, exc)

    async def _tcp_connection(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        conn_id = next(self._conn_ids)

        async def send(text: str) -> None:
            writer.write(text.encode("utf-8"))
            await writer.drain()

        async def close() -> None:
            writer.close()

        self._writers[conn_id] = send
        self._closers[conn_id] = close
        await self._queue.put(("connect", conn_id, None))
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                if line.strip():
                    await self._queue.put(("line", conn_id, line))
        except (ConnectionError, OSError):
            pass
        finally:
            self._writers.pop(conn_id, None)
            self._closers.pop(conn_id, None)
            await self._queue.put(("disconnect", conn_id, None))

    async def _ws_connection(self, ws):
        conn_id = next(self._conn_ids)

        async def send(text: str) -> None:
            await ws.send(text.rstrip("\n"))

        async def close() -> None:
            await ws.close()

        self._writers[conn_id] = send
        self._closers[conn_id] = close
        await self._queue.put(("connect", conn_id, None))
        try:
            async for frame in ws:
                if isinstance(frame, bytes):
                    frame = frame.decode("utf-8", errors="replace")
                for line in frame.split("\n"):
                    if line.strip():
                        await self._queue.put(("line", conn_id, line))
        except Exception:
            pass
        finally:
            self._writers.pop(conn_id, None)
            self._closers.pop(conn_id, None)
            await self._queue.put(("disconnect", conn_id, None))


async def serve_hub(host: str, port: int, ws_port: int | None) -> HubServer:
    server = HubServer(host=host, port=port, ws_port=ws_port)
    await server.start()
    return server
