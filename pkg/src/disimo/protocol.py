"""Wire protocol units: newline-delimited JSON, identical over TCP and WebSocket.

Every message is one JSON object per line (UTF-8, LF-terminated) with a
required "type" field.

  device host -> hub:  hello {device, color}, status {device, active,
                       coherent}, bye {device}, report {device, t, mode,
                       actions}
  UI -> hub:           control {device, op, value?}
  hub -> client:       snapshot {color, brightness, active, members},
                       invite {}, error {code, msg}, plus relayed control
                       and report messages

``snapshot`` and ``invite`` broadcasts never carry a member identity; the
``report`` feed (a device's own mode and actions) is delivered only to
connections watching that specific device.
"""

from __future__ import annotations

import json

from .cluster import SessionSnapshot

CONTROL_OPS = ("grasp", "release", "set_pace", "watch", "set_color")

ERR_BAD_MSG = "bad_msg"
ERR_UNKNOWN_TYPE = "unknown_type"
ERR_DUP_ID = "dup_id"
ERR_NOT_MEMBER = "not_member"


class ProtocolError(ValueError):
    """A malformed or unacceptable wire message."""

    def __init__(self, code: str, msg: str):
        super().__init__(msg)
        self.code = code
        self.msg = msg


def encode(msg: dict) -> str:
    """One LF-terminated wire line for a message."""
    return json.dumps(msg, separators=(",", ":")) + "\n"


def parse_line(line: str | bytes) -> dict:
    """Parse one wire line into a message dict.

    Raises ProtocolError(bad_msg) for anything that is not a JSON object
    with a string "type".
    """
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError:
            raise ProtocolError(ERR_BAD_MSG, "line is not valid UTF-8")
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(ERR_BAD_MSG, f"not valid JSON: {exc.msg}")
    if not isinstance(msg, dict):
        raise ProtocolError(ERR_BAD_MSG, "message must be a JSON object")
    if not isinstance(msg.get("type"), str):
        raise ProtocolError(ERR_BAD_MSG, 'message needs a string "type" field')
    return msg


def field_str(msg: dict, name: str) -> str:
    value = msg.get(name)
    if not isinstance(value, str) or not value:
        raise ProtocolError(ERR_BAD_MSG, f"{msg['type']}: {name!r} must be a non-empty string")
    return value


def field_bool(msg: dict, name: str) -> bool:
    value = msg.get(name)
    if not isinstance(value, bool):
        raise ProtocolError(ERR_BAD_MSG, f"{msg['type']}: {name!r} must be a boolean")
    return value


def field_color(msg: dict, name: str = "color") -> tuple[int, int, int]:
    value = msg.get(name)
    if (
        not isinstance(value, list)
        or len(value) != 3
        or any(not isinstance(c, int) or isinstance(c, bool) or not 0 <= c <= 255 for c in value)
    ):
        raise ProtocolError(
            ERR_BAD_MSG, f"{msg['type']}: {name!r} must be [r, g, b] with ints in [0, 255]"
        )
    return (value[0], value[1], value[2])


def field_number(msg: dict, name: str) -> float:
    value = msg.get(name)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolError(ERR_BAD_MSG, f"{msg['type']}: {name!r} must be a number")
    return float(value)


# --- constructors -----------------------------------------------------------


def hello_msg(device: str, color) -> dict:
    return {"type": "hello", "device": device, "color": list(color)}


def status_msg(device: str, active: bool, coherent: bool) -> dict:
    return {"type": "status", "device": device, "active": active, "coherent": coherent}


def bye_msg(device: str) -> dict:
    return {"type": "bye", "device": device}


def control_msg(device: str, op: str, value=None) -> dict:
    msg = {"type": "control", "device": device, "op": op}
    if value is not None:
        msg["value"] = value
    return msg


def snapshot_msg(snap: SessionSnapshot) -> dict:
    return {
        "type": "snapshot",
        "color": list(snap.color),
        "brightness": snap.brightness,
        "active": snap.active_count,
        "members": snap.member_count,
    }


def snapshot_from_msg(msg: dict) -> SessionSnapshot:
    color = field_color(msg)
    brightness = field_number(msg, "brightness")
    active = int(field_number(msg, "active"))
    members = int(field_number(msg, "members"))
    return SessionSnapshot(
        color=color, brightness=brightness, active_count=active, member_count=members
    )


def invite_msg() -> dict:
    return {"type": "invite"}


def error_msg(code: str, msg: str) -> dict:
    return {"type": "error", "code": code, "msg": msg}


def report_msg(device: str, t: float, mode: str, actions: list[dict]) -> dict:
    return {"type": "report", "device": device, "t": t, "mode": mode, "actions": actions}
