"""Shared-session aggregation: mixed colors, coherence ratio, invites.

Pure bookkeeping over a set of member statuses; no I/O.  The aggregate
snapshot deliberately carries no per-member fields: members see how many
are active and how coherent the group is, never who.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

RGB = tuple[int, int, int]


class UnknownMemberError(ValueError):
    """Raised for a status update about a device not in the session."""


def _check_color(color) -> RGB:
    channels = tuple(color)
    if len(channels) != 3 or any(
        not isinstance(c, int) or not 0 <= c <= 255 for c in channels
    ):
        raise ValueError(f"color must be three ints in [0, 255], got {color!r}")
    return channels


@dataclass(frozen=True)
class MemberStatus:
    """One device's published flags: its color, and whether it is currently
    grasped (active) and, if so, showing high HRV (coherent)."""

    device_id: str
    color: RGB
    active: bool
    coherent: bool

    def __post_init__(self):
        _check_color(self.color)
        if self.coherent and not self.active:
            raise ValueError("a non-active member cannot be coherent")


@dataclass(frozen=True)
class SessionSnapshot:
    """The aggregate broadcast: mixed color, coherent-to-active ratio as
    brightness, and the two counts.  Nothing member-scoped."""

    color: RGB
    brightness: float
    active_count: int
    member_count: int


def mix_colors(members: Iterable[MemberStatus]) -> RGB:
    """Per-channel mean color of the active members, floored; black if none."""
    active = [m.color for m in members if m.active]
    if not active:
        return (0, 0, 0)
    n = len(active)
    return (
        sum(c[0] for c in active) // n,
        sum(c[1] for c in active) // n,
        sum(c[2] for c in active) // n,
    )


def brightness(members: Iterable[MemberStatus]) -> float:
    """Fraction of active members that are coherent; 0.0 with no active member."""
    statuses = list(members)
    active = sum(1 for m in statuses if m.active)
    if active == 0:
        return 0.0
    coherent = sum(1 for m in statuses if m.active and m.coherent)
    return coherent / active


def snapshot_of(members: Iterable[MemberStatus]) -> SessionSnapshot:
    statuses = list(members)
    return SessionSnapshot(
        color=mix_colors(statuses),
        brightness=brightness(statuses),
        active_count=sum(1 for m in statuses if m.active),
        member_count=len(statuses),
    )


class Session:
    """Membership registry plus change detection for snapshot broadcasts.

    The caller (the hub) must serialize calls; this class keeps no locks.
    Snapshots are returned only when they differ from the last one handed
    out, so republishing an identical status is a no-op.
    """

    def __init__(self):
        self._members: dict[str, MemberStatus] = {}
        self._last_snapshot: SessionSnapshot | None = None

    @property
    def members(self) -> dict[str, MemberStatus]:
        return dict(self._members)

    @property
    def member_ids(self) -> list[str]:
        return list(self._members)

    def snapshot(self) -> SessionSnapshot:
        return snapshot_of(self._members.values())

    def register(self, device_id: str, color) -> SessionSnapshot | None:
        """Add a member (inactive); returns the new snapshot if it changed."""
        self._members[device_id] = MemberStatus(
            device_id=device_id,
            color=_check_color(color),
            active=False,
            coherent=False,
        )
        return self._emit_if_changed()

    def remove(self, device_id: str) -> SessionSnapshot | None:
        """Drop a member; returns the new snapshot if it changed."""
        self._members.pop(device_id, None)
        return self._emit_if_changed()

    def set_color(self, device_id: str, color) -> SessionSnapshot | None:
        """Repaint a member; returns the new snapshot if it changed."""
        member = self._require(device_id)
        self._members[device_id] = MemberStatus(
            device_id=device_id,
            color=_check_color(color),
            active=member.active,
            coherent=member.coherent,
        )
        return self._emit_if_changed()

    def on_member_change(
        self, status: MemberStatus
    ) -> tuple[SessionSnapshot | None, list[str]]:
        """Upsert a registered member's status.

        Returns (snapshot if it changed, invite targets).  Invites fire only
        on the inactive -> active edge and go to every other member.
        """
        previous = self._require(status.device_id)
        self._members[status.device_id] = status
        invites = []
        if status.active and not previous.active:
            invites = [mid for mid in self._members if mid != status.device_id]
        return self._emit_if_changed(), invites

    def _require(self, device_id: str) -> MemberStatus:
        member = self._members.get(device_id)
        if member is None:
            raise UnknownMemberError(f"not a session member: {device_id!r}")
        return member

    def _emit_if_changed(self) -> SessionSnapshot | None:
        snap = self.snapshot()
        if snap == self._last_snapshot:
            return None
        self._last_snapshot = snap
        return snap
