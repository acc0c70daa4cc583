"""Session aggregation tests: color mixing, brightness ratio, invites."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from disimo.cluster import (
    MemberStatus,
    Session,
    SessionSnapshot,
    UnknownMemberError,
    brightness,
    mix_colors,
    snapshot_of,
)


def member(device_id="d", color=(0, 0, 0), active=False, coherent=False):
    return MemberStatus(device_id=device_id, color=color, active=active, coherent=coherent)


# --- mix_colors -----------------------------------------------------------------


def test_single_active_member_keeps_its_color():
    assert mix_colors([member(color=(255, 0, 0), active=True)]) == (255, 0, 0)


def test_two_active_members_average_floored():
    members = [
        member("a", (255, 0, 0), active=True),
        member("b", (0, 0, 255), active=True),
    ]
    assert mix_colors(members) == (127, 0, 127)


def test_no_active_members_gives_black():
    assert mix_colors([member(color=(200, 200, 200))]) == (0, 0, 0)
    assert mix_colors([]) == (0, 0, 0)


def test_inactive_members_do_not_tint_the_mix():
    members = [
        member("a", (10, 20, 30), active=True),
        member("b", (250, 250, 250), active=False),
    ]
    assert mix_colors(members) == (10, 20, 30)


def test_three_way_mix():
    members = [
        member("a", (230, 40, 40), active=True),
        member("b", (40, 200, 90), active=True),
        member("c", (60, 90, 230), active=True),
    ]
    assert mix_colors(members) == (110, 110, 120)


# --- brightness ------------------------------------------------------------------


def test_all_coherent_is_full_brightness():
    members = [member(str(i), active=True, coherent=True) for i in range(3)]
    assert brightness(members) == 1.0


def test_two_thirds_coherent():
    members = [
        member("a", active=True, coherent=True),
        member("b", active=True, coherent=True),
        member("c", active=True, coherent=False),
    ]
    assert brightness(members) == 2 / 3


def test_no_active_members_is_dark():
    assert brightness([member("a")]) == 0.0
    assert brightness([]) == 0.0


def test_inactive_members_do_not_dilute_brightness():
    members = [
        member("a", active=True, coherent=True),
        member("b", active=False),
    ]
    assert brightness(members) == 1.0


# --- invariants -------------------------------------------------------------------


def test_coherent_requires_active():
    with pytest.raises(ValueError):
        member(active=False, coherent=True)


def test_color_channel_validation():
    with pytest.raises(ValueError):
        member(color=(256, 0, 0))
    with pytest.raises(ValueError):
        member(color=(0, 0))


member_strategy = st.builds(
    member,
    device_id=st.text(alphabet="abcdefgh", min_size=1, max_size=4),
    color=st.tuples(
        st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)
    ),
    active=st.booleans(),
    coherent=st.just(False),
) | st.builds(
    member,
    device_id=st.text(alphabet="abcdefgh", min_size=1, max_size=4),
    color=st.tuples(
        st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)
    ),
    active=st.just(True),
    coherent=st.booleans(),
)


@given(members=st.lists(member_strategy, max_size=8), seed=st.randoms())
def test_aggregation_is_order_independent(members, seed):
    shuffled = list(members)
    seed.shuffle(shuffled)
    assert mix_colors(members) == mix_colors(shuffled)
    assert brightness(members) == brightness(shuffled)


@given(members=st.lists(member_strategy, max_size=8))
def test_counts_are_ordered(members):
    snap = snapshot_of(members)
    coherent = sum(1 for m in members if m.active and m.coherent)
    assert coherent <= snap.active_count <= snap.member_count
    assert 0.0 <= snap.brightness <= 1.0


@given(members=st.lists(member_strategy, max_size=8))
def test_adding_inactive_member_changes_no_aggregate(members):
    extra = member("zz", (123, 45, 67), active=False)
    assert mix_colors(members + [extra]) == mix_colors(members)
    assert brightness(members + [extra]) == brightness(members)


def test_snapshot_has_no_member_scoped_fields():
    snap = snapshot_of([member("a", (1, 2, 3), active=True)])
    assert set(snap.__dataclass_fields__) == {
        "color", "brightness", "active_count", "member_count",
    }


# --- Session ---------------------------------------------------------------------


def activate(session, device_id, coherent=False):
    current = session.members[device_id]
    return session.on_member_change(
        MemberStatus(
            device_id=device_id, color=current.color, active=True, coherent=coherent
        )
    )


def test_register_emits_snapshot_with_member_count():
    session = Session()
    snap = session.register("a", (255, 0, 0))
    assert snap == SessionSnapshot(
        color=(0, 0, 0), brightness=0.0, active_count=0, member_count=1
    )


def test_activation_invites_all_other_members():
    session = Session()
    for device in ("a", "b", "c"):
        session.register(device, (10, 10, 10))
    snap, invites = activate(session, "b")
    assert invites == ["a", "c"]
    assert snap.active_count == 1


def test_invites_fire_only_on_the_inactive_to_active_edge():
    session = Session()
    session.register("a", (10, 10, 10))
    session.register("b", (10, 10, 10))
    _, invites = activate(session, "a")
    assert invites == ["b"]
    _, invites = activate(session, "a", coherent=True)  # still active: no invite
    assert invites == []


def test_identical_status_republish_is_silent():
    session = Session()
    session.register("a", (9, 9, 9))
    snap, _ = activate(session, "a")
    assert snap is not None
    snap, invites = activate(session, "a")
    assert snap is None and invites == []


def test_brightness_moves_as_members_turn_coherent():
    session = Session()
    session.register("a", (10, 0, 0))
    session.register("b", (0, 10, 0))
    activate(session, "a", coherent=True)
    snap, _ = activate(session, "b")
    assert snap.brightness == 0.5
    snap, _ = activate(session, "b", coherent=True)
    assert snap.brightness == 1.0


def test_unknown_member_rejected():
    session = Session()
    with pytest.raises(UnknownMemberError):
        session.on_member_change(member("ghost", active=True))


def test_remove_recomputes_snapshot():
    session = Session()
    session.register("a", (10, 0, 0))
    session.register("b", (0, 10, 0))
    activate(session, "a", coherent=True)
    activate(session, "b")
    snap = session.remove("b")
    assert snap.member_count == 1
    assert snap.brightness == 1.0


def test_set_color_changes_the_mix():
    session = Session()
    session.register("a", (0, 0, 0))
    activate(session, "a")
    snap = session.set_color("a", (200, 100, 50))
    assert snap.color == (200, 100, 50)
    with pytest.raises(UnknownMemberError):
        session.set_color("nope", (1, 2, 3))
