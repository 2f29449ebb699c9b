import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relational_epr.spacetime import (
    LAB,
    Event,
    Frame,
    Ordering,
    Separation,
    boosted_time,
    classify,
    frame_along,
    interval,
    order_in_frame,
    simultaneity_frame,
)

E_R = Event(0.0, (0, 0, 0))
E_L = Event(0.5, (2, 0, 0))


def full_boost(frame: Frame, e: Event):
    """Standard boost of all four coordinates, used only to check invariance."""
    v = np.asarray(frame.velocity)
    x = np.asarray(e.x)
    speed2 = v @ v
    g = frame.gamma
    t_new = g * (e.t - v @ x)
    if speed2 == 0:
        return t_new, x
    x_new = x + ((g - 1) * (v @ x) / speed2 - g * e.t) * v
    return t_new, x_new


coords = st.floats(-50, 50, allow_nan=False)
events = st.builds(lambda t, a, b, c: Event(t, (a, b, c)), coords, coords, coords, coords)
frames = (
    st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3)
    .filter(lambda v: math.hypot(*v) < 0.99)
    .map(Frame)
)


class TestInterval:
    @pytest.mark.parametrize(
        "e1, e2, expected",
        [
            (Event(0), Event(1), 1.0),
            (Event(0), Event(0, (1, 0, 0)), -1.0),
            (E_R, E_L, -3.75),
        ],
    )
    def test_values(self, e1, e2, expected):
        assert interval(e1, e2) == pytest.approx(expected, abs=1e-15)
        assert interval(e2, e1) == interval(e1, e2)

    def test_classify(self):
        assert classify(E_R, E_L) is Separation.SPACELIKE
        assert classify(Event(0), Event(1, (1, 0, 0))) is Separation.LIGHTLIKE
        assert classify(Event(0), Event(2, (1, 0, 0))) is Separation.TIMELIKE
        with pytest.raises(ValueError):
            classify(E_R, E_L, tol=0)


class TestFrames:
    def test_superluminal_rejected(self):
        with pytest.raises(ValueError, match="subluminal"):
            Frame((1.0, 0, 0))

    def test_non_finite_event_rejected(self):
        with pytest.raises(ValueError):
            Event(float("nan"))

    def test_boosted_time_examples(self):
        assert boosted_time(LAB, E_L) == 0.5
        f = Frame((0.5, 0, 0))
        assert f.gamma == pytest.approx(2 / math.sqrt(3), abs=1e-15)
        assert boosted_time(f, E_L) == pytest.approx(-1 / math.sqrt(3), abs=1e-12)
        assert boosted_time(Frame((0.25, 0, 0)), E_L) == 0.0

    def test_order_examples(self):
        assert order_in_frame(LAB, E_R, E_L) is Ordering.FIRST_PRECEDES_SECOND
        assert order_in_frame(Frame((0.5, 0, 0)), E_R, E_L) is Ordering.SECOND_PRECEDES_FIRST
        assert order_in_frame(Frame((0.25, 0, 0)), E_R, E_L) is Ordering.SIMULTANEOUS

    def test_simultaneity_frame(self):
        f = simultaneity_frame(E_R, E_L)
        assert f.velocity == pytest.approx((0.25, 0, 0))
        with pytest.raises(ValueError):
            simultaneity_frame(Event(0), Event(2, (1, 0, 0)))


@settings(max_examples=100, deadline=None)
@given(events, events, st.lists(frames, min_size=20, max_size=20))
def test_interval_invariant_under_boosts(e1, e2, boosts):
    s2 = interval(e1, e2)
    for f in boosts:
        t1, x1 = full_boost(f, e1)
        t2, x2 = full_boost(f, e2)
        boosted = (t2 - t1) ** 2 - np.sum((x2 - x1) ** 2)
        assert boosted == pytest.approx(s2, abs=1e-9, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(events, st.floats(0.1, 10), st.lists(frames, min_size=1, max_size=10), st.data())
def test_timelike_order_is_frame_invariant(e1, dt, boosts, data):
    # a displacement strictly inside the future light cone
    direction = np.array(data.draw(st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3)))
    norm = np.linalg.norm(direction)
    dx = direction / norm * dt * 0.9 if norm > 1e-6 else np.zeros(3)
    e2 = Event(e1.t + dt, tuple(np.asarray(e1.x) + dx))
    assert classify(e1, e2) is Separation.TIMELIKE
    for f in boosts:
        assert order_in_frame(f, e1, e2) is Ordering.FIRST_PRECEDES_SECOND


@settings(max_examples=100, deadline=None)
@given(events, st.floats(0.1, 10), st.floats(0.05, 0.95))
def test_spacelike_pairs_admit_every_ordering(e1, dist, ratio):
    e2 = Event(e1.t + ratio * dist, (e1.x[0] + dist, e1.x[1], e1.x[2]))
    assert classify(e1, e2) is Separation.SPACELIKE
    seen = {order_in_frame(frame_along(e1, e2, s), e1, e2) for s in np.linspace(-0.99, 0.99, 199)}
    seen.add(order_in_frame(simultaneity_frame(e1, e2), e1, e2))
    assert seen == set(Ordering)
