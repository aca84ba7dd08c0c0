import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intermittent_attitude.trigger import (
    EventKind,
    EventRecord,
    HoldMode,
    Mode,
    TriggerMachine,
    TriggerParams,
    TriggerSequenceError,
    on_grid,
    read_events_jsonl,
    turn_off_due,
    turn_on_due,
    write_events_jsonl,
)

P = TriggerParams()
TAU = np.array([0.01, -0.02, 0.03])


class TestTurnOff:
    def test_active_at_start(self):
        assert P.turn_off_threshold(0.0) == pytest.approx(0.1001)
        assert turn_off_due(0.0, 0.0, 0.2, P) == "active"

    def test_passive_at_max_on_time(self):
        assert turn_off_due(15.0, 5.0, 0.0, P) == "passive"

    def test_none_before_max_on_time(self):
        assert turn_off_due(14.9, 5.0, 0.0, P) is None

    def test_active_wins_tie(self):
        assert turn_off_due(15.0, 5.0, 1.0, P) == "active"

    def test_uses_absolute_time(self):
        # same elapsed on-time, later absolute time -> smaller threshold
        e = 0.05
        assert turn_off_due(1.0, 0.5, e, P) is None
        assert turn_off_due(20.0, 19.5, e, P) == "active"


class TestTurnOn:
    def test_zero_never_fires(self):
        assert not any(turn_on_due(t, 0.0, P) for t in (0.0, 10.0, 1e4))

    def test_initial_threshold(self):
        assert P.turn_on_threshold(0.0) == pytest.approx(1e-3)

    def test_late_time(self):
        assert P.turn_on_threshold(200.0) == pytest.approx(1.0000002e-5, rel=1e-7)
        assert turn_on_due(200.0, 2e-5, P)


def _drive(machine, times, z2_sq, e_tau_sq=0.0):
    for t in times:
        machine.step(t, e_tau_sq, z2_sq, TAU)


class TestMachine:
    def test_starts_off(self):
        m = TriggerMachine(P)
        assert m.mode is Mode.OFF and not m.actuator_enabled
        np.testing.assert_array_equal(m.tau_e, 0.0)

    def test_grid_quantized_turn_on(self):
        m = TriggerMachine(P)
        times = [round(0.1 * k, 10) for k in range(123)]
        _drive(m, times, 0.0)
        assert m.step(12.3, 0.0, 1.0, TAU) is False
        assert m.mode is Mode.PENDING_ON
        assert m.turn_on_requests == [12.3]
        for k in range(124, 130):
            assert m.step(round(0.1 * k, 10), 0.0, 0.0, TAU) is False
        assert m.step(13.0, 0.0, 0.0, TAU) is True
        assert [e.t for e in m.events] == [13.0]
        assert m.events[0].kind is EventKind.TURN_ON
        np.testing.assert_array_equal(m.tau_e, TAU)

    def test_unrestricted_grid_turns_on_immediately(self):
        m = TriggerMachine(TriggerParams(actuation_grid=0.0))
        assert m.step(0.3, 0.0, 1.0, TAU)
        assert m.events[0].t == 0.3

    def test_passive_turn_off(self):
        m = TriggerMachine(TriggerParams(actuation_grid=0.0))
        m.step(5.0, 0.0, 1.0, TAU)
        for k in range(51, 150):
            assert m.step(round(0.1 * k, 10), 0.0, 0.0, TAU)
        assert not m.step(15.0, 0.0, 0.0, TAU)
        assert m.events[-1].kind is EventKind.TURN_OFF_PASSIVE
        assert m.events[-1].t == 15.0
        np.testing.assert_array_equal(m.tau_e, 0.0)

    def test_active_turn_off(self):
        m = TriggerMachine(TriggerParams(actuation_grid=0.0))
        m.step(1.0, 0.0, 1.0, TAU)
        assert not m.step(1.1, 1.0, 0.0, TAU)
        assert m.events[-1].kind is EventKind.TURN_OFF_ACTIVE

    def test_hold_from_turn_on_keeps_sample(self):
        m = TriggerMachine(TriggerParams(actuation_grid=1.0))
        m.step(1.0, 0.0, 1.0, TAU)
        m.step(2.0, 0.0, 0.0, 2 * TAU)
        np.testing.assert_array_equal(m.tau_e, TAU)

    def test_hold_per_control_period_resamples(self):
        m = TriggerMachine(TriggerParams(actuation_grid=1.0), hold=HoldMode.PER_CONTROL_PERIOD)
        m.step(1.0, 0.0, 1.0, TAU)
        m.step(1.5, 0.0, 0.0, 3 * TAU)
        np.testing.assert_array_equal(m.tau_e, TAU)
        m.step(2.0, 0.0, 0.0, 2 * TAU)
        np.testing.assert_array_equal(m.tau_e, 2 * TAU)

    def test_rejects_non_monotone_time(self):
        m = TriggerMachine(P)
        m.step(1.0, 0.0, 0.0, TAU)
        with pytest.raises(TriggerSequenceError):
            m.step(1.0, 0.0, 0.0, TAU)

    def test_rejects_off_grid_time(self):
        with pytest.raises(TriggerSequenceError):
            TriggerMachine(P).step(0.05, 0.0, 0.0, TAU)

    @given(st.lists(st.tuples(st.floats(0, 0.2), st.floats(0, 2e-3)), min_size=1, max_size=300), st.sampled_from([0.0, 1.0]))
    @settings(max_examples=80, deadline=None)
    def test_log_alternates_and_respects_bounds(self, seq, grid):
        params = TriggerParams(actuation_grid=grid, T_max=2.0)
        m = TriggerMachine(params)
        on_since = None
        for k, (e, z) in enumerate(seq):
            t = round(0.1 * k, 10)
            m.step(t, e, z, TAU)
            if m.mode is Mode.ON and on_since is None:
                on_since = t
            elif m.mode is not Mode.ON:
                on_since = None
            if on_since is not None:
                assert t - on_since <= params.T_max + 0.1 + 1e-9
        kinds = [ev.kind for ev in m.events]
        for i, kind in enumerate(kinds):
            assert (kind is EventKind.TURN_ON) == (i % 2 == 0)
        times = [ev.t for ev in m.events]
        assert all(b - a >= 0.1 - 1e-9 for a, b in zip(times, times[1:]))

    def test_replay_reproduces_log(self):
        rng = np.random.default_rng(3)
        e_seq = rng.uniform(0, 0.2, 500) * (rng.random(500) < 0.1)
        z_seq = rng.uniform(0, 2e-3, 500)
        logs = []
        for _ in range(2):
            m = TriggerMachine(P)
            for k in range(500):
                m.step(round(0.1 * k, 10), e_seq[k], z_seq[k], TAU)
            logs.append(m.events)
        assert logs[0] == logs[1] and len(logs[0]) > 0


def test_on_grid():
    assert on_grid(13.0, 1.0) and not on_grid(12.3, 1.0)
    assert on_grid(0.30000000000000004, 0.1)
    assert on_grid(12.3, 0.0)


@pytest.mark.parametrize("kw", [{"a": 0.0}, {"rho0": 1e-6}, {"actuation_grid": -1.0}, {"T_max": -1.0}])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        TriggerParams(**kw)


def test_events_jsonl_round_trip(tmp_path):
    events = [EventRecord(13.0, EventKind.TURN_ON, 2e-4, 1.5e-4), EventRecord(13.2, EventKind.TURN_OFF_ACTIVE, 0.3, 0.1001)]
    path = tmp_path / "events.jsonl"
    write_events_jsonl(events, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2 and '"kind": "TURN_ON"' in lines[0]
    assert read_events_jsonl(path) == events
