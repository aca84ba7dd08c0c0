"""Composite turn-on / turn-off event trigger.

The machine is evaluated on a fixed judgment grid. While the actuator is on,
the held command ``tau_e`` is released (turn-off) when the squared hold error
``|tau - tau_e|^2`` leaves ``a exp(-beta t) + b`` or when the on-time reaches
``T_max``. While off, the actuator is requested again (turn-on) when
``|z2|^2`` leaves ``(rho0 - rho_inf) exp(-gamma t) + rho_inf``. A request is
served at the next actuation-grid instant (immediately if the grid is 0).
Both thresholds use absolute time.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

_GRID_TOL = 1e-9


class TriggerSequenceError(RuntimeError):
    """The machine was stepped out of order or off the judgment grid."""


class Mode(str, enum.Enum):
    ON = "ON"
    OFF = "OFF"
    PENDING_ON = "PENDING_ON"


class EventKind(str, enum.Enum):
    TURN_ON = "TURN_ON"
    TURN_OFF_ACTIVE = "TURN_OFF_ACTIVE"
    TURN_OFF_PASSIVE = "TURN_OFF_PASSIVE"


class HoldMode(str, enum.Enum):
    FROM_TURN_ON = "from-turn-on"
    PER_CONTROL_PERIOD = "per-control-period"


@dataclass(frozen=True)
class TriggerParams:
    a: float = 0.1
    b: float = 1e-4
    beta: float = 0.2
    rho0: float = 1e-3
    rho_inf: float = 1e-5
    gamma: float = 0.1
    T_max: float = 10.0
    judgment_period: float = 0.1
    actuation_grid: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "beta", "rho0", "rho_inf", "gamma", "T_max", "judgment_period"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if not self.rho0 > self.rho_inf:
            raise ValueError("rho0 must exceed rho_inf")
        if self.actuation_grid < 0.0:
            raise ValueError("actuation_grid must be >= 0")

    def turn_off_threshold(self, t: float) -> float:
        return self.a * math.exp(-self.beta * t) + self.b

    def turn_on_threshold(self, t: float) -> float:
        return (self.rho0 - self.rho_inf) * math.exp(-self.gamma * t) + self.rho_inf


@dataclass(frozen=True)
class EventRecord:
    t: float
    kind: EventKind
    trigger_value: float
    threshold: float

    def to_json(self) -> str:
        d = asdict(self)
        d["kind"] = self.kind.value
        return json.dumps(d)


def on_grid(t: float, period: float) -> bool:
    if period <= 0.0:
        return True
    k = round(t / period)
    return abs(t - k * period) <= _GRID_TOL * max(1.0, abs(t))


def turn_off_due(t: float, t_on_k: float, e_tau_sq: float, params: TriggerParams) -> str | None:
    """``"active"``, ``"passive"`` or ``None``; the active cause wins a tie."""
    if e_tau_sq > params.turn_off_threshold(t):
        return "active"
    if t - t_on_k >= params.T_max - _GRID_TOL:
        return "passive"
    return None


def turn_on_due(t: float, z2_sq: float, params: TriggerParams) -> bool:
    return z2_sq > params.turn_on_threshold(t)


@dataclass
class TriggerMachine:
    """Single-owner ON / OFF / PENDING_ON automaton with its event log.

    ``tau_e`` is the held command (zero while not ON). ``turn_on_requests``
    records the judgment instants where the turn-on condition fired; they are
    not actuation events and are kept out of ``events``.
    """

    params: TriggerParams
    hold: HoldMode = HoldMode.FROM_TURN_ON
    mode: Mode = Mode.OFF
    t_on_k: float | None = None
    t_off_k: float | None = 0.0
    tau_e: np.ndarray = field(default_factory=lambda: np.zeros(3))
    events: list = field(default_factory=list)
    turn_on_requests: list = field(default_factory=list)
    _t_last: float | None = None
    _pending: tuple | None = None

    def __post_init__(self):
        self.hold = HoldMode(self.hold)

    @property
    def actuator_enabled(self) -> bool:
        return self.mode is Mode.ON

    def _turn_on(self, t: float, tau_current, value: float, threshold: float) -> None:
        self.mode = Mode.ON
        self.t_on_k = t
        self.tau_e = np.array(tau_current, dtype=float)
        self.events.append(EventRecord(t, EventKind.TURN_ON, value, threshold))

    def step(self, t: float, e_tau_sq: float, z2_sq: float, tau_current) -> bool:
        """Advance the automaton at judgment instant ``t``; returns whether the actuator is on.

        ``e_tau_sq`` must be computed by the caller against the currently held
        ``tau_e``.
        """
        p = self.params
        if self._t_last is not None and t <= self._t_last:
            raise TriggerSequenceError(f"non-monotone time {t} after {self._t_last}")
        if not on_grid(t, p.judgment_period):
            raise TriggerSequenceError(f"t = {t} is not on the {p.judgment_period} s judgment grid")
        self._t_last = t

        if self.mode is Mode.ON:
            cause = turn_off_due(t, self.t_on_k, e_tau_sq, p)
            if cause is not None:
                kind = EventKind.TURN_OFF_ACTIVE if cause == "active" else EventKind.TURN_OFF_PASSIVE
                self.events.append(EventRecord(t, kind, e_tau_sq, p.turn_off_threshold(t)))
                self.mode = Mode.OFF
                self.t_off_k = t
                self.tau_e = np.zeros(3)
            elif (
                self.hold is HoldMode.PER_CONTROL_PERIOD
                and on_grid(t, p.actuation_grid)
            ):
                self.tau_e = np.array(tau_current, dtype=float)
            return self.actuator_enabled

        if self.mode is Mode.OFF and turn_on_due(t, z2_sq, p):
            self.turn_on_requests.append(t)
            self._pending = (z2_sq, p.turn_on_threshold(t))
            self.mode = Mode.PENDING_ON

        if self.mode is Mode.PENDING_ON and on_grid(t, p.actuation_grid):
            value, threshold = self._pending
            self._pending = None
            self._turn_on(t, tau_current, value, threshold)
        return self.actuator_enabled


def write_events_jsonl(events, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(ev.to_json() + "\n")


def read_events_jsonl(path) -> list[EventRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out.append(EventRecord(float(d["t"]), EventKind(d["kind"]), float(d["trigger_value"]), float(d["threshold"])))
    return out
