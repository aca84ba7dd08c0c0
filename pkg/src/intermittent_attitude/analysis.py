"""Lyapunov bookkeeping and verification of the piecewise-exponential envelope.

Energy-like functions: ``V1 = |q_ev|^2 / 2``, ``V2 = z2^T J z2 / 2``,
``V3 = |xi|^2 / 2`` and ``V = V1 + V2 + V3``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .attitude import InertiaModel
from .controller import ControllerGains
from .trigger import EventKind, EventRecord, TriggerParams

# sup over x of |x| - x tanh(x / mu), divided by mu
TANH_GAP = 0.2785


class InvalidConstantsError(ValueError):
    """A positivity condition required by the certificate does not hold."""


class TimelineError(ValueError):
    """Samples and events do not describe the same run."""


def lyapunov_values(q_ev, z2, xi, J: InertiaModel) -> tuple[float, float, float, float]:
    q_ev = np.asarray(q_ev, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    xi = np.asarray(xi, dtype=float)
    V1 = 0.5 * float(q_ev @ q_ev)
    V2 = 0.5 * float(z2 @ J.J @ z2)
    V3 = 0.5 * float(xi @ xi)
    return V1, V2, V3, V1 + V2 + V3


def judgment_J2(t, lambda_max: float, params: TriggerParams):
    """Upper bound on ``V2`` implied by the turn-on condition, ``lambda_max / 2 * rho(t)``."""
    rho = (params.rho0 - params.rho_inf) * np.exp(-params.gamma * np.asarray(t, dtype=float)) + params.rho_inf
    out = 0.5 * lambda_max * rho
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class StabilityConstants:
    C1: float
    C2: float
    C3: float
    C_t: float
    C_d: float
    B_omega: float
    q_e0_min: float
    D0: float
    N_k: float
    N_f: float
    b1: float
    b2: float
    lambda_max: float
    valid: dict = field(default_factory=dict)

    @property
    def all_valid(self) -> bool:
        return all(self.valid.values())

    def failed(self) -> list[str]:
        return [k for k, ok in self.valid.items() if not ok]

    def to_dict(self) -> dict:
        return asdict(self)


def stability_constants(
    gains: ControllerGains, q_e0_min: float, J: InertiaModel, params: TriggerParams
) -> StabilityConstants:
    """Certificate constants; positivity failures are flagged, not raised.

    ``N_f`` uses the time-uniform worst case ``n = rho_inf``.
    """
    if not 0.0 < q_e0_min <= 1.0:
        raise ValueError(f"q_e0_min must lie in (0, 1], got {q_e0_min}")
    B_omega = gains.M_omega / math.sqrt(3.0)
    C1, C2, C3 = gains.C1, gains.C2, gains.C3
    C_t = min(q_e0_min * B_omega, 2.0 * C1 / J.lambda_max, 2.0 * C2)
    C_d = min(q_e0_min * B_omega - gains.b2, 2.0 * C2)
    D0 = TANH_GAP * sum(gains.mu)
    N_k = D0 + params.b / (2.0 * gains.b1)
    N_f = params.rho_inf / (2.0 * gains.b2)
    valid = {"C1": C1 > 0.0, "C2": C2 > 0.0, "C3": C3 > 0.0, "C_t": C_t > 0.0, "C_d": C_d > 0.0}
    return StabilityConstants(
        C1=C1, C2=C2, C3=C3, C_t=C_t, C_d=C_d, B_omega=B_omega, q_e0_min=q_e0_min,
        D0=D0, N_k=N_k, N_f=N_f, b1=gains.b1, b2=gains.b2, lambda_max=J.lambda_max, valid=valid,
    )


def _require_valid(consts: StabilityConstants) -> None:
    if not consts.all_valid:
        raise InvalidConstantsError("certificate conditions violated: " + ", ".join(f"{k} <= 0" for k in consts.failed()))


def residual_bounds(consts: StabilityConstants, lambda_max: float, params: TriggerParams) -> tuple[float, float, float]:
    """``(r_on, r_off, r_final)`` ultimate bounds on ``V``."""
    _require_valid(consts)
    r_on = consts.N_k / consts.C_t
    r_off = consts.N_f / consts.C_d + 0.5 * lambda_max * params.rho_inf
    return r_on, r_off, max(r_on, r_off)


@dataclass(frozen=True)
class EnvelopeSegment:
    """Exponential bound ``(A0 - A_inf) exp(-L (t - t_trig)) + A_inf`` started at ``t_trig``.

    ``initial_value`` is the value at ``t_trig``; :meth:`value` evaluates the
    whole-domain extension, so it is also defined before ``t_trig``.
    """

    t_trig: float
    t_end: float
    kind: str
    initial_value: float
    asymptote: float
    rate: float

    @property
    def value_at_zero(self) -> float:
        return (self.initial_value - self.asymptote) * math.exp(self.rate * self.t_trig) + self.asymptote

    def value(self, t):
        with np.errstate(over="ignore"):
            out = (self.initial_value - self.asymptote) * np.exp(-self.rate * (np.asarray(t, dtype=float) - self.t_trig)) + self.asymptote
        return float(out) if np.ndim(out) == 0 else out


def local_bound_segment(
    kind: str,
    V_at_trig: float,
    t_trig: float,
    consts: StabilityConstants,
    params: TriggerParams,
    *,
    t_end: float = math.inf,
    T_maxoff: float = 0.0,
) -> EnvelopeSegment:
    """Bound on ``V`` over one inter-event interval.

    ``kind`` is ``"on"`` or ``"off"``. For ``"on"``, ``V_at_trig`` is
    ``V(t_on)``. For ``"off"``, it is ``V1 + V3 + J2`` at ``t_off``. When the
    certificate rate is slower than the trigger rate the initial value is
    inflated by ``M * T`` (``T_max`` on, ``T_maxoff`` off); equal rates use
    the fast branch.
    """
    if kind == "on":
        M = params.a * math.exp(-params.beta * t_trig) / (2.0 * consts.b1)
        A_inf = consts.N_k / consts.C_t
        if consts.C_t >= params.beta:
            return EnvelopeSegment(t_trig, t_end, "ON_fast", V_at_trig, A_inf, params.beta)
        return EnvelopeSegment(t_trig, t_end, "ON_slow", V_at_trig + M * params.T_max, A_inf, consts.C_t)
    if kind == "off":
        M = params.rho0 * math.exp(-params.gamma * t_trig) / (2.0 * consts.b2)
        A_inf = consts.N_f / consts.C_d + 0.5 * consts.lambda_max * params.rho_inf
        if consts.C_d >= params.gamma:
            return EnvelopeSegment(t_trig, t_end, "OFF_fast", V_at_trig, A_inf, params.gamma)
        return EnvelopeSegment(t_trig, t_end, "OFF_slow", V_at_trig + M * T_maxoff, A_inf, consts.C_d)
    raise ValueError(f"kind must be 'on' or 'off', got {kind!r}")


@dataclass
class LyapunovTrace:
    """Sampled Lyapunov values of one run (arrays share the time axis ``t``)."""

    t: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    V3: np.ndarray
    J2: np.ndarray
    on: np.ndarray

    @property
    def V(self) -> np.ndarray:
        return self.V1 + self.V2 + self.V3


@dataclass
class EnvelopeReport:
    segments: list
    envelope: np.ndarray
    violations: list
    min_margin: float
    T_maxoff: float

    @property
    def violation_count(self) -> int:
        return len(self.violations)

    def segment_table(self) -> list[dict]:
        return [asdict(s) for s in self.segments]


def intervals_from_events(events, t_end: float) -> list[tuple[str, float, float]]:
    """Split ``[0, t_end]`` into ``("on"|"off", start, end)`` intervals; the run starts OFF."""
    out = []
    mode, start = "off", 0.0
    for ev in events:
        new = "on" if ev.kind is EventKind.TURN_ON else "off"
        if new == mode:
            raise TimelineError(f"event log does not alternate at t = {ev.t}")
        if ev.t < start or ev.t > t_end + 1e-9:
            raise TimelineError(f"event at t = {ev.t} outside the sampled timeline")
        out.append((mode, start, ev.t))
        mode, start = new, ev.t
    out.append((mode, start, t_end))
    return out


def envelope_check(
    trace: LyapunovTrace,
    events: list[EventRecord],
    consts: StabilityConstants,
    params: TriggerParams,
) -> EnvelopeReport:
    """Build the global envelope ``U_V(t)`` and flag samples with ``V(t) >= U_V(t)``.

    Each inter-event interval gets its local segment; every segment is
    extended to the whole time axis and ``U_V`` is their pointwise maximum.
    """
    _require_valid(consts)
    t = np.asarray(trace.t, dtype=float)
    if t.size == 0:
        raise TimelineError("empty trace")
    dt = t[1] - t[0] if t.size > 1 else 1.0
    intervals = intervals_from_events(events, float(t[-1]))
    off_lengths = [b - a for kind, a, b in intervals if kind == "off"]
    T_maxoff = max(off_lengths) if off_lengths else 0.0

    def index_of(tt: float) -> int:
        i = int(round((tt - t[0]) / dt))
        if i < 0 or i >= t.size or abs(t[i] - tt) > 1e-6:
            raise TimelineError(f"no sample at event time {tt}")
        return i

    V = trace.V
    segments = []
    for kind, a, b in intervals:
        i = index_of(a)
        start = V[i] if kind == "on" else trace.V1[i] + trace.V3[i] + trace.J2[i]
        segments.append(local_bound_segment(kind, float(start), a, consts, params, t_end=b, T_maxoff=T_maxoff))

    envelope = np.max(np.stack([s.value(t) for s in segments]), axis=0)
    margin = envelope - V
    violations = [(float(t[i]), float(V[i]), float(envelope[i])) for i in np.flatnonzero(margin <= 0.0)]
    return EnvelopeReport(segments, envelope, violations, float(np.min(margin)), T_maxoff)


def judgment_exceedances(trace: LyapunovTrace, turn_on_requests, events, grid: float) -> dict:
    """Samples where ``V2 > J2`` while the actuator is off.

    The turn-on condition only applies strictly after a turn-off, so samples
    at a turn-off instant are reported separately (``at_turn_off``). The rest
    are classified as inside a ``(request, actuation]`` window (expected when
    turn-on is restricted to a grid) or outside it.
    """
    turn_ons = [ev.t for ev in events if ev.kind is EventKind.TURN_ON]
    turn_offs = [ev.t for ev in events if ev.kind is not EventKind.TURN_ON]
    windows = []
    for r in turn_on_requests:
        act = next((s for s in turn_ons if s >= r - 1e-9), math.inf)
        windows.append((r, act))

    boundary, inside, outside = [], [], []
    for i in np.flatnonzero((trace.V2 > trace.J2) & ~trace.on):
        ti = float(trace.t[i])
        if any(abs(ti - s) <= 1e-9 for s in turn_offs):
            boundary.append(ti)
        elif any(r - 1e-9 <= ti <= act + 1e-9 for r, act in windows):
            inside.append(ti)
        else:
            outside.append(ti)
    return {"at_turn_off": boundary, "inside_windows": inside, "outside_windows": outside}


def separated_maxima(values, on) -> list[int]:
    """Indices of local maxima of ``values`` with an ON sample between consecutive ones.

    Within each stretch between ON samples only the largest local maximum is
    kept, so the result counts diverge / contract cycles rather than ripples.
    """
    v = np.asarray(values, dtype=float)
    on = np.asarray(on, dtype=bool)
    stretch = np.cumsum(on)  # changes only across ON samples
    best: dict = {}
    for i in range(1, v.size - 1):
        if v[i - 1] < v[i] >= v[i + 1]:
            key = stretch[i]
            if key not in best or v[i] > v[best[key]]:
                best[key] = i
    return sorted(best.values())
