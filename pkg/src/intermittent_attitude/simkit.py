"""Closed-loop scenario runner, periodic baseline, telemetry and summary metrics."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .analysis import LyapunovTrace, StabilityConstants, envelope_check, judgment_J2, stability_constants
from .attitude import InertiaModel, normalize, quat_error, rotation_matrix
from .controller import (
    AuxState,
    ControllerGains,
    SingularAttitudeError,
    aux_step,
    saturate,
    torque_command,
    virtual_rate,
    virtual_rate_derivative,
)
from .plant import (
    DisturbanceModel,
    IntegrationError,
    ReferenceTrajectory,
    RigidBodyState,
    lumped_omega_term,
    rk4_step,
)
from .trigger import EventKind, HoldMode, Mode, TriggerMachine, TriggerParams, on_grid

DEG = math.pi / 180.0


class SimulationDiverged(RuntimeError):
    def __init__(self, t: float, reason: str):
        super().__init__(f"simulation diverged at t = {t:.6g} s: {reason}")
        self.t = t


@dataclass(frozen=True)
class Scenario:
    """Fully resolved scenario in SI units."""

    inertia: InertiaModel
    q_s0: tuple = (0.4367, 0.4927, 0.5035, 0.5595)
    omega_s0: tuple = (0.0, 0.0, 0.0)
    reference: ReferenceTrajectory = field(default_factory=ReferenceTrajectory)
    disturbance: DisturbanceModel = field(default_factory=DisturbanceModel)
    gains: ControllerGains = field(default_factory=ControllerGains)
    trigger: TriggerParams = field(default_factory=TriggerParams)
    hold: HoldMode = HoldMode.FROM_TURN_ON
    dt: float = 0.1
    duration: float = 150.0
    Omega_max: float = 3.0 * DEG
    controller_kind: str = "intermittent"
    periodic_rate: float = 1.0
    periodic_K_omega: tuple | None = None
    q_e0_min: float | None = None

    def __post_init__(self):
        if self.dt <= 0.0 or self.duration <= 0.0 or self.Omega_max <= 0.0:
            raise ValueError("dt, duration and Omega_max must be positive")
        if self.controller_kind not in ("intermittent", "periodic"):
            raise ValueError("controller_kind must be 'intermittent' or 'periodic'")
        if not _divides(self.dt, self.trigger.judgment_period):
            raise ValueError("dt must divide judgment_period")
        if self.trigger.actuation_grid > 0.0 and not _divides(self.trigger.judgment_period, self.trigger.actuation_grid):
            raise ValueError("judgment_period must divide actuation_grid")
        if self.controller_kind == "periodic" and not _divides(self.trigger.judgment_period, 1.0 / self.periodic_rate):
            raise ValueError("judgment_period must divide the periodic control period")

    def periodic_variant(self) -> "Scenario":
        gains = self.gains
        if self.periodic_K_omega is not None:
            gains = replace(gains, K_omega=self.periodic_K_omega)
        return replace(self, controller_kind="periodic", gains=gains)


def _divides(small: float, big: float) -> bool:
    k = round(big / small)
    return k >= 1 and abs(big - k * small) <= 1e-9 * big


TELEMETRY_VECTORS = ("q_ev", "omega_s", "omega_e", "omega_v", "z2", "tau", "tau_e", "u", "xi")
TELEMETRY_SCALARS = ("q_e0", "e_tau_sq", "V1", "V2", "V3", "J2")


@dataclass
class Telemetry:
    """Column store, one row per integration step."""

    t: np.ndarray
    columns: dict
    mode: list

    @classmethod
    def allocate(cls, n: int) -> "Telemetry":
        cols = {k: np.zeros((n, 3)) for k in TELEMETRY_VECTORS}
        cols.update({k: np.zeros(n) for k in TELEMETRY_SCALARS})
        return cls(t=np.zeros(n), columns=cols, mode=[""] * n)

    def __getitem__(self, name):
        if name == "t":
            return self.t
        if name == "mode":
            return self.mode
        return self.columns[name]

    def __len__(self):
        return self.t.size

    @property
    def on(self) -> np.ndarray:
        return np.array([m == Mode.ON.value for m in self.mode])

    def header(self) -> list[str]:
        names = ["t"]
        for k in ("q_ev", "q_e0", "omega_s", "omega_e", "omega_v", "z2", "tau", "tau_e", "u", "e_tau_sq", "xi", "V1", "V2", "V3", "J2"):
            names += [f"{k}_{i + 1}" for i in range(3)] if k in TELEMETRY_VECTORS else [k]
        return names + ["mode"]

    def write_csv(self, path) -> None:
        order = ("q_ev", "q_e0", "omega_s", "omega_e", "omega_v", "z2", "tau", "tau_e", "u", "e_tau_sq", "xi", "V1", "V2", "V3", "J2")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.header())
            for i in range(len(self)):
                row = [repr(float(self.t[i]))]
                for k in order:
                    v = self.columns[k][i]
                    row += [repr(float(x)) for x in v] if k in TELEMETRY_VECTORS else [repr(float(v))]
                row.append(self.mode[i])
                w.writerow(row)

    def lyapunov_trace(self) -> LyapunovTrace:
        c = self.columns
        return LyapunovTrace(self.t, c["V1"], c["V2"], c["V3"], c["J2"], self.on)


@dataclass
class SummaryMetrics:
    controller_kind: str
    action_count: int
    pointing_error_final_deg: float
    pointing_error_max_after_100s_deg: float
    max_omega_s: float
    max_abs_u: float
    on_time_total: float
    trigger_counts: dict
    envelope_violations: int | None = None
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    scenario: Scenario
    telemetry: Telemetry
    events: list
    turn_on_requests: list
    summary: SummaryMetrics


def pointing_error_deg(q_e0) -> np.ndarray:
    """Rotation angle ``2 acos(min(1, |q_e0|))`` in degrees."""
    return np.degrees(2.0 * np.arccos(np.minimum(1.0, np.abs(np.asarray(q_e0, dtype=float)))))


def _simulate(sc: Scenario) -> tuple[Telemetry, list, list]:
    J, gains, params = sc.inertia, sc.gains, sc.trigger
    periodic = sc.controller_kind == "periodic"
    n = int(round(sc.duration / sc.dt))
    jp = params.judgment_period
    steps_per_judgment = int(round(jp / sc.dt))
    control_period = 1.0 / sc.periodic_rate

    coeffs = gains.psat_coeffs
    state = RigidBodyState.initial(sc.q_s0, sc.omega_s0, sc.reference)
    aux = AuxState()
    machine = None if periodic else TriggerMachine(params, hold=sc.hold)
    tel = Telemetry.allocate(n)

    prev_wv = None
    omega_v = np.zeros(3)
    tau = np.zeros(3)
    tau_e = np.zeros(3)
    u = np.zeros(3)
    e_tau_sq = 0.0
    mode = Mode.ON.value if periodic else Mode.OFF.value

    for k in range(n):
        t = k * sc.dt
        q_e, omega_e = state.q_e, state.omega_e
        omega_d, omega_d_dot = sc.reference.rates(t)
        C_e = rotation_matrix(q_e)
        omega_s = omega_e + C_e @ omega_d
        xi_now = aux.xi

        if k % steps_per_judgment == 0:
            try:
                omega_v = virtual_rate(q_e, gains, coeffs)
            except SingularAttitudeError as exc:
                raise SimulationDiverged(t, str(exc)) from exc
            omega_v_dot = virtual_rate_derivative(prev_wv, omega_v, jp)
            prev_wv = omega_v
            z2 = omega_e - omega_v
            Omega_e = lumped_omega_term(J, omega_e, omega_s, C_e, omega_d, omega_d_dot)
            tau = torque_command(q_e, z2, Omega_e, omega_v_dot, xi_now, gains, J)
            if periodic:
                if on_grid(t, control_period):
                    tau_e = tau.copy()
                e_tau_sq = float((tau - tau_e) @ (tau - tau_e))
            else:
                diff = tau - machine.tau_e
                e_tau_sq = float(diff @ diff)
                machine.step(t, e_tau_sq, float(z2 @ z2), tau)
                tau_e = machine.tau_e
                mode = machine.mode.value
                # telemetry reports staleness against the command actually held
                diff = tau - tau_e
                e_tau_sq = float(diff @ diff)
            u = saturate(tau_e, gains.U_max)
            aux = aux_step(aux, tau_e - u, jp, gains)
        else:
            z2 = omega_e - omega_v

        V1 = 0.5 * float(q_e[:3] @ q_e[:3])
        V2 = 0.5 * float(z2 @ J.J @ z2)
        V3 = 0.5 * float(xi_now @ xi_now)

        tel.t[k] = t
        c = tel.columns
        c["q_ev"][k] = q_e[:3]
        c["q_e0"][k] = q_e[3]
        c["omega_s"][k] = omega_s
        c["omega_e"][k] = omega_e
        c["omega_v"][k] = omega_v
        c["z2"][k] = z2
        c["tau"][k] = tau
        c["tau_e"][k] = tau_e
        c["u"][k] = u
        c["e_tau_sq"][k] = e_tau_sq
        c["xi"][k] = xi_now
        c["V1"][k] = V1
        c["V2"][k] = V2
        c["V3"][k] = V3
        c["J2"][k] = judgment_J2(t, J.lambda_max, params)
        tel.mode[k] = mode

        try:
            state = rk4_step(state, u, t, sc.dt, J, sc.reference, sc.disturbance)
        except IntegrationError as exc:
            raise SimulationDiverged(exc.t, "non-finite plant state") from exc

    events = [] if periodic else list(machine.events)
    requests = [] if periodic else list(machine.turn_on_requests)
    return tel, events, requests


def action_ticks(sc: Scenario) -> float:
    """Spacing of the instants at which actuator actions are counted."""
    if sc.controller_kind == "periodic":
        return 1.0 / sc.periodic_rate
    return sc.trigger.actuation_grid if sc.trigger.actuation_grid > 0.0 else sc.trigger.judgment_period


def summarize_metrics(tel: Telemetry, events, sc: Scenario) -> SummaryMetrics:
    err = pointing_error_deg(tel["q_e0"])
    late = tel.t >= 100.0
    tick = action_ticks(sc)
    ticks = np.array([on_grid(t, tick) for t in tel.t])
    if sc.controller_kind == "periodic":
        active = np.any(tel["tau_e"] != 0.0, axis=1)
    else:
        active = tel.on
    counts = Counter(ev.kind.value for ev in events)
    warnings = []
    max_omega_s = float(np.max(np.linalg.norm(tel["omega_s"], axis=1)))
    if max_omega_s > sc.Omega_max:
        warnings.append(f"rate limit exceeded: max |omega_s| = {max_omega_s:.5f} rad/s > {sc.Omega_max:.5f}")
    return SummaryMetrics(
        controller_kind=sc.controller_kind,
        action_count=int(np.count_nonzero(ticks & active)),
        pointing_error_final_deg=float(err[-1]),
        pointing_error_max_after_100s_deg=float(err[late].max()) if late.any() else float("nan"),
        max_omega_s=max_omega_s,
        max_abs_u=float(np.max(np.abs(tel["u"]))),
        on_time_total=float(np.count_nonzero(tel.on) * sc.dt),
        trigger_counts={k.value: counts.get(k.value, 0) for k in EventKind},
        warnings=warnings,
    )


def initial_q_e0(sc: Scenario) -> float:
    """``|q_e0(0)|``, the default lower bound on ``|q_e0|`` used by the certificate."""
    return abs(float(quat_error(normalize(sc.reference.q_d0), normalize(sc.q_s0))[3]))


def certificate_constants(sc: Scenario, q_e0_min: float | None = None) -> StabilityConstants:
    q = q_e0_min if q_e0_min is not None else sc.q_e0_min if sc.q_e0_min is not None else initial_q_e0(sc)
    return stability_constants(sc.gains, q, sc.inertia, sc.trigger)


def run_scenario(sc: Scenario) -> RunResult:
    """Run the closed loop described by ``sc``; deterministic for a given scenario.

    For intermittent runs with valid certificate constants the summary also
    carries the envelope violation count.

    Raises
    ------
    SimulationDiverged
        On a non-finite state or a singular attitude.
    """
    tel, events, requests = _simulate(sc)
    summary = summarize_metrics(tel, events, sc)
    if sc.controller_kind == "intermittent":
        consts = certificate_constants(sc)
        if consts.all_valid:
            summary.envelope_violations = envelope_check(tel.lyapunov_trace(), events, consts, sc.trigger).violation_count
        else:
            summary.warnings.append("certificate constants invalid: " + ", ".join(consts.failed()))
    return RunResult(sc, tel, events, requests, summary)


def run_periodic_baseline(sc: Scenario) -> RunResult:
    """Same loop with the command re-sampled every ``1 / periodic_rate`` s and the trigger bypassed."""
    if sc.controller_kind != "periodic":
        sc = sc.periodic_variant()
    return run_scenario(sc)
