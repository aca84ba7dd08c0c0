"""JSON scenario configuration with unit-suffixed field names.

Degrees appear only where the scenario is naturally stated in degrees
(reference-rate amplitude, rate limit); they are converted to radians once,
in :meth:`ScenarioConfig.build`.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .attitude import InertiaModel, InvalidInputError
from .controller import ControllerGains
from .plant import DisturbanceModel, ReferenceTrajectory
from .simkit import Scenario
from .trigger import HoldMode, TriggerParams

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]


class ConfigError(ValueError):
    """Malformed configuration; ``path`` is the dotted field path (e.g. ``gains.P_b``)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _unit_quat(q: Quat) -> Quat:
    n = math.sqrt(sum(x * x for x in q))
    if not math.isfinite(n) or abs(n - 1.0) > 1e-3:
        raise ValueError(f"quaternion norm {n:.6g} is not 1")
    return q


class InertiaSection(_Section):
    J_kgm2: tuple[Vec3, Vec3, Vec3] = ((2.8, 0.002, 0.0076), (0.002, 2.6, 0.01), (0.0076, 0.01, 1.9))

    @field_validator("J_kgm2")
    @classmethod
    def _check(cls, J):
        try:
            model = InertiaModel(J)
        except (InvalidInputError, ValueError) as exc:
            raise ValueError(str(exc)) from None
        if model.lambda_min <= 0.0:
            raise ValueError("inertia must be positive definite")
        return J


class InitialSection(_Section):
    q_s0: Quat = (0.4367, 0.4927, 0.5035, 0.5595)
    omega_s0_rad_s: Vec3 = (0.0, 0.0, 0.0)

    _q = field_validator("q_s0")(_unit_quat)


class ReferenceSection(_Section):
    q_d0: Quat = (0.0, 0.0, 0.0, 1.0)
    amplitude_deg_s: float = 0.3
    period_x_s: float = Field(80.0, gt=0)
    period_yz_s: float = Field(100.0, gt=0)

    _q = field_validator("q_d0")(_unit_quat)


class DisturbanceSection(_Section):
    omega_dis_rad_s: float = 0.01
    scale_Nm: float = Field(1e-4, ge=0)


class GainsSection(_Section):
    M_omega_rad_s: float = Field(0.0175, gt=0)
    P_b: float = Field(0.6, gt=0, lt=1)
    K_omega_Nms_rad: Vec3 = (14.0, 13.0, 9.5)
    K_u: float = Field(0.5, gt=0)
    K_tau: float = Field(1.0, gt=0)
    p1: float = Field(2.0, gt=0)
    p2: float = Field(2.0, gt=0)
    D_m_Nm: float = Field(2e-3, gt=0)
    mu_rad_s: Vec3 = (0.01, 0.01, 0.01)
    b1: float = Field(1.0, gt=0)
    b2: float = Field(0.002, gt=0)
    U_max_Nm: float = Field(0.05, gt=0)
    eps_xi: float = Field(1e-6, gt=0)
    ff_mode: Literal["inertia-weighted", "bare"] = "inertia-weighted"

    @field_validator("K_omega_Nms_rad", "mu_rad_s")
    @classmethod
    def _positive(cls, v):
        if min(v) <= 0.0:
            raise ValueError("entries must be positive")
        return v

    def build(self, K_omega: Optional[Vec3] = None) -> ControllerGains:
        return ControllerGains(
            M_omega=self.M_omega_rad_s,
            P_b=self.P_b,
            K_omega=K_omega or self.K_omega_Nms_rad,
            K_u=self.K_u,
            K_tau=self.K_tau,
            p1=self.p1,
            p2=self.p2,
            D_m=self.D_m_Nm,
            mu=self.mu_rad_s,
            b1=self.b1,
            b2=self.b2,
            U_max=self.U_max_Nm,
            eps_xi=self.eps_xi,
            ff_mode=self.ff_mode,
        )


class TriggerSection(_Section):
    a_Nm2: float = Field(0.1, gt=0)
    b_Nm2: float = Field(1e-4, gt=0)
    beta_1_s: float = Field(0.2, gt=0)
    rho0_rad2_s2: float = Field(1e-3, gt=0)
    rho_inf_rad2_s2: float = Field(1e-5, gt=0)
    gamma_1_s: float = Field(0.1, gt=0)
    T_max_s: float = Field(10.0, gt=0)
    judgment_period_s: float = Field(0.1, gt=0)
    actuation_grid_s: float = Field(1.0, ge=0)
    hold: Literal["from-turn-on", "per-control-period"] = "from-turn-on"

    @model_validator(mode="after")
    def _rho_order(self):
        if not self.rho0_rad2_s2 > self.rho_inf_rad2_s2:
            raise ValueError("rho_inf_rad2_s2: must be smaller than rho0_rad2_s2")
        return self

    def build(self) -> TriggerParams:
        return TriggerParams(
            a=self.a_Nm2,
            b=self.b_Nm2,
            beta=self.beta_1_s,
            rho0=self.rho0_rad2_s2,
            rho_inf=self.rho_inf_rad2_s2,
            gamma=self.gamma_1_s,
            T_max=self.T_max_s,
            judgment_period=self.judgment_period_s,
            actuation_grid=self.actuation_grid_s,
        )


class SimulationSection(_Section):
    dt_s: float = Field(0.1, gt=0)
    duration_s: float = Field(150.0, gt=0)
    Omega_max_deg_s: float = Field(3.0, gt=0)
    controller_kind: Literal["intermittent", "periodic"] = "intermittent"
    q_e0_min: Optional[float] = Field(None, gt=0, le=1)


class PeriodicSection(_Section):
    rate_Hz: float = Field(1.0, gt=0)
    K_omega_Nms_rad: Optional[Vec3] = (1.5, 1.5, 1.5)


class ScenarioConfig(_Section):
    inertia: InertiaSection = InertiaSection()
    initial: InitialSection = InitialSection()
    reference: ReferenceSection = ReferenceSection()
    disturbance: DisturbanceSection = DisturbanceSection()
    gains: GainsSection = GainsSection()
    trigger: TriggerSection = TriggerSection()
    simulation: SimulationSection = SimulationSection()
    periodic: PeriodicSection = PeriodicSection()

    @model_validator(mode="after")
    def _grids(self):
        # step sizes must nest: dt | judgment period | actuation grid
        dt, jp, grid = self.simulation.dt_s, self.trigger.judgment_period_s, self.trigger.actuation_grid_s
        if not _divides(dt, jp):
            raise ValueError("simulation.dt_s: must divide trigger.judgment_period_s")
        if grid > 0.0 and not _divides(jp, grid):
            raise ValueError("trigger.actuation_grid_s: must be a multiple of trigger.judgment_period_s")
        if not _divides(jp, 1.0 / self.periodic.rate_Hz):
            raise ValueError("periodic.rate_Hz: period must be a multiple of trigger.judgment_period_s")
        return self

    def build(self) -> Scenario:
        """Resolve into an SI-unit :class:`~intermittent_attitude.simkit.Scenario`."""
        return Scenario(
            inertia=InertiaModel(self.inertia.J_kgm2),
            q_s0=self.initial.q_s0,
            omega_s0=self.initial.omega_s0_rad_s,
            reference=ReferenceTrajectory(
                q_d0=self.reference.q_d0,
                amplitude_deg_s=self.reference.amplitude_deg_s,
                period_x_s=self.reference.period_x_s,
                period_yz_s=self.reference.period_yz_s,
            ),
            disturbance=DisturbanceModel(self.disturbance.omega_dis_rad_s, self.disturbance.scale_Nm),
            gains=self.gains.build(),
            trigger=self.trigger.build(),
            hold=HoldMode(self.trigger.hold),
            dt=self.simulation.dt_s,
            duration=self.simulation.duration_s,
            Omega_max=math.radians(self.simulation.Omega_max_deg_s),
            controller_kind=self.simulation.controller_kind,
            periodic_rate=self.periodic.rate_Hz,
            periodic_K_omega=self.periodic.K_omega_Nms_rad,
            q_e0_min=self.simulation.q_e0_min,
        )

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2)


def _divides(small: float, big: float) -> bool:
    k = round(big / small)
    return k >= 1 and abs(big - k * small) <= 1e-9 * big


def _first_error(exc: ValidationError) -> ConfigError:
    err = exc.errors()[0]
    loc = [str(p) for p in err["loc"] if not isinstance(p, int)]
    msg = err["msg"].removeprefix("Value error, ")
    head, sep, rest = msg.partition(": ")
    if sep and " " not in head:
        # model-level checks name the offending field relative to their section
        loc, msg = loc + head.split("."), rest
    return ConfigError(".".join(loc), msg)


def parse_config(data) -> ScenarioConfig:
    """Validate a decoded JSON document.

    Raises
    ------
    ConfigError
        With the dotted path of the first offending field.
    """
    if not isinstance(data, dict):
        raise ConfigError("", "top level must be a JSON object")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise _first_error(exc) from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path}: {exc.msg} (line {exc.lineno})") from None
    return parse_config(data)


def default_config_path():
    return resources.files("intermittent_attitude") / "data" / "default_scenario.json"


def default_config() -> ScenarioConfig:
    return parse_config(json.loads(default_config_path().read_text(encoding="utf-8")))
