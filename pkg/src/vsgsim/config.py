"""Parameter definitions, validation, and the TOML config loader.

Every physical and controller constant lives in one of three frozen
dataclasses.  ``validate`` checks the full contract and reports *all*
violations at once; a :class:`ValidatedConfig` is immutable and safe to
share between parallel scenario runs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass

from .errors import (
    ConfigValidationError,
    DutyBeyondPole,
    GainBelowUnity,
    ModulationOverlap,
    NonPositive,
    ScenarioInvalid,
    SimError,
    UnknownLoad,
)

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the power stage (SI units)."""

    v_dc: float = 400.0            # DC supply voltage [V]
    duty_d: float = 1.0 / 12.0     # shoot-through duty ratio, [0, pole)
    k_winding: float = 1.0         # impedance-network winding constant K
    p_winding: float = 1.0         # impedance-network winding constant P
    f_sw: float = 18_000.0         # switching / control rate [Hz]
    f_ref: float = 60.0            # nominal grid frequency [Hz]
    v_pcc_nominal: float = 480.0   # nominal bus voltage, line-to-line RMS [V]
    filter_l: float = 2e-3         # output filter inductance per phase [H]
    filter_c: float = 1e-5         # bus shunt capacitance per phase [F]
    dc_cap: float = 1e-2           # averaged DC-link capacitance [F]
    source_l: float = 2e-3         # input inductance bounding input-current slope [H]
    loss_r: float = 0.0            # optional series resistance on the DC input [ohm]


@dataclass(frozen=True)
class ControlParams:
    """Controller gains, references, and command clamps."""

    k1_volt_droop: float = 1e-4    # volts per var of reactive error
    p1_gain: float = 100.0         # DC-link voltage PI, proportional [A/V]
    i1_gain: float = 30.0          # DC-link voltage PI, integral [A/(V s)]
    k2_power_droop: float = 1000.0  # watts per Hz of frequency error
    j_inertia: float = 0.5         # virtual rotor inertia [kg m^2]
    d_damping: float = 20.0        # virtual damping coefficient
    q_ref: float = 0.0             # reactive power reference [var]
    p_ref: float = 6000.0          # active power reference [W]
    v_ref: float = 216.0           # bus voltage magnitude reference, phase peak [V]
    vc2_ref: float = 480.0         # DC-link voltage reference [V]
    kp_v: float = 0.01             # outer voltage loop, proportional [A/V]
    ki_v: float = 2.0              # outer voltage loop, integral [A/(V s)]
    kp_i: float = 15.0             # inner current loop, proportional [V/A]
    ki_i: float = 10_000.0         # inner current loop, integral [V/(A s)]
    m_max: float = 1.0 - 1.0 / 12.0  # per-phase modulation ceiling
    i_com_max: float = 150.0       # DC-side current command clamp [A]
    i_ref_max: float = 100.0       # dq current reference clamp [A]
    v_ref_max: float = 500.0       # dq inverter voltage reference clamp [V]


@dataclass(frozen=True)
class LoadSpec:
    """One switchable balanced load: series R (and optional L) per phase."""

    load_id: str
    r_ohms: float
    l_henries: float = 0.0
    initially_connected: bool = False


@dataclass(frozen=True)
class Event:
    """Connect or disconnect a declared load at a point in time."""

    time: float
    action: str  # "connect" | "disconnect"
    load_id: str


@dataclass(frozen=True)
class Scenario:
    """Integration timeline: step sizes, horizon, loads, and events."""

    dt: float = 2e-5
    t_end: float = 1.2
    control_period: float = 1.0 / 18_000.0
    loads: tuple[LoadSpec, ...] = ()
    events: tuple[Event, ...] = ()


@dataclass(frozen=True)
class ValidatedConfig:
    """Immutable bundle of parameters that passed :func:`validate`."""

    system: SystemParams
    control: ControlParams
    scenario: Scenario


def gain_pole(k_winding: float, p_winding: float) -> float:
    """Duty ratio at which the DC-link voltage gain diverges."""
    return (1.0 + p_winding) / (2.0 + p_winding + k_winding)


def solve_duty(b_target: float, k_winding: float, p_winding: float) -> float:
    """Shoot-through duty that produces DC-link gain ``b_target``.

    Inverse of the static gain law; the result is always strictly below the
    gain pole for any ``b_target`` >= 1.
    """
    if k_winding <= 0.0 or p_winding <= 0.0:
        raise NonPositive(
            f"winding constants must be > 0, got K={k_winding}, P={p_winding}"
        )
    if b_target < 1.0:
        raise GainBelowUnity(f"gain target must be >= 1, got {b_target}")
    return (1.0 + p_winding) * (1.0 - 1.0 / b_target) / (2.0 + p_winding + k_winding)


def _check_positive(violations: list, name: str, value: float) -> None:
    if not value > 0.0:
        violations.append(NonPositive(f"{name} must be > 0, got {value}"))


def _validate_system(s: SystemParams, violations: list) -> None:
    for name in ("v_dc", "f_ref", "filter_l", "filter_c", "dc_cap",
                 "source_l", "k_winding", "p_winding"):
        _check_positive(violations, f"system.{name}", getattr(s, name))
    if s.loss_r < 0.0:
        violations.append(NonPositive(f"system.loss_r must be >= 0, got {s.loss_r}"))
    if s.f_ref > 0.0 and s.f_sw < 100.0 * s.f_ref:
        violations.append(NonPositive(
            f"system.f_sw must be >= 100*f_ref ({100.0 * s.f_ref}), got {s.f_sw}"))
    if s.duty_d < 0.0:
        violations.append(NonPositive(f"system.duty_d must be >= 0, got {s.duty_d}"))
    elif s.k_winding > 0.0 and s.p_winding > 0.0:
        pole = gain_pole(s.k_winding, s.p_winding)
        if s.duty_d >= pole:
            violations.append(DutyBeyondPole(
                f"system.duty_d={s.duty_d} at or beyond the gain pole {pole}"))


def _validate_control(c: ControlParams, s: SystemParams, violations: list) -> None:
    _check_positive(violations, "control.j_inertia", c.j_inertia)
    _check_positive(violations, "control.d_damping", c.d_damping)
    _check_positive(violations, "control.m_max", c.m_max)
    _check_positive(violations, "control.i_com_max", c.i_com_max)
    _check_positive(violations, "control.i_ref_max", c.i_ref_max)
    _check_positive(violations, "control.v_ref_max", c.v_ref_max)
    if c.v_ref < 0.0:
        violations.append(NonPositive(f"control.v_ref must be >= 0, got {c.v_ref}"))
    _check_positive(violations, "control.vc2_ref", c.vc2_ref)
    if c.m_max > 1.0 - s.duty_d:
        violations.append(ModulationOverlap(
            f"control.m_max={c.m_max} exceeds 1 - duty_d = {1.0 - s.duty_d}"))


def _validate_scenario(sc: Scenario, violations: list) -> None:
    _check_positive(violations, "scenario.dt", sc.dt)
    _check_positive(violations, "scenario.t_end", sc.t_end)
    _check_positive(violations, "scenario.control_period", sc.control_period)
    if sc.dt > sc.control_period:
        violations.append(ScenarioInvalid(
            f"scenario.dt={sc.dt} must not exceed control_period={sc.control_period}"))
    seen: set[str] = set()
    for load in sc.loads:
        if load.load_id in seen:
            violations.append(ScenarioInvalid(f"duplicate load id {load.load_id!r}"))
        seen.add(load.load_id)
        _check_positive(violations, f"load {load.load_id!r} r_ohms", load.r_ohms)
        if load.l_henries < 0.0:
            violations.append(NonPositive(
                f"load {load.load_id!r} l_henries must be >= 0, got {load.l_henries}"))
    last_t = -math.inf
    for ev in sc.events:
        if ev.action not in ("connect", "disconnect"):
            violations.append(ScenarioInvalid(
                f"event action must be connect|disconnect, got {ev.action!r}"))
        if ev.load_id not in seen:
            violations.append(UnknownLoad(
                f"event references undeclared load {ev.load_id!r}"))
        if not 0.0 <= ev.time <= sc.t_end:
            violations.append(ScenarioInvalid(
                f"event time {ev.time} outside [0, {sc.t_end}]"))
        if ev.time < last_t:
            violations.append(ScenarioInvalid(
                f"events not sorted by time (saw {ev.time} after {last_t})"))
        last_t = max(last_t, ev.time)


def validate(system, control=None, scenario=None) -> ValidatedConfig:
    """Check every invariant and return a :class:`ValidatedConfig`.

    Accepts either the three parameter groups or an already-validated
    config (which is re-checked and returned unchanged, so validation is
    idempotent).  On failure raises :class:`ConfigValidationError` carrying
    the complete list of violations.
    """
    if isinstance(system, ValidatedConfig) and control is None and scenario is None:
        cfg = system
        validate(cfg.system, cfg.control, cfg.scenario)
        return cfg
    if control is None or scenario is None:
        raise TypeError("validate() needs SystemParams, ControlParams and Scenario")

    violations: list[SimError] = []
    _validate_system(system, violations)
    _validate_control(control, system, violations)
    _validate_scenario(scenario, violations)
    if violations:
        raise ConfigValidationError(violations)
    return ValidatedConfig(system=system, control=control, scenario=scenario)


def default_config() -> ValidatedConfig:
    """The shipped operating point: 6 kW base load, 2 kW / 0.8 pf load step.

    The duty ratio realizes a DC-link gain of 1.2 from the 400 V supply, and
    the voltage reference is the largest peak the modulator can deliver at
    that gain with a 0.9 index.  Loads are sized to draw 6 kW steady and
    8 kW while the inductive load is connected, with the step applied at
    0.4 s and removed at 0.8 s.
    """
    system = SystemParams()
    b = 1.2
    v_ref = 0.9 * b * system.v_dc / 2.0           # 216 V phase peak
    vrms_sq = v_ref * v_ref / 2.0
    r_base = 3.0 * vrms_sq / 6000.0               # 6 kW resistive
    z_ind = 3.0 * vrms_sq / 2500.0                # 2 kW at 0.8 pf -> 2.5 kVA
    r_ind = 0.8 * z_ind
    l_ind = 0.6 * z_ind / (2.0 * math.pi * system.f_ref)
    control = ControlParams(v_ref=v_ref, vc2_ref=b * system.v_dc)
    scenario = Scenario(
        loads=(
            LoadSpec("base", r_ohms=r_base, initially_connected=True),
            LoadSpec("inductive", r_ohms=r_ind, l_henries=l_ind),
        ),
        events=(
            Event(0.4, "connect", "inductive"),
            Event(0.8, "disconnect", "inductive"),
        ),
    )
    return validate(system, control, scenario)


_SECTION_TYPES = {"system": SystemParams, "control": ControlParams}


def _build_strict(cls, data: dict, where: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigValidationError([
            ScenarioInvalid(f"unknown key {k!r} in [{where}]") for k in sorted(unknown)
        ])
    coerced = {}
    for key, value in data.items():
        # TOML integer literals are fine where a float is expected
        if fields[key].type == "float" and isinstance(value, int) \
                and not isinstance(value, bool):
            value = float(value)
        coerced[key] = value
    return cls(**coerced)


def _build_scenario(data: dict) -> Scenario:
    data = dict(data)
    loads = tuple(
        _build_strict(LoadSpec, entry, "scenario.loads")
        for entry in data.pop("loads", [])
    )
    events = tuple(
        _build_strict(Event, entry, "scenario.events")
        for entry in data.pop("events", [])
    )
    base = _build_strict(Scenario, data, "scenario")
    return dataclasses.replace(base, loads=loads, events=events)


def load_config(path) -> ValidatedConfig:
    """Parse a TOML config file and validate it.  Unknown keys are fatal."""
    with open(path, "rb") as fh:
        try:
            raw = _toml.load(fh)
        except _toml.TOMLDecodeError as exc:
            raise ConfigValidationError(
                [ScenarioInvalid(f"TOML parse error in {path}: {exc}")]
            ) from exc
    unknown = set(raw) - {"system", "control", "scenario"}
    if unknown:
        raise ConfigValidationError([
            ScenarioInvalid(f"unknown table {k!r} at top level") for k in sorted(unknown)
        ])
    system = _build_strict(SystemParams, raw.get("system", {}), "system")
    control = _build_strict(ControlParams, raw.get("control", {}), "control")
    scenario = _build_scenario(raw.get("scenario", {}))
    return validate(system, control, scenario)


def config_digest(cfg: ValidatedConfig) -> str:
    """Stable hash of every parameter, for run metadata."""
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()
