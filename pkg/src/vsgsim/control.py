"""Grid-forming control stack.

Outer layer: reactive-power/voltage droop, active-power/frequency droop,
and a rotor-emulation (swing) integrator that produces the grid angle.
Middle layer: PI regulation of the DC-link voltage into a source-current
command.  Inner layer: cascaded voltage/current dq regulators with
cross-coupling decoupling and feedforward, ending in per-phase modulation
commands limited to the non-shoot-through interval.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from . import analysis, ynetwork
from .config import ControlParams, SystemParams, ValidatedConfig
from .errors import DcCollapse, NonPositive
from .transforms import Dq0, ThreePhase, abc_to_dq0, dq0_to_abc, synthesize_reference

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SwingState:
    """Rotor-emulation state: speed deviation, angle, and formed speed."""

    delta_omega: float = 0.0          # [rad/s]
    theta: float = 0.0                # wrapped to [0, 2*pi)
    omega_star: float = _TWO_PI * 60.0  # [rad/s]


@dataclass(frozen=True)
class PiState:
    """Accumulated integral of one PI loop [unit of error * s]."""

    integral: float = 0.0


@dataclass(frozen=True)
class ControlCommand:
    """Everything the power stage needs for one hold interval."""

    v_com_mag: float        # commanded bus voltage magnitude [V]
    p_com: float            # commanded active power [W]
    i_com: float            # commanded DC-side source current [A]
    v_ref_abc: ThreePhase   # inverter voltage reference [V]
    m_abc: ThreePhase       # per-phase modulation, |m| <= m_max
    clamped: bool           # True if any phase hit the modulation ceiling


def reactive_droop(q_ref: float, q_meas: float, k1: float, v_ref: float) -> float:
    """Voltage magnitude command from the reactive-power error."""
    return (q_ref - q_meas) * k1 + v_ref


def active_droop(f_ref: float, f_meas: float, k2: float, p_ref: float) -> float:
    """Active power command from the frequency error."""
    return (f_ref - f_meas) * k2 + p_ref


def swing_step(
    s: SwingState,
    p_com: float,
    p_meas: float,
    j_inertia: float,
    d_damping: float,
    f_ref: float,
    omega_meas: float,
    dt: float,
) -> SwingState:
    """One explicit-Euler step of the rotor emulation.

    The speed deviation integrates the torque imbalance (power divided by
    nominal speed) minus damping; the formed speed adds the deviation to
    ``omega_meas`` and the angle accumulates the formed speed.
    """
    if dt <= 0.0 or j_inertia <= 0.0:
        raise NonPositive(f"dt and inertia must be > 0, got dt={dt}, J={j_inertia}")
    accel = ((p_com - p_meas) / (_TWO_PI * f_ref) - d_damping * s.delta_omega) / j_inertia
    delta_omega = s.delta_omega + dt * accel
    omega_star = omega_meas + delta_omega
    theta = math.fmod(s.theta + omega_star * dt, _TWO_PI)
    if theta < 0.0:
        theta += _TWO_PI
    return SwingState(delta_omega=delta_omega, theta=theta, omega_star=omega_star)


def pi_step(
    s: PiState, error: float, kp: float, ki: float, dt: float, limit: float
) -> tuple[PiState, float]:
    """PI update with conditional integration.

    The integrator only advances while the resulting output stays inside
    ``[-limit, +limit]``; otherwise it is frozen and the output clamped, so
    a saturated loop does not wind up.
    """
    candidate = s.integral + error * dt
    out = kp * error + ki * candidate
    if -limit <= out <= limit:
        return PiState(integral=candidate), out
    out = kp * error + ki * s.integral
    return s, min(max(out, -limit), limit)


def capacitor_pi_step(
    s: PiState,
    vc2_ref: float,
    vc2_meas: float,
    p1: float,
    i1: float,
    dt: float,
    limit: float = math.inf,
) -> tuple[PiState, float]:
    """DC-link voltage PI producing the source-current command."""
    if dt <= 0.0:
        raise NonPositive(f"dt must be > 0, got {dt}")
    return pi_step(s, vc2_ref - vc2_meas, p1, i1, dt, limit)


@dataclass(frozen=True)
class DoubleLoopState:
    """Integrators of the cascaded dq voltage and current regulators."""

    v_d: PiState = PiState()
    v_q: PiState = PiState()
    v_0: PiState = PiState()
    i_d: PiState = PiState()
    i_q: PiState = PiState()
    i_0: PiState = PiState()


@dataclass(frozen=True)
class LoopGains:
    """Gains and plant constants consumed by :func:`double_loop_step`."""

    kp_v: float
    ki_v: float
    kp_i: float
    ki_i: float
    filter_c: float
    l_eff: float      # filter inductance plus averaged Thevenin inductance
    i_ref_max: float
    v_ref_max: float

    @classmethod
    def from_params(cls, system: SystemParams, control: ControlParams) -> "LoopGains":
        l_eff = system.filter_l + ynetwork.thevenin_inductance_avg(
            system.source_l, system.duty_d
        )
        return cls(
            kp_v=control.kp_v,
            ki_v=control.ki_v,
            kp_i=control.kp_i,
            ki_i=control.ki_i,
            filter_c=system.filter_c,
            l_eff=l_eff,
            i_ref_max=control.i_ref_max,
            v_ref_max=control.v_ref_max,
        )


def double_loop_step(
    states: DoubleLoopState,
    v_com_dq: Dq0,
    v_meas_dq: Dq0,
    i_meas_dq: Dq0,
    i_load_dq: Dq0,
    omega_star: float,
    gains: LoopGains,
    dt: float,
) -> tuple[DoubleLoopState, Dq0]:
    """Cascaded dq regulation producing the inverter voltage reference.

    Outer loop: PI on the bus-voltage error plus the rotating-frame
    capacitor-current decoupling and the load-current feedforward gives the
    inductor-current reference.  Inner loop: PI on the current error plus
    the inductor-voltage decoupling and the bus-voltage feedforward gives
    the voltage reference.  The zero channel is regulated to zero with no
    cross terms.
    """
    if dt <= 0.0:
        raise NonPositive(f"dt must be > 0, got {dt}")
    wc = omega_star * gains.filter_c
    v_d_s, u_d = pi_step(states.v_d, v_com_dq.d - v_meas_dq.d,
                         gains.kp_v, gains.ki_v, dt, gains.i_ref_max)
    v_q_s, u_q = pi_step(states.v_q, v_com_dq.q - v_meas_dq.q,
                         gains.kp_v, gains.ki_v, dt, gains.i_ref_max)
    v_0_s, u_0 = pi_step(states.v_0, -v_meas_dq.zero,
                         gains.kp_v, gains.ki_v, dt, gains.i_ref_max)
    i_ref = Dq0(
        u_d - wc * v_meas_dq.q + i_load_dq.d,
        u_q + wc * v_meas_dq.d + i_load_dq.q,
        u_0 + i_load_dq.zero,
    )

    wl = omega_star * gains.l_eff
    i_d_s, e_d = pi_step(states.i_d, i_ref.d - i_meas_dq.d,
                         gains.kp_i, gains.ki_i, dt, gains.v_ref_max)
    i_q_s, e_q = pi_step(states.i_q, i_ref.q - i_meas_dq.q,
                         gains.kp_i, gains.ki_i, dt, gains.v_ref_max)
    i_0_s, e_0 = pi_step(states.i_0, i_ref.zero - i_meas_dq.zero,
                         gains.kp_i, gains.ki_i, dt, gains.v_ref_max)
    v_ref = Dq0(
        e_d - wl * i_meas_dq.q + v_meas_dq.d,
        e_q + wl * i_meas_dq.d + v_meas_dq.q,
        e_0 + v_meas_dq.zero,
    )
    new_states = DoubleLoopState(
        v_d=v_d_s, v_q=v_q_s, v_0=v_0_s, i_d=i_d_s, i_q=i_q_s, i_0=i_0_s
    )
    return new_states, v_ref


def modulation_command(
    v_inv_ref_abc: ThreePhase, v_pn: float, m_max: float
) -> tuple[ThreePhase, bool]:
    """Per-phase modulation for the voltage reference at link voltage ``v_pn``.

    Returns the clamped command and a flag that is True when any phase hit
    the ceiling.
    """
    if v_pn <= 0.0:
        raise DcCollapse(f"link voltage must be > 0 for modulation, got {v_pn}")
    raw = [2.0 * v / v_pn for v in v_inv_ref_abc]
    clamped = any(abs(m) > m_max for m in raw)
    m = ThreePhase(*(min(max(v, -m_max), m_max) for v in raw))
    return m, clamped


@dataclass(frozen=True)
class Measurements:
    """Plant quantities sampled at one control instant."""

    v_pcc: ThreePhase     # bus voltages [V]
    i_inv: ThreePhase     # filter inductor currents [A]
    i_load: ThreePhase    # total load currents [A]
    v_c2: float           # DC-link voltage [V]


class _RollingMean:
    """Fixed-length running average with O(1) updates."""

    def __init__(self, length: int):
        self._buf: deque[float] = deque(maxlen=max(1, length))
        self._sum = 0.0

    def push(self, value: float) -> float:
        if len(self._buf) == self._buf.maxlen:
            self._sum -= self._buf[0]
        self._buf.append(value)
        self._sum += value
        return self._sum / len(self._buf)


class VsgController:
    """Single-writer state machine advancing the whole control stack.

    Frequency handling: the droop compares the nominal frequency against
    the frequency this controller itself formed one step earlier, while
    the swing integrator anchors the formed speed to the nominal value.
    Anchoring (rather than chaining the previous formed speed) keeps the
    load-dependent frequency offset set by the damping and droop gains
    instead of accumulating without bound.
    """

    def __init__(self, cfg: ValidatedConfig):
        self._sys = cfg.system
        self._ctl = cfg.control
        self._gains = LoopGains.from_params(cfg.system, cfg.control)
        self._omega_nom = _TWO_PI * cfg.system.f_ref
        self.swing = SwingState(omega_star=self._omega_nom)
        self.cap_pi = PiState()
        self.loops = DoubleLoopState()
        window = max(1, round(2.0 / cfg.system.f_ref / cfg.scenario.control_period))
        self._p_filter = _RollingMean(window)
        self._q_filter = _RollingMean(window)
        self.p_meas = 0.0
        self.q_meas = 0.0

    def step(self, meas: Measurements, dt: float, v_ref_scale: float = 1.0) -> ControlCommand:
        """Advance every loop by ``dt`` and emit the next hold commands."""
        ctl, sys_ = self._ctl, self._sys
        p_inst, q_inst = analysis.instantaneous_pq(
            meas.v_pcc, meas.i_load, self.swing.theta
        )
        self.p_meas = self._p_filter.push(p_inst)
        self.q_meas = self._q_filter.push(q_inst)

        v_com_mag = reactive_droop(
            ctl.q_ref, self.q_meas, ctl.k1_volt_droop, ctl.v_ref * v_ref_scale
        )
        if v_com_mag < 0.0:
            v_com_mag = 0.0
        f_meas = self.swing.omega_star / _TWO_PI
        p_com = active_droop(sys_.f_ref, f_meas, ctl.k2_power_droop, ctl.p_ref)
        self.swing = swing_step(
            self.swing, p_com, self.p_meas, ctl.j_inertia, ctl.d_damping,
            sys_.f_ref, self._omega_nom, dt,
        )
        theta = self.swing.theta

        self.cap_pi, i_com = capacitor_pi_step(
            self.cap_pi, ctl.vc2_ref, meas.v_c2, ctl.p1_gain, ctl.i1_gain,
            dt, limit=ctl.i_com_max,
        )

        v_com_dq = abc_to_dq0(synthesize_reference(v_com_mag, theta), theta)
        v_meas_dq = abc_to_dq0(meas.v_pcc, theta)
        i_meas_dq = abc_to_dq0(meas.i_inv, theta)
        i_load_dq = abc_to_dq0(meas.i_load, theta)
        self.loops, v_ref_dq = double_loop_step(
            self.loops, v_com_dq, v_meas_dq, i_meas_dq, i_load_dq,
            self.swing.omega_star, self._gains, dt,
        )
        v_ref_abc = dq0_to_abc(v_ref_dq, theta)
        m_abc, clamped = modulation_command(v_ref_abc, meas.v_c2, ctl.m_max)
        return ControlCommand(
            v_com_mag=v_com_mag,
            p_com=p_com,
            i_com=i_com,
            v_ref_abc=v_ref_abc,
            m_abc=m_abc,
            clamped=clamped,
        )
