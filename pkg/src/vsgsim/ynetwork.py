"""Averaged electrical model of the impedance network and DC side.

Static gain laws of the coupled-inductor boost stage, the per-state
Thevenin reactance of the network inductors, and a power-balance DC-link
dynamic whose input current is slew-limited by the source inductance, so
it stays continuous by construction.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

from .config import SystemParams
from .errors import DcCollapse, ModulationOverlap, NonPositive, PoleCrossed

# Thevenin reactance multipliers of the network inductors in the two
# switching states of a period.
ST_THEVENIN_FACTOR = 2.0 / 3.0
NST_THEVENIN_FACTOR = 5.0 / 3.0

# Fraction of the supply voltage below which the DC link is considered lost.
DC_COLLAPSE_FRACTION = 0.1


class SwitchState(enum.Enum):
    SHOOT_THROUGH = "shoot_through"
    NON_SHOOT_THROUGH = "non_shoot_through"


class DcState(NamedTuple):
    """Averaged DC-side state: link voltage and source current."""

    v_c2: float   # DC-link voltage [V]
    i_in: float   # input / source current [A]


def boost_factor(duty_d: float, k_winding: float, p_winding: float) -> float:
    """Static DC-link voltage gain for shoot-through duty ``duty_d``."""
    if duty_d < 0.0:
        raise NonPositive(f"duty must be >= 0, got {duty_d}")
    denom = (1.0 - duty_d) * (1.0 + p_winding) - duty_d * (1.0 + k_winding)
    if denom <= 0.0:
        raise PoleCrossed(
            f"gain denominator {denom} <= 0 at duty={duty_d}, "
            f"K={k_winding}, P={p_winding}"
        )
    return (1.0 + p_winding) / denom


def ac_peak_voltage(
    m_index: float,
    duty_d: float,
    k_winding: float,
    p_winding: float,
    v_dc: float,
) -> float:
    """Peak phase voltage the inverter can synthesize at index ``m_index``."""
    if m_index < 0.0:
        raise NonPositive(f"modulation index must be >= 0, got {m_index}")
    if m_index > 1.0 - duty_d:
        raise ModulationOverlap(
            f"modulation index {m_index} exceeds 1 - duty = {1.0 - duty_d}"
        )
    return 0.5 * m_index * boost_factor(duty_d, k_winding, p_winding) * v_dc


def thevenin_reactance(x_l: float, state: SwitchState) -> float:
    """Thevenin-equivalent reactance of the network inductors per state."""
    if x_l <= 0.0:
        raise NonPositive(f"inductive reactance must be > 0, got {x_l}")
    if state is SwitchState.SHOOT_THROUGH:
        return ST_THEVENIN_FACTOR * x_l
    return NST_THEVENIN_FACTOR * x_l


def thevenin_inductance_avg(l_network: float, duty_d: float) -> float:
    """Duty-weighted average of the per-state Thevenin factors.

    The multipliers act on reactance, hence equally on inductance at fixed
    frequency; the average is what the current-loop decoupling sees in
    series with the output filter.
    """
    if l_network <= 0.0:
        raise NonPositive(f"network inductance must be > 0, got {l_network}")
    factor = duty_d * ST_THEVENIN_FACTOR + (1.0 - duty_d) * NST_THEVENIN_FACTOR
    return factor * l_network


def dc_side_step(
    state: DcState,
    i_com: float,
    p_inverter: float,
    params: SystemParams,
    dt: float,
) -> DcState:
    """Advance the DC side one explicit-Euler step of length ``dt``.

    The input current slews toward ``i_com`` no faster than v_dc/source_l,
    and the link voltage integrates the power balance between what the
    source delivers (minus the optional series-resistance loss) and what
    the inverter draws.
    """
    if dt <= 0.0:
        raise NonPositive(f"dt must be > 0, got {dt}")
    if state.v_c2 <= 0.0:
        raise DcCollapse(f"link voltage must be > 0, got {state.v_c2}")
    max_di = (params.v_dc / params.source_l) * dt
    di = min(max(i_com - state.i_in, -max_di), max_di)
    i_new = state.i_in + di
    p_source = params.v_dc * i_new - params.loss_r * i_new * i_new
    v_new = state.v_c2 + dt * (p_source - p_inverter) / (params.dc_cap * state.v_c2)
    if v_new < DC_COLLAPSE_FRACTION * params.v_dc:
        raise DcCollapse(
            f"DC link fell to {v_new:.3f} V "
            f"(< {DC_COLLAPSE_FRACTION * params.v_dc:.1f} V floor)"
        )
    return DcState(v_c2=v_new, i_in=i_new)
