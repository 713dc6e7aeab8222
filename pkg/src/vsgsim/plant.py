"""Three-phase averaged network behind the inverter terminals.

The inverter is an ideal controlled voltage source feeding an L filter
into the common bus, which carries per-phase shunt capacitors and a set
of switchable balanced loads.  Resistive loads are algebraic; loads with
series inductance carry their own current state.  AC states advance with
classical fixed-step RK4; the DC side advances with the slew-limited
Euler step of :mod:`vsgsim.ynetwork` inside the same step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .config import Event, LoadSpec, SystemParams
from .errors import NumericBlowup, UnknownLoad
from .ynetwork import DcState, dc_side_step

logger = logging.getLogger(__name__)

BLOWUP_LIMIT = 1e9

# Array-like per-phase triple used on the hot path instead of ThreePhase.
ThreePhaseArray = np.ndarray


@dataclass(frozen=True)
class NetworkConfig:
    """Declared load roster plus the set currently connected."""

    loads: tuple[LoadSpec, ...]
    connected: frozenset[str]

    @classmethod
    def from_scenario_loads(cls, loads: tuple[LoadSpec, ...]) -> "NetworkConfig":
        connected = frozenset(l.load_id for l in loads if l.initially_connected)
        return cls(loads=loads, connected=connected)

    def rl_loads(self) -> tuple[LoadSpec, ...]:
        """Loads with series inductance, in declared order (state row order)."""
        return tuple(l for l in self.loads if l.l_henries > 0.0)

    def conductance(self) -> float:
        """Total per-phase conductance of the connected resistive loads."""
        return sum(
            1.0 / l.r_ohms
            for l in self.loads
            if l.l_henries == 0.0 and l.load_id in self.connected
        )


def apply_event(net: NetworkConfig, event: Event) -> NetworkConfig:
    """Connect or disconnect one declared load; redundant events warn."""
    if event.load_id not in {l.load_id for l in net.loads}:
        raise UnknownLoad(f"event references undeclared load {event.load_id!r}")
    if event.action == "connect":
        if event.load_id in net.connected:
            logger.warning("connect ignored: load %r already connected", event.load_id)
            return net
        return replace(net, connected=net.connected | {event.load_id})
    if event.load_id not in net.connected:
        logger.warning("disconnect ignored: load %r not connected", event.load_id)
        return net
    return replace(net, connected=net.connected - {event.load_id})


@dataclass
class PlantState:
    """AC network states plus the DC side."""

    i_filter: np.ndarray      # (3,) filter inductor currents [A]
    v_pcc: np.ndarray         # (3,) bus capacitor voltages [V]
    i_load_rl: np.ndarray     # (n_rl, 3) inductive branch currents [A]
    dc: DcState

    @classmethod
    def zeros(cls, net: NetworkConfig, dc: DcState) -> "PlantState":
        n_rl = len(net.rl_loads())
        return cls(
            i_filter=np.zeros(3),
            v_pcc=np.zeros(3),
            i_load_rl=np.zeros((n_rl, 3)),
            dc=dc,
        )

    def pack(self) -> np.ndarray:
        return np.concatenate([self.i_filter, self.v_pcc, self.i_load_rl.ravel()])

    def with_ac(self, y: np.ndarray) -> "PlantState":
        n_rl = self.i_load_rl.shape[0]
        return PlantState(
            i_filter=y[0:3].copy(),
            v_pcc=y[3:6].copy(),
            i_load_rl=y[6 : 6 + 3 * n_rl].reshape(n_rl, 3).copy(),
            dc=self.dc,
        )


def _branch_table(net: NetworkConfig) -> tuple[tuple[bool, float, float], ...]:
    """(connected, R, L) per inductive branch, in state-row order."""
    return tuple(
        (l.load_id in net.connected, l.r_ohms, l.l_henries) for l in net.rl_loads()
    )


def _derivatives_flat(
    y: np.ndarray,
    v_inv: np.ndarray,
    g_total: float,
    branches: tuple[tuple[bool, float, float], ...],
    filter_l: float,
    filter_c: float,
    out: np.ndarray,
) -> np.ndarray:
    i_f = y[0:3]
    v = y[3:6]
    out[0:3] = (v_inv - v) / filter_l
    i_loads = g_total * v
    for row, (conn, r, l) in enumerate(branches):
        sl = slice(6 + 3 * row, 9 + 3 * row)
        if conn:
            i_rl = y[sl]
            out[sl] = (v - r * i_rl) / l
            i_loads = i_loads + i_rl
        else:
            out[sl] = 0.0
    out[3:6] = (i_f - i_loads) / filter_c
    return out


def plant_derivatives(
    state: PlantState,
    v_inv: ThreePhaseArray,
    net: NetworkConfig,
    params: SystemParams,
) -> PlantState:
    """Time derivative of the AC states (DC derivative handled separately).

    Returned as a :class:`PlantState` whose array fields hold d/dt values;
    the ``dc`` field is carried through unchanged.
    """
    y = state.pack()
    out = np.empty_like(y)
    _derivatives_flat(
        y,
        np.asarray(v_inv, dtype=float),
        net.conductance(),
        _branch_table(net),
        params.filter_l,
        params.filter_c,
        out,
    )
    return state.with_ac(out)


def rk4(f, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step of an autonomous system."""
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(
    state: PlantState,
    v_inv: ThreePhaseArray,
    i_com: float,
    net: NetworkConfig,
    params: SystemParams,
    dt: float,
) -> PlantState:
    """Advance the whole plant by ``dt`` with all inputs held constant.

    The AC states take one RK4 step; the DC side takes its Euler step in
    the same interval, fed with the inverter power drawn at the start of
    the step.
    """
    v_inv = np.asarray(v_inv, dtype=float)
    g_total = net.conductance()
    branches = _branch_table(net)
    scratch = np.empty(6 + 3 * state.i_load_rl.shape[0])

    def f(y: np.ndarray) -> np.ndarray:
        return _derivatives_flat(
            y, v_inv, g_total, branches, params.filter_l, params.filter_c,
            np.empty_like(scratch),
        )

    y_new = rk4(f, state.pack(), dt)
    if not np.all(np.isfinite(y_new)) or np.max(np.abs(y_new)) > BLOWUP_LIMIT:
        raise NumericBlowup(
            f"plant state left the plausible range (max |y| = {np.max(np.abs(y_new))})"
        )
    p_inverter = float(v_inv @ state.i_filter)
    new_state = state.with_ac(y_new)
    new_state.dc = dc_side_step(state.dc, i_com, p_inverter, params, dt)
    return new_state


def load_current(state: PlantState, net: NetworkConfig) -> np.ndarray:
    """Total per-phase current drawn by the connected loads."""
    i = net.conductance() * state.v_pcc
    for row, (conn, _r, _l) in enumerate(_branch_table(net)):
        if conn:
            i = i + state.i_load_rl[row]
    return i


def zero_branch(state: PlantState, net: NetworkConfig, load_id: str) -> None:
    """Force the stored current of one inductive branch to zero in place."""
    for row, load in enumerate(net.rl_loads()):
        if load.load_id == load_id:
            state.i_load_rl[row] = 0.0
