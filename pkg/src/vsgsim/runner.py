"""Scenario orchestration: config -> plant -> control -> analysis -> files.

One call to :func:`run_scenario` executes the whole timeline
deterministically from a zero initial state: the plant integrates at the
scenario ``dt``, the controller runs at ``control_period`` with its
commands zero-order-held in between, events snap to the nearest step
boundary, and every telemetry channel is sampled at a configurable
decimation.  Per-window summary metrics are computed from the sampled
channels themselves, so the JSON summary is exactly recomputable from the
CSV.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import __version__
from .analysis import (
    MeasurementWindow,
    WindowMetrics,
    efficiency,
    instantaneous_pq,
    rms,
    thd,
)
from .config import Scenario, ValidatedConfig, config_digest, validate
from .control import Measurements, VsgController
from .errors import DcCollapse, IoFailure, NumericBlowup
from .plant import (
    NetworkConfig,
    PlantState,
    apply_event,
    load_current,
    rk4_step,
    zero_branch,
)
from .transforms import ThreePhase
from .ynetwork import DcState

SOFT_START_RAMP_S = 0.05     # voltage reference ramp from zero at t = 0
STARTUP_SETTLE_S = 0.25      # dead time before the first steady window
EVENT_SETTLE_S = 0.15        # dead time after each event
WINDOW_END_MARGIN_S = 0.01   # gap kept before the next event / end of run
MIN_WINDOW_S = 0.05          # windows shorter than this are dropped

CHANNELS = (
    "v_pcc_a", "v_pcc_b", "v_pcc_c",
    "i_inv_a", "i_inv_b", "i_inv_c",
    "i_load_a", "i_load_b", "i_load_c",
    "v_inv_a", "v_inv_b", "v_inv_c",
    "v_c2", "i_in",
    "p_pcc", "q_pcc", "p_inv", "p_dc_in",
    "f_est",
    "v_com_mag", "p_com", "i_com",
    "delta_omega", "theta",
    "m_a", "m_b", "m_c", "clamp_flag",
)


@dataclass(frozen=True)
class WindowSummary:
    label: str
    t_start: float
    t_end: float
    metrics: WindowMetrics


@dataclass
class SimOutput:
    """Sampled channel time series plus per-window summary metrics."""

    time: np.ndarray
    channels: dict[str, np.ndarray]
    windows: list[WindowSummary]
    meta: dict

    def __post_init__(self):
        n = len(self.time)
        for name, arr in self.channels.items():
            if len(arr) != n:
                raise ValueError(f"channel {name!r} length {len(arr)} != time {n}")


def steady_windows(scenario: Scenario) -> list[tuple[str, float, float]]:
    """Steady analysis windows between events, clear of all transients."""
    boundaries = [0.0] + [e.time for e in scenario.events] + [scenario.t_end]
    spans = []
    for i in range(len(boundaries) - 1):
        settle = STARTUP_SETTLE_S if i == 0 else EVENT_SETTLE_S
        start = boundaries[i] + settle
        end = boundaries[i + 1] - WINDOW_END_MARGIN_S
        if end - start >= MIN_WINDOW_S:
            spans.append((start, end))
    if not spans:
        return []
    if len(spans) == 1 and not scenario.events:
        labels = ["steady"]
    elif len(spans) == 3 and len(scenario.events) == 2:
        labels = ["pre_step", "during_step", "post_step"]
    else:
        labels = [f"window_{i}" for i in range(len(spans))]
    return [(lab, s, e) for lab, (s, e) in zip(labels, spans)]


def _integer_period_span(
    duration: float, f_ref: float, sample_dt: float
) -> int | None:
    """Sample count of the longest integer-period span that fits the grid."""
    for n_periods in range(int(math.floor(duration * f_ref)), 0, -1):
        n_samples = round(n_periods / (f_ref * sample_dt))
        if n_samples < 2 or n_samples * sample_dt > duration * (1.0 + 1e-12):
            continue
        if abs(n_samples * sample_dt * f_ref - n_periods) < 1e-6:
            return n_samples
    return None


def compute_window_metrics(
    time: np.ndarray,
    channels: dict[str, np.ndarray],
    t_start: float,
    t_end: float,
    f_ref: float,
) -> WindowMetrics:
    """Summary metrics over the tail of one steady window.

    Uses the longest whole-period span that fits the sampled grid, anchored
    at the window end so settling transients weigh least.
    """
    sample_dt = float(time[1] - time[0])
    end = int(np.searchsorted(time, t_end + 1e-12, side="right")) - 1
    start_limit = int(np.searchsorted(time, t_start - 1e-12, side="left"))
    n = _integer_period_span((end - start_limit) * sample_dt, f_ref, sample_dt)
    if n is None:
        raise ValueError(
            f"no integer-period span fits window [{t_start}, {t_end}] "
            f"at sample interval {sample_dt}"
        )
    sl = slice(end - n + 1, end + 1)
    v_window = MeasurementWindow(
        channels["v_pcc_a"][sl], sample_rate=1.0 / sample_dt, fundamental_hz=f_ref
    )
    return WindowMetrics(
        p_active=float(np.mean(channels["p_pcc"][sl])),
        q_reactive=float(np.mean(channels["q_pcc"][sl])),
        v_rms=rms(v_window),
        f_est=float(np.mean(channels["f_est"][sl])),
        thd=thd(v_window),
        efficiency=efficiency(
            float(np.mean(channels["p_inv"][sl])),
            float(np.mean(channels["p_dc_in"][sl])),
        ),
    )


def run_scenario(cfg: ValidatedConfig, decimation: int = 1) -> SimOutput:
    """Execute one scenario deterministically and return all telemetry."""
    cfg = validate(cfg)
    if decimation < 1:
        raise ValueError(f"decimation must be >= 1, got {decimation}")
    sys_, sc = cfg.system, cfg.scenario
    dt = sc.dt
    n_steps = round(sc.t_end / dt)

    net = NetworkConfig.from_scenario_loads(sc.loads)
    state = PlantState.zeros(net, DcState(v_c2=sys_.v_dc, i_in=0.0))
    controller = VsgController(cfg)

    # Events snap to the nearest integration step boundary.
    events_by_step: dict[int, list] = {}
    for ev in sc.events:
        events_by_step.setdefault(round(ev.time / dt), []).append(ev)

    data: dict[str, list[float]] = {name: [] for name in CHANNELS}
    times: list[float] = []

    m_abc = np.zeros(3)
    command = None
    next_ctrl = 0.0
    last_ctrl_t = 0.0

    def record(t: float, v_inv: np.ndarray, i_load: np.ndarray) -> None:
        times.append(t)
        d = data
        d["v_pcc_a"].append(state.v_pcc[0])
        d["v_pcc_b"].append(state.v_pcc[1])
        d["v_pcc_c"].append(state.v_pcc[2])
        d["i_inv_a"].append(state.i_filter[0])
        d["i_inv_b"].append(state.i_filter[1])
        d["i_inv_c"].append(state.i_filter[2])
        d["i_load_a"].append(i_load[0])
        d["i_load_b"].append(i_load[1])
        d["i_load_c"].append(i_load[2])
        d["v_inv_a"].append(v_inv[0])
        d["v_inv_b"].append(v_inv[1])
        d["v_inv_c"].append(v_inv[2])
        d["v_c2"].append(state.dc.v_c2)
        d["i_in"].append(state.dc.i_in)
        p_pcc, q_pcc = instantaneous_pq(
            ThreePhase(*state.v_pcc), ThreePhase(*i_load), controller.swing.theta
        )
        d["p_pcc"].append(p_pcc)
        d["q_pcc"].append(q_pcc)
        d["p_inv"].append(float(v_inv @ state.i_filter))
        d["p_dc_in"].append(sys_.v_dc * state.dc.i_in)
        d["f_est"].append(controller.swing.omega_star / (2.0 * math.pi))
        d["v_com_mag"].append(command.v_com_mag if command else 0.0)
        d["p_com"].append(command.p_com if command else 0.0)
        d["i_com"].append(command.i_com if command else 0.0)
        d["delta_omega"].append(controller.swing.delta_omega)
        d["theta"].append(controller.swing.theta)
        d["m_a"].append(m_abc[0])
        d["m_b"].append(m_abc[1])
        d["m_c"].append(m_abc[2])
        d["clamp_flag"].append(1.0 if (command and command.clamped) else 0.0)

    try:
        for k in range(n_steps + 1):
            t = k * dt
            for ev in events_by_step.get(k, ()):
                new_net = apply_event(net, ev)
                if new_net is not net:
                    zero_branch(state, net, ev.load_id)
                    net = new_net
            i_load = load_current(state, net)
            if t >= next_ctrl - 1e-12:
                elapsed = t - last_ctrl_t if t > 0.0 else sc.control_period
                ramp = min(t / SOFT_START_RAMP_S, 1.0) if SOFT_START_RAMP_S > 0 else 1.0
                meas = Measurements(
                    v_pcc=ThreePhase(*state.v_pcc),
                    i_inv=ThreePhase(*state.i_filter),
                    i_load=ThreePhase(*i_load),
                    v_c2=state.dc.v_c2,
                )
                command = controller.step(meas, elapsed, v_ref_scale=ramp)
                m_abc = np.array(command.m_abc)
                last_ctrl_t = t
                next_ctrl += sc.control_period
            v_inv = m_abc * (state.dc.v_c2 / 2.0)
            if k % decimation == 0:
                record(t, v_inv, i_load)
            if k < n_steps:
                state = rk4_step(state, v_inv, command.i_com, net, sys_, dt)
    except (DcCollapse, NumericBlowup) as exc:
        raise type(exc)(
            f"{exc} at t={k * dt:.6f} s; last good state: "
            f"v_pcc={np.round(state.v_pcc, 3).tolist()} V, "
            f"v_c2={state.dc.v_c2:.3f} V, i_in={state.dc.i_in:.3f} A"
        ) from exc

    time = np.asarray(times)
    channels = {name: np.asarray(vals) for name, vals in data.items()}
    windows = []
    for label, t0, t1 in steady_windows(sc):
        metrics = compute_window_metrics(time, channels, t0, t1, sys_.f_ref)
        windows.append(WindowSummary(label=label, t_start=t0, t_end=t1, metrics=metrics))
    meta = {
        "config_hash": config_digest(cfg),
        "dt": dt,
        "control_period": sc.control_period,
        "t_end": sc.t_end,
        "decimation": decimation,
        "version": __version__,
    }
    return SimOutput(time=time, channels=channels, windows=windows, meta=meta)


def emit(out: SimOutput, csv_path, json_path) -> None:
    """Write the channel table (RFC-4180 CSV) and the JSON summary."""
    try:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            names = list(out.channels)
            writer.writerow(["time"] + names)
            columns = [out.channels[name] for name in names]
            for i in range(len(out.time)):
                writer.writerow(
                    [repr(float(out.time[i]))]
                    + [repr(float(col[i])) for col in columns]
                )
        summary = {
            "meta": out.meta,
            "windows": [
                {
                    "label": w.label,
                    "t_start": w.t_start,
                    "t_end": w.t_end,
                    **w.metrics.to_json_dict(),
                }
                for w in out.windows
            ],
        }
        with open(json_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"could not write outputs: {exc}") from exc
