"""Measurement layer: power, RMS, spectral distortion, and efficiency.

Sign convention: a lagging (inductive) load measures positive reactive
power, so a rising reactive demand lowers the droop voltage command.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FundamentalAbsent, NonPositive, NonPositiveInput
from .transforms import ThreePhase, abc_to_dq0

DEFAULT_THD_HARMONICS = 40


def instantaneous_pq(v: ThreePhase, i: ThreePhase, theta: float) -> tuple[float, float]:
    """Instantaneous active and reactive power of a three-phase pair.

    Active power is the plain per-phase product sum; reactive power comes
    from the amplitude-invariant rotating-frame components at ``theta``.
    """
    p = v.a * i.a + v.b * i.b + v.c * i.c
    v_dq = abc_to_dq0(v, theta)
    i_dq = abc_to_dq0(i, theta)
    q = 1.5 * (v_dq.q * i_dq.d - v_dq.d * i_dq.q)
    return p, q


@dataclass(frozen=True)
class MeasurementWindow:
    """Uniformly sampled span covering a whole number of fundamental periods."""

    samples: np.ndarray
    sample_rate: float
    fundamental_hz: float

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.sample_rate <= 0.0 or self.fundamental_hz <= 0.0:
            raise NonPositive("sample_rate and fundamental_hz must be > 0")
        if self.samples.ndim != 1 or len(self.samples) < 2:
            raise ValueError("window needs a 1-D array of at least 2 samples")
        if abs(self.periods - round(self.periods)) > 1e-6:
            raise ValueError(
                f"window spans {self.periods} fundamental periods; must be an integer"
            )
        if round(self.periods) < 1:
            raise ValueError("window must span at least one fundamental period")

    @property
    def periods(self) -> float:
        return len(self.samples) / self.sample_rate * self.fundamental_hz


def rms(w: MeasurementWindow) -> float:
    """Root of the mean square over the window."""
    return float(np.sqrt(np.mean(w.samples * w.samples)))


def thd(w: MeasurementWindow, n_harmonics: int = DEFAULT_THD_HARMONICS) -> float:
    """Harmonic distortion ratio sqrt(sum A_h^2, h=2..n) / A_1.

    Harmonic amplitudes come from the discrete Fourier projection onto the
    exact harmonic bins of the integer-period window.
    """
    n = len(w.samples)
    periods = round(w.periods)
    if n_harmonics < 2:
        raise ValueError(f"n_harmonics must be >= 2, got {n_harmonics}")
    if n_harmonics * periods >= n // 2:
        raise ValueError(
            f"harmonic {n_harmonics} is at or above Nyquist for this window"
        )
    spectrum = np.abs(np.fft.rfft(w.samples)) * (2.0 / n)
    a1 = spectrum[periods]
    scale = float(np.max(np.abs(w.samples)))
    if scale == 0.0 or a1 < 1e-9 * scale:
        raise FundamentalAbsent(
            f"fundamental amplitude {a1} below 1e-9 of signal scale {scale}"
        )
    bins = spectrum[2 * periods : (n_harmonics + 1) * periods : periods]
    return float(np.sqrt(np.sum(bins * bins)) / a1)


def efficiency(p_out: float, p_in: float) -> float:
    """Power transfer ratio; input power must be strictly positive."""
    if p_in <= 0.0:
        raise NonPositiveInput(f"input power must be > 0, got {p_in}")
    return p_out / p_in


@dataclass(frozen=True)
class WindowMetrics:
    """Summary metrics of one steady measurement window."""

    p_active: float     # [W]
    q_reactive: float   # [var]
    v_rms: float        # [V]
    f_est: float        # [Hz]
    thd: float          # dimensionless ratio
    efficiency: float   # dimensionless ratio

    def to_json_dict(self) -> dict:
        """Emission names and units fixed for the CSV/JSON interface."""
        return {
            "p_active_w": self.p_active,
            "q_reactive_var": self.q_reactive,
            "v_rms_v": self.v_rms,
            "f_hz": self.f_est,
            "thd_pct": 100.0 * self.thd,
            "efficiency_pct": 100.0 * self.efficiency,
        }
