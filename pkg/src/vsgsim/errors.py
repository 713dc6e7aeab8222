"""Exception taxonomy shared by every module of the simulator."""


class SimError(Exception):
    """Base class for all simulator errors."""


class NonPositive(SimError):
    """A quantity that must be strictly positive is zero or negative."""


class DutyBeyondPole(SimError):
    """Shoot-through duty ratio at or beyond the voltage-gain pole."""


class ModulationOverlap(SimError):
    """Modulation index intrudes into the shoot-through interval."""


class GainBelowUnity(SimError):
    """Requested DC-link gain below 1; no shoot-through duty exists."""


class PoleCrossed(SimError):
    """Voltage-gain denominator is zero or negative."""


class ScenarioInvalid(SimError):
    """Scenario timeline or load roster violates its contract."""


class DcCollapse(SimError):
    """DC-link voltage fell below the survivable floor."""


class NumericBlowup(SimError):
    """Integrator state left the physically plausible range."""


class UnknownLoad(SimError):
    """Event references a load id that was never declared."""


class FundamentalAbsent(SimError):
    """Spectral window has no usable fundamental component."""


class NonPositiveInput(SimError):
    """Efficiency requested with non-positive input power."""


class NegativeMagnitude(SimError):
    """Reference synthesis asked for a negative amplitude."""


class IoFailure(SimError):
    """Output files could not be written."""


class ConfigValidationError(SimError):
    """Aggregate of every violation found while validating a config.

    ``violations`` holds one exception instance per independent problem so
    callers see the full list, not just the first failure.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(f"{type(v).__name__}: {v}" for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {detail}")
