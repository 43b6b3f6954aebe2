"""Exception hierarchy shared by the simulation kernel and the CLI."""


class AutopilotError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(AutopilotError, ValueError):
    pass


class NotRealizableError(AutopilotError):
    """Transfer function is improper and has no state-space realization."""


class SingularGainError(AutopilotError):
    """Control effectiveness too small to invert."""


class DegeneratePlantError(AutopilotError):
    pass


class IllConditionedError(AutopilotError):
    """Coefficient identification system is numerically rank deficient."""


class ConfigError(AutopilotError):
    """Scenario configuration could not be parsed or violates an invariant."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class NumericalBlowupError(AutopilotError):
    """Integration produced a non-finite value."""

    def __init__(self, t, step=None):
        self.t = t
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"non-finite state at t={t:.6g} s{where}")
