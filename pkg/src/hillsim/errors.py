"""Exception hierarchy; every error raised on bad input derives from ``HillsimError``."""


class HillsimError(Exception):
    pass


class IntegrationError(HillsimError):
    """Adaptive integration could not proceed."""

    def __init__(self, t: float, reason: str = "step size underflow"):
        self.t = t
        super().__init__(f"integration failed at t={t!r} s: {reason}")


class CoverageError(HillsimError, ValueError):
    pass


class StepSizeError(HillsimError, ValueError):
    pass


class DomainError(HillsimError, ValueError):
    pass


class SchemaError(HillsimError, ValueError):
    pass


class PolicyError(HillsimError):
    def __init__(self, step: int, value):
        self.step = step
        super().__init__(f"policy returned non-finite thrust {value!r} at step {step}")


class AssignmentError(HillsimError, ValueError):
    pass


class ConfigError(HillsimError, ValueError):
    pass


class InputError(HillsimError, ValueError):
    pass


class BoundsError(HillsimError, ValueError):
    """Waypoints leave the flight volume."""

    def __init__(self, violations):
        self.violations = list(violations)
        first = self.violations[0]
        super().__init__(
            f"{len(self.violations)} waypoint bound violation(s); first: index {first.index}, "
            f"axis {first.axis}, value {first.value!r}"
        )
