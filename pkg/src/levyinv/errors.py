"""Exception and warning types shared across the package."""


class LevyDomainError(ValueError):
    """Argument outside the domain of a Lévy-measure quantity."""


class EmptySupportError(ValueError):
    """Conditional jump law requested on a region with zero mass."""


class CapabilityError(NotImplementedError):
    """The measure cannot be simulated the requested way."""


class ScheduleError(ValueError):
    """Step, weight or threshold sequence rejected."""


class ScheduleWarning(UserWarning):
    """Schedule admissible but expensive (e.g. too many jumps per step)."""


class ConditionError(ValueError):
    """A function evaluated outside the parameter region where it is defined."""


class HypothesisError(ValueError):
    """A moment hypothesis required by a diagnostic does not hold."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class StoreError(RuntimeError):
    """Offline statistic requested on an empty or missing sample store."""


class DivergenceError(ArithmeticError):
    """The Euler recursion produced a non-finite state."""

    def __init__(self, n, Gamma, x):
        self.n = n
        self.Gamma = Gamma
        self.x = x
        super().__init__(f"non-finite state at step {n} (Gamma_n={Gamma!r}, x={x!r})")
