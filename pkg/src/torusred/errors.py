"""Exception types shared across the package.

Two broad families matter to callers: configuration problems (bad
parameters, invalid run configs) and numerical failures (lost
hyperbolicity, small divisors, saturated truncation).  The CLI maps
them onto distinct exit codes.
"""


class ConfigError(ValueError):
    """A parameter set or run configuration violates its invariants."""


class NumericalError(RuntimeError):
    """A numerical operation failed in a structured, diagnosable way."""


class TransversalityError(NumericalError):
    """Tangent and fibre directions are (nearly) degenerate.

    Carries the offending condition number.
    """

    def __init__(self, message, condition):
        super().__init__(f"{message} (condition number {condition:.3e})")
        self.condition = condition


class SmallDivisorError(NumericalError):
    """A combination frequency sits dangerously close to resonance."""

    def __init__(self, k, value, floor):
        super().__init__(
            f"small divisor at k={tuple(k)}: |<omega,k>| = {abs(value):.3e} "
            f"is below the safety floor {floor:.3e} but not resonant; "
            "raise tol_res or change frequencies"
        )
        self.k = tuple(k)
        self.value = value


class TruncationSaturationError(NumericalError):
    """A computed series carries mass on the outermost retained shell."""

    def __init__(self, label, K, shell_mass):
        super().__init__(
            f"series '{label}' has mass {shell_mass:.3e} on the truncation "
            f"boundary |k| ~ {K}; raise K"
        )
        self.label = label
        self.K = K
        self.shell_mass = shell_mass


class HyperbolicityError(NumericalError):
    """Floquet data is incompatible with a normally hyperbolic circle."""
