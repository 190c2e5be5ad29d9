"""Exception hierarchy. Each class carries a CLI exit-code category."""


class PolaronSpectraError(Exception):
    category = "numeric"


# numeric failures (exit 3)
class NonDecayingTrace(PolaronSpectraError):
    pass


class EmptyGrid(PolaronSpectraError):
    pass


class SlowDecay(PolaronSpectraError):
    pass


class NonFiniteState(PolaronSpectraError):
    pass


class NegativeFrequency(PolaronSpectraError, ValueError):
    pass


class InsufficientModes(PolaronSpectraError, ValueError):
    pass


class ZeroLinewidth(PolaronSpectraError, ValueError):
    pass


class SingularDenominator(PolaronSpectraError):
    pass


class NoSteadyState(PolaronSpectraError):
    category = "convergence"


# config problems (exit 2)
class SchemaError(PolaronSpectraError, ValueError):
    category = "schema"

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class RangeError(SchemaError):
    def __init__(self, field, value, why="out of range"):
        super().__init__(f"{field}: {why} (got {value!r})", field=field)
        self.value = value
