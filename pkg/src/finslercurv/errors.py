"""Exception hierarchy shared by every module of the engine."""


class FinslerError(Exception):
    """Base class for all engine errors."""


class CapabilityError(FinslerError):
    """A requested derivative order exceeds what the configuration provides."""


class JetDomainError(FinslerError, ValueError):
    """An elementary function was applied outside its domain."""

    def __init__(self, function, value):
        self.function = function
        self.value = value
        super().__init__(f"{function}: argument {value!r} outside the domain")


class SlitBundleError(FinslerError, ValueError):
    """The fiber vector is zero (or numerically indistinguishable from zero)."""


class InvalidMetricError(FinslerError, ValueError):
    """The metric fails one of the Finsler axioms at the evaluation point."""


class ChartDomainError(FinslerError, ValueError):
    """The base point lies outside the declared chart domain."""


class DimensionError(FinslerError, ValueError):
    pass


class UndefinedQuantityError(FinslerError, ValueError):
    pass


class ConsistencyError(FinslerError):
    """An internal self-consistency identity failed (signals an engine bug)."""


class CaseError(FinslerError, ValueError):
    pass


class StencilError(FinslerError):
    """A field evaluation failed inside a finite-difference stencil."""

    def __init__(self, location, cause):
        self.location = location
        super().__init__(f"field evaluation failed at stencil point {location}: {cause}")


class SpecError(FinslerError, ValueError):
    """A metric, factor or run description could not be parsed."""
