"""
Simulation Errors - Exception hierarchy shared by the library and the CLI
"""


class BraidSimError(Exception):
    """Base class for all simulator errors."""

    exit_code = 1


class ConfigError(BraidSimError):
    """Invalid run configuration or parameter value."""

    exit_code = 2


class ModelFormatError(ConfigError):
    """Model file violates the structural rules of the model format."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidChannel(ConfigError):
    """Requested fusion channel is not admissible."""


class InvalidSchedule(ConfigError):
    """Coupling schedule parameters are inconsistent."""


class IndexOutOfRange(ConfigError):
    """Position or label index outside its valid range."""


class InsufficientData(ConfigError):
    """Not enough rows to fit."""


class NumericalError(BraidSimError):
    """Base class for failures detected during computation."""

    exit_code = 3


class MissingSymbol(NumericalError):
    """An admissible tuple has no F- or R-symbol."""


class ConsistencyFailure(NumericalError):
    """Model data failed the pentagon, hexagon or unitarity checks."""


class EmptyBasis(NumericalError):
    """No admissible fusion path exists."""


class NonHermitian(NumericalError):
    """Operator expected to be Hermitian is not."""


class DegeneracyChange(NumericalError):
    """Ground-state multiplicity changed along an adiabatic path."""


class GapCollapse(NumericalError):
    """Excitation gap fell below the configured threshold."""


class StepTooLarge(NumericalError):
    """Integrator step violates the accuracy guard."""


class ExcessLeakage(NumericalError):
    """Too much weight escaped the ground space."""


class DimensionCap(NumericalError):
    """Requested Hilbert space exceeds the dense-matrix cap."""
