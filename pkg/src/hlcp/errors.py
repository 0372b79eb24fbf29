"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ValidationError(ValueError):
    """A parameter set, series or config fails its contract."""


class ParseError(ValidationError):
    """A data file row cannot be parsed.

    ``row`` is the 1-based line number in the source file (header is line 1).
    """

    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


class InsufficientBufferError(ValueError):
    """A deployment asks for more collateral than the buffer holds."""


class SimulationError(ArithmeticError):
    """A simulated state became non-finite or left its admissible domain."""

    def __init__(self, message: str, step: int):
        super().__init__(f"step {step}: {message}")
        self.step = step
