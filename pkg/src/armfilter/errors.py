"""Exception types shared across the package."""


class BoundViolation(ValueError):
    """A declared environment bound breaks a problem-spec requirement."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class EmptyActionSpace(ValueError):
    """No admissible selection count exists for a decision set of this size."""

    def __init__(self, set_size: int):
        super().__init__(
            f"no admissible selection count for a decision set of {set_size} arms"
        )
        self.set_size = set_size


class SchemaError(ValueError):
    """A dataset file row does not match the expected schema."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyCatalog(ValueError):
    """A dataset file contains no arms."""


class GridBeyondHorizon(ValueError):
    """A regret evaluation grid extends past a trace's horizon."""


class EnvelopeExceeded(ValueError):
    """Input size is outside the supported envelope of a brute-force utility."""
