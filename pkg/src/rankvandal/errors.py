"""Shared exception types."""


class ContractError(ValueError):
    """A documented precondition was violated by the caller."""


class ParseError(ValueError):
    """Malformed on-disk record; message names the offending line."""


class IntegrityError(ValueError):
    """A data invariant (duplicate id, too-few paragraphs, ...) is broken."""


class TrainingError(RuntimeError):
    """Training input unusable (missing class, too few examples) or diverged."""


class InfeasibleError(RuntimeError):
    """The requested action has no valid outcome (no injectable span, etc.)."""


class NumericError(ArithmeticError):
    """Non-finite values where the math requires finite ones."""


class MissingArtifactError(FileNotFoundError):
    """A pipeline stage needs an artifact an earlier stage has not produced."""
