"""Exception types shared across the package."""


class SpecdecError(Exception):
    """Base class for all errors raised by this package."""


class UntokenizableInput(SpecdecError):
    """A span of the input text matches no token pattern."""

    def __init__(self, text: str, position: int, line: int | None = None):
        self.text = text
        self.position = position
        self.line = line
        where = f"line {line}, " if line is not None else ""
        snippet = text[position : position + 12]
        super().__init__(f"untokenizable input at {where}column {position}: {snippet!r}")


class SequenceTooLong(SpecdecError):
    """A token sequence exceeds the model's maximum length."""


class IdOutOfRange(SpecdecError):
    """A token id is outside the model's vocabulary."""


class MalformedPadding(SpecdecError):
    """PAD appears after a non-PAD id, or the declared pad count is wrong."""


class CheckpointError(SpecdecError):
    """Base class for checkpoint (de)serialization failures."""


class BadMagic(CheckpointError):
    """The file does not start with the checkpoint magic bytes."""


class ShapeMismatch(CheckpointError):
    """A tensor is missing, unexpected, or has the wrong declared shape."""


class TruncatedFile(CheckpointError):
    """The file ends before the declared payload is complete."""


class EmptyGeneration(SpecdecError):
    """A decode produced zero generated tokens."""


class EquivalenceViolation(SpecdecError):
    """A speculative decode diverged from its plain-greedy reference output."""
