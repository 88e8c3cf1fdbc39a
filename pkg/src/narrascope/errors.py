"""Exception hierarchy.

Anything deriving from NarrascopeError is a problem with the user's input or
configuration (CLI exit code 1). InvariantViolation means the package itself
produced an inconsistent state (exit code 2).
"""

from __future__ import annotations

from pathlib import Path


class NarrascopeError(Exception):
    """Base for input and validation failures."""


class InvalidConfig(NarrascopeError, ValueError):
    pass


class MissingInput(NarrascopeError, FileNotFoundError):
    def __init__(self, path: str | Path, what: str = "input file") -> None:
        self.path = Path(path)
        super().__init__(f"{what} not found: {self.path}")


class CorpusFormatError(NarrascopeError, ValueError):
    def __init__(self, path: str | Path, line: int, reason: str) -> None:
        self.path = Path(path)
        self.line = line
        super().__init__(f"{self.path}, line {line}: {reason}")


class DuplicateDocumentId(NarrascopeError, ValueError):
    pass


class AllDocumentsEmpty(NarrascopeError):
    pass


class VocabularyMismatch(NarrascopeError):
    pass


class IndexOutOfRange(NarrascopeError, IndexError):
    pass


class TooShort(NarrascopeError, ValueError):
    pass


class NoValidLag(NarrascopeError):
    pass


class InvalidSpec(NarrascopeError, ValueError):
    pass


class InfeasibleShare(InvalidSpec):
    pass


class InvariantViolation(Exception):
    """An internal consistency check failed."""
