"""Exception types shared across the package.

The CLI maps these onto exit codes: ValidationError -> 1, CoverageError -> 2,
anything else -> 3.
"""


class ValidationError(ValueError):
    """Malformed input, violated invariant, or bad configuration."""


class CoverageError(KeyError):
    """A required artifact (embedding, generation bundle) is missing for a doc id."""

    def __init__(self, message: str, doc_id: str | None = None):
        super().__init__(message)
        self.doc_id = doc_id

    def __str__(self) -> str:
        return self.args[0]
