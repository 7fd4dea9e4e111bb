"""Exception hierarchy shared across the package."""


class ModerationError(Exception):
    """Base class for every error raised by this package."""


class EmptyText(ModerationError):
    pass


class EmptyTerm(ModerationError):
    pass


class EmptyDocument(ModerationError):
    pass


class EmptyIndex(ModerationError):
    pass


class EmptyInput(ModerationError):
    pass


class LengthMismatch(ModerationError):
    pass


class DimensionMismatch(ModerationError):
    pass


class ZeroVector(ModerationError):
    pass


class DuplicateId(ModerationError):
    pass


class CorruptIndexFile(ModerationError):
    pass


class EndpointUnavailable(ModerationError):
    """A remote endpoint could not be reached or returned a failure status."""

    def __init__(self, url: str, detail: str = "", status: int | None = None):
        self.url = url
        self.status = status
        self.detail = detail
        msg = f"endpoint unavailable: {url}"
        if status is not None:
            msg += f" (status {status})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class MalformedResponse(ModerationError):
    pass


class UnparseableRationale(ModerationError):
    pass


class DecisionValidationError(ModerationError):
    """Raised when a raw decision map violates one or more field constraints.

    ``problems`` holds one machine-readable code per violation, e.g.
    ``missing_field:label`` or ``out_of_range_confidence``.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid decision: " + ", ".join(self.problems))


class RetriesExhausted(ModerationError):
    pass


class ToolBudgetExceeded(ModerationError):
    pass


class PlannerUnavailable(ModerationError):
    pass


class NoEvidence(ModerationError):
    pass


class DuplicateFeedback(ModerationError):
    pass


class IndexWriteFailure(ModerationError):
    pass
