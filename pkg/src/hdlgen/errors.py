"""Exception hierarchy shared across the pipeline.

The split that matters downstream:

* ``FormatError`` -- a model reply the next stage cannot capture. These are
  counted against the per-task format-error budget and trigger retries or the
  fail-safe escalation; they never abort a run.
* ``BackendError`` and ``InfrastructureError`` -- the run itself is broken
  (transport dead, script exhausted, simulator missing). These propagate.
* ``ContractViolation`` -- caller bug (out-of-range argument, violated
  precondition).
"""


class HdlGenError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(HdlGenError):
    """An argument or state violated a documented precondition."""


class FormatError(HdlGenError):
    """Model output could not be captured by the downstream parser."""


class BackendError(HdlGenError):
    """Text-generation backend failure."""


class RemoteError(BackendError):
    """Remote completion failed after all retries."""


class ScriptExhausted(BackendError):
    """Scripted backend was asked for more responses than it holds."""


class ScriptMismatch(BackendError):
    """Scripted response carried an expectation the prompt did not meet."""


class ContextOverflow(BackendError):
    """Estimated prompt size exceeds the request's context budget."""


class MissingPlaceholder(HdlGenError):
    """Template rendering was missing a binding for a required placeholder."""

    def __init__(self, name: str):
        super().__init__(f"no binding for placeholder {name!r}")
        self.name = name


class ClassificationError(HdlGenError):
    """Both the probe-code and the direct-question strategies failed."""


class UnknownOutput(ContractViolation):
    """Requested output name is not a column of the truth table."""


class MissingInput(ContractViolation):
    """An assignment omits an input referenced by the expression."""


class PortMismatch(HdlGenError):
    """Expression signals do not line up with the module header's ports."""

    def __init__(self, unmatched: list[str]):
        super().__init__(f"names not declared in module header: {', '.join(unmatched)}")
        self.unmatched = list(unmatched)


class InfrastructureError(HdlGenError):
    """Harness problem (simulator missing, scratch dir unwritable, ...).

    Distinct from a candidate failing its testbench.
    """
