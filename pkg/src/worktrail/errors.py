"""Engine error kinds.

Every error the engine can raise maps to a stable ``kind`` string that is
carried verbatim over the wire and into CLI exit messages, so clients can
branch on it without parsing prose.
"""

from __future__ import annotations


class WorktrailError(Exception):
    """Base class; ``kind`` is the wire-stable discriminator."""

    kind = "EngineError"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_payload(self) -> dict:
        return {"kind": self.kind, "message": self.message}


class UnknownRef(WorktrailError):
    kind = "UnknownRef"


class FrozenVersion(WorktrailError):
    kind = "FrozenVersion"


class EmptyUndoStack(WorktrailError):
    kind = "EmptyUndoStack"


class NothingToRedo(WorktrailError):
    kind = "NothingToRedo"


class BadStatus(WorktrailError):
    """Status flip requested on a record whose current status does not allow it."""

    kind = "BadStatus"


class SharedPrefixDelete(WorktrailError):
    kind = "SharedPrefixDelete"


class ConfirmationRequired(WorktrailError):
    """Destructive edit would break a pipeline and was not confirmed."""

    kind = "ConfirmationRequired"


class NotOnOnePath(WorktrailError):
    kind = "NotOnOnePath"


class BadRange(WorktrailError):
    kind = "BadRange"


class EmptyClipboard(WorktrailError):
    kind = "EmptyClipboard"


class DuplicateName(WorktrailError):
    kind = "DuplicateName"


class SchemaViolation(WorktrailError):
    kind = "SchemaViolation"


class UnregisteredType(WorktrailError):
    kind = "UnregisteredType"


class RegistrationError(WorktrailError):
    kind = "RegistrationError"


class BrokenPipeline(WorktrailError):
    """Strict replay hit a record whose requirements are unmet."""

    kind = "BrokenPipeline"

    def __init__(self, message: str, *, record_id: str, capability: str, index: int):
        super().__init__(message)
        self.record_id = record_id
        self.capability = capability
        self.index = index

    def to_payload(self) -> dict:
        return {
            "kind": self.kind,
            "message": self.message,
            "record": self.record_id,
            "capability": self.capability,
            "index": self.index,
        }


class MissingPrecondition(Exception):
    """Raised by a domain interpreter when a record's capability requirement
    is unmet in the state it is applied to. This is the execution-side signal
    the dependency checker's verdicts are tested against."""

    def __init__(self, capability: str):
        super().__init__(f"missing precondition: {capability}")
        self.capability = capability


class IngestionError(WorktrailError):
    """Delimited-text dataset could not be parsed; carries cell position."""

    kind = "IngestionError"

    def __init__(self, message: str, *, row: int, column: int):
        super().__init__(message)
        self.row = row
        self.column = column


class FormatError(WorktrailError):
    kind = "FormatError"


class UnknownFixture(WorktrailError):
    kind = "UnknownFixture"


class IntegrityError(WorktrailError):
    """Stored structure violates an engine invariant (corruption-level)."""

    kind = "IntegrityError"
