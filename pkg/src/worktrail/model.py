"""Core provenance data model: action taxonomy, records, units, sessions.

The hierarchy is project -> version-controlled sessions -> units -> actions.
Units carry a linear local action list; branches share ancestor history by
reference (parent unit + inherited prefix length) rather than by copy, so
edits on a shared prefix are visible to every unit inheriting it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, asdict
from typing import Any

from .errors import RegistrationError, SchemaViolation


class ActionCategory(enum.Enum):
    """The four-way action taxonomy. Order doubles as the tie-break order
    when picking a node's dominant category."""

    MANAGEMENT = "management"
    ANALYSIS = "analysis"
    ANNOTATION = "annotation"
    HISTORY = "history"


CATEGORY_ORDER = list(ActionCategory)


class RecordStatus(enum.Enum):
    ACTIVE = "active"
    UNDONE = "undone"
    SKIPPED = "skipped"


@dataclass(frozen=True)
class ActionType:
    """A registered kind of action.

    ``requires`` / ``provides`` are capability names used by the dependency
    checker. ``override_key`` groups records of which only the last active
    one affects replayed state; when ``override_param`` is set the effective
    key is ``"<override_key>:<params[override_param]>"`` so e.g. parameters
    override per parameter name.
    """

    name: str
    category: ActionCategory
    requires: frozenset[str] = frozenset()
    provides: frozenset[str] = frozenset()
    override_key: str | None = None
    override_param: str | None = None
    needs_dependency_check: bool = False
    required_params: tuple[str, ...] = ()

    def record_override_key(self, params: dict[str, Any]) -> str | None:
        if self.override_key is None:
            return None
        if self.override_param is None:
            return self.override_key
        return f"{self.override_key}:{params.get(self.override_param)}"


@dataclass
class ActionRecord:
    """One captured action. Records are never reordered; logical order is
    append order. Status changes only through edit-engine operations."""

    id: str
    type_name: str
    category: ActionCategory
    params: dict[str, Any]
    ts: int
    author: str
    status: RecordStatus = RecordStatus.ACTIVE
    note: str | None = None

    @property
    def seq(self) -> int:
        """Global append order, recovered from the id counter suffix."""
        return int(self.id[1:])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["category"] = self.category.value
        d["status"] = self.status.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ActionRecord:
        return cls(
            id=d["id"],
            type_name=d["type_name"],
            category=ActionCategory(d["category"]),
            params=dict(d["params"]),
            ts=d["ts"],
            author=d["author"],
            status=RecordStatus(d["status"]),
            note=d.get("note"),
        )


@dataclass
class Annotation:
    id: str
    text: str
    author: str
    ts: int
    attached_to: str  # unit or session id
    record_id: str | None = None  # the annotate action that created it
    deleted: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> Annotation:
        return cls(**d)


@dataclass
class BranchPoint:
    """Link to the origin unit plus how many of its effective records the
    branch inherits. The count includes undone/skipped records, so later
    status flips on the prefix stay visible to the branch."""

    unit_id: str
    prefix_len: int


@dataclass
class Unit:
    id: str
    name: str
    session_id: str
    branch_parent: BranchPoint | None = None
    local_actions: list[ActionRecord] = field(default_factory=list)
    annotation_ids: list[str] = field(default_factory=list)
    bookmarked: bool = False
    broken: bool = False  # written only by the dependency checker


@dataclass
class Snapshot:
    """Per-unit replayed states captured when a session version is saved.
    A cache over replay-from-log, never the source of truth."""

    session_id: str
    created_at: int
    label: str
    unit_states: dict[str, dict]  # unit id -> UnitState dict
    unit_hashes: dict[str, str]
    unit_fingerprints: dict[str, str]  # history fingerprint for cache checks

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> Snapshot:
        return cls(**d)


@dataclass
class Session:
    id: str
    base_name: str
    version: int
    parent_id: str | None = None
    frozen: bool = False
    created_ts: int = 0
    unit_ids: list[str] = field(default_factory=list)
    session_actions: list[ActionRecord] = field(default_factory=list)
    annotation_ids: list[str] = field(default_factory=list)
    # Records already present when this version came to life; everything
    # else is this version's own activity (its "delta").
    baseline_record_ids: set[str] = field(default_factory=set)
    snapshot: Snapshot | None = None

    @property
    def display_name(self) -> str:
        return f"{self.base_name}_v{self.version}"


class ActionTypeRegistry:
    """Engine built-in types plus one domain plugin's declarations."""

    def __init__(self) -> None:
        self._types: dict[str, ActionType] = {}
        self._capabilities: set[str] = set()
        for t in _ENGINE_TYPES:
            self._types[t.name] = t

    def add_domain(self, capabilities: set[str], types: list[ActionType]) -> None:
        self._capabilities |= set(capabilities)
        for t in types:
            if t.name in self._types:
                raise RegistrationError(f"action type already registered: {t.name}")
            unknown = (t.requires | t.provides) - self._capabilities
            if unknown:
                raise RegistrationError(
                    f"action type {t.name} uses undeclared capabilities: {sorted(unknown)}"
                )
            if t.category in (ActionCategory.MANAGEMENT, ActionCategory.ANNOTATION):
                if t.needs_dependency_check and not (t.requires or t.provides):
                    raise RegistrationError(
                        f"{t.name}: management/annotation types without rules are exempt"
                    )
            self._types[t.name] = t

    def get(self, name: str) -> ActionType | None:
        return self._types.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._types

    def validate_params(self, type_name: str, params: dict[str, Any]) -> None:
        t = self._types[type_name]
        missing = [p for p in t.required_params if p not in params]
        if missing:
            raise SchemaViolation(f"{type_name}: missing params {missing}")


def _mgmt(name: str) -> ActionType:
    return ActionType(name=name, category=ActionCategory.MANAGEMENT)


def _hist(name: str) -> ActionType:
    return ActionType(
        name=name, category=ActionCategory.HISTORY, needs_dependency_check=True
    )


# Built-in types the engine logs itself. Unit/annotation creation and
# deletion can never break a pipeline, so their check flag stays False;
# history edits always trigger the detection path.
_ENGINE_TYPES = [
    _mgmt("create-unit"),
    _mgmt("branch-unit"),
    _mgmt("create-session"),
    _mgmt("save-session"),
    _mgmt("branch-session"),
    _mgmt("set-bookmark"),
    ActionType(name="create-annotation", category=ActionCategory.ANNOTATION),
    ActionType(name="delete-annotation", category=ActionCategory.ANNOTATION),
    _hist("undo"),
    _hist("redo"),
    _hist("selective-undo"),
    _hist("skip"),
    _hist("unskip"),
    _hist("delete-action"),
    _hist("copy-actions"),
    _hist("move-actions"),
    _hist("cut-actions"),
    _hist("paste-actions"),
    _hist("revert-edit"),
]

ENGINE_TYPE_NAMES = {t.name for t in _ENGINE_TYPES}
