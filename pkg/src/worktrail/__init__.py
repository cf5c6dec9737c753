"""worktrail: an embeddable workflow-provenance engine.

Records hierarchical visual-analysis workflows (projects, version-controlled
sessions, units, actions), supports selective history editing with broken-
pipeline detection, replays any past state deterministically, and lays out
the workflow as a sankey graph. Ships with a CLI, an HTTP service, and a
reference tabular-analysis domain.
"""

from .commands import CommandResult, execute, new_workspace
from .domain import (
    DomainPlugin,
    TabularDataset,
    build_tabular_domain,
    get_domain,
    load_dataset_file,
    parse_delimited,
    register,
)
from .errors import WorktrailError
from .model import (
    ActionCategory,
    ActionRecord,
    ActionType,
    Annotation,
    RecordStatus,
    Session,
    Unit,
)
from .persistence import load_workspace, replay_log, replay_log_file, save_workspace
from .replay import (
    UnitState,
    actions_between,
    diff_states,
    recover_session,
    replay,
    replay_best_effort,
    state_hash,
)
from .sankey import SankeyGraph, build_graph, layout, range_selection, render_svg
from .validation import SuggestedFix, ValidationReport, cascade_validate, classify, validate
from .workspace import Workspace

__version__ = "0.1.0"

__all__ = [
    "ActionCategory",
    "ActionRecord",
    "ActionType",
    "Annotation",
    "CommandResult",
    "DomainPlugin",
    "RecordStatus",
    "SankeyGraph",
    "Session",
    "SuggestedFix",
    "TabularDataset",
    "Unit",
    "UnitState",
    "ValidationReport",
    "Workspace",
    "WorktrailError",
    "actions_between",
    "build_graph",
    "build_tabular_domain",
    "cascade_validate",
    "classify",
    "diff_states",
    "execute",
    "get_domain",
    "layout",
    "load_dataset_file",
    "load_workspace",
    "new_workspace",
    "parse_delimited",
    "range_selection",
    "recover_session",
    "register",
    "render_svg",
    "replay",
    "replay_best_effort",
    "replay_log",
    "replay_log_file",
    "save_workspace",
    "state_hash",
    "validate",
]
