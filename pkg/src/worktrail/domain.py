"""Pluggable action interpreters plus the reference tabular-exploration domain.

A domain plugin declares its action types (with capability rules and an
optional override key) and supplies a pure ``interpret`` function mapping
(state, record) to the next state. The only error an interpreter may raise
is :class:`MissingPrecondition`; anything configuration-shaped is clamped so
replay stays a total, deterministic function of the history.
"""

from __future__ import annotations

import csv
import hashlib
import importlib.resources
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

from .errors import IngestionError, MissingPrecondition, RegistrationError
from .kmeans import kmeans
from .model import ActionCategory, ActionRecord, ActionType
from .replay import UnitState, canonical_json


@dataclass
class TabularDataset:
    name: str
    columns: list[str]
    matrix: list[list[float]]  # row-major, rectangular, finite
    row_labels: list[str]
    checksum: str

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.matrix), len(self.columns)

    def handle(self) -> dict:
        return {
            "name": self.name,
            "rows": self.shape[0],
            "cols": self.shape[1],
            "checksum": self.checksum,
        }


def parse_delimited(name: str, text: str) -> TabularDataset:
    """Comma-separated numeric table with a header row. A non-numeric cell
    fails ingestion with its row/column position."""
    reader = csv.reader(text.splitlines())
    rows = list(reader)
    if not rows:
        raise IngestionError("empty dataset", row=0, column=0)
    columns = [c.strip() for c in rows[0]]
    matrix: list[list[float]] = []
    for i, raw in enumerate(rows[1:], start=1):
        if len(raw) != len(columns):
            raise IngestionError(
                f"row {i} has {len(raw)} cells, expected {len(columns)}",
                row=i,
                column=len(raw),
            )
        vals = []
        for j, cell in enumerate(raw):
            try:
                v = float(cell)
            except ValueError:
                raise IngestionError(
                    f"non-numeric cell {cell!r}", row=i, column=j
                ) from None
            if v != v or v in (float("inf"), float("-inf")):
                raise IngestionError("non-finite cell", row=i, column=j)
            vals.append(v)
        matrix.append(vals)
    checksum = hashlib.sha256(canonical_json(matrix).encode()).hexdigest()
    return TabularDataset(name, columns, matrix, [f"r{i}" for i in range(len(matrix))], checksum)


@dataclass
class DomainPlugin:
    """One registered analysis domain."""

    name: str
    capabilities: set[str]
    action_types: list[ActionType]
    interpret: Callable[[UnitState, ActionRecord], UnitState]
    datasets: dict[str, TabularDataset]
    glyph_for_history: Callable[[list[ActionRecord]], str | None] = lambda records: None
    # Returns an error message for malformed params, None when acceptable.
    param_check: Callable[[str, dict], str | None] = lambda type_name, params: None

    @property
    def type_names(self) -> set[str]:
        return {t.name for t in self.action_types}

    def dataset_for(self, handle: dict | None) -> TabularDataset | None:
        if not handle:
            return None
        ds = self.datasets.get(handle.get("name", ""))
        return ds


_DOMAINS: dict[str, DomainPlugin] = {}


def register(plugin: DomainPlugin) -> None:
    if plugin.name in _DOMAINS:
        raise RegistrationError(f"domain already registered: {plugin.name}")
    names = [t.name for t in plugin.action_types]
    if len(names) != len(set(names)):
        raise RegistrationError(f"duplicate action type names in {plugin.name}")
    _DOMAINS[plugin.name] = plugin


def get_domain(name: str) -> DomainPlugin:
    if name not in _DOMAINS:
        raise RegistrationError(f"unknown domain: {name}")
    return _DOMAINS[name]


def registered_domains() -> list[str]:
    return sorted(_DOMAINS)


# ---------------------------------------------------------------------------
# Reference domain: tabular data exploration
# ---------------------------------------------------------------------------

CAP_DATA = "data-loaded"
CAP_REGION = "region-selected"
CAP_ALGO = "algorithm-selected"
CAP_CLUSTERING = "clustering-computed"

KNOWN_ALGORITHMS = ("kmeans",)
COLOR_SCHEMES = ("default", "viridis", "magma", "blues", "greens")
FILTER_OPS = ("<", "<=", ">", ">=", "==", "!=")


def _analysis(name: str, requires: set[str], provides: set[str], **kw) -> ActionType:
    return ActionType(
        name=name,
        category=ActionCategory.ANALYSIS,
        requires=frozenset(requires),
        provides=frozenset(provides),
        needs_dependency_check=True,
        **kw,
    )


TABULAR_TYPES = [
    _analysis("load-data", set(), {CAP_DATA}, required_params=("dataset",)),
    _analysis("select-region", {CAP_DATA}, {CAP_REGION}),
    _analysis(
        "select-algorithm",
        {CAP_DATA},
        {CAP_ALGO},
        override_key="algorithm",
        required_params=("algorithm",),
    ),
    _analysis(
        "set-parameter",
        {CAP_ALGO},
        set(),
        override_key="param",
        override_param="name",
        required_params=("name", "value"),
    ),
    _analysis("run-clustering", {CAP_ALGO}, {CAP_CLUSTERING}),
    _analysis(
        "set-color-scheme", {CAP_DATA}, set(), override_key="color", required_params=("scheme",)
    ),
    _analysis("filter-rows", {CAP_DATA}, set(), required_params=("column", "op", "value")),
    # Widget geometry is replayable state but never part of a pipeline.
    ActionType(
        name="set-widget",
        category=ActionCategory.MANAGEMENT,
        required_params=("key", "value"),
    ),
]


def _require(state: UnitState, capability: str, ok: bool) -> None:
    if not ok:
        raise MissingPrecondition(capability)


def working_matrix(
    plugin: DomainPlugin, state: UnitState
) -> tuple[list[list[float]], list[int], list[str]]:
    """Rows of the loaded dataset after filters and region selection, plus
    the surviving row indices and column names."""
    ds = plugin.dataset_for(state.dataset)
    if ds is None:
        return [], [], []
    rows = list(range(ds.shape[0]))
    cols = list(range(ds.shape[1]))
    sel = state.selection or {}
    for col_name, op, value in sel.get("filters", []):
        if col_name not in ds.columns:
            continue  # unknown column: filter is a no-op, replay stays total
        j = ds.columns.index(col_name)
        ops: dict[str, Callable[[float], bool]] = {
            "<": lambda v: v < value,
            "<=": lambda v: v <= value,
            ">": lambda v: v > value,
            ">=": lambda v: v >= value,
            "==": lambda v: v == value,
            "!=": lambda v: v != value,
        }
        pred = ops.get(op)
        if pred is None:
            continue
        rows = [i for i in rows if pred(ds.matrix[i][j])]
    if sel.get("rows"):
        lo, hi = sel["rows"]
        rows = [i for i in rows if lo <= i <= hi]
    if sel.get("cols"):
        lo, hi = sel["cols"]
        cols = [j for j in cols if lo <= j <= hi]
    matrix = [[ds.matrix[i][j] for j in cols] for i in rows]
    return matrix, rows, [ds.columns[j] for j in cols]


def _interpret_tabular(plugin: DomainPlugin, state: UnitState, rec: ActionRecord) -> UnitState:
    p = rec.params
    name = rec.type_name
    if name == "load-data":
        ds = plugin.datasets.get(str(p.get("dataset")))
        # Unknown names are rejected at append time; an empty handle here
        # keeps replay total on hand-built histories.
        handle = ds.handle() if ds else {"name": str(p.get("dataset")), "rows": 0, "cols": 0, "checksum": ""}
        return replace(state, dataset=handle, derived_result=None)
    if name == "select-region":
        _require(state, CAP_DATA, state.dataset is not None)
        sel = dict(state.selection or {"rows": None, "cols": None, "filters": []})
        if "rows" in p:
            sel["rows"] = [int(p["rows"][0]), int(p["rows"][1])]
        if "cols" in p:
            sel["cols"] = [int(p["cols"][0]), int(p["cols"][1])]
        return replace(state, selection=sel)
    if name == "select-algorithm":
        _require(state, CAP_DATA, state.dataset is not None)
        algo = str(p["algorithm"])
        if algo not in KNOWN_ALGORITHMS:
            algo = KNOWN_ALGORITHMS[0]
        return replace(state, algorithm=algo)
    if name == "set-parameter":
        _require(state, CAP_ALGO, state.algorithm is not None)
        params = dict(state.parameters)
        params[str(p["name"])] = p["value"]
        return replace(state, parameters=params)
    if name == "run-clustering":
        _require(state, CAP_ALGO, state.algorithm is not None)
        matrix, row_ids, _ = working_matrix(plugin, state)
        k = int(p.get("k", state.parameters.get("k", 2)))
        seed = int(p.get("seed", state.parameters.get("seed", 42)))
        labels, cost = kmeans(matrix, k, seed)
        payload = {
            "algorithm": state.algorithm,
            "k": k,
            "seed": seed,
            "rows": row_ids,
            "assignments": labels,
            "cost": round(cost, 9),
        }
        payload["hash"] = hashlib.sha256(canonical_json(payload).encode()).hexdigest()[:16]
        return replace(state, derived_result=payload)
    if name == "set-color-scheme":
        _require(state, CAP_DATA, state.dataset is not None)
        scheme = str(p["scheme"])
        if scheme not in COLOR_SCHEMES:
            scheme = "default"
        return replace(state, color_scheme=scheme)
    if name == "filter-rows":
        _require(state, CAP_DATA, state.dataset is not None)
        sel = dict(state.selection or {"rows": None, "cols": None, "filters": []})
        sel["filters"] = list(sel.get("filters", [])) + [
            [str(p["column"]), str(p["op"]), float(p["value"])]
        ]
        return replace(state, selection=sel)
    if name == "set-widget":
        widgets = dict(state.widget_settings)
        widgets[str(p["key"])] = p["value"]
        return replace(state, widget_settings=widgets)
    raise RegistrationError(f"tabular domain cannot interpret {name}")


def _tabular_glyph(records: list[ActionRecord]) -> str | None:
    from .model import RecordStatus

    for rec in records:
        if rec.type_name == "run-clustering" and rec.status == RecordStatus.ACTIVE:
            return "cluster-grid"
    return None


def _range_ok(value) -> bool:
    return (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(v, int) for v in value)
        and value[0] <= value[1]
        and value[0] >= 0
    )


def _tabular_param_check(plugin: DomainPlugin, type_name: str, params: dict) -> str | None:
    if type_name == "load-data":
        if params.get("dataset") not in plugin.datasets:
            return f"unknown dataset {params.get('dataset')!r}"
    elif type_name == "select-region":
        if "rows" not in params and "cols" not in params:
            return "select-region needs a rows or cols range"
        for key in ("rows", "cols"):
            if key in params and not _range_ok(params[key]):
                return f"bad {key} range {params[key]!r}"
    elif type_name == "select-algorithm":
        if params.get("algorithm") not in KNOWN_ALGORITHMS:
            return f"unknown algorithm {params.get('algorithm')!r}"
    elif type_name == "set-parameter":
        if not isinstance(params.get("name"), str):
            return "parameter name must be a string"
        if not isinstance(params.get("value"), (int, float, str, bool)):
            return "parameter value must be a scalar"
    elif type_name == "set-color-scheme":
        if params.get("scheme") not in COLOR_SCHEMES:
            return f"unknown color scheme {params.get('scheme')!r}"
    elif type_name == "filter-rows":
        if params.get("op") not in FILTER_OPS:
            return f"unknown filter op {params.get('op')!r}"
        if not isinstance(params.get("value"), (int, float)):
            return "filter value must be numeric"
    return None


def _load_bundled_datasets() -> dict[str, TabularDataset]:
    text = (
        importlib.resources.files("worktrail.data").joinpath("cars.csv").read_text("utf-8")
    )
    return {"cars": parse_delimited("cars", text)}


def load_dataset_file(path: str | Path) -> TabularDataset:
    p = Path(path)
    return parse_delimited(p.stem, p.read_text("utf-8"))


def build_tabular_domain(extra_datasets: dict[str, TabularDataset] | None = None) -> DomainPlugin:
    plugin = DomainPlugin(
        name="tabular",
        capabilities={CAP_DATA, CAP_REGION, CAP_ALGO, CAP_CLUSTERING},
        action_types=list(TABULAR_TYPES),
        interpret=None,  # type: ignore[arg-type]  # bound below
        datasets=_load_bundled_datasets(),
        glyph_for_history=_tabular_glyph,
    )
    if extra_datasets:
        plugin.datasets.update(extra_datasets)
    plugin.interpret = lambda state, rec: _interpret_tabular(plugin, state, rec)
    plugin.param_check = lambda type_name, params: _tabular_param_check(plugin, type_name, params)
    return plugin


register(build_tabular_domain())
