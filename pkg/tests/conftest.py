from __future__ import annotations

import pytest

from worktrail.commands import execute, new_workspace
from worktrail.fixtures import counter_clock


@pytest.fixture
def ws():
    """Fresh workspace with the tabular domain and a deterministic clock."""
    return new_workspace("test-project", base_session="sessionA", clock=counter_clock())


def run(ws, op, **payload):
    return execute(ws, op, payload)


def make_unit(ws, name="u", session=None):
    result = run(ws, "create-unit", session=session or ws.root_session_id, name=name)
    return result.ids["units"][0]


def append(ws, unit, type_name, **params):
    result = run(ws, "append-action", unit=unit, type=type_name, params=params)
    return result.ids["records"][0], result.reports


def load_algo_param(ws, unit, k=3):
    """The canonical three-step pipeline: load, algorithm, parameter."""
    rid_load, _ = append(ws, unit, "load-data", dataset="cars")
    rid_algo, _ = append(ws, unit, "select-algorithm", algorithm="kmeans")
    rid_param, _ = append(ws, unit, "set-parameter", name="k", value=k)
    return rid_load, rid_algo, rid_param
