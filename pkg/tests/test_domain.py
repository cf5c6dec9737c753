"""Reference tabular domain: registration, interpretation, ingestion,
clustering against the exhaustive oracle."""

from __future__ import annotations

import random

import pytest

from worktrail.domain import (
    DomainPlugin,
    build_tabular_domain,
    get_domain,
    parse_delimited,
    register,
    working_matrix,
)
from worktrail.errors import IngestionError, MissingPrecondition, RegistrationError
from worktrail.kmeans import kmeans, wcss
from worktrail.model import ActionCategory, ActionRecord
from worktrail.replay import UnitState

from conftest import append, load_algo_param, make_unit, run
from oracle import oracle_kmeans_cost, oracle_kmeans_partition


def rec(type_name: str, **params) -> ActionRecord:
    return ActionRecord(
        id="a0",
        type_name=type_name,
        category=ActionCategory.ANALYSIS,
        params=params,
        ts=0,
        author="t",
    )


@pytest.fixture(scope="module")
def plugin():
    return get_domain("tabular")


def test_reference_domain_declares_eight_types(plugin):
    assert len(plugin.action_types) == 8
    assert plugin.type_names == {
        "load-data",
        "select-region",
        "select-algorithm",
        "set-parameter",
        "run-clustering",
        "set-color-scheme",
        "filter-rows",
        "set-widget",
    }


def test_reregister_same_name_rejected(plugin):
    with pytest.raises(RegistrationError):
        register(build_tabular_domain())


def test_register_empty_plugin_ok():
    empty = DomainPlugin(
        name="empty-test",
        capabilities=set(),
        action_types=[],
        interpret=lambda s, r: s,
        datasets={},
    )
    register(empty)
    assert get_domain("empty-test").type_names == set()


def test_interpret_load_sets_dataset(plugin):
    state = plugin.interpret(UnitState(), rec("load-data", dataset="cars"))
    assert state.dataset["name"] == "cars"
    assert state.dataset["rows"] == 32 and state.dataset["cols"] == 6
    assert state.algorithm is None and state.selection is None


def test_interpret_requires_data(plugin):
    with pytest.raises(MissingPrecondition) as info:
        plugin.interpret(UnitState(), rec("select-algorithm", algorithm="kmeans"))
    assert info.value.capability == "data-loaded"
    for name, params in (
        ("select-region", {"rows": [0, 3]}),
        ("set-color-scheme", {"scheme": "blues"}),
        ("filter-rows", {"column": "mpg", "op": ">", "value": 1}),
    ):
        with pytest.raises(MissingPrecondition):
            plugin.interpret(UnitState(), rec(name, **params))


def test_interpret_parameter_requires_algorithm(plugin):
    state = plugin.interpret(UnitState(), rec("load-data", dataset="cars"))
    with pytest.raises(MissingPrecondition) as info:
        plugin.interpret(state, rec("set-parameter", name="k", value=3))
    assert info.value.capability == "algorithm-selected"


def test_interpret_is_pure(plugin):
    state = plugin.interpret(UnitState(), rec("load-data", dataset="cars"))
    before = state.to_dict()
    plugin.interpret(state, rec("select-algorithm", algorithm="kmeans"))
    assert state.to_dict() == before


def test_region_and_filters_compose(plugin):
    state = plugin.interpret(UnitState(), rec("load-data", dataset="cars"))
    a = plugin.interpret(state, rec("select-region", rows=[0, 9]))
    a = plugin.interpret(a, rec("filter-rows", column="cylinders", op="==", value=4))
    b = plugin.interpret(state, rec("filter-rows", column="cylinders", op="==", value=4))
    b = plugin.interpret(b, rec("select-region", rows=[0, 9]))
    assert working_matrix(plugin, a) == working_matrix(plugin, b)


def test_widget_settings_replayable_but_rule_free(plugin):
    t = next(t for t in plugin.action_types if t.name == "set-widget")
    assert not t.requires and not t.provides and not t.needs_dependency_check
    state = plugin.interpret(UnitState(), rec("set-widget", key="width", value=300))
    assert state.widget_settings == {"width": 300}


def test_bundled_dataset_checksum(plugin):
    ds = plugin.datasets["cars"]
    assert ds.shape == (32, 6)
    assert ds.checksum == (
        "8cac2009004ed83ec053fe1f4f6f372e184365531bdfdf54b0b8d69054c6cf8d"
    )


def test_ingestion_errors_carry_position():
    with pytest.raises(IngestionError) as info:
        parse_delimited("bad", "a,b\n1,x\n")
    assert info.value.row == 1 and info.value.column == 1
    with pytest.raises(IngestionError):
        parse_delimited("short", "a,b\n1\n")
    with pytest.raises(IngestionError):
        parse_delimited("inf", "a\ninf\n")


def test_kmeans_bundled_example_matches_oracle():
    points = [[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]]
    labels, cost = kmeans(points, 2, seed=42)
    groups = {frozenset(i for i, l in enumerate(labels) if l == j) for j in set(labels)}
    assert groups == {frozenset({0, 1}), frozenset({2, 3})}
    assert groups == oracle_kmeans_partition(points, 2)
    assert abs(cost - oracle_kmeans_cost(points, 2)) < 1e-12


def test_kmeans_random_small_instances_exact():
    rng = random.Random(2718)
    for trial in range(20):
        n = rng.randint(2, 8)
        points = [[rng.uniform(-5, 5), rng.uniform(-5, 5)] for _ in range(n)]
        labels, cost = kmeans(points, 2, seed=1)
        assert abs(cost - oracle_kmeans_cost(points, 2)) < 1e-9, (trial, points)
        assert abs(cost - wcss(points, labels, 2)) < 1e-9


def test_kmeans_deterministic():
    rng = random.Random(7)
    points = [[rng.uniform(0, 1) for _ in range(3)] for _ in range(20)]
    first = kmeans(points, 3, seed=42)
    for _ in range(3):
        assert kmeans([list(p) for p in points], 3, seed=42) == first


def test_kmeans_degenerate_cases():
    assert kmeans([], 2) == ([], 0.0)
    assert kmeans([[1.0, 1.0]], 2) == ([0], 0.0)
    labels, cost = kmeans([[2.0, 2.0]] * 5, 3)
    assert labels == [0] * 5 and cost == 0.0


def test_clustering_through_replay_cluster_separation(ws):
    uid = make_unit(ws)
    load_algo_param(ws, uid, k=2)
    append(ws, uid, "run-clustering")
    from worktrail.replay import replay

    state = replay(ws, uid)
    result = state.derived_result
    assert result["algorithm"] == "kmeans" and result["k"] == 2
    assert len(result["assignments"]) == 32
    assert set(result["assignments"]) == {0, 1}


def test_clustering_respects_filters(ws):
    uid = make_unit(ws)
    append(ws, uid, "load-data", dataset="cars")
    append(ws, uid, "filter-rows", column="cylinders", op="==", value=4)
    append(ws, uid, "select-algorithm", algorithm="kmeans")
    append(ws, uid, "run-clustering")
    from worktrail.replay import replay

    state = replay(ws, uid)
    plugin = get_domain("tabular")
    matrix, rows, _ = working_matrix(plugin, state)
    assert state.derived_result["rows"] == rows
    assert len(state.derived_result["assignments"]) == len(matrix)
    assert 0 < len(matrix) < 32


def test_rule_interpreter_coherence_fuzz(ws, plugin):
    """Randomized action sequences: the capability walk and the interpreter
    must fail at exactly the same records."""
    from worktrail.validation import validate
    from oracle import oracle_execute

    rng = random.Random(99)
    type_pool = [
        ("load-data", lambda: {"dataset": "cars"}),
        ("select-region", lambda: {"rows": sorted(rng.sample(range(32), 2))}),
        ("select-algorithm", lambda: {"algorithm": "kmeans"}),
        ("set-parameter", lambda: {"name": rng.choice(["k", "seed"]), "value": rng.randint(2, 5)}),
        ("run-clustering", lambda: {}),
        ("set-color-scheme", lambda: {"scheme": rng.choice(["blues", "magma"])}),
        ("filter-rows", lambda: {"column": "mpg", "op": ">", "value": rng.randint(10, 30)}),
        ("set-widget", lambda: {"key": "w", "value": 1}),
    ]
    for trial in range(30):
        uid = make_unit(ws, f"fuzz{trial}")
        for _ in range(rng.randint(1, 8)):
            name, gen = rng.choice(type_pool)
            append(ws, uid, name, **gen())
        report = validate(ws, uid)
        _, failures = oracle_execute(ws, uid)
        assert [(f.index, f.record_id, f.capability) for f in report.failures] == failures
