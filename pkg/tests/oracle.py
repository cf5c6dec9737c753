"""Independent oracles the engine is checked against.

Everything here is deliberately re-implemented from first principles:
- effective histories by walking branch links directly,
- the override rule as a plain last-active-per-key filter,
- pipeline execution by actually running records through the domain
  interpreter and catching missing-precondition errors,
- k-means cost by exhaustively enumerating partitions.

None of it calls the engine's replay or validation code paths.
"""

from __future__ import annotations

import itertools

from worktrail.errors import MissingPrecondition
from worktrail.model import RecordStatus
from worktrail.replay import UnitState


def oracle_effective_history(ws, unit_id: str) -> list:
    """Recursive prefix concatenation, written independently."""
    unit = ws.units[unit_id]
    if unit.branch_parent is None:
        prefix = []
    else:
        parent_history = oracle_effective_history(ws, unit.branch_parent.unit_id)
        prefix = parent_history[: unit.branch_parent.prefix_len]
    return prefix + list(unit.local_actions)


def oracle_override_filter(ws, records: list) -> list:
    """Keep only the last active record of each override group."""
    def key_of(rec):
        t = ws.registry.get(rec.type_name)
        if t is None or t.override_key is None:
            return None
        if t.override_param is None:
            return t.override_key
        return f"{t.override_key}:{rec.params.get(t.override_param)}"

    survivors = []
    seen_keys: set[str] = set()
    for rec in reversed(records):
        k = key_of(rec)
        if k is None:
            survivors.append(rec)
        elif k not in seen_keys:
            seen_keys.add(k)
            survivors.append(rec)
    return list(reversed(survivors))


def oracle_execute(ws, unit_id: str) -> tuple[UnitState, list[tuple[int, str, str]]]:
    """Brute-force re-execution of the unit's active records through the
    domain interpreter. Returns the final state and a list of
    (effective index, record id, missing capability) execution failures.
    Failed records are skipped, like a pipeline that cannot run them."""
    history = oracle_effective_history(ws, unit_id)
    active = [(i, r) for i, r in enumerate(history) if r.status == RecordStatus.ACTIVE]
    runnable_ids = {r.id for r in oracle_override_filter(ws, [r for _, r in active])}
    state = UnitState()
    failures = []
    for idx, rec in active:
        if rec.id not in runnable_ids:
            continue
        if rec.type_name not in ws.domain.type_names:
            continue
        try:
            state = ws.domain.interpret(state, rec)
        except MissingPrecondition as exc:
            failures.append((idx, rec.id, exc.capability))
    return state, failures


def oracle_kmeans_cost(points: list[list[float]], k: int) -> float:
    """Minimal within-cluster sum of squares over all assignments into at
    most k clusters, by exhaustive enumeration. Exponential: keep n small."""
    n = len(points)
    if n == 0 or k <= 0:
        return 0.0

    def cost(labels):
        total = 0.0
        for j in set(labels):
            members = [p for p, lab in zip(points, labels) if lab == j]
            dim = len(members[0])
            centroid = [sum(m[d] for m in members) / len(members) for d in range(dim)]
            total += sum(
                sum((m[d] - centroid[d]) ** 2 for d in range(dim)) for m in members
            )
        return total

    best = None
    for labels in itertools.product(range(min(k, n)), repeat=n):
        c = cost(labels)
        if best is None or c < best:
            best = c
    return best


def oracle_kmeans_partition(points: list[list[float]], k: int) -> set[frozenset[int]]:
    """The globally optimal partition (as index sets) for small instances."""
    n = len(points)

    def cost(labels):
        total = 0.0
        for j in set(labels):
            members = [p for p, lab in zip(points, labels) if lab == j]
            dim = len(members[0])
            centroid = [sum(m[d] for m in members) / len(members) for d in range(dim)]
            total += sum(
                sum((m[d] - centroid[d]) ** 2 for d in range(dim)) for m in members
            )
        return total

    best_labels = None
    best_cost = None
    for labels in itertools.product(range(min(k, n)), repeat=n):
        c = cost(labels)
        if best_cost is None or c < best_cost - 1e-12:
            best_cost = c
            best_labels = labels
    groups: dict[int, set[int]] = {}
    for i, lab in enumerate(best_labels):
        groups.setdefault(lab, set()).add(i)
    return {frozenset(g) for g in groups.values()}
