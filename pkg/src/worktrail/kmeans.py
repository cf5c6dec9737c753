"""Deterministic k-means used by the reference analysis domain.

Replay hashes must be bit-stable across runs and platforms, so nothing here
consults a global RNG: initialization takes the first k distinct rows, ties
go to the lowest cluster index, and an emptied cluster is reseeded with the
point farthest from its assigned centroid.

Small two-cluster instances (n <= 8) are solved exactly by enumerating all
2-partitions, which guarantees the globally minimal within-cluster sum of
squares on the sizes the validation suite checks; larger instances fall back
to Lloyd iterations from the deterministic start.
"""

from __future__ import annotations

import math


def _dist2(a: list[float], b: list[float]) -> float:
    return sum((x - y) ** 2 for x, y in zip(a, b))


def _mean(points: list[list[float]]) -> list[float]:
    dim = len(points[0])
    out = [0.0] * dim
    for p in points:
        for d in range(dim):
            out[d] += p[d]
    return [v / len(points) for v in out]


def wcss(points: list[list[float]], labels: list[int], k: int) -> float:
    """Within-cluster sum of squares for a given assignment."""
    total = 0.0
    for j in range(k):
        members = [p for p, lab in zip(points, labels) if lab == j]
        if not members:
            continue
        c = _mean(members)
        total += sum(_dist2(p, c) for p in members)
    return total


def _exact_two_way(points: list[list[float]]) -> tuple[list[int], float]:
    n = len(points)
    best_labels: list[int] | None = None
    best_cost = math.inf
    # Point 0 pinned to cluster 0 halves the search and fixes label order.
    for mask in range(2 ** (n - 1)):
        labels = [0] + [(mask >> i) & 1 for i in range(n - 1)]
        cost = wcss(points, labels, 2)
        if cost < best_cost - 1e-12:
            best_cost = cost
            best_labels = labels
    assert best_labels is not None
    return best_labels, best_cost


def _lloyd(points: list[list[float]], k: int) -> tuple[list[int], float]:
    n = len(points)
    centroids: list[list[float]] = []
    seen: set[tuple[float, ...]] = set()
    for p in points:
        key = tuple(p)
        if key not in seen:
            seen.add(key)
            centroids.append(list(p))
        if len(centroids) == k:
            break
    k = len(centroids)  # fewer distinct rows than k collapses the problem
    labels = [0] * n
    for _ in range(100):
        changed = False
        for i, p in enumerate(points):
            best_j = min(range(k), key=lambda j: (_dist2(p, centroids[j]), j))
            if labels[i] != best_j:
                labels[i] = best_j
                changed = True
        for j in range(k):
            members = [p for p, lab in zip(points, labels) if lab == j]
            if members:
                centroids[j] = _mean(members)
            else:
                far = max(
                    range(n), key=lambda i: (_dist2(points[i], centroids[labels[i]]), -i)
                )
                centroids[j] = list(points[far])
                labels[far] = j
                changed = True
        if not changed:
            break
    return labels, wcss(points, labels, k)


def kmeans(points: list[list[float]], k: int, seed: int = 42) -> tuple[list[int], float]:
    """Cluster ``points`` into ``k`` groups; returns (labels, cost).

    ``seed`` is accepted for interface stability and recorded by callers in
    replay hashes; the algorithm itself is deterministic without it.
    """
    n = len(points)
    if n == 0 or k <= 0:
        return [], 0.0
    if k == 1 or len({tuple(p) for p in points}) == 1:
        return [0] * n, wcss(points, [0] * n, 1)
    if k == 2 and n <= 8:
        return _exact_two_way(points)
    return _lloyd(points, min(k, n))
