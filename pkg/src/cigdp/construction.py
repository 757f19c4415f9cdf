"""Semi-greedy construction phases.

* ``construct_c2``: degree-based candidate list, barycentric placement.
* ``construct_c3``: candidates scored by the cheapest insertion cost.
* ``construct_gl``: candidates scored by embedding distance to placed neighbours.

Each takes the original drawing (left untouched) and returns a complete
feasible drawing.  ``phi`` fixes the greediness; when ``None`` it is drawn
uniformly from ``[0, 1]`` with ``rng``.
"""

from __future__ import annotations

import math

import numpy as np

from .embeddings import ArcDistances
from .generators import round_half_up
from .graph import Drawing, assert_feasible, layer_insertion_costs

__all__ = ["construct_c2", "construct_c3", "construct_gl", "closest_feasible_slot", "gl_scores"]


def closest_feasible_slot(drawing: Drawing, layer: int, target: int) -> int:
    """Feasible slot nearest to ``target``.

    Feasible slots form the contiguous range ``first_feasible_slot..L+1``,
    so the outward scan from ``target`` reduces to clamping.
    """
    lo = drawing.first_feasible_slot(layer)
    hi = len(drawing.order[layer]) + 1
    return min(max(int(target), lo), hi)


def _midpoint(drawing: Drawing, layer: int) -> int:
    return (len(drawing.order[layer]) + 2) // 2


def _draw_phi(phi, rng):
    return float(rng.random()) if phi is None else float(phi)


def _placed_neighbors(drawing: Drawing, v: int) -> list[int]:
    pos = drawing.pos
    return [u for u in drawing.graph.neighbors[v] if pos[u] > 0]


def construct_c2(graph, original: Drawing, rng: np.random.Generator, phi: float | None = None) -> Drawing:
    """Candidates with total degree at least ``phi`` times the largest remaining
    degree; the pick goes to the feasible slot closest to the rounded mean rank
    of its placed neighbours.  The very first vertex is a maximum-degree one
    placed at a uniform feasible slot."""
    phi = _draw_phi(phi, rng)
    drawing = original.copy()
    remaining = drawing.unplaced_incrementals()
    degree = graph.degree
    first = True
    while remaining:
        degs = degree[remaining]
        if first:
            pool = [v for v, g in zip(remaining, degs) if g == degs.max()]
        else:
            pool = [v for v, g in zip(remaining, degs) if g >= phi * degs.max()]
        v = pool[int(rng.integers(len(pool)))]
        lam = int(graph.layer_of[v])
        if first:
            slots = drawing.feasible_slots(lam)
            slot = slots[int(rng.integers(len(slots)))]
            first = False
        else:
            ranks = [int(drawing.pos[u]) for u in _placed_neighbors(drawing, v)]
            target = round_half_up(sum(ranks) / len(ranks)) if ranks else _midpoint(drawing, lam)
            slot = closest_feasible_slot(drawing, lam, target)
        drawing.insert(v, slot)
        remaining.remove(v)
    assert_feasible(drawing, "C2 construction")
    return drawing


def construct_c3(graph, original: Drawing, rng: np.random.Generator, phi: float | None = None) -> Drawing:
    """Candidates scored by their cheapest feasible insertion; the list keeps
    scores up to ``min + phi * (max - min)`` and the pick is inserted at its
    first cheapest slot."""
    phi = _draw_phi(phi, rng)
    drawing = original.copy()
    remaining = drawing.unplaced_incrementals()
    best_cost: dict[int, int] = {}
    best_slot: dict[int, int] = {}

    def rescore(layer: int) -> None:
        cands = [v for v in remaining if graph.layer_of[v] == layer]
        if not cands:
            return
        costs = layer_insertion_costs(drawing, layer, cands)
        lo = drawing.first_feasible_slot(layer)
        feasible = costs[:, lo - 1 :]
        arg = feasible.argmin(axis=1)
        for k, v in enumerate(cands):
            best_cost[v] = int(feasible[k, arg[k]])
            best_slot[v] = lo + int(arg[k])

    for lam in range(graph.num_layers):
        rescore(lam)
    while remaining:
        scores = np.array([best_cost[v] for v in remaining])
        xi = scores.min() + phi * (scores.max() - scores.min())
        pool = [v for v, s in zip(remaining, scores) if s <= xi]
        v = pool[int(rng.integers(len(pool)))]
        lam = int(graph.layer_of[v])
        drawing.insert(v, best_slot[v])
        remaining.remove(v)
        for other in (lam - 1, lam, lam + 1):
            if 0 <= other < graph.num_layers:
                rescore(other)
    assert_feasible(drawing, "C3 construction")
    return drawing


def gl_scores(drawing: Drawing, distances: ArcDistances, vertices) -> dict[int, float]:
    """Smallest distance from each vertex to a placed neighbour (``inf`` if none)."""
    out = {}
    for v in vertices:
        placed = _placed_neighbors(drawing, v)
        out[v] = min((distances[(v, u)] for u in placed), default=math.inf)
    return out


def _gl_slots(drawing: Drawing, v: int, distances: ArcDistances, rng) -> list[int]:
    g = drawing.graph
    lam = int(g.layer_of[v])
    slots: list[int] = []
    for other in (lam - 1, lam + 1):
        near = [u for u in _placed_neighbors(drawing, v) if g.layer_of[u] == other]
        if not near:
            continue
        keyed = sorted(set(near), key=lambda u: (distances[(v, u)], u))
        nearest = keyed[0]
        farthest = min(keyed, key=lambda u: (-distances[(v, u)], u))
        pick = nearest if rng.random() < 0.5 else farthest
        slots.append(closest_feasible_slot(drawing, lam, int(drawing.pos[pick])))
    if not slots:
        return [closest_feasible_slot(drawing, lam, _midpoint(drawing, lam))]
    mean = round_half_up(sum(slots) / len(slots))
    slots.append(closest_feasible_slot(drawing, lam, mean))
    return sorted(set(slots))


def construct_gl(graph, original: Drawing, distances: ArcDistances, rng: np.random.Generator,
                 phi: float | None = None, trace: list | None = None) -> Drawing:
    """Candidates scored by their shortest embedding distance to a placed
    neighbour.  The pick's candidate slots come from its nearest or farthest
    placed neighbour in each adjacent layer plus their rounded mean; one of
    them is chosen uniformly.

    Unscored candidates (no placed neighbour) join the list only when no
    candidate has a score.  ``trace``, when given, receives the score map
    before every pick (used to check the incremental score updates).
    """
    phi = _draw_phi(phi, rng)
    drawing = original.copy()
    remaining = drawing.unplaced_incrementals()
    score = gl_scores(drawing, distances, remaining)
    while remaining:
        if trace is not None:
            trace.append({v: score[v] for v in remaining})
        finite = [score[v] for v in remaining if score[v] < math.inf]
        if finite:
            xi = min(finite) + phi * (max(finite) - min(finite))
            pool = [v for v in remaining if score[v] <= xi]
        else:
            pool = list(remaining)
        v = pool[int(rng.integers(len(pool)))]
        slots = _gl_slots(drawing, v, distances, rng)
        drawing.insert(v, slots[int(rng.integers(len(slots)))])
        remaining.remove(v)
        for u in graph.neighbors[v]:
            if u in score and drawing.pos[u] == 0:
                score[u] = min(score[u], distances[(u, v)])
    assert_feasible(drawing, "GL construction")
    return drawing
