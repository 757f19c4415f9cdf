"""Layered incremental graphs, drawings, crossing counting and feasibility.

Vertex ids are dense integers ``1..n``.  Layers are indexed from 0 inside
Python; ranks (positions inside a layer) are 1-based everywhere.  An arc
always runs from layer ``l`` to layer ``l + 1`` and is stored in arc block
``l``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InfeasiblePositionError, InvalidArgumentError, InvalidStateError

__all__ = [
    "IncrementalGraph",
    "Drawing",
    "FenwickTree",
    "Violation",
    "FeasibilityReport",
    "arcs_cross",
    "count_crossings",
    "crossing_delta_insert",
    "insertion_costs",
    "layer_insertion_costs",
    "check_feasibility",
    "insert_vertex",
    "pair_cost_matrix",
]


class IncrementalGraph:
    """Layered graph holding original vertices (in their initial order),
    incremental vertices and the arcs between consecutive layers.

    Parallel arcs are kept; every copy counts on its own.
    """

    def __init__(
        self,
        originals: Sequence[Sequence[int]],
        incrementals: Sequence[Sequence[int]],
        arcs: Iterable[tuple[int, int]],
        meta: Mapping[str, str] | None = None,
    ):
        if len(originals) != len(incrementals):
            raise InvalidArgumentError("originals and incrementals must list the same layers")
        if len(originals) < 1:
            raise InvalidArgumentError("a graph needs at least one layer")
        self.num_layers = len(originals)
        self.original_vertices = [tuple(int(v) for v in layer) for layer in originals]
        self.incremental_vertices = [tuple(sorted(int(v) for v in layer)) for layer in incrementals]
        self.meta = dict(meta or {})

        ids = [v for layer in self.original_vertices for v in layer]
        ids += [v for layer in self.incremental_vertices for v in layer]
        n = len(ids)
        seen = set()
        for v in ids:
            if v in seen:
                raise InvalidArgumentError(f"vertex {v} appears more than once")
            seen.add(v)
        if seen != set(range(1, n + 1)):
            raise InvalidArgumentError("vertex ids must be exactly 1..n")
        self.n = n

        self.layer_of = np.full(n + 1, -1, dtype=np.int64)
        self.is_incremental = np.zeros(n + 1, dtype=bool)
        self.original_rank = np.zeros(n + 1, dtype=np.int64)
        self.local_index = np.full(n + 1, -1, dtype=np.int64)
        self.layer_members: list[np.ndarray] = []
        for lam in range(self.num_layers):
            for r, v in enumerate(self.original_vertices[lam], start=1):
                self.layer_of[v] = lam
                self.original_rank[v] = r
            for v in self.incremental_vertices[lam]:
                self.layer_of[v] = lam
                self.is_incremental[v] = True
            members = np.array(
                self.original_vertices[lam] + self.incremental_vertices[lam], dtype=np.int64
            )
            self.local_index[members] = np.arange(len(members))
            self.layer_members.append(members)

        self.arcs: list[tuple[int, int]] = []
        tails: list[list[int]] = [[] for _ in range(max(self.num_layers - 1, 0))]
        heads: list[list[int]] = [[] for _ in range(max(self.num_layers - 1, 0))]
        self.neighbors: list[list[int]] = [[] for _ in range(n + 1)]
        for tail, head in arcs:
            tail, head = int(tail), int(head)
            for v in (tail, head):
                if not 1 <= v <= n:
                    raise InvalidArgumentError(f"arc ({tail}, {head}) has unknown endpoint {v}")
            lt, lh = self.layer_of[tail], self.layer_of[head]
            if lh != lt + 1:
                raise InvalidArgumentError(
                    f"arc ({tail}, {head}) does not go from a layer to the next one"
                )
            self.arcs.append((tail, head))
            tails[lt].append(tail)
            heads[lt].append(head)
            self.neighbors[tail].append(head)
            self.neighbors[head].append(tail)
        self.arc_tails = [np.array(t, dtype=np.int64) for t in tails]
        self.arc_heads = [np.array(h, dtype=np.int64) for h in heads]
        self.degree = np.array([len(nb) for nb in self.neighbors], dtype=np.int64)

    # -- views -------------------------------------------------------------

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    def layer_vertices(self, layer: int) -> list[int]:
        return list(self.original_vertices[layer]) + list(self.incremental_vertices[layer])

    def layer_size(self, layer: int) -> int:
        return len(self.original_vertices[layer]) + len(self.incremental_vertices[layer])

    def arcs_between(self, layer: int) -> list[tuple[int, int]]:
        """Arcs with tail in ``layer`` and head in ``layer + 1``."""
        return list(zip(self.arc_tails[layer].tolist(), self.arc_heads[layer].tolist()))

    def original_arcs(self, layer: int) -> list[tuple[int, int]]:
        inc = self.is_incremental
        return [(t, h) for t, h in self.arcs_between(layer) if not inc[t] and not inc[h]]

    def incremental_arcs(self, layer: int) -> list[tuple[int, int]]:
        inc = self.is_incremental
        return [(t, h) for t, h in self.arcs_between(layer) if inc[t] or inc[h]]

    @property
    def incrementals(self) -> list[int]:
        return [v for layer in self.incremental_vertices for v in layer]

    def __repr__(self):
        return (
            f"IncrementalGraph(layers={self.num_layers}, n={self.n}, "
            f"incremental={len(self.incrementals)}, arcs={self.num_arcs})"
        )


class Drawing:
    """Rank assignment for the placed vertices of an :class:`IncrementalGraph`.

    ``order[l]`` lists the placed vertices of layer ``l`` top to bottom and
    ``pos[v]`` is the 1-based rank of ``v`` (0 when unplaced).  Both views are
    kept in sync by the mutating methods.
    """

    __slots__ = ("graph", "d", "order", "pos")

    def __init__(self, graph: IncrementalGraph, d: int, order: Sequence[Sequence[int]]):
        if d < 0:
            raise InvalidArgumentError("dislocation bound must be a natural number")
        self.graph = graph
        self.d = int(d)
        self.order = [list(layer) for layer in order]
        self.pos = np.zeros(graph.n + 1, dtype=np.int64)
        for layer in self.order:
            for r, v in enumerate(layer, start=1):
                self.pos[v] = r

    @classmethod
    def original(cls, graph: IncrementalGraph, d: int) -> "Drawing":
        """Initial drawing: originals at their initial ranks, incrementals unplaced."""
        return cls(graph, d, graph.original_vertices)

    @classmethod
    def from_positions(cls, graph: IncrementalGraph, d: int, positions: Mapping[int, int]) -> "Drawing":
        """Build a drawing from raw ranks.  Nothing is validated here, so the
        result may violate the per-layer bijection; use check_feasibility."""
        drawing = cls(graph, d, [[] for _ in range(graph.num_layers)])
        for v, r in positions.items():
            drawing.pos[v] = r
        for lam in range(graph.num_layers):
            placed = [v for v in graph.layer_members[lam].tolist() if drawing.pos[v] > 0]
            placed.sort(key=lambda v: (drawing.pos[v], v))
            drawing.order[lam] = placed
        return drawing

    @property
    def original_positions(self) -> np.ndarray:
        return self.graph.original_rank

    def copy(self) -> "Drawing":
        new = Drawing.__new__(Drawing)
        new.graph = self.graph
        new.d = self.d
        new.order = [list(layer) for layer in self.order]
        new.pos = self.pos.copy()
        return new

    def rank(self, v: int) -> int:
        return int(self.pos[v])

    def is_placed(self, v: int) -> bool:
        return self.pos[v] > 0

    @property
    def is_complete(self) -> bool:
        return all(len(self.order[lam]) == self.graph.layer_size(lam) for lam in range(self.graph.num_layers))

    def unplaced_incrementals(self) -> list[int]:
        return [v for v in self.graph.incrementals if self.pos[v] == 0]

    def positions(self) -> dict[int, int]:
        return {v: r for layer in self.order for r, v in enumerate(layer, start=1)}

    def first_feasible_slot(self, layer: int) -> int:
        """Smallest slot where an insertion keeps every original within ``d``.

        Shifts of originals are non-decreasing down a layer, so the feasible
        slots are exactly ``first_feasible_slot .. len(layer) + 1``.
        """
        g = self.graph
        p_min = 1
        for idx, v in enumerate(self.order[layer]):
            if not g.is_incremental[v] and idx + 1 - g.original_rank[v] >= self.d:
                p_min = idx + 2
        return p_min

    def feasible_slots(self, layer: int) -> range:
        return range(self.first_feasible_slot(layer), len(self.order[layer]) + 2)

    def insert(self, v: int, slot: int) -> None:
        """Place ``v`` at rank ``slot``; occupants from ``slot`` on move down one rank."""
        if self.pos[v] != 0:
            raise InvalidArgumentError(f"vertex {v} is already placed")
        lam = int(self.graph.layer_of[v])
        layer = self.order[lam]
        if not 1 <= slot <= len(layer) + 1:
            raise InvalidArgumentError(f"slot {slot} out of range 1..{len(layer) + 1}")
        if slot < self.first_feasible_slot(lam):
            raise InfeasiblePositionError(
                f"inserting {v} at rank {slot} pushes an original beyond dislocation {self.d}"
            )
        layer.insert(slot - 1, v)
        self._renumber(lam, slot - 1, len(layer))

    def move(self, v: int, slot: int) -> None:
        """Relocate a placed vertex inside its layer (no feasibility check)."""
        lam = int(self.graph.layer_of[v])
        layer = self.order[lam]
        i = int(self.pos[v]) - 1
        layer.pop(i)
        layer.insert(slot - 1, v)
        self._renumber(lam, min(i, slot - 1), max(i, slot - 1) + 1)

    def swap(self, u: int, v: int) -> None:
        lam = int(self.graph.layer_of[u])
        layer = self.order[lam]
        i, j = int(self.pos[u]) - 1, int(self.pos[v]) - 1
        layer[i], layer[j] = v, u
        self.pos[u], self.pos[v] = j + 1, i + 1

    def _renumber(self, lam: int, start: int, stop: int) -> None:
        layer = self.order[lam]
        for idx in range(start, stop):
            self.pos[layer[idx]] = idx + 1

    def __eq__(self, other):
        if not isinstance(other, Drawing):
            return NotImplemented
        return self.graph is other.graph and self.d == other.d and self.order == other.order

    def __repr__(self):
        return f"Drawing(d={self.d}, order={self.order})"


class FenwickTree:
    """Binary indexed tree over indices ``1..size`` holding counts."""

    def __init__(self, size: int):
        self.size = size
        self.tree = [0] * (size + 1)

    def add(self, index: int, amount: int = 1) -> None:
        tree, size = self.tree, self.size
        while index <= size:
            tree[index] += amount
            index += index & -index

    def prefix(self, index: int) -> int:
        """Sum of entries ``1..index``."""
        tree = self.tree
        total = 0
        while index > 0:
            total += tree[index]
            index -= index & -index
        return total


def arcs_cross(drawing: Drawing, arc1: tuple[int, int], arc2: tuple[int, int]) -> bool:
    (a, b), (c, d) = arc1, arc2
    layer_of = drawing.graph.layer_of
    if layer_of[a] != layer_of[c] or layer_of[b] != layer_of[d] or layer_of[b] != layer_of[a] + 1:
        raise InvalidArgumentError(f"arcs {arc1} and {arc2} do not span the same layer pair")
    pos = drawing.pos
    if not (pos[a] and pos[b] and pos[c] and pos[d]):
        raise InvalidArgumentError("all four endpoints must be placed")
    return bool((pos[a] < pos[c] and pos[b] > pos[d]) or (pos[a] > pos[c] and pos[b] < pos[d]))


def _count_block(tail_ranks: np.ndarray, head_ranks: np.ndarray) -> int:
    """Inversions of head ranks after sorting arcs by (tail rank, head rank)."""
    if len(tail_ranks) < 2:
        return 0
    idx = np.lexsort((head_ranks, tail_ranks))
    heads = head_ranks[idx].tolist()
    tree = FenwickTree(max(heads))
    crossings = 0
    for seen, h in enumerate(heads):
        crossings += seen - tree.prefix(h)
        tree.add(h)
    return crossings


def count_crossings(drawing: Drawing) -> int:
    """Number of crossing arc pairs; arcs with an unplaced endpoint are ignored."""
    g, pos = drawing.graph, drawing.pos
    total = 0
    for lam in range(g.num_layers - 1):
        tr, hr = pos[g.arc_tails[lam]], pos[g.arc_heads[lam]]
        placed = (tr > 0) & (hr > 0)
        total += _count_block(tr[placed], hr[placed])
    return total


def _neighbor_rank_counts(drawing: Drawing, layer: int, other: int) -> np.ndarray:
    """Matrix ``B[i, r]``: arcs from the i-th member of ``layer`` to the vertex at
    rank ``r`` (1-based, column 0 collects unplaced endpoints) in ``other``."""
    g, pos = drawing.graph, drawing.pos
    members = g.layer_members[layer]
    width = len(drawing.order[other]) + 1
    counts = np.zeros((len(members), width))
    if other == layer + 1:
        mine, theirs = g.arc_tails[layer], g.arc_heads[layer]
    else:
        mine, theirs = g.arc_heads[other], g.arc_tails[other]
    if len(mine):
        np.add.at(counts, (g.local_index[mine], pos[theirs]), 1.0)
    return counts


def _adjacent_layers(g: IncrementalGraph, layer: int) -> list[int]:
    return [o for o in (layer - 1, layer + 1) if 0 <= o < g.num_layers]


def pair_cost_matrix(drawing: Drawing, layer: int) -> np.ndarray:
    """``C[i, j]`` = crossings between the arcs of members ``i`` and ``j`` of
    ``layer`` (to placed vertices of both adjacent layers) when ``i`` is ranked
    above ``j``.  Rows/columns follow ``graph.layer_members[layer]``."""
    k = len(drawing.graph.layer_members[layer])
    cost = np.zeros((k, k))
    for other in _adjacent_layers(drawing.graph, layer):
        counts = _neighbor_rank_counts(drawing, layer, other)[:, 1:]
        below = np.cumsum(counts, axis=1) - counts  # neighbours strictly above rank r
        cost += counts @ below.T
    return cost


def layer_insertion_costs(drawing: Drawing, layer: int, vertices: Sequence[int]) -> np.ndarray:
    """Row ``k`` holds the crossings added by inserting unplaced ``vertices[k]``
    at each slot ``1..L+1`` of ``layer`` (column ``p - 1`` is slot ``p``)."""
    g = drawing.graph
    cand = g.local_index[np.asarray(vertices, dtype=np.int64)]
    idx = g.local_index[np.array(drawing.order[layer], dtype=np.int64)]
    above_v = np.zeros((len(cand), len(idx)))  # c(u, v): u ranked above v
    below_v = np.zeros((len(cand), len(idx)))  # c(v, u)
    for other in _adjacent_layers(g, layer):
        counts = _neighbor_rank_counts(drawing, layer, other)[:, 1:]
        below = np.cumsum(counts, axis=1) - counts
        above_v += below[cand] @ counts[idx].T
        below_v += counts[cand] @ below[idx].T
    zeros = np.zeros((len(cand), 1))
    prefix = np.hstack((zeros, np.cumsum(above_v, axis=1)))
    suffix = np.hstack((np.cumsum(below_v[:, ::-1], axis=1)[:, ::-1], zeros))
    return np.rint(prefix + suffix).astype(np.int64)


def insertion_costs(drawing: Drawing, v: int) -> np.ndarray:
    """Crossings added by inserting unplaced ``v`` at each slot ``1..L+1`` of
    its layer (entry ``p - 1`` is the cost of slot ``p``), feasible or not."""
    return layer_insertion_costs(drawing, int(drawing.graph.layer_of[v]), [v])[0]


def crossing_delta_insert(drawing: Drawing, vertex: int, position: int) -> int:
    """Crossings added by inserting ``vertex`` at rank ``position``."""
    if drawing.pos[vertex] != 0:
        raise InvalidArgumentError(f"vertex {vertex} is already placed")
    lam = int(drawing.graph.layer_of[vertex])
    size = len(drawing.order[lam])
    if not 1 <= position <= size + 1:
        raise InvalidArgumentError(f"slot {position} out of range 1..{size + 1}")
    if position < drawing.first_feasible_slot(lam):
        raise InfeasiblePositionError(f"slot {position} is infeasible for vertex {vertex}")
    return int(insertion_costs(drawing, vertex)[position - 1])


def insert_vertex(drawing: Drawing, vertex: int, position: int) -> Drawing:
    """Copy of ``drawing`` with ``vertex`` inserted; the input is untouched."""
    new = drawing.copy()
    new.insert(vertex, position)
    return new


@dataclass(frozen=True)
class Violation:
    rule: str  # "bijection" | "relative" | "absolute"
    vertices: tuple[int, ...]
    detail: str = ""


@dataclass
class FeasibilityReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def check_feasibility(drawing: Drawing) -> FeasibilityReport:
    g, pos, d = drawing.graph, drawing.pos, drawing.d
    report = FeasibilityReport()
    for lam in range(g.num_layers):
        members = g.layer_members[lam].tolist()
        placed = [v for v in members if pos[v] > 0]
        ranks = sorted(int(pos[v]) for v in placed)
        if ranks != list(range(1, len(placed) + 1)):
            report.violations.append(
                Violation("bijection", tuple(sorted(placed)), f"layer {lam + 1} ranks {ranks}")
            )
        originals = [v for v in g.original_vertices[lam] if pos[v] > 0]
        for a in range(len(originals)):
            for b in range(a + 1, len(originals)):
                i, j = originals[a], originals[b]
                if pos[i] >= pos[j]:
                    report.violations.append(
                        Violation("relative", (i, j), f"{i} precedes {j} initially")
                    )
        for v in originals:
            shift = abs(int(pos[v]) - int(g.original_rank[v]))
            if shift > d:
                report.violations.append(Violation("absolute", (v,), f"moved {shift} > {d}"))
    return report


def checks_enabled() -> bool:
    return os.environ.get("CIGDP_CHECK_FEASIBILITY", "") not in ("", "0")


def assert_feasible(drawing: Drawing, where: str) -> None:
    """Raise when debug checks are on (CIGDP_CHECK_FEASIBILITY=1) and the drawing is infeasible."""
    if checks_enabled():
        report = check_feasibility(drawing)
        if not report.ok:
            raise InvalidStateError(f"infeasible drawing after {where}: {report.violations[:5]}")
