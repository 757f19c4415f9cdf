"""Best-improvement swap and insert moves over incremental vertices.

Move deltas come from per-layer pair-cost matrices.  For a layer in its
current order let ``M[a, b]`` be the crossings between the arcs of the
vertices at indices ``a`` and ``b`` while ``a`` is above ``b`` and
``D = M.T - M`` the change when the two trade places.  A move only reverses
the relative order of a set of pairs, so its delta is a sum of ``D`` entries,
read off in O(1) from row and column prefix sums of ``D``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Drawing, assert_feasible, pair_cost_matrix

__all__ = ["MoveOutcome", "swap_pass", "insert_pass", "local_search", "swap_deltas", "insert_deltas"]


@dataclass(frozen=True)
class MoveOutcome:
    kind: str  # "swap" | "insert"
    vertices: tuple[int, ...]
    slots: tuple[int, int]  # ranks before and after (swap: the two ranks)
    delta: int


class _Tables:
    """Pair-cost matrices per layer plus prefix tables for the current order."""

    def __init__(self, drawing: Drawing):
        self.drawing = drawing
        self.cost = [None] * drawing.graph.num_layers
        self.prefix = [None] * drawing.graph.num_layers

    def tables(self, layer: int):
        if self.prefix[layer] is None:
            if self.cost[layer] is None:
                self.cost[layer] = np.rint(pair_cost_matrix(self.drawing, layer)).astype(np.int64)
            g = self.drawing.graph
            idx = g.local_index[np.array(self.drawing.order[layer], dtype=np.int64)]
            m = self.cost[layer][np.ix_(idx, idx)]
            diff = m.T - m
            k = len(idx)
            rows = np.zeros((k, k + 1), dtype=np.int64)
            rows[:, 1:] = np.cumsum(diff, axis=1)
            cols = np.zeros((k + 1, k), dtype=np.int64)
            cols[1:, :] = np.cumsum(diff, axis=0)
            self.prefix[layer] = (diff, rows, cols)
        return self.prefix[layer]

    def moved(self, layer: int) -> None:
        """Invalidate after the order of ``layer`` changed."""
        self.prefix[layer] = None
        for other in (layer - 1, layer + 1):
            if 0 <= other < len(self.cost):
                self.cost[other] = None
                self.prefix[other] = None


def swap_deltas(diff, rows, cols, i: int, js: np.ndarray) -> np.ndarray:
    """Delta of swapping index ``i`` with each index in ``js`` (all != i)."""
    js = np.asarray(js, dtype=np.int64)
    a = np.minimum(i, js)
    b = np.maximum(i, js)
    return diff[a, b] + rows[a, b] - rows[a, a + 1] + cols[b, b] - cols[a + 1, b]


def insert_deltas(rows, cols, i: int, k: int) -> np.ndarray:
    """Delta of moving index ``i`` to each index ``0..k-1`` (entry ``i`` is 0)."""
    js = np.arange(k)
    down = rows[i, np.minimum(js + 1, k)] - rows[i, i + 1]
    up = cols[i, i] - cols[np.minimum(js, i), i]
    return np.where(js > i, down, np.where(js < i, up, 0))


def _scan_order(drawing: Drawing) -> list[int]:
    g = drawing.graph
    return [v for lam in range(g.num_layers) for v in g.incremental_vertices[lam]]


def _swap_sweep(drawing: Drawing, tables: _Tables, moves) -> int:
    g, pos = drawing.graph, drawing.pos
    applied = 0
    for v in _scan_order(drawing):
        lam = int(g.layer_of[v])
        order = drawing.order[lam]
        i = int(pos[v]) - 1
        js = np.array([j for j, u in enumerate(order) if g.is_incremental[u] and j != i], dtype=np.int64)
        if not len(js):
            continue
        diff, rows, cols = tables.tables(lam)
        deltas = swap_deltas(diff, rows, cols, i, js)
        best = int(np.argmin(deltas))
        if deltas[best] < 0:
            u = order[js[best]]
            if moves is not None:
                moves.append(MoveOutcome("swap", (v, u), (i + 1, int(js[best]) + 1), int(deltas[best])))
            drawing.swap(v, u)
            tables.moved(lam)
            applied += 1
    return applied


def _insert_sweep(drawing: Drawing, tables: _Tables, moves) -> int:
    g, pos, d = drawing.graph, drawing.pos, drawing.d
    applied = 0
    for v in _scan_order(drawing):
        lam = int(g.layer_of[v])
        order = drawing.order[lam]
        i = int(pos[v]) - 1
        # moving up past an original adds one to its shift; those already at d block
        lowest = 0
        for j in range(i - 1, -1, -1):
            u = order[j]
            if not g.is_incremental[u] and j + 1 - g.original_rank[u] >= d:
                lowest = j + 1
                break
        _, rows, cols = tables.tables(lam)
        deltas = insert_deltas(rows, cols, i, len(order))
        deltas[:lowest] = np.iinfo(np.int64).max
        best = int(np.argmin(deltas))
        if deltas[best] < 0:
            if moves is not None:
                moves.append(MoveOutcome("insert", (v,), (i + 1, best + 1), int(deltas[best])))
            drawing.move(v, best + 1)
            tables.moved(lam)
            applied += 1
    return applied


def _to_fixpoint(drawing: Drawing, sweep, moves) -> int:
    tables = _Tables(drawing)
    total = 0
    while True:
        applied = sweep(drawing, tables, moves)
        total += applied
        if not applied:
            return total


def swap_pass(drawing: Drawing, moves: list | None = None) -> tuple[Drawing, int]:
    """Swap moves to a fixpoint on a copy; returns the copy and the move count.

    Incremental vertices are visited layer by layer in ascending id; each takes
    its best strictly improving swap with another incremental of its layer.
    """
    out = drawing.copy()
    count = _to_fixpoint(out, _swap_sweep, moves)
    assert_feasible(out, "swap moves")
    return out, count


def insert_pass(drawing: Drawing, moves: list | None = None) -> tuple[Drawing, int]:
    """Insert moves to a fixpoint: each incremental vertex goes to its best
    strictly improving feasible slot of its layer."""
    out = drawing.copy()
    count = _to_fixpoint(out, _insert_sweep, moves)
    assert_feasible(out, "insert moves")
    return out, count


def local_search(drawing: Drawing, moves: list | None = None) -> Drawing:
    """Swap moves to a fixpoint, then insert moves to a fixpoint."""
    out, _ = swap_pass(drawing, moves)
    out, _ = insert_pass(out, moves)
    return out
