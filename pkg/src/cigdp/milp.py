"""Exact integer model export (CPLEX LP text), solution import and a
brute-force optimum for small instances.

Variables, with ``l`` the 1-based layer:

* ``x_l_i_j`` binary, 1 when ``i`` is ranked above ``j`` (every ordered pair of
  distinct vertices of layer ``l``);
* ``c_l_i_w_j_z`` binary, 1 when arcs ``(i, w)`` and ``(j, z)`` with tails in
  layer ``l`` cross (``i < j`` by id, ``w != z``); its objective weight is the
  product of the two arc multiplicities;
* ``p_l_i`` integer rank of ``i``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, fields

import numpy as np

from .errors import InvalidInputError, TooLargeError
from .graph import Drawing, IncrementalGraph, check_feasibility, count_crossings

__all__ = [
    "ModelStats",
    "export_lp",
    "parse_solution_values",
    "drawing_from_solution",
    "layer_arrangements",
    "count_arrangements",
    "brute_force_optimum",
]


@dataclass
class ModelStats:
    c_vars: int = 0
    x_vars: int = 0
    p_vars: int = 0
    crossing_rows_a: int = 0  # c >= x_ij + x_zw - 1
    crossing_rows_b: int = 0  # c >= x_ji + x_wz - 1
    transitivity_rows: int = 0
    antisymmetry_rows: int = 0
    order_fixings: int = 0
    lower_position_bounds: int = 0
    upper_position_bounds: int = 0
    position_rows: int = 0

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _x(lam, i, j):
    return f"x_{lam + 1}_{i}_{j}"


def _p(lam, i):
    return f"p_{lam + 1}_{i}"


def _wrap(terms: list[str], per_line: int = 8) -> str:
    return "\n   ".join(" ".join(terms[k : k + per_line]) for k in range(0, len(terms), per_line))


def _crossing_pairs(graph: IncrementalGraph, lam: int):
    """Distinct-key arc pairs of block ``lam`` that can cross, with weights."""
    mult = Counter(graph.arcs_between(lam))
    keys = sorted(mult)
    for a in range(len(keys)):
        i, w = keys[a]
        for b in range(a + 1, len(keys)):
            j, z = keys[b]
            if i != j and w != z:
                yield (i, w, j, z), mult[keys[a]] * mult[keys[b]]


def export_lp(graph: IncrementalGraph, original: Drawing, d: int | None = None) -> tuple[bytes, ModelStats]:
    d = original.d if d is None else d
    stats = ModelStats()
    objective: list[str] = []
    rows: list[str] = []
    bounds: list[str] = []
    binaries: list[str] = []
    generals: list[str] = []

    for lam in range(graph.num_layers - 1):
        for (i, w, j, z), weight in _crossing_pairs(graph, lam):
            c = f"c_{lam + 1}_{i}_{w}_{j}_{z}"
            objective.append(f"+ {weight} {c}")
            binaries.append(c)
            stats.c_vars += 1
            rows.append(f" ca_{c[2:]}: {c} - {_x(lam, i, j)} - {_x(lam + 1, z, w)} >= -1")
            rows.append(f" cb_{c[2:]}: {c} - {_x(lam, j, i)} - {_x(lam + 1, w, z)} >= -1")
            stats.crossing_rows_a += 1
            stats.crossing_rows_b += 1

    for lam in range(graph.num_layers):
        members = sorted(graph.layer_vertices(lam))
        size = len(members)
        for i, j in itertools.permutations(members, 2):
            binaries.append(_x(lam, i, j))
            stats.x_vars += 1
        for i, j in itertools.combinations(members, 2):
            rows.append(f" as_{lam + 1}_{i}_{j}: {_x(lam, i, j)} + {_x(lam, j, i)} = 1")
            stats.antisymmetry_rows += 1
        for i, j, k in itertools.combinations(members, 3):
            rows.append(f" ta_{lam + 1}_{i}_{j}_{k}: {_x(lam, i, j)} + {_x(lam, j, k)} + {_x(lam, k, i)} <= 2")
            rows.append(f" tb_{lam + 1}_{i}_{j}_{k}: {_x(lam, j, i)} + {_x(lam, k, j)} + {_x(lam, i, k)} <= 2")
            stats.transitivity_rows += 2
        originals = graph.original_vertices[lam]
        for a in range(len(originals)):
            for b in range(a + 1, len(originals)):
                bounds.append(f" {_x(lam, originals[a], originals[b])} = 1")
                stats.order_fixings += 1
        for i in members:
            p = _p(lam, i)
            generals.append(p)
            stats.p_vars += 1
            terms = [p] + [f"+ {_x(lam, i, j)}" for j in members if j != i]
            rows.append(f" pos_{lam + 1}_{i}: {_wrap(terms)} = {size}")
            stats.position_rows += 1
            if graph.is_incremental[i]:
                bounds.append(f" 1 <= {p} <= {size}")
            else:
                r0 = int(graph.original_rank[i])
                bounds.append(f" {max(1, r0 - d)} <= {p} <= {min(size, r0 + d)}")
                stats.lower_position_bounds += 1
                stats.upper_position_bounds += 1

    if not objective:
        objective = [f"0 {generals[0]}"]
    out = [
        f"\\ layered drawing model: {graph.num_layers} layers, {graph.n} vertices, "
        f"{graph.num_arcs} arcs, d = {d}",
        "Minimize",
        f" obj: {_wrap(objective)}",
        "Subject To",
        *rows,
        "Bounds",
        *bounds,
        "Binaries",
        f" {_wrap(binaries)}",
        "Generals",
        f" {_wrap(generals)}",
        "End",
    ]
    return ("\n".join(out) + "\n").encode("utf-8"), stats


def parse_solution_values(text: bytes | str) -> dict[str, float]:
    """Read ``name value`` pairs; blank lines, comments and lines that do not
    have that shape are skipped."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    values = {}
    for line in text.splitlines():
        parts = line.split()
        if len(parts) != 2 or parts[0].startswith("#"):
            continue
        try:
            values[parts[0]] = float(parts[1])
        except ValueError:
            continue
    return values


def drawing_from_solution(graph: IncrementalGraph, d: int, values: dict[str, float]) -> tuple[Drawing, int]:
    """Rebuild the drawing from the ``p`` variables, verify it and recount its
    crossings (the solver's objective value is not trusted)."""
    positions = {}
    for lam in range(graph.num_layers):
        for v in graph.layer_vertices(lam):
            name = _p(lam, v)
            if name not in values:
                raise InvalidInputError(f"solution lacks {name}")
            positions[v] = int(round(values[name]))
    drawing = Drawing.from_positions(graph, d, positions)
    report = check_feasibility(drawing)
    if not report.ok:
        raise InvalidInputError(f"solution is infeasible: {report.violations[:3]}")
    return drawing, count_crossings(drawing)


# -- brute force ----------------------------------------------------------------


def count_arrangements(num_originals: int, num_incrementals: int, d: int) -> int:
    """Feasible orders of one layer: interleavings in which at most ``d``
    incrementals precede each original, times the incremental permutations."""
    # ways[k]: interleavings of the originals seen so far with k incrementals placed
    ways = [1] + [0] * num_incrementals
    for _ in range(num_originals):
        prefix = list(itertools.accumulate(ways))
        ways = [prefix[k] if k <= d else 0 for k in range(num_incrementals + 1)]
    return sum(ways) * math.factorial(num_incrementals)


def layer_arrangements(graph: IncrementalGraph, layer: int, d: int):
    """Every feasible order of the layer, as lists of vertex ids top to bottom."""
    originals = list(graph.original_vertices[layer])
    incs = list(graph.incremental_vertices[layer])
    size = len(originals) + len(incs)
    for slots in itertools.combinations(range(size), len(incs)):
        slot_set = set(slots)
        above, ok = 0, True
        for idx in range(size):
            if idx in slot_set:
                above += 1
            elif above > d:
                ok = False
                break
        if not ok:
            continue
        for perm in itertools.permutations(incs):
            order, it_o, it_i = [], iter(originals), iter(perm)
            for idx in range(size):
                order.append(next(it_i) if idx in slot_set else next(it_o))
            yield order


def _rank_matrix(graph: IncrementalGraph, layer: int, arrangements) -> np.ndarray:
    members = graph.layer_members[layer]
    out = np.zeros((len(arrangements), len(members)), dtype=np.int64)
    for a, order in enumerate(arrangements):
        out[a, graph.local_index[np.array(order, dtype=np.int64)]] = np.arange(1, len(order) + 1)
    return out


def _block_costs(graph: IncrementalGraph, lam: int, upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
    """Crossings of block ``lam`` for every (upper, lower) arrangement pair.

    With ``M[x, z]`` the multiplicity of arc (x, z), crossings equal
    ``sum M[x, z] M[y, w] [x above y] [w above z]``: a bilinear form in the
    precedence indicators of the two layers.
    """
    s, t = upper.shape[1], lower.shape[1]
    mult = np.zeros((s, t))
    if len(graph.arc_tails[lam]):
        np.add.at(mult, (graph.local_index[graph.arc_tails[lam]], graph.local_index[graph.arc_heads[lam]]), 1.0)
    pa = (upper[:, :, None] < upper[:, None, :]).reshape(len(upper), s * s).astype(float)
    pb = (lower[:, :, None] < lower[:, None, :]).reshape(len(lower), t * t).astype(float)
    kernel = np.einsum("xw,yz->xyzw", mult, mult).reshape(s * s, t * t)
    return np.rint(pa @ kernel @ pb.T).astype(np.int64)


def brute_force_optimum(graph: IncrementalGraph, original: Drawing, d: int | None = None,
                        cap: float = 1e7) -> tuple[int, Drawing]:
    """Exact optimum by enumerating feasible layer orders, combined layer by
    layer with a min-plus recursion over consecutive layer pairs.

    Raises TooLargeError when the product of per-layer arrangement counts
    exceeds ``cap``.
    """
    d = original.d if d is None else d
    counts = [
        count_arrangements(len(graph.original_vertices[lam]), len(graph.incremental_vertices[lam]), d)
        for lam in range(graph.num_layers)
    ]
    if math.prod(counts) > cap:
        raise TooLargeError(f"{math.prod(counts)} combined arrangements exceed the cap {cap:g}")
    layers = [list(layer_arrangements(graph, lam, d)) for lam in range(graph.num_layers)]
    ranks = [_rank_matrix(graph, lam, layers[lam]) for lam in range(graph.num_layers)]

    best = np.zeros(len(layers[0]), dtype=np.int64)
    back = []
    for lam in range(graph.num_layers - 1):
        total = best[:, None] + _block_costs(graph, lam, ranks[lam], ranks[lam + 1])
        arg = total.argmin(axis=0)
        back.append(arg)
        best = total[arg, np.arange(total.shape[1])]
    choice = int(best.argmin())
    value = int(best[choice])
    picks = [choice]
    for arg in reversed(back):
        picks.append(int(arg[picks[-1]]))
    picks.reverse()
    drawing = Drawing(graph, d, [layers[lam][picks[lam]] for lam in range(graph.num_layers)])
    return value, drawing
