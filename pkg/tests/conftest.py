from __future__ import annotations

import os

# every drawing produced by the package is re-checked while tests run
os.environ["CIGDP_CHECK_FEASIBILITY"] = "1"

import numpy as np
import pytest

from cigdp.graph import Drawing, IncrementalGraph


def random_graph(rng: np.random.Generator, num_layers=None, max_size=6, max_arcs=None,
                 inc_ratio=0.4, multi=True) -> IncrementalGraph:
    """Arbitrary layered graph with dense ids shuffled over layers."""
    num_layers = num_layers or int(rng.integers(2, 5))
    sizes = rng.integers(1, max_size + 1, size=num_layers)
    ids = rng.permutation(np.arange(1, sizes.sum() + 1)).tolist()
    originals, incrementals, layers = [], [], []
    for s in sizes:
        members, ids = ids[:s], ids[s:]
        k = int(rng.binomial(s, inc_ratio))
        originals.append(members[k:])
        incrementals.append(members[:k])
        layers.append(members)
    arcs = []
    for lam in range(num_layers - 1):
        pairs = [(t, h) for t in layers[lam] for h in layers[lam + 1]]
        count = int(rng.integers(0, len(pairs) + 1))
        if max_arcs is not None:
            count = min(count, max_arcs // (num_layers - 1))
        picks = rng.choice(len(pairs), size=count, replace=multi)
        arcs += [pairs[i] for i in picks]
    return IncrementalGraph(originals, incrementals, arcs)


def random_complete_drawing(rng, graph: IncrementalGraph, d=None) -> Drawing:
    """Uniformly shuffled layers; not necessarily feasible."""
    order = [rng.permutation(graph.layer_vertices(lam)).tolist() for lam in range(graph.num_layers)]
    return Drawing(graph, graph.n if d is None else d, order)


def pairwise_crossings(drawing: Drawing) -> int:
    """Quadratic oracle: compare every pair of arcs of each block directly."""
    g, pos = drawing.graph, drawing.pos
    total = 0
    for lam in range(g.num_layers - 1):
        t = pos[g.arc_tails[lam]]
        h = pos[g.arc_heads[lam]]
        ok = (t > 0) & (h > 0)
        t, h = t[ok], h[ok]
        cross = ((t[:, None] < t[None, :]) & (h[:, None] > h[None, :]))
        total += int(cross.sum())
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
