"""Random instance generators for the benchmark-style and dense schemes."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import GenerationError, InvalidConfigError
from .graph import Drawing, IncrementalGraph

__all__ = ["InstanceSpec", "generate_benchmark", "generate_dense", "round_half_up"]


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class InstanceSpec:
    """Generation parameters.

    ``density`` is the average number of arcs per vertex of each consecutive
    layer pair for the benchmark scheme, and the fill ratio of the complete
    bipartite graph between consecutive original layers for the dense scheme.
    """

    num_layers: int = 2
    density: float = 0.175
    inc: float = 0.2
    lo: int = 5
    hi: int = 30
    d: int = 1
    inc_degree: tuple[float, float] | None = None
    seed: int = 0
    max_attempts: int = 200

    @classmethod
    def dense(cls, num_layers=2, d=1, seed=0, lo=60, hi=80, **kw) -> "InstanceSpec":
        kw.setdefault("density", 0.5)
        kw.setdefault("inc", 0.6)
        kw.setdefault("inc_degree", (0.01, 0.10))
        return cls(num_layers=num_layers, d=d, seed=seed, lo=lo, hi=hi, **kw)

    def validate(self) -> None:
        if self.num_layers < 2:
            raise InvalidConfigError("need at least two layers")
        if not 1 <= self.lo <= self.hi:
            raise InvalidConfigError("per-layer original range must satisfy 1 <= lo <= hi")
        if self.density <= 0:
            raise InvalidConfigError("density must be positive")
        if not 0 < self.inc < 1:
            raise InvalidConfigError("incremental ratio must lie in (0, 1)")
        if self.d < 0:
            raise InvalidConfigError("d must be non-negative")
        if self.inc_degree is not None:
            a, b = self.inc_degree
            if not 0 <= a <= b:
                raise InvalidConfigError("incremental degree range must satisfy 0 <= lo <= hi")

    def with_seed(self, seed: int) -> "InstanceSpec":
        return replace(self, seed=seed)


def _layer_sizes(spec: InstanceSpec, rng: np.random.Generator):
    """Draw per-layer (original, incremental) counts, redrawing until every
    layer has at least ``d`` incremental vertices."""
    if round_half_up(spec.inc * spec.hi) < spec.d:
        raise GenerationError(
            f"at most {round_half_up(spec.inc * spec.hi)} incremental vertices per layer, "
            f"fewer than d={spec.d}"
        )
    for _ in range(spec.max_attempts):
        originals = rng.integers(spec.lo, spec.hi + 1, size=spec.num_layers)
        incrementals = np.array([round_half_up(spec.inc * int(c)) for c in originals])
        if (incrementals >= spec.d).all():
            return originals.tolist(), incrementals.tolist()
    raise GenerationError(f"no valid layer sizes after {spec.max_attempts} attempts")


def _assign_ids(orig_counts, inc_counts, rng):
    """Dense ids, shuffled inside each layer so id order says nothing about rank."""
    originals, incrementals, layers = [], [], []
    next_id = 1
    for no, ni in zip(orig_counts, inc_counts):
        ids = np.arange(next_id, next_id + no + ni)
        next_id += no + ni
        rng.shuffle(ids)
        originals.append(ids[:no].tolist())
        incrementals.append(sorted(ids[no:].tolist()))
        layers.append(ids.tolist())
    return originals, incrementals, layers


def _meta(spec: InstanceSpec, scheme: str) -> dict[str, str]:
    meta = {
        "scheme": scheme,
        "density": f"{spec.density:g}",
        "inc": f"{spec.inc:g}",
        "seed": str(spec.seed),
        "originals": f"{spec.lo}-{spec.hi}",
    }
    if spec.inc_degree is not None:
        meta["inc_degree"] = f"{spec.inc_degree[0]:g}-{spec.inc_degree[1]:g}"
    return meta


def _sample_pairs(rng, tails, heads, count, taken):
    """``count`` distinct (tail, head) pairs from tails x heads avoiding ``taken``."""
    free = [(t, h) for t in tails for h in heads if (t, h) not in taken]
    if count > len(free):
        raise GenerationError("requested density exceeds the complete bipartite graph")
    chosen = rng.choice(len(free), size=count, replace=False) if count else []
    return [free[i] for i in sorted(chosen)]


def generate_benchmark(spec: InstanceSpec) -> tuple[IncrementalGraph, Drawing]:
    """Benchmark scheme: density read as average arcs per vertex per layer pair.

    Every incremental vertex first receives one arc to a uniform vertex of a
    uniform neighbouring layer; the remaining budget of
    ``ceil(density * |IV^l u IV^(l+1)|)`` arcs per pair is sampled without
    replacement.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    orig_counts, inc_counts = _layer_sizes(spec, rng)
    originals, incrementals, layers = _assign_ids(orig_counts, inc_counts, rng)
    L = spec.num_layers

    taken: set[tuple[int, int]] = set()
    per_pair = [0] * (L - 1)
    order = [v for layer in incrementals for v in layer]
    rng.shuffle(order)
    layer_of = {v: lam for lam, layer in enumerate(layers) for v in layer}
    covered: set[int] = set()
    for v in order:
        if v in covered:
            continue
        lam = layer_of[v]
        sides = [o for o in (lam - 1, lam + 1) if 0 <= o < L]
        other = sides[int(rng.integers(len(sides)))]
        u = layers[other][int(rng.integers(len(layers[other])))]
        arc = (v, u) if other > lam else (u, v)
        taken.add(arc)
        covered.update(arc)
        per_pair[min(lam, other)] += 1

    for lam in range(L - 1):
        target = math.ceil(spec.density * (len(layers[lam]) + len(layers[lam + 1])))
        if target > len(layers[lam]) * len(layers[lam + 1]):
            raise GenerationError(
                f"density {spec.density} needs {target} arcs between layers {lam + 1} and {lam + 2}"
            )
        extra = max(0, target - per_pair[lam])
        taken.update(_sample_pairs(rng, sorted(layers[lam]), sorted(layers[lam + 1]), extra, taken))

    graph = IncrementalGraph(originals, incrementals, sorted(taken), meta=_meta(spec, "benchmark"))
    return graph, Drawing.original(graph, spec.d)


def incremental_degree_bounds(spec: InstanceSpec, neighbor_count: int) -> tuple[int, int]:
    a, b = spec.inc_degree or (0.0, 1.0)
    lo = max(1, math.ceil(a * neighbor_count - 1e-9))
    hi = max(lo, math.floor(b * neighbor_count + 1e-9))
    return lo, min(hi, neighbor_count)


def generate_dense(spec: InstanceSpec) -> tuple[IncrementalGraph, Drawing]:
    """Dense scheme: original arcs fill ``density`` of each complete bipartite
    original layer pair; each incremental vertex gets a degree drawn uniformly
    from its bounds (a fraction of the size of its neighbouring layers)."""
    spec.validate()
    if spec.inc_degree is None:
        spec = replace(spec, inc_degree=(0.01, 0.10))
    rng = np.random.default_rng(spec.seed)
    orig_counts, inc_counts = _layer_sizes(spec, rng)
    originals, incrementals, layers = _assign_ids(orig_counts, inc_counts, rng)
    L = spec.num_layers

    taken: set[tuple[int, int]] = set()
    for lam in range(L - 1):
        count = round_half_up(spec.density * len(originals[lam]) * len(originals[lam + 1]))
        taken.update(_sample_pairs(rng, sorted(originals[lam]), sorted(originals[lam + 1]), count, taken))

    layer_of = {v: lam for lam, layer in enumerate(layers) for v in layer}
    neighbor_pool = {}
    bounds = {}
    for lam, layer in enumerate(incrementals):
        pool = [u for o in (lam - 1, lam + 1) if 0 <= o < L for u in layers[o]]
        for v in layer:
            neighbor_pool[v] = sorted(pool)
            bounds[v] = incremental_degree_bounds(spec, len(pool))
    degree = dict.fromkeys(neighbor_pool, 0)
    adjacent = {v: set() for v in neighbor_pool}

    order = [v for layer in incrementals for v in layer]
    rng.shuffle(order)
    for v in order:
        lo, hi = bounds[v]
        want = int(rng.integers(lo, hi + 1)) - degree[v]
        if want <= 0:
            continue
        candidates = [
            u for u in neighbor_pool[v]
            if u not in adjacent[v] and (u not in bounds or degree[u] < bounds[u][1])
        ]
        picks = rng.choice(len(candidates), size=min(want, len(candidates)), replace=False)
        for i in sorted(picks):
            u = candidates[i]
            arc = (v, u) if layer_of[u] > layer_of[v] else (u, v)
            taken.add(arc)
            adjacent[v].add(u)
            degree[v] += 1
            if u in adjacent:
                adjacent[u].add(v)
                degree[u] += 1

    graph = IncrementalGraph(originals, incrementals, sorted(taken), meta=_meta(spec, "dense"))
    return graph, Drawing.original(graph, spec.d)
