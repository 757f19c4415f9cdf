"""GRASP driver: repeated construction + local search with incumbent tracking."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .construction import construct_c2, construct_c3, construct_gl
from .embeddings import EmbeddingConfig, arc_distances, embed, project_2d
from .errors import InvalidConfigError, InvalidInputError
from .graph import Drawing, IncrementalGraph, assert_feasible, check_feasibility, count_crossings
from .instance_io import SolutionRecord, atomic_write, write_solution
from .local_search import local_search

__all__ = [
    "SolverConfig",
    "RunTrace",
    "BatchResult",
    "CONSTRUCTIONS",
    "HEURISTICS",
    "run",
    "run_batch",
    "gl_distances",
    "record_from_trace",
]

HEURISTICS = ("grasp2", "grasp3", "gl")

# named RNG substreams spawned from the run seed
CONSTRUCTION_STREAM, PHI_STREAM, EMBEDDING_STREAM = 0, 1, 2

CONSTRUCTIONS: dict[str, Callable] = {
    "grasp2": lambda graph, original, rng, phi, distances: construct_c2(graph, original, rng, phi),
    "grasp3": lambda graph, original, rng, phi, distances: construct_c3(graph, original, rng, phi),
    "gl": lambda graph, original, rng, phi, distances: construct_gl(graph, original, distances, rng, phi),
}


@dataclass(frozen=True)
class SolverConfig:
    heuristic: str = "grasp3"
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    stochastic: bool = False
    eta: int = 100
    eta_max: int = 20
    seed: int = 0
    time_limit: float | None = None
    phi: float | None = None  # None: redrawn uniformly for every construction

    def validate(self) -> None:
        if self.heuristic not in HEURISTICS:
            raise InvalidConfigError(f"unknown heuristic {self.heuristic!r}; choose from {HEURISTICS}")
        if self.eta < 1 or self.eta_max < 1:
            raise InvalidConfigError("eta and eta_max must be at least 1")
        if self.stochastic and not (self.heuristic == "gl" and self.embedding.stochastic):
            raise InvalidConfigError("re-embedding needs the gl heuristic with a stochastic embedding")
        if self.time_limit is not None and self.time_limit <= 0:
            raise InvalidConfigError("time limit must be positive")
        if self.phi is not None and not 0.0 <= self.phi <= 1.0:
            raise InvalidConfigError("phi must lie in [0, 1]")

    def with_seed(self, seed: int) -> "SolverConfig":
        return replace(self, seed=seed)


@dataclass
class RunTrace:
    incumbents: list[tuple[int, float]]  # (crossings, seconds since start)
    iterations: int
    seconds: float
    drawing: Drawing
    values: list[int] = field(default_factory=list)  # crossings after each local search

    @property
    def best(self) -> int:
        return self.incumbents[-1][0]


def gl_distances(graph: IncrementalGraph, config: EmbeddingConfig, rng: np.random.Generator):
    seed = int(rng.integers(2**63)) if config.stochastic else None
    return arc_distances(project_2d(embed(graph, config, seed=seed)), graph)


def run(graph: IncrementalGraph, original: Drawing, config: SolverConfig,
        clock: Callable[[], float] = time.monotonic) -> RunTrace:
    """Iterate until ``eta`` iterations, ``eta_max`` consecutive iterations
    without strict improvement, or the time limit (checked between
    iterations, so the last one may overrun; at least one always runs)."""
    config.validate()
    report = check_feasibility(original)
    if not report.ok:
        raise InvalidInputError(f"original drawing is infeasible: {report.violations[:3]}")
    construct = CONSTRUCTIONS[config.heuristic]
    construction_rng = np.random.default_rng([config.seed, CONSTRUCTION_STREAM])
    phi_rng = np.random.default_rng([config.seed, PHI_STREAM])
    embedding_rng = np.random.default_rng([config.seed, EMBEDDING_STREAM])

    start = clock()
    distances = gl_distances(graph, config.embedding, embedding_rng) if config.heuristic == "gl" else None
    incumbents: list[tuple[int, float]] = []
    values: list[int] = []
    best_drawing = None
    it = stale = 0
    while True:
        if config.stochastic and it >= 1:
            distances = gl_distances(graph, config.embedding, embedding_rng)
        phi = float(phi_rng.random()) if config.phi is None else config.phi
        drawing = local_search(construct(graph, original, construction_rng, phi, distances))
        value = count_crossings(drawing)
        values.append(value)
        it += 1
        if not incumbents or value < incumbents[-1][0]:
            incumbents.append((value, clock() - start))
            best_drawing = drawing
            stale = 0
        else:
            stale += 1
        if it >= config.eta or stale >= config.eta_max:
            break
        if config.time_limit is not None and clock() - start >= config.time_limit:
            break
    assert_feasible(best_drawing, "GRASP run")
    return RunTrace(incumbents, it, clock() - start, best_drawing, values)


def record_from_trace(instance: str, heuristic: str, seed: int, trace: RunTrace) -> SolutionRecord:
    return SolutionRecord.from_drawing(instance, heuristic, seed, trace.drawing, trace.best,
                                       trace.incumbents, trace.iterations, trace.seconds)


@dataclass
class BatchResult:
    traces: dict[tuple[str, str, int], RunTrace]
    errors: dict[tuple[str, str, int], str]
    files: dict[tuple[str, str, int], Path]


MANIFEST_COLUMNS = ("instance", "heuristic", "seed", "crossings", "seconds", "iterations")


def run_batch(instances: Mapping[str, tuple[IncrementalGraph, Drawing]],
              configs: Mapping[str, SolverConfig], repetitions: int, seed_base: int = 0,
              out_dir=None, jobs: int = 1) -> BatchResult:
    """Run every (instance, labelled config, repetition) with seed
    ``seed_base + repetition``.  Failures are recorded and the batch goes on.
    With ``out_dir`` every result is saved as a solution file
    ``<instance>__<label>__<rep>.sol`` plus a ``manifest.csv``."""
    keys = [(name, label, rep) for name in instances for label in configs for rep in range(repetitions)]

    def one(key):
        name, label, rep = key
        graph, original = instances[name]
        return run(graph, original, configs[label].with_seed(seed_base + rep))

    traces, errors, files = {}, {}, {}
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = {key: pool.submit(one, key) for key in keys}
        for key, future in futures.items():
            try:
                traces[key] = future.result()
            except Exception as exc:  # recorded per run, the batch goes on
                errors[key] = f"{type(exc).__name__}: {exc}"

    if out_dir is not None:
        out_dir = Path(out_dir)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for key in keys:
            if key not in traces:
                continue
            name, label, rep = key
            trace = traces[key]
            record = record_from_trace(name, label, seed_base + rep, trace)
            files[key] = atomic_write(out_dir / f"{name}__{label}__{rep}.sol", write_solution(record))
            writer.writerow([name, label, seed_base + rep, trace.best, f"{trace.seconds:.6f}", trace.iterations])
        atomic_write(out_dir / "manifest.csv", buf.getvalue())
    return BatchResult(traces, errors, files)
