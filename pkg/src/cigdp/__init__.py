"""Toolkit for drawing incremental layered graphs with few arc crossings
while keeping the original vertices close to their initial ranks."""

from __future__ import annotations

__version__ = "0.1.0"

from .construction import construct_c2, construct_c3, construct_gl
from .embeddings import EmbeddingConfig, arc_distances, embed, project_2d
from .errors import CigdpError
from .generators import InstanceSpec, generate_benchmark, generate_dense
from .graph import (
    Drawing,
    IncrementalGraph,
    arcs_cross,
    check_feasibility,
    count_crossings,
    crossing_delta_insert,
    insert_vertex,
)
from .grasp import RunTrace, SolverConfig, run, run_batch
from .instance_io import parse_instance, read_instance, write_instance
from .local_search import insert_pass, local_search, swap_pass
from .milp import brute_force_optimum, export_lp

__all__ = [
    "CigdpError",
    "Drawing",
    "EmbeddingConfig",
    "IncrementalGraph",
    "InstanceSpec",
    "RunTrace",
    "SolverConfig",
    "arc_distances",
    "arcs_cross",
    "brute_force_optimum",
    "check_feasibility",
    "construct_c2",
    "construct_c3",
    "construct_gl",
    "count_crossings",
    "crossing_delta_insert",
    "embed",
    "export_lp",
    "generate_benchmark",
    "generate_dense",
    "insert_pass",
    "insert_vertex",
    "local_search",
    "parse_instance",
    "project_2d",
    "read_instance",
    "run",
    "run_batch",
    "swap_pass",
    "write_instance",
]
