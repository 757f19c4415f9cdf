"""Text formats for instances and solutions.

Instance::

    layers <num_layers> <d>
    meta <key> <value>                  (optional, any number)
    layer <l>: <originals in initial order> | <incrementals>
    arc <tail> <head>

Solution::

    solution
    instance <id>
    heuristic <name>
    seed <int>
    crossings <int>
    iterations <int>
    seconds <float>
    layer <l>: <id>@<rank> ...
    trace <crossings> <seconds>

Layers are numbered from 1 in files.  Files are UTF-8 with LF endings;
``#`` starts a comment line when reading.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InstanceFormatError, InvalidArgumentError
from .graph import Drawing, IncrementalGraph

__all__ = [
    "parse_instance",
    "write_instance",
    "read_instance",
    "SolutionRecord",
    "parse_solution",
    "write_solution",
    "atomic_write",
]


def _lines(text):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    for number, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield number, line


def _int(token, line, what):
    try:
        return int(token)
    except ValueError:
        raise InstanceFormatError(f"expected integer {what}, got {token!r}", line) from None


def parse_instance(text: bytes | str) -> tuple[IncrementalGraph, Drawing]:
    lines = list(_lines(text))
    if not lines:
        raise InstanceFormatError("empty instance", 1)
    number, header = lines[0]
    parts = header.split()
    if len(parts) != 3 or parts[0] != "layers":
        raise InstanceFormatError("header must read 'layers <count> <d>'", number)
    num_layers = _int(parts[1], number, "layer count")
    d = _int(parts[2], number, "dislocation")
    if num_layers < 1 or d < 0:
        raise InstanceFormatError("layer count must be positive and d non-negative", number)

    meta: dict[str, str] = {}
    originals: list[list[int] | None] = [None] * num_layers
    incrementals: list[list[int]] = [[] for _ in range(num_layers)]
    arcs: list[tuple[int, int]] = []
    arc_lines: list[int] = []
    where: dict[int, int] = {}
    for number, line in lines[1:]:
        keyword = line.split(None, 1)[0]
        if keyword == "meta":
            parts = line.split(None, 2)
            if len(parts) != 3:
                raise InstanceFormatError("meta line must read 'meta <key> <value>'", number)
            meta[parts[1]] = parts[2]
        elif keyword == "layer":
            head, sep, body = line.partition(":")
            hparts = head.split()
            if not sep or len(hparts) != 2:
                raise InstanceFormatError("layer line must read 'layer <l>: ... | ...'", number)
            lam = _int(hparts[1], number, "layer index")
            if not 1 <= lam <= num_layers:
                raise InstanceFormatError(f"layer {lam} outside 1..{num_layers}", number)
            if originals[lam - 1] is not None:
                raise InstanceFormatError(f"layer {lam} listed twice", number)
            left, _, right = body.partition("|")
            orig = [_int(t, number, "vertex id") for t in left.split()]
            inc = [_int(t, number, "vertex id") for t in right.split()]
            for v in orig + inc:
                if v in where:
                    raise InstanceFormatError(
                        f"duplicate vertex id {v} (first seen on line {where[v]})", number
                    )
                where[v] = number
            originals[lam - 1] = orig
            incrementals[lam - 1] = inc
        elif keyword == "arc":
            parts = line.split()
            if len(parts) != 3:
                raise InstanceFormatError("arc line must read 'arc <tail> <head>'", number)
            arcs.append((_int(parts[1], number, "tail"), _int(parts[2], number, "head")))
            arc_lines.append(number)
        else:
            raise InstanceFormatError(f"unknown keyword {keyword!r}", number)

    for lam, orig in enumerate(originals):
        if orig is None:
            raise InstanceFormatError(f"layer {lam + 1} missing", lines[-1][0])
    for (tail, head), number in zip(arcs, arc_lines):
        for v in (tail, head):
            if v not in where:
                raise InstanceFormatError(f"arc endpoint {v} is not a declared vertex", number)
    try:
        graph = IncrementalGraph(originals, incrementals, arcs, meta=meta)
    except InvalidArgumentError as exc:
        raise InstanceFormatError(str(exc), arc_lines[0] if arc_lines else lines[0][0]) from None
    return graph, Drawing.original(graph, d)


def read_instance(path) -> tuple[IncrementalGraph, Drawing]:
    return parse_instance(Path(path).read_bytes())


def write_instance(graph: IncrementalGraph, drawing: Drawing) -> bytes:
    """Canonical text: metadata sorted by key, arcs sorted by (tail, head)."""
    out = [f"layers {graph.num_layers} {drawing.d}"]
    for key in sorted(graph.meta):
        out.append(f"meta {key} {graph.meta[key]}")
    for lam in range(graph.num_layers):
        orig = " ".join(map(str, graph.original_vertices[lam]))
        inc = " ".join(map(str, graph.incremental_vertices[lam]))
        out.append(f"layer {lam + 1}: {orig} | {inc}".replace("  ", " ").rstrip())
    for tail, head in sorted(graph.arcs):
        out.append(f"arc {tail} {head}")
    return ("\n".join(out) + "\n").encode("utf-8")


@dataclass
class SolutionRecord:
    instance: str
    heuristic: str
    seed: int
    crossings: int
    layers: list[list[int]]
    trace: list[tuple[int, float]] = field(default_factory=list)
    iterations: int = 0
    seconds: float = 0.0

    @classmethod
    def from_drawing(cls, instance, heuristic, seed, drawing, crossings, trace=(), iterations=0, seconds=0.0):
        return cls(instance, heuristic, int(seed), int(crossings), [list(l) for l in drawing.order],
                   [(int(v), float(t)) for v, t in trace], int(iterations), float(seconds))

    def to_drawing(self, graph: IncrementalGraph, d: int) -> Drawing:
        positions = {v: r for layer in self.layers for r, v in enumerate(layer, start=1)}
        return Drawing.from_positions(graph, d, positions)

    def values(self) -> tuple:
        """Everything except the timestamps and the run time."""
        return (self.instance, self.heuristic, self.seed, self.crossings, self.iterations,
                self.layers, [v for v, _ in self.trace])


def write_solution(record: SolutionRecord) -> bytes:
    out = [
        "solution",
        f"instance {record.instance}",
        f"heuristic {record.heuristic}",
        f"seed {record.seed}",
        f"crossings {record.crossings}",
        f"iterations {record.iterations}",
        f"seconds {record.seconds:.6f}",
    ]
    for lam, layer in enumerate(record.layers, start=1):
        cells = " ".join(f"{v}@{r}" for r, v in enumerate(layer, start=1))
        out.append(f"layer {lam}: {cells}".rstrip())
    for value, seconds in record.trace:
        out.append(f"trace {value} {seconds:.6f}")
    return ("\n".join(out) + "\n").encode("utf-8")


def parse_solution(text: bytes | str) -> SolutionRecord:
    fields: dict[str, str] = {}
    layers: dict[int, list[int]] = {}
    trace: list[tuple[int, float]] = []
    lines = list(_lines(text))
    if not lines or lines[0][1] != "solution":
        raise InstanceFormatError("solution files start with 'solution'", lines[0][0] if lines else 1)
    for number, line in lines[1:]:
        keyword, _, rest = line.partition(" ")
        if keyword in ("instance", "heuristic", "seed", "crossings", "iterations", "seconds"):
            fields[keyword] = rest.strip()
        elif keyword == "layer":
            head, _, body = line.partition(":")
            lam = _int(head.split()[1], number, "layer index")
            cells = []
            for token in body.split():
                v, sep, r = token.partition("@")
                if not sep:
                    raise InstanceFormatError(f"expected id@rank, got {token!r}", number)
                cells.append((_int(r, number, "rank"), _int(v, number, "vertex id")))
            layers[lam] = [v for _, v in sorted(cells)]
        elif keyword == "trace":
            parts = rest.split()
            if len(parts) != 2:
                raise InstanceFormatError("trace line must read 'trace <value> <seconds>'", number)
            trace.append((_int(parts[0], number, "value"), float(parts[1])))
        else:
            raise InstanceFormatError(f"unknown keyword {keyword!r}", number)
    missing = {"instance", "heuristic", "seed", "crossings"} - set(fields)
    if missing:
        raise InstanceFormatError(f"missing fields {sorted(missing)}", lines[-1][0])
    return SolutionRecord(
        fields["instance"], fields["heuristic"], int(fields["seed"]), int(fields["crossings"]),
        [layers[k] for k in sorted(layers)], trace, int(fields.get("iterations", 0)),
        float(fields.get("seconds", 0.0)),
    )


def atomic_write(path, data: bytes | str) -> Path:
    """Write via a temporary file in the target directory and rename it into place."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
