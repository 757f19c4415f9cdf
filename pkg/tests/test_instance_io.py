from __future__ import annotations

import re

import numpy as np
import pytest

from conftest import random_graph
from cigdp.errors import GenerationError, InstanceFormatError, InvalidStateError
from cigdp.generators import (
    InstanceSpec,
    generate_benchmark,
    generate_dense,
    incremental_degree_bounds,
    round_half_up,
)
from cigdp.graph import Drawing, IncrementalGraph, check_feasibility
from cigdp.instance_io import (
    SolutionRecord,
    atomic_write,
    parse_instance,
    parse_solution,
    write_instance,
    write_solution,
)
from cigdp.render import RenderOptions, render_svg, step_chart_svg

TINY = b"layers 2 1\nlayer 1: 1 |\nlayer 2: 2 |\narc 1 2\n"


def test_parse_tiny():
    graph, drawing = parse_instance(TINY)
    assert graph.num_layers == 2 and graph.num_arcs == 1
    assert drawing.d == 1 and drawing.order == [[1], [2]]


def test_parse_keeps_original_order_and_leaves_incrementals_unplaced():
    text = "# comment\nlayers 2 2\nmeta scheme x\nlayer 1: 3 1 | 5\nlayer 2: 2 | 4\narc 3 2\narc 5 4\n"
    graph, drawing = parse_instance(text)
    assert graph.original_vertices == [(3, 1), (2,)]
    assert drawing.order == [[3, 1], [2]]
    assert sorted(drawing.unplaced_incrementals()) == [4, 5]
    assert graph.meta == {"scheme": "x"}


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("layer 2 1\n", 1, "header"),
        ("layers two 1\n", 1, "integer"),
        ("layers 2 1\nlayer 1: 1 |\nlayer 2: 2 |\narc 1 9\n", 4, "endpoint 9"),
        ("layers 2 1\nlayer 1: 1 2 |\nlayer 2: 2 |\n", 3, "duplicate vertex id 2"),
        ("layers 2 1\nlayer 1: 1 |\nbogus 3\n", 3, "unknown keyword"),
    ],
)
def test_parse_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(InstanceFormatError) as info:
        parse_instance(text)
    assert info.value.line == line
    assert fragment in str(info.value)
    assert str(info.value).startswith(f"line {line}:")


def test_round_trip_over_generated_corpus():
    for seed in range(100):
        spec = InstanceSpec(num_layers=2 + seed % 4, density=(0.065, 0.175, 0.3)[seed % 3], d=1, seed=seed)
        graph, drawing = generate_benchmark(spec)
        text = write_instance(graph, drawing)
        g2, d2 = parse_instance(text)
        assert write_instance(g2, d2) == text
        assert sorted(g2.arcs) == sorted(graph.arcs)
        assert g2.original_vertices == graph.original_vertices
        assert g2.incremental_vertices == graph.incremental_vertices


def test_write_is_canonical_under_arc_permutation(rng):
    for _ in range(20):
        g = random_graph(rng)
        arcs = list(g.arcs)
        shuffled = [arcs[i] for i in rng.permutation(len(arcs))]
        g2 = IncrementalGraph(g.original_vertices, g.incremental_vertices, shuffled)
        a = write_instance(g, Drawing.original(g, 1))
        assert a == write_instance(g2, Drawing.original(g2, 1))
        assert a == write_instance(g, Drawing.original(g, 1))


def test_empty_incremental_set_allowed():
    g = IncrementalGraph([[1, 2], [3]], [[], []], [(1, 3)])
    text = write_instance(g, Drawing.original(g, 0))
    g2, _ = parse_instance(text)
    assert g2.incrementals == []


def test_solution_round_trip(tmp_path):
    g, original = parse_instance("layers 2 1\nlayer 1: 1 2 | 5\nlayer 2: 3 4 |\narc 1 4\narc 5 3\n")
    drawing = original.copy()
    drawing.insert(5, 2)
    record = SolutionRecord.from_drawing("toy", "grasp3", 4, drawing, 1, [(3, 0.001), (1, 0.5)], 7, 0.75)
    text = write_solution(record)
    back = parse_solution(text)
    assert back == record
    assert back.to_drawing(g, 1) == drawing
    path = atomic_write(tmp_path / "sub" / "toy.sol", text)
    assert path.read_bytes() == text
    assert [p.name for p in path.parent.iterdir()] == ["toy.sol"]
    assert b"layer 1: 1@1 5@2 2@3" in text


# -- generators ------------------------------------------------------------------


def test_one_incremental_per_layer_for_five_originals():
    graph, _ = generate_benchmark(InstanceSpec(num_layers=2, lo=5, hi=5, inc=0.2, seed=3))
    assert [len(x) for x in graph.incremental_vertices] == [1, 1]
    assert [len(x) for x in graph.original_vertices] == [5, 5]


def test_too_few_incrementals_for_d_is_rejected():
    with pytest.raises(GenerationError):
        generate_benchmark(InstanceSpec(num_layers=2, lo=5, hi=5, inc=0.2, d=3))


def test_benchmark_density_within_ten_percent():
    # density is arcs per vertex of each consecutive layer pair
    arcs = vertices = 0
    ratios = []
    for seed in range(20):
        graph, _ = generate_benchmark(InstanceSpec(num_layers=2 + seed % 4, density=0.175, seed=seed))
        for lam in range(graph.num_layers - 1):
            pair = graph.layer_size(lam) + graph.layer_size(lam + 1)
            arcs += len(graph.arcs_between(lam))
            vertices += pair
            ratios.append(len(graph.arcs_between(lam)) / pair)
    assert abs(np.mean(ratios) - 0.175) <= 0.1 * 0.175
    assert abs(arcs / vertices - 0.175) <= 0.1 * 0.175


def test_benchmark_properties():
    for seed in range(30):
        spec = InstanceSpec(num_layers=2 + seed % 3, density=0.3, d=1 + seed % 2, inc=0.3, seed=seed)
        graph, drawing = generate_benchmark(spec)
        assert check_feasibility(drawing).ok
        for lam in range(graph.num_layers):
            no = len(graph.original_vertices[lam])
            assert spec.lo <= no <= spec.hi
            assert len(graph.incremental_vertices[lam]) == round_half_up(spec.inc * no) >= spec.d
        assert all(graph.degree[v] >= 1 for v in graph.incrementals)
        assert len(set(graph.arcs)) == graph.num_arcs


def test_generation_is_deterministic():
    spec = InstanceSpec(num_layers=3, seed=99)
    assert write_instance(*generate_benchmark(spec)) == write_instance(*generate_benchmark(spec))
    dense = InstanceSpec.dense(num_layers=2, seed=5, lo=20, hi=25)
    assert write_instance(*generate_dense(dense)) == write_instance(*generate_dense(dense))


def test_dense_shape_two_layers():
    # a 64-original layer carries 38 incrementals, as in the published dense set
    assert round_half_up(0.6 * 64) == 38
    graph, drawing = generate_dense(InstanceSpec.dense(num_layers=2, seed=11))
    assert check_feasibility(drawing).ok
    for lam in range(2):
        no = len(graph.original_vertices[lam])
        assert 60 <= no <= 80
        assert len(graph.incremental_vertices[lam]) == round_half_up(0.6 * no)
    orig_arcs = len(graph.original_arcs(0))
    no0, no1 = (len(x) for x in graph.original_vertices)
    assert orig_arcs == round_half_up(0.5 * no0 * no1)


def test_dense_incremental_degree_bounds_audit():
    for seed in range(10):
        spec = InstanceSpec.dense(num_layers=2 + seed % 4, seed=seed, lo=20, hi=40)
        graph, _ = generate_dense(spec)
        for lam in range(graph.num_layers):
            pool = sum(graph.layer_size(o) for o in (lam - 1, lam + 1) if 0 <= o < graph.num_layers)
            lo, hi = incremental_degree_bounds(spec, pool)
            for v in graph.incremental_vertices[lam]:
                assert lo <= graph.degree[v] <= hi
                assert graph.degree[v] >= 1


def test_dense_five_layers_has_four_blocks():
    graph, _ = generate_dense(InstanceSpec.dense(num_layers=5, seed=2, lo=20, hi=30))
    assert len(graph.arc_tails) == 4
    assert all(len(t) > 0 for t in graph.arc_tails)


def test_incremental_degree_bounds_minimum_one():
    spec = InstanceSpec.dense()
    assert incremental_degree_bounds(spec, 50) == (1, 5)
    assert incremental_degree_bounds(spec, 150) == (2, 15)


# -- rendering ------------------------------------------------------------------


def _count(svg: bytes, tag: str) -> int:
    return len(re.findall(rf"<{tag}[ >]", svg.decode()))


def test_render_one_vertex_per_layer():
    g = IncrementalGraph([[1], [2], [3]], [[], [], []], [(1, 2), (2, 3)])
    svg = render_svg(Drawing.original(g, 0))
    assert _count(svg, "circle") == 3 and _count(svg, "line") == 2
    assert b"crossings: 0" in svg


def test_render_element_count_and_determinism():
    graph, original = generate_benchmark(InstanceSpec(num_layers=3, seed=4, density=0.3))
    drawing = original.copy()
    for v in graph.incrementals:
        drawing.insert(v, len(drawing.order[int(graph.layer_of[v])]) + 1)
    svg = render_svg(drawing)
    assert _count(svg, "circle") + _count(svg, "line") == graph.n + graph.num_arcs
    # fixed chrome: svg root, title, style, heading text
    assert len(re.findall(r"<[a-z]", svg.decode())) == graph.n + graph.num_arcs + 4
    assert svg == render_svg(drawing)
    incs = len(re.findall(r'class="v inc"', svg.decode()))
    assert incs == len(graph.incrementals)
    labelled = render_svg(drawing, RenderOptions(labels=True))
    assert _count(labelled, "text") == graph.n + 1


def test_render_incomplete_drawing_fails():
    g = IncrementalGraph([[1], [2]], [[3], []], [(1, 2)])
    with pytest.raises(InvalidStateError):
        render_svg(Drawing.original(g, 1))


def test_step_chart_is_svg():
    svg = step_chart_svg({"a": ([1, 2, 3], [0.2, 0.5, 1.0]), "b": ([1, 2, 3], [1, 1, 1])}, title="t")
    assert svg.count("<polyline") == 2 and svg.startswith("<svg")
