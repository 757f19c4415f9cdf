from __future__ import annotations

import numpy as np
import pytest

from conftest import random_graph
from cigdp.embeddings import (
    ArcDistances,
    EmbeddingConfig,
    arc_distances,
    embed,
    hope_embedding,
    katz_matrix,
    load_external,
    node2vec_embedding,
    node2vec_walks,
    normalized_laplacian,
    project_2d,
    skipgram,
    spectral_embedding,
    write_external,
)
from cigdp.errors import InvalidConfigError, InvalidInputError
from cigdp.generators import InstanceSpec, generate_benchmark
from cigdp.graph import IncrementalGraph


def path_adjacency(n):
    adj = np.zeros((n, n))
    for i in range(n - 1):
        adj[i, i + 1] = adj[i + 1, i] = 1
    return adj


def random_symmetric(rng, n, p=0.2):
    upper = np.triu((rng.random((n, n)) < p).astype(float), 1)
    return upper + upper.T


# -- spectral ------------------------------------------------------------------


def test_path_p3_second_eigenvector():
    vec = spectral_embedding(path_adjacency(3), 1)[:, 0]
    assert vec[0] * vec[2] < 0
    assert abs(vec[1]) < 1e-12 and abs(vec[0]) > 0.1
    assert vec[0] > 0  # first non-zero entry positive


@pytest.mark.parametrize("n", [10, 60, 200])
def test_spectral_residuals(n):
    rng = np.random.default_rng(n)
    adj = random_symmetric(rng, n, p=min(0.5, 6 / n))
    lap = normalized_laplacian(adj)
    emb = spectral_embedding(adj, n - 1)
    active = adj.sum(axis=1) > 0
    sub = lap[np.ix_(active, active)]
    for j in range(emb.shape[1]):
        x = emb[active, j]
        if np.linalg.norm(x) < 1e-12:
            continue
        lam = x @ sub @ x / (x @ x)
        assert np.max(np.abs(sub @ x - lam * x)) < 1e-8


def test_two_components_null_space():
    adj = np.zeros((6, 6))
    for a, b in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5)]:
        adj[a, b] = adj[b, a] = 1
    lap = normalized_laplacian(adj)
    # with room for every eigenvector the non-trivial ones come first
    emb = spectral_embedding(adj, 6)
    quotients = np.array([emb[:, j] @ lap @ emb[:, j] for j in range(6)])
    assert np.all(quotients[:4] > 1e-9)
    null = emb[:, 4:]
    assert np.max(np.abs(lap @ null)) < 1e-12
    assert abs(null[:, 0] @ null[:, 1]) < 1e-12
    deg = np.sqrt(adj.sum(axis=1))
    indicators = np.stack([deg * (np.arange(6) < 3), deg * (np.arange(6) >= 3)], axis=1)
    coef = np.linalg.lstsq(indicators, null, rcond=None)[0]
    assert np.allclose(indicators @ coef, null, atol=1e-10)
    # the default width n - 1 skips one null vector and keeps every non-trivial one
    assert np.allclose(spectral_embedding(adj, 5)[:, :4], emb[:, :4])


def test_spectral_isolated_vertices_get_zero_rows():
    adj = path_adjacency(4)
    adj = np.pad(adj, ((0, 1), (0, 1)))
    emb = spectral_embedding(adj, 3)
    assert np.all(emb[4] == 0)


def test_spectral_dimension_out_of_range():
    graph, _ = generate_benchmark(InstanceSpec(seed=1))
    with pytest.raises(InvalidConfigError):
        embed(graph, EmbeddingConfig(method="spectral", dimension=graph.n))
    with pytest.raises(InvalidConfigError):
        embed(graph, EmbeddingConfig(method="hope", dimension=1))


# -- HOPE ---------------------------------------------------------------------


def test_katz_single_arc():
    adj = np.zeros((3, 3))
    adj[0, 1] = 1
    s = katz_matrix(adj, 0.1)
    assert np.count_nonzero(np.abs(s) > 1e-15) == 1
    assert s[0, 1] == pytest.approx(0.1, abs=1e-15)


def test_katz_directed_path():
    adj = np.zeros((3, 3))
    adj[0, 1] = adj[1, 2] = 1
    s = katz_matrix(adj, 0.1)
    assert abs(s[0, 2] - 0.01) <= 1e-15
    assert s[0, 1] == pytest.approx(0.1, abs=1e-15)
    assert s[2, 0] == 0


def test_katz_fallback_for_large_attenuation():
    adj = np.ones((3, 3)) - np.eye(3)  # spectral radius 2
    s = katz_matrix(adj, 0.9)
    beta = 0.5 / 2
    expected = sum(np.linalg.matrix_power(beta * adj, t) for t in range(1, 200))
    assert np.allclose(s, expected)


@pytest.mark.parametrize("k", [4, 9, 20])
def test_hope_reconstruction_is_rank_optimal(k):
    rng = np.random.default_rng(k)
    n = 20
    adj = np.triu((rng.random((n, n)) < 0.25).astype(float), 1)
    emb = hope_embedding(adj, k, beta=0.1)
    sv = k // 2
    assert emb.shape == (n, k)
    source, target = emb[:, :sv], emb[:, sv : 2 * sv]
    s = katz_matrix(adj, 0.1)
    singular = np.linalg.svd(s, compute_uv=False)
    err = np.linalg.norm(s - source @ target.T)
    assert err <= np.sqrt(np.sum(singular[sv:] ** 2)) + 1e-6


def test_hope_default_dimension():
    graph, _ = generate_benchmark(InstanceSpec(seed=2))
    emb = embed(graph, EmbeddingConfig(method="hope"))
    assert emb.shape == (graph.n, 2 * graph.n - 1)
    assert np.all(np.isfinite(emb))


# -- node2vec -----------------------------------------------------------------


def cycle(n):
    adj = np.zeros((n, n))
    for i in range(n):
        adj[i, (i + 1) % n] = adj[(i + 1) % n, i] = 1
    return adj


def _forward_fraction(walks, n):
    steps = (walks[:, 1:] - walks[:, :-1]) % n
    return np.mean(steps == 1), steps.size


def test_unbiased_walk_on_cycle_is_uniform():
    rng = np.random.default_rng(0)
    walks = node2vec_walks(cycle(10), walk_length=101, walks_per_node=100, p=1, q=1, rng=rng)
    frac, count = _forward_fraction(walks, 10)
    assert count == 10**5
    assert abs(frac - 0.5) < 3 * np.sqrt(0.25 / count)


def test_return_bias():
    # with p = 1/4 a step goes back with weight 4 against 1 (q = 1)
    rng = np.random.default_rng(1)
    walks = node2vec_walks(cycle(8), walk_length=60, walks_per_node=200, p=0.25, q=1, rng=rng)
    back = walks[:, 2:] == walks[:, :-2]
    assert abs(back.mean() - 0.8) < 3 * np.sqrt(0.16 / back.size)


def test_in_out_bias_on_triangle_with_tail():
    # from 1 having come from 0: neighbours 0 (return, 1/p), 2 (adjacent to 0, weight 1),
    # 3 (not adjacent to 0, 1/q); with p = 1, q = 0.5 the weights are 1 : 1 : 2
    adj = np.zeros((4, 4))
    for a, b in [(0, 1), (1, 2), (0, 2), (1, 3)]:
        adj[a, b] = adj[b, a] = 1
    rng = np.random.default_rng(2)
    walks = node2vec_walks(adj, walk_length=3, walks_per_node=40000, p=1, q=0.5, rng=rng)
    sel = (walks[:, 0] == 0) & (walks[:, 1] == 1)
    nxt = walks[sel, 2]
    freq = np.bincount(nxt, minlength=4) / len(nxt)
    assert np.allclose(freq[[0, 2, 3]], [0.25, 0.25, 0.5], atol=0.02)


def two_communities(size=10):
    adj = np.zeros((2 * size, 2 * size))
    for block in (range(size), range(size, 2 * size)):
        for a in block:
            for b in block:
                if a < b:
                    adj[a, b] = adj[b, a] = 1
    adj[0, size] = adj[size, 0] = 1
    return adj


def test_skipgram_loss_decreases():
    rng = np.random.default_rng(3)
    adj = two_communities()
    walks = node2vec_walks(adj, 20, 5, 1, 1, rng)
    _, losses = skipgram(walks, len(adj), 16, window=3, negative=5, epochs=6, learning_rate=0.05, rng=rng)
    assert len(losses) == 6
    assert losses[-1] < losses[0]
    assert np.polyfit(np.arange(6), losses, 1)[0] < 0


def test_node2vec_separates_communities():
    emb = node2vec_embedding(two_communities(), dimension=16, walk_length=20, walks_per_node=10,
                             window=3, epochs=3, learning_rate=0.05, seed=4)
    norm = emb / np.linalg.norm(emb, axis=1, keepdims=True)
    sim = norm @ norm.T
    inside = np.mean([sim[a, b] for a in range(1, 10) for b in range(1, 10) if a != b])
    across = np.mean([sim[a, b] for a in range(1, 10) for b in range(11, 20)])
    assert inside > across


def test_node2vec_deterministic_and_isolated_zero():
    adj = np.pad(two_communities(5), ((0, 1), (0, 1)))
    a = node2vec_embedding(adj, dimension=8, walk_length=10, walks_per_node=3, seed=9)
    b = node2vec_embedding(adj, dimension=8, walk_length=10, walks_per_node=3, seed=9)
    assert a.tobytes() == b.tobytes()
    assert np.all(a[-1] == 0)
    assert np.all(np.isfinite(a))


def test_embed_node2vec_seed_override():
    graph, _ = generate_benchmark(InstanceSpec(seed=5))
    cfg = EmbeddingConfig(method="node2vec", dimension=8, walk_length=10, walks_per_node=2)
    assert cfg.stochastic
    a = embed(graph, cfg, seed=1)
    assert a.tobytes() == embed(graph, cfg, seed=1).tobytes()
    assert a.tobytes() != embed(graph, cfg, seed=2).tobytes()


# -- external files ---------------------------------------------------------------


def test_external_round_trip(tmp_path):
    graph, _ = generate_benchmark(InstanceSpec(seed=6))
    matrix = np.random.default_rng(0).normal(size=(graph.n, 3))
    path = tmp_path / "vec.emb"
    path.write_text(write_external(matrix))
    loaded = load_external(path, graph)
    assert np.array_equal(loaded, matrix)
    assert write_external(loaded) == path.read_text()
    cfg = EmbeddingConfig(method="external", external_path=str(path))
    assert np.array_equal(embed(graph, cfg), matrix)


def test_external_identity_format(tmp_path):
    g = IncrementalGraph([[1], [2]], [[], [3]], [(1, 2), (1, 3)])
    path = tmp_path / "id.emb"
    path.write_text("1 1 0 0\n3 0 0 1\n2 0 1 0\n")
    assert np.array_equal(load_external(path, g), np.eye(3))


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("1 1 0\n2 0 1\n", "missing"),
        ("1 1 0\n2 0 1\n3 1\n", "expected 2"),
        ("1 1 0\n2 0 1\n3 1 1\n4 0 0\n", "not in the graph"),
        ("1 1 0\n1 0 1\n2 1 1\n3 0 0\n", "twice"),
    ],
)
def test_external_errors(tmp_path, body, fragment):
    g = IncrementalGraph([[1], [2]], [[], [3]], [(1, 2), (1, 3)])
    path = tmp_path / "bad.emb"
    path.write_text(body)
    with pytest.raises(InvalidInputError, match=fragment):
        load_external(path, g)


# -- projection and distances ------------------------------------------------------


def test_projection_of_centred_plane_data_is_a_rotation():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(30, 2)) * [3.0, 1.0]
    x -= x.mean(axis=0)
    y = project_2d(x)
    dx = np.linalg.norm(x[:, None] - x[None], axis=2)
    dy = np.linalg.norm(y[:, None] - y[None], axis=2)
    assert np.max(np.abs(dx - dy)) < 1e-9


def test_projection_rank_one_second_coordinate_zero():
    t = np.linspace(-2, 3, 25)
    x = np.outer(t, [1.0, -2.0, 0.5, 4.0]) + [1, 2, 3, 4]
    y = project_2d(x)
    assert np.max(np.abs(y[:, 1])) < 1e-10


def test_projection_variance_and_centring():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(50, 6)) @ rng.normal(size=(6, 6))
    y = project_2d(x)
    assert np.max(np.abs(y.mean(axis=0))) < 1e-10
    cov = np.cov(x, rowvar=False, bias=True)
    top = np.sort(np.linalg.eigvalsh(cov))[::-1][:2]
    assert np.allclose(y.var(axis=0), top, atol=1e-8)
    with pytest.raises(InvalidConfigError):
        project_2d(x[:, :1])


def test_projection_sign_convention():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(20, 4))
    xc = x - x.mean(axis=0)
    y = project_2d(x)
    loadings = np.linalg.lstsq(xc, y, rcond=None)[0]
    for j in range(2):
        assert loadings[np.argmax(np.abs(loadings[:, j])), j] > 0


def test_arc_distances_values_and_keys():
    g = IncrementalGraph([[1, 2], [3, 4]], [[], []], [(1, 3), (2, 4), (2, 4)])
    coords = np.array([[0.0, 0.0], [1.0, 1.0], [3.0, 4.0], [1.0, 1.0]])
    dist = arc_distances(coords, g)
    assert dist[(1, 3)] == 5.0 and dist[(3, 1)] == 5.0
    assert dist[(2, 4)] == 0.0
    assert dist.keys() == {(1, 3), (2, 4)}
    assert (1, 4) not in dist and dist.get(1, 4) is None
    assert isinstance(dist, ArcDistances)


def test_arc_distance_keys_equal_arc_set(rng):
    for _ in range(10):
        g = random_graph(rng, max_size=6)
        dist = arc_distances(rng.normal(size=(g.n, 2)), g)
        assert dist.keys() == set(g.arcs)
        assert all(dist[(u, v)] == dist[(v, u)] >= 0 for u, v in g.arcs)
