"""Node embeddings (spectral, HOPE, node2vec, imported), PCA to the plane and
per-arc Euclidean distances.

An embedding is a float array of shape ``(n, k)`` whose row ``v - 1`` holds
the vector of vertex ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import InvalidConfigError, InvalidInputError
from .graph import IncrementalGraph

__all__ = [
    "EmbeddingConfig",
    "ArcDistances",
    "undirected_adjacency",
    "directed_adjacency",
    "normalized_laplacian",
    "spectral_embedding",
    "katz_matrix",
    "hope_embedding",
    "node2vec_walks",
    "skipgram",
    "node2vec_embedding",
    "spectral_embed",
    "hope_embed",
    "node2vec_embed",
    "load_external",
    "write_external",
    "embed",
    "project_2d",
    "arc_distances",
]

METHODS = ("spectral", "hope", "node2vec", "external")


@dataclass(frozen=True)
class EmbeddingConfig:
    method: str = "hope"
    dimension: int | None = None  # None: 2n-1 for hope, n-1 for spectral, 128 for node2vec
    beta: float = 0.01
    p: float = 1.0
    q: float = 1.0
    walk_length: int = 80
    walks_per_node: int = 10
    window: int = 5
    negative: int = 5
    epochs: int = 1
    learning_rate: float = 0.025
    external_path: str | None = None
    seed: int = 0

    @property
    def stochastic(self) -> bool:
        return self.method == "node2vec"

    def resolve_dimension(self, n: int) -> int:
        if self.dimension is not None:
            return self.dimension
        if self.method == "hope":
            return max(2, 2 * n - 1)
        if self.method == "spectral":
            return max(2, n - 1)
        return 128

    def validate(self, n: int) -> None:
        if self.method not in METHODS:
            raise InvalidConfigError(f"unknown embedding method {self.method!r}")
        if self.method == "external":
            if not self.external_path:
                raise InvalidConfigError("external embeddings need a file path")
            return
        k = self.resolve_dimension(n)
        if k < 2:
            raise InvalidConfigError("embedding dimension must be at least 2")
        if self.method == "spectral" and k > n - 1:
            raise InvalidConfigError(f"spectral dimension {k} exceeds n - 1 = {n - 1}")
        if self.method == "hope" and (k + 1) // 2 > n:
            raise InvalidConfigError(f"hope dimension {k} needs more than n = {n} singular values")
        if self.method == "hope" and self.beta <= 0:
            raise InvalidConfigError("Katz attenuation must be positive")
        if self.method == "node2vec":
            if self.p <= 0 or self.q <= 0:
                raise InvalidConfigError("node2vec p and q must be positive")
            if min(self.walk_length, self.walks_per_node, self.window, self.epochs) < 1:
                raise InvalidConfigError("walk length, walks, window and epochs must be >= 1")


# -- adjacency -----------------------------------------------------------------


def undirected_adjacency(graph: IncrementalGraph) -> np.ndarray:
    """Symmetric adjacency with parallel arcs summed as weights."""
    adj = directed_adjacency(graph)
    return adj + adj.T


def directed_adjacency(graph: IncrementalGraph) -> np.ndarray:
    adj = np.zeros((graph.n, graph.n))
    for tail, head in graph.arcs:
        adj[tail - 1, head - 1] += 1.0
    return adj


def _fix_signs(columns: np.ndarray) -> np.ndarray:
    """Flip each column so its first clearly non-zero entry is positive."""
    out = columns.copy()
    for j in range(out.shape[1]):
        nz = np.flatnonzero(np.abs(out[:, j]) > 1e-12)
        if len(nz) and out[nz[0], j] < 0:
            out[:, j] = -out[:, j]
    return out


# -- spectral ------------------------------------------------------------------


def normalized_laplacian(adj: np.ndarray) -> np.ndarray:
    """``I - D^-1/2 A D^-1/2``; isolated vertices get an identity row."""
    deg = adj.sum(axis=1)
    inv = np.zeros_like(deg)
    inv[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    return np.eye(len(adj)) - inv[:, None] * adj * inv[None, :]


def spectral_embedding(adj: np.ndarray, k: int) -> np.ndarray:
    """Eigenvectors of the normalised Laplacian for the ``k`` smallest
    non-trivial eigenvalues (the per-component null vectors are used only
    when ``k`` exceeds the number of non-trivial ones).  Isolated vertices get
    zero rows."""
    n = len(adj)
    if not 1 <= k <= n:
        raise InvalidConfigError(f"spectral dimension {k} outside 1..{n}")
    active = np.flatnonzero(adj.sum(axis=1) > 0)
    out = np.zeros((n, k))
    if len(active) == 0:
        return out
    sub = adj[np.ix_(active, active)]
    components, _ = connected_components(sub, directed=False)
    _, vectors = np.linalg.eigh(normalized_laplacian(sub))
    m = len(active)
    ordering = list(range(components, m)) + list(range(components))
    chosen = ordering[:k]
    out[active, : len(chosen)] = vectors[:, chosen]
    return _fix_signs(out)


def spectral_embed(graph: IncrementalGraph, config: EmbeddingConfig) -> np.ndarray:
    config.validate(graph.n)
    return spectral_embedding(undirected_adjacency(graph), config.resolve_dimension(graph.n))


# -- HOPE ----------------------------------------------------------------------


def katz_matrix(adj: np.ndarray, beta: float) -> np.ndarray:
    """Katz proximity ``sum_{t>=1} beta^t A^t = (I - beta A)^-1 beta A``.

    When ``beta`` times the spectral radius reaches 1 the series diverges and
    ``beta`` is replaced by half the inverse spectral radius.
    """
    n = len(adj)
    radius = float(np.max(np.abs(np.linalg.eigvals(adj)))) if n else 0.0
    if beta * radius >= 1.0:
        beta = 0.5 / radius
    return np.linalg.solve(np.eye(n) - beta * adj, beta * adj)


def hope_embedding(adj: np.ndarray, k: int, beta: float = 0.01) -> np.ndarray:
    """Source vectors ``U_s sqrt(S_s)`` next to target vectors ``V_s sqrt(S_s)``
    of the rank-``k // 2`` truncated SVD of the Katz matrix.  For odd ``k`` the
    last column is the next scaled left singular vector."""
    n = len(adj)
    sv = k // 2
    if k < 2 or (k + 1) // 2 > n:
        raise InvalidConfigError(f"hope dimension {k} invalid for n = {n}")
    u, s, vt = np.linalg.svd(katz_matrix(adj, beta))
    for i in range(len(s)):
        j = int(np.argmax(np.abs(u[:, i])))
        if u[j, i] < 0:
            u[:, i] *= -1
            vt[i] *= -1
    root = np.sqrt(s)
    parts = [u[:, :sv] * root[:sv], vt[:sv].T * root[:sv]]
    if k % 2:
        parts.append(u[:, sv : sv + 1] * root[sv])
    return np.hstack(parts)


def hope_embed(graph: IncrementalGraph, config: EmbeddingConfig) -> np.ndarray:
    config.validate(graph.n)
    return hope_embedding(directed_adjacency(graph), config.resolve_dimension(graph.n), config.beta)


# -- node2vec ------------------------------------------------------------------


def _csr(adj: np.ndarray):
    """Neighbour lists with parallel arcs repeated, as (indptr, indices)."""
    counts = np.rint(adj).astype(np.int64)
    deg = counts.sum(axis=1)
    indptr = np.concatenate(([0], np.cumsum(deg)))
    rows, cols = np.nonzero(counts)
    indices = np.repeat(cols, counts[rows, cols])
    return indptr, indices


def node2vec_walks(adj: np.ndarray, walk_length: int, walks_per_node: int, p: float, q: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Second-order biased walks, one row per walk, from every non-isolated vertex.

    The next step from ``cur`` (having come from ``prev``) has unnormalised
    weight ``1/p`` back to ``prev``, ``1`` to vertices adjacent to ``prev`` and
    ``1/q`` otherwise; it is drawn by rejection against the largest weight.
    """
    n = len(adj)
    indptr, indices = _csr(adj)
    deg = np.diff(indptr)
    starts = np.flatnonzero(deg > 0)
    if len(starts) == 0:
        return np.zeros((0, walk_length), dtype=np.int64)
    edge_keys = np.unique(np.repeat(np.arange(n), deg) * n + indices)
    w_return, w_in, w_out = 1.0 / p, 1.0, 1.0 / q
    w_max = max(w_return, w_in, w_out)

    walks = []
    for _ in range(walks_per_node):
        cur = rng.permutation(starts)
        walk = np.empty((len(cur), walk_length), dtype=np.int64)
        walk[:, 0] = cur
        if walk_length > 1:
            pick = indptr[cur] + (rng.random(len(cur)) * deg[cur]).astype(np.int64)
            walk[:, 1] = indices[pick]
        for step in range(2, walk_length):
            prev, cur = walk[:, step - 2], walk[:, step - 1]
            nxt = np.empty(len(cur), dtype=np.int64)
            pending = np.arange(len(cur))
            while len(pending):
                c, pv = cur[pending], prev[pending]
                cand = indices[indptr[c] + (rng.random(len(c)) * deg[c]).astype(np.int64)]
                linked = np.isin(pv * n + cand, edge_keys)
                weight = np.where(cand == pv, w_return, np.where(linked, w_in, w_out))
                accept = rng.random(len(c)) * w_max < weight
                nxt[pending[accept]] = cand[accept]
                pending = pending[~accept]
            walk[:, step] = nxt
        walks.append(walk)
    return np.vstack(walks)


def _context_pairs(walks: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    centers, contexts = [], []
    length = walks.shape[1]
    for offset in range(1, min(window, length - 1) + 1):
        centers += [walks[:, :-offset].ravel(), walks[:, offset:].ravel()]
        contexts += [walks[:, offset:].ravel(), walks[:, :-offset].ravel()]
    if not centers:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(centers), np.concatenate(contexts)


def skipgram(walks: np.ndarray, n: int, dimension: int, window: int, negative: int, epochs: int,
             learning_rate: float, rng: np.random.Generator, batch_size: int = 256):
    """Skip-gram with negative sampling trained by minibatch SGD.

    Returns ``(vectors, losses)`` where ``losses[e]`` is the mean loss per
    (center, context) pair during epoch ``e``.  Noise words follow the unigram
    distribution raised to 3/4; the learning rate decays linearly.
    """
    w_in = (rng.random((n, dimension)) - 0.5) / dimension
    w_out = np.zeros((n, dimension))
    centers, contexts = _context_pairs(walks, window)
    freq = np.bincount(walks.ravel(), minlength=n).astype(float) ** 0.75
    losses = []
    if len(centers) == 0 or freq.sum() == 0:
        return w_in * (freq > 0)[:, None], losses
    noise = freq / freq.sum()
    total_steps = epochs * len(centers)
    done = 0
    for _ in range(epochs):
        perm = rng.permutation(len(centers))
        epoch_loss = 0.0
        for start in range(0, len(perm), batch_size):
            batch = perm[start : start + batch_size]
            lr = learning_rate * max(1e-4, 1.0 - done / total_steps)
            done += len(batch)
            c_idx, o_idx = centers[batch], contexts[batch]
            n_idx = rng.choice(n, size=(len(batch), negative), p=noise)
            c, o, neg = w_in[c_idx], w_out[o_idx], w_out[n_idx]
            pos_score = 1.0 / (1.0 + np.exp(-np.einsum("ij,ij->i", c, o)))
            neg_score = 1.0 / (1.0 + np.exp(-np.einsum("ij,ikj->ik", c, neg)))
            epoch_loss -= np.log(pos_score + 1e-12).sum() + np.log(1.0 - neg_score + 1e-12).sum()
            g_pos = (pos_score - 1.0)[:, None]
            grad_c = g_pos * o + np.einsum("ik,ikj->ij", neg_score, neg)
            np.add.at(w_out, o_idx, -lr * g_pos * c)
            np.add.at(w_out, n_idx, -lr * neg_score[:, :, None] * c[:, None, :])
            np.add.at(w_in, c_idx, -lr * grad_c)
        losses.append(epoch_loss / len(centers))
    seen = np.bincount(walks.ravel(), minlength=n) > 0
    return w_in * seen[:, None], losses


def node2vec_embedding(adj: np.ndarray, dimension: int = 128, p: float = 1.0, q: float = 1.0,
                       walk_length: int = 80, walks_per_node: int = 10, window: int = 5,
                       negative: int = 5, epochs: int = 1, learning_rate: float = 0.025,
                       seed: int | np.random.Generator = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    walks = node2vec_walks(adj, walk_length, walks_per_node, p, q, rng)
    vectors, _ = skipgram(walks, len(adj), dimension, window, negative, epochs, learning_rate, rng)
    return vectors


def node2vec_embed(graph: IncrementalGraph, config: EmbeddingConfig, seed=None) -> np.ndarray:
    config.validate(graph.n)
    return node2vec_embedding(
        undirected_adjacency(graph), config.resolve_dimension(graph.n), config.p, config.q,
        config.walk_length, config.walks_per_node, config.window, config.negative,
        config.epochs, config.learning_rate, config.seed if seed is None else seed,
    )


# -- external files ----------------------------------------------------------------


def _rows(text: str) -> Iterator[tuple[int, list[str]]]:
    for number, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if parts and not parts[0].startswith("#"):
            yield number, parts


def load_external(path, graph: IncrementalGraph) -> np.ndarray:
    """Read ``id v1 ... vk`` lines covering every vertex exactly once."""
    rows: dict[int, np.ndarray] = {}
    width = None
    for number, parts in _rows(Path(path).read_text(encoding="utf-8")):
        try:
            v = int(parts[0])
            values = np.array([float(x) for x in parts[1:]])
        except ValueError:
            raise InvalidInputError(f"line {number}: malformed embedding row") from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise InvalidInputError(f"line {number}: expected {width} values, got {len(values)}")
        if not 1 <= v <= graph.n:
            raise InvalidInputError(f"line {number}: vertex {v} is not in the graph")
        if v in rows:
            raise InvalidInputError(f"line {number}: vertex {v} listed twice")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError(f"line {number}: non-finite value")
        rows[v] = values
    missing = sorted(set(range(1, graph.n + 1)) - set(rows))
    if missing:
        raise InvalidInputError(f"missing embedding rows for vertices {missing[:10]}")
    if not width:
        raise InvalidInputError("embedding rows carry no values")
    return np.vstack([rows[v] for v in range(1, graph.n + 1)])


def write_external(matrix: np.ndarray) -> str:
    return "".join(
        f"{v} " + " ".join(repr(float(x)) for x in row) + "\n"
        for v, row in enumerate(matrix, start=1)
    )


def embed(graph: IncrementalGraph, config: EmbeddingConfig, seed=None) -> np.ndarray:
    """Dispatch on ``config.method``; ``seed`` overrides the config seed for
    stochastic methods."""
    config.validate(graph.n)
    if config.method == "spectral":
        return spectral_embed(graph, config)
    if config.method == "hope":
        return hope_embed(graph, config)
    if config.method == "node2vec":
        return node2vec_embed(graph, config, seed)
    return load_external(config.external_path, graph)


# -- projection and distances --------------------------------------------------------


def project_2d(embedding: np.ndarray) -> np.ndarray:
    """Scores on the two leading principal components of the centred rows.

    Each component is oriented so that its largest-magnitude loading is positive.
    """
    x = np.asarray(embedding, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise InvalidConfigError("projection needs an embedding with at least 2 columns")
    centred = x - x.mean(axis=0)
    out = np.zeros((len(x), 2))
    if len(x) < 2:
        return out
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    for i in range(min(2, len(vt))):
        component = vt[i]
        if component[np.argmax(np.abs(component))] < 0:
            component = -component
        out[:, i] = centred @ component
    return out - out.mean(axis=0)


class ArcDistances:
    """Euclidean distance per arc; lookups accept either orientation and
    non-adjacent pairs are absent."""

    def __init__(self, values: dict[tuple[int, int], float]):
        self._values = dict(values)

    def __getitem__(self, arc: tuple[int, int]) -> float:
        u, v = arc
        if (u, v) in self._values:
            return self._values[(u, v)]
        return self._values[(v, u)]

    def get(self, u: int, v: int, default=None):
        try:
            return self[(u, v)]
        except KeyError:
            return default

    def __contains__(self, arc) -> bool:
        u, v = arc
        return (u, v) in self._values or (v, u) in self._values

    def keys(self) -> set[tuple[int, int]]:
        return set(self._values)

    def __len__(self):
        return len(self._values)

    def items(self):
        return self._values.items()


def arc_distances(coords: np.ndarray, graph: IncrementalGraph) -> ArcDistances:
    values = {}
    for tail, head in graph.arcs:
        diff = coords[tail - 1] - coords[head - 1]
        values[(tail, head)] = float(np.hypot(diff[0], diff[1]))
    return ArcDistances(values)
