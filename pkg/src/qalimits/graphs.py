"""Interaction graphs with loops and parallel edges.

Vertices are ``0 .. n_vertices - 1``. Edges are stored as sorted pairs; a
loop is ``(v, v)``. Loops count once toward the degree of their vertex and
never cross a vertex cut.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = [
    "GraphError",
    "InteractionGraph",
    "VertexSet",
    "generate_graph",
    "graph_distance",
    "bfs_distances",
    "l_boundary",
    "cheeger_constant",
    "cycle_census",
    "edge_neighborhood",
    "canonical_edge_ball",
    "is_bipartite",
    "read_edge_list",
    "write_edge_list",
    "CHEEGER_EXHAUSTIVE_LIMIT",
]

CHEEGER_EXHAUSTIVE_LIMIT = 20


class GraphError(ValueError):
    pass


def VertexSet(members: Iterable[int]) -> frozenset[int]:
    """Normalise an iterable of vertex ids into an immutable set."""
    return frozenset(int(v) for v in members)


@dataclass(frozen=True)
class InteractionGraph:
    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.n_vertices <= 0:
            raise GraphError("graph must have at least one vertex")
        norm = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise GraphError(f"edge ({u}, {v}) has endpoint outside 0..{self.n_vertices - 1}")
            norm.append((u, v) if u <= v else (v, u))
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            if v != u:
                deg[v] += 1
        return deg

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.edges else 0

    @property
    def loops(self) -> tuple[tuple[int, int], ...]:
        return tuple(e for e in self.edges if e[0] == e[1])

    @property
    def proper_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(e for e in self.edges if e[0] != e[1])

    def adjacency(self) -> list[list[int]]:
        """Neighbour lists of the underlying simple graph (loops dropped)."""
        adj: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for u, v in self.edges:
            if u != v:
                adj[u].add(v)
                adj[v].add(u)
        return [sorted(s) for s in adj]

    def with_loops(self) -> "InteractionGraph":
        """Copy of the graph with one extra loop on every vertex."""
        extra = tuple((v, v) for v in range(self.n_vertices))
        return InteractionGraph(self.n_vertices, self.edges + extra, dict(self.meta))

    def induced(self, vertices: Iterable[int]) -> tuple["InteractionGraph", list[int]]:
        """Induced subgraph relabelled to ``0..k-1``; returns it with the old labels."""
        keep = sorted(set(vertices))
        index = {v: i for i, v in enumerate(keep)}
        edges = tuple((index[u], index[v]) for u, v in self.edges if u in index and v in index)
        return InteractionGraph(len(keep), edges), keep


def _rng(seed):
    if seed is None:
        raise GraphError("random graph kinds require an explicit seed")
    return np.random.default_rng(seed)


def _has_defects(edges) -> bool:
    seen = set()
    for u, v in edges:
        if u == v or (u, v) in seen:
            return True
        seen.add((u, v))
    return False


def _pairing_model(n, degree, rng):
    stubs = np.repeat(np.arange(n), degree)
    rng.shuffle(stubs)
    pairs = stubs.reshape(-1, 2)
    return [tuple(sorted(map(int, p))) for p in pairs]


def _permutation_model(half, degree, rng):
    edges = []
    for _ in range(degree):
        perm = rng.permutation(half)
        edges.extend((i, half + int(perm[i])) for i in range(half))
    return edges


def generate_graph(kind: str, seed: int | None = None, *, simple: bool = True,
                   max_tries: int = 10_000, **params) -> InteractionGraph:
    """Build a graph of the requested kind.

    Parameters
    ----------
    kind : {"path", "cycle", "complete_bipartite", "random_regular", "random_regular_bipartite"}
    seed : int, optional
        Mandatory for the random kinds.
    simple : bool
        For random kinds, reject samples with loops or parallel edges. The
        number of rejected draws is stored in ``graph.meta``.
    **params
        ``n`` for path/cycle/random kinds, ``degree`` for random kinds,
        ``a`` and ``b`` for complete_bipartite. Random bipartite graphs put
        ``n // 2`` vertices on each side, left side first.
    """
    if kind == "path":
        n = int(params["n"])
        if n < 1:
            raise GraphError("path needs n >= 1")
        return InteractionGraph(n, tuple((i, i + 1) for i in range(n - 1)), {"kind": kind})
    if kind == "cycle":
        n = int(params["n"])
        if n < 3:
            raise GraphError("cycle needs n >= 3")
        return InteractionGraph(n, tuple((i, (i + 1) % n) for i in range(n)), {"kind": kind})
    if kind == "complete_bipartite":
        a, b = int(params["a"]), int(params["b"])
        if a < 1 or b < 1:
            raise GraphError("complete_bipartite needs a, b >= 1")
        edges = tuple((i, a + j) for i in range(a) for j in range(b))
        return InteractionGraph(a + b, edges, {"kind": kind})
    if kind in ("random_regular", "random_regular_bipartite"):
        n, degree = int(params["n"]), int(params["degree"])
        if n < 1:
            raise GraphError("zero vertices")
        if degree < 0:
            raise GraphError("degree must be non-negative")
        rng = _rng(seed)
        if kind == "random_regular":
            if (n * degree) % 2:
                raise GraphError(f"n * degree must be even, got n={n}, degree={degree}")
            if simple and degree >= n:
                raise GraphError("simple regular graph needs degree < n")
            draw = lambda: _pairing_model(n, degree, rng)
        else:
            if n % 2:
                raise GraphError("bipartite regular graph needs equal sides (n even)")
            if simple and degree > n // 2:
                raise GraphError("simple bipartite regular graph needs degree <= n/2")
            draw = lambda: _permutation_model(n // 2, degree, rng)
        rejected = 0
        for _ in range(max_tries):
            edges = draw()
            if not simple or not _has_defects(edges):
                meta = {"kind": kind, "seed": seed, "simple": simple, "rejected": rejected}
                return InteractionGraph(n, tuple(sorted(edges)), meta)
            rejected += 1
        raise GraphError(f"no simple {kind} sample after {max_tries} draws")
    raise GraphError(f"unknown graph kind {kind!r}")


def bfs_distances(G: InteractionGraph, sources: Iterable[int]) -> np.ndarray:
    """Multi-source BFS distance to the nearest source; ``-1`` if unreachable."""
    adj = G.adjacency()
    dist = np.full(G.n_vertices, -1, dtype=int)
    queue = deque()
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            queue.append(s)
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def graph_distance(G: InteractionGraph, u: int, v: int) -> float:
    for x in (u, v):
        if not 0 <= x < G.n_vertices:
            raise GraphError(f"vertex {x} out of range")
    d = bfs_distances(G, [u])[v]
    return math.inf if d < 0 else int(d)


def l_boundary(G: InteractionGraph, A: Iterable[int], L: int) -> frozenset[int]:
    """Two-sided ``L``-boundary of ``A``: vertices within distance ``L`` of the other side."""
    if L < 0:
        raise GraphError("L must be >= 0")
    A = VertexSet(A)
    complement = [v for v in range(G.n_vertices) if v not in A]
    if not A or not complement:
        return frozenset()
    to_comp = bfs_distances(G, complement)
    to_A = bfs_distances(G, A)
    out = set()
    for x in range(G.n_vertices):
        d = to_comp[x] if x in A else to_A[x]
        if 0 <= d <= L:
            out.add(x)
    return frozenset(out)


def cheeger_constant(G: InteractionGraph, limit: int = CHEEGER_EXHAUSTIVE_LIMIT
                     ) -> tuple[Fraction, frozenset[int]]:
    """Exact edge-expansion constant by enumerating all sets with ``|S| <= n/2``."""
    n = G.n_vertices
    if n > limit:
        raise GraphError(f"exhaustive Cheeger search limited to {limit} vertices, got {n}")
    if n < 2:
        raise GraphError("Cheeger constant needs at least two vertices")
    proper = np.array(G.proper_edges, dtype=np.int64).reshape(-1, 2)
    best: tuple[Fraction, int] | None = None
    chunk = 1 << 16
    for start in range(1, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        size = np.zeros(masks.shape, dtype=np.int64)
        for v in range(n):
            size += (masks >> v) & 1
        keep = size <= n // 2
        masks, size = masks[keep], size[keep]
        if masks.size == 0:
            continue
        crossing = np.zeros(masks.shape, dtype=np.int64)
        for u, v in proper:
            crossing += ((masks >> u) ^ (masks >> v)) & 1
        ratio = crossing / size
        i = int(np.argmin(ratio))
        cand = Fraction(int(crossing[i]), int(size[i]))
        if best is None or cand < best[0]:
            best = (cand, int(masks[i]))
    h, mask = best
    return h, frozenset(v for v in range(n) if (mask >> v) & 1)


def edge_neighborhood(G: InteractionGraph, edge: tuple[int, int], L: int) -> frozenset[int]:
    """Vertices within graph distance ``L`` of either endpoint of ``edge``."""
    dist = bfs_distances(G, set(edge))
    return frozenset(int(v) for v in np.flatnonzero((dist >= 0) & (dist <= L)))


def _contains_cycle(G: InteractionGraph, vertices: frozenset[int]) -> bool:
    sub, _ = G.induced(vertices)
    # ball around an edge is connected, so it is a tree iff |E| = |V| - 1
    return sub.n_edges >= sub.n_vertices


def _count_short_cycles(G: InteractionGraph, max_len: int) -> int:
    mult = Counter(G.edges)
    count = 0
    for (u, v), k in mult.items():
        if u == v:
            if max_len >= 1:
                count += k
        elif max_len >= 2:
            count += k * (k - 1) // 2
    if max_len < 3:
        return count
    adj = G.adjacency()
    weight = {e: k for e, k in mult.items() if e[0] != e[1]}

    def w(a, b):
        return weight[(a, b) if a < b else (b, a)]

    # each simple cycle of length >= 3 is found twice from its smallest vertex
    twice = 0
    for s in range(G.n_vertices):
        stack = [(s, [s], 1)]
        while stack:
            node, path, prod = stack.pop()
            for nxt in adj[node]:
                if nxt == s and len(path) >= 3:
                    twice += prod * w(node, s)
                elif nxt > s and nxt not in path and len(path) < max_len:
                    stack.append((nxt, path + [nxt], prod * w(node, nxt)))
    return count + twice // 2


def cycle_census(G: InteractionGraph, L: int) -> tuple[int, tuple[tuple[int, int], ...]]:
    """Count cycles of length ``<= 2L + 1`` and list the edges whose ``L``-ball holds a cycle.

    A parallel pair is a 2-cycle and a loop is a 1-cycle. The ``L``-ball of an
    edge is the subgraph induced on the vertices within distance ``L`` of
    either endpoint; this is the support of the restricted evolution around
    that edge.
    """
    if L < 0:
        raise GraphError("L must be >= 0")
    n_short = _count_short_cycles(G, 2 * L + 1)
    r_edges = []
    cache: dict[frozenset[int], bool] = {}
    for e in G.edges:
        ball = edge_neighborhood(G, e, L)
        if ball not in cache:
            cache[ball] = _contains_cycle(G, ball)
        if cache[ball]:
            r_edges.append(e)
    return n_short, tuple(r_edges)


def is_bipartite(G: InteractionGraph) -> bool:
    if G.loops:
        return False
    adj = G.adjacency()
    color = [-1] * G.n_vertices
    for s in range(G.n_vertices):
        if color[s] >= 0:
            continue
        color[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if color[w] < 0:
                    color[w] = 1 - color[u]
                    queue.append(w)
                elif color[w] == color[u]:
                    return False
    return True


def write_edge_list(G: InteractionGraph, path) -> None:
    lines = [f"{G.n_vertices} {G.n_edges}"] + [f"{u} {v}" for u, v in G.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> InteractionGraph:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise GraphError("edge list must start with a header line 'n m'")
    n, m = map(int, rows[0])
    edges = tuple((int(u), int(v)) for u, v in rows[1:])
    if len(edges) != m:
        raise GraphError(f"header announces {m} edges, found {len(edges)}")
    return InteractionGraph(n, edges)


def canonical_edge_ball(G: InteractionGraph, edge: tuple[int, int], L: int) -> str | None:
    """Canonical string of the rooted ``L``-ball of ``edge`` when it is a tree, else ``None``.

    Two edges with equal strings have isomorphic neighbourhoods with the
    root edge mapped to the root edge (up to swapping its endpoints).
    """
    ball = edge_neighborhood(G, edge, L)
    if _contains_cycle(G, ball):
        return None
    adj = G.adjacency()
    u, v = edge
    if u == v:
        return None

    def encode(node, parent, depth):
        if depth == L:
            return "()"
        kids = sorted(encode(w, node, depth + 1) for w in adj[node] if w != parent and w in ball)
        return "(" + "".join(kids) + ")"

    a, b = encode(u, v, 0), encode(v, u, 0)
    return "|".join(sorted((a, b)))

