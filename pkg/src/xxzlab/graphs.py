"""Finite graphs, induced subgraphs and their N-th symmetric products.

A configuration is a strictly increasing tuple of vertex ids.  The N-th
symmetric product has all N-element configurations as vertices, and two
configurations are adjacent when their symmetric difference is an edge of
the base graph (one particle hops to a neighbouring empty site).

Hosts are always finite.  The integer chain Z is modelled by embedding
``[1, L]`` in ``[1 - pad, L + pad]``; vertices at the truncation edge are
recorded in ``Graph.frontier`` so that isoperimetric minima are not polluted
by the artificially low degree there.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

Configuration = tuple  # strictly increasing tuple of ints


def as_config(sites: Iterable[int]) -> tuple:
    """Return ``sites`` as a configuration, rejecting repeated sites."""
    cfg = tuple(sorted(int(s) for s in sites))
    if any(a == b for a, b in zip(cfg, cfg[1:])):
        raise ValueError(f"repeated site in configuration {cfg}")
    return cfg


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on integer vertex ids.

    ``frontier`` lists vertices whose neighbourhood is cut off by the finite
    truncation of an infinite host.  ``kind`` is ``"chain"`` when the graph is
    a run of consecutive integers joined to their successors, which enables
    the sorted-matching distance shortcut.
    """

    vertices: tuple
    adjacency: Mapping[int, tuple]
    frontier: frozenset = frozenset()
    kind: str = "general"

    def __post_init__(self):
        vs = set(self.vertices)
        for x, nbrs in self.adjacency.items():
            if x not in vs:
                raise ValueError(f"adjacency key {x} is not a vertex")
            for y in nbrs:
                if y == x:
                    raise ValueError(f"self-loop at {x}")
                if y not in vs or x not in self.adjacency.get(y, ()):
                    raise ValueError(f"edge {{{x},{y}}} is not symmetric")
        if len(self.vertices) > 1 and not _is_connected(self.vertices, self.adjacency):
            raise ValueError("graph is not connected")

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], vertices=None,
                   frontier=(), kind="general") -> "Graph":
        adj: dict[int, set] = {}
        if vertices is not None:
            for v in vertices:
                adj.setdefault(int(v), set())
        for u, v in edges:
            u, v = int(u), int(v)
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        verts = tuple(sorted(adj))
        return cls(verts, {x: tuple(sorted(adj[x])) for x in verts},
                   frozenset(frontier), kind)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(x, y) for x in self.vertices for y in self.adjacency[x] if x < y]

    @property
    def d_max(self) -> int:
        return max((len(n) for n in self.adjacency.values()), default=0)

    def has_edge(self, x: int, y: int) -> bool:
        return y in self.adjacency.get(x, ())

    def bfs_distances(self, source: int) -> dict[int, int]:
        return _bfs(self.adjacency, source)

    def distance(self, x: int, y: int) -> int:
        if self.kind == "chain":
            return abs(x - y)
        d = self.bfs_distances(x).get(y)
        if d is None:
            raise ValueError(f"{y} unreachable from {x}")
        return d

    def distance_matrix(self, sites: Sequence[int] | None = None) -> np.ndarray:
        """Pairwise base-graph distances between ``sites`` (all vertices by default)."""
        sites = list(self.vertices if sites is None else sites)
        out = np.empty((len(sites), len(sites)), dtype=np.int64)
        for i, s in enumerate(sites):
            dist = self.bfs_distances(s)
            out[i] = [dist[t] for t in sites]
        return out


@dataclass(frozen=True)
class InducedSubgraph:
    """Subgraph of ``parent`` induced by the vertex set ``kept``."""

    parent: Graph
    kept: tuple

    def __post_init__(self):
        missing = set(self.kept) - set(self.parent.vertices)
        if missing:
            raise ValueError(f"vertices {sorted(missing)} not in parent graph")
        object.__setattr__(self, "kept", tuple(sorted(self.kept)))

    @property
    def graph(self) -> Graph:
        keep = set(self.kept)
        adj = {x: tuple(y for y in self.parent.adjacency[x] if y in keep) for x in self.kept}
        if len(self.kept) > 1 and not _is_connected(self.kept, adj):
            raise ValueError("induced subgraph is not connected")
        kind = "chain" if self.parent.kind == "chain" else "general"
        return Graph(self.kept, adj, frozenset(), kind)

    def is_geodesic(self) -> bool:
        keep = set(self.kept)
        adj = {x: tuple(y for y in self.parent.adjacency[x] if y in keep) for x in self.kept}
        for x in self.kept:
            d_sub = _bfs(adj, x)
            d_par = self.parent.bfs_distances(x)
            for y in self.kept:
                if d_sub.get(y) != d_par.get(y):
                    return False
        return True


def chain(L: int, pad: int = 1) -> InducedSubgraph:
    """``[1, L]`` inside a finite stand-in ``[1 - pad, L + pad]`` for Z."""
    if L < 1 or pad < 1:
        raise ValueError("need L >= 1 and pad >= 1")
    lo, hi = 1 - pad, L + pad
    host = Graph.from_edges([(x, x + 1) for x in range(lo, hi)], frontier=(lo, hi), kind="chain")
    return InducedSubgraph(host, tuple(range(1, L + 1)))


def strip_vertex(x: int, y: int, M: int) -> int:
    return x * M + (y - 1)


def strip(L: int, M: int, pad: int = 1) -> InducedSubgraph:
    """Box ``[1, L] x [1, M]`` inside a truncated strip ``Z x {1..M}``.

    Vertex ``(x, y)`` has id ``x * M + (y - 1)``.
    """
    if L < 1 or M < 1 or pad < 1:
        raise ValueError("need L, M, pad >= 1")
    xs = range(1 - pad, L + pad + 1)
    edges = []
    for x in xs:
        for y in range(1, M + 1):
            if x + 1 in xs:
                edges.append((strip_vertex(x, y, M), strip_vertex(x + 1, y, M)))
            if y < M:
                edges.append((strip_vertex(x, y, M), strip_vertex(x, y + 1, M)))
    frontier = [strip_vertex(x, y, M) for x in (xs[0], xs[-1]) for y in range(1, M + 1)]
    verts = [strip_vertex(x, y, M) for x in xs for y in range(1, M + 1)]
    host = Graph.from_edges(edges, vertices=verts, frontier=frontier)
    kept = tuple(strip_vertex(x, y, M) for x in range(1, L + 1) for y in range(1, M + 1))
    return InducedSubgraph(host, kept)


def read_edge_list(path: str | Path) -> Graph:
    """Read ``u v`` pairs, one per line; ``#`` starts a comment."""
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph.from_edges(edges)


# -- symmetric products ----------------------------------------------------

@dataclass
class SymmetricProductGraph:
    """N-th symmetric product of ``base`` (restricted to the kept vertices).

    ``configs`` is in lexicographic order of sorted site lists and row ``i``
    of every sector matrix refers to ``configs[i]``.  ``degree_full`` is the
    surface measure in the parent graph; ``degree_sub`` the degree inside the
    product of the subgraph.
    """

    base: InducedSubgraph
    N: int
    configs: list
    index: dict
    neighbors: list
    degree_full: np.ndarray
    degree_sub: np.ndarray = field(init=False)

    def __post_init__(self):
        self.degree_sub = np.array([len(n) for n in self.neighbors], dtype=np.int64)

    def __len__(self):
        return len(self.configs)

    @property
    def parent(self) -> Graph:
        return self.base.parent

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, nb in enumerate(self.neighbors) for j in nb if i < j]

    @property
    def config_array(self) -> np.ndarray:
        return np.array(self.configs, dtype=np.int64).reshape(len(self.configs), self.N)

    def adjacency_matrix(self) -> np.ndarray:
        n = len(self.configs)
        A = np.zeros((n, n))
        for i, nb in enumerate(self.neighbors):
            A[i, list(nb)] = 1.0
        return A

    def distances_between(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        """Matrix of product-graph distances ``d_N(configs[r], configs[c])``."""
        rows, cols = list(rows), list(cols)
        if self.parent.kind == "chain":
            X = self.config_array
            return np.abs(X[rows][:, None, :] - X[cols][None, :, :]).sum(axis=2)
        dist = _DistanceCache(self.parent)
        return np.array([[distance_dN(self.configs[r], self.configs[c], self.parent, dist)
                          for c in cols] for r in rows], dtype=np.int64)

    def set_distance(self, A: Sequence[int], B: Sequence[int]) -> int:
        """``min_{X in A, Y in B} d_N(X, Y)`` for index sets."""
        if len(A) == 0 or len(B) == 0:
            raise ValueError("empty configuration set")
        return int(self.distances_between(A, B).min())


def lex_rank(config: Sequence[int], sites: Sequence[int]) -> int:
    """Rank of ``config`` among ``len(config)``-subsets of ``sites`` in lexicographic order.

    Uses the combinatorial number system, O(N) binomials.
    """
    pos = {s: i for i, s in enumerate(sites)}
    n, N = len(sites), len(config)
    c = [pos[s] for s in config]
    return comb(n, N) - 1 - sum(comb(n - 1 - ci, N - i) for i, ci in enumerate(c))


def build_symmetric_product(base: InducedSubgraph | Graph, N: int) -> SymmetricProductGraph:
    """Symmetric product of the kept vertices; degrees measured in the parent."""
    if isinstance(base, Graph):
        base = InducedSubgraph(base, base.vertices)
    kept = base.kept
    if not 1 <= N <= len(kept):
        raise ValueError(f"N={N} out of range [1, {len(kept)}]")
    parent = base.parent
    keep = set(kept)
    configs = list(combinations(kept, N))
    index = {c: i for i, c in enumerate(configs)}
    neighbors = []
    degree_full = np.empty(len(configs), dtype=np.int64)
    for i, X in enumerate(configs):
        occ = set(X)
        nb = []
        for x in X:
            for y in parent.adjacency[x]:
                if y in occ or y not in keep:
                    continue
                nb.append(index[as_config(occ - {x} | {y})])
        neighbors.append(tuple(sorted(nb)))
        degree_full[i] = surface_measure(X, parent)
    return SymmetricProductGraph(base, N, configs, index, neighbors, degree_full)


def surface_measure(X: Iterable[int], parent: Graph) -> int:
    """Number of parent edges with exactly one endpoint in ``X``."""
    occ = set(X)
    return sum(1 for x in occ for y in parent.adjacency[x] if y not in occ)


# -- distances on symmetric products ----------------------------------------

class _DistanceCache:
    def __init__(self, graph: Graph):
        self.graph = graph
        self._rows: dict[int, dict[int, int]] = {}

    def __call__(self, x: int, y: int) -> int:
        if self.graph.kind == "chain":
            return abs(x - y)
        if x not in self._rows:
            self._rows[x] = self.graph.bfs_distances(x)
        return self._rows[x][y]


def distance_dN(X: Sequence[int], Y: Sequence[int], base: Graph, _dist=None) -> int:
    """Product-graph distance: min over matchings of summed base distances.

    On a chain the sorted matching is optimal; otherwise an assignment
    problem is solved on the pairwise distance matrix.
    """
    if len(X) != len(Y):
        raise ValueError(f"configuration sizes differ: {len(X)} vs {len(Y)}")
    if base.kind == "chain":
        return int(sum(abs(x - y) for x, y in zip(sorted(X), sorted(Y))))
    dist = _dist or _DistanceCache(base)
    cost = np.array([[dist(x, y) for y in Y] for x in X], dtype=np.int64).reshape(len(X), len(Y))
    if cost.size == 0:
        return 0
    r, c = linear_sum_assignment(cost)
    return int(cost[r, c].sum())


class Unreachable(ValueError):
    pass


def distance_dN_bfs_oracle(X: Sequence[int], Y: Sequence[int], product: SymmetricProductGraph) -> int:
    """Shortest path length between two configurations by BFS on the product graph."""
    src, dst = product.index[as_config(X)], product.index[as_config(Y)]
    if src == dst:
        return 0
    seen = {src: 0}
    queue = deque([src])
    while queue:
        i = queue.popleft()
        for j in product.neighbors[i]:
            if j not in seen:
                seen[j] = seen[i] + 1
                if j == dst:
                    return seen[j]
                queue.append(j)
    raise Unreachable(f"{tuple(Y)} unreachable from {tuple(X)} in the product graph")


# -- assumptions ------------------------------------------------------------

@dataclass
class AssumptionReport:
    geodesic: bool
    droplet_minima: dict  # N -> (min over host configurations, min over kept configurations)

    @property
    def contains_droplets(self) -> bool:
        return all(h == s for h, s in self.droplet_minima.values())

    @property
    def ok(self) -> bool:
        return self.geodesic and self.contains_droplets


def isoperimetric_min(parent: Graph, candidate_vertices: Iterable[int], N: int) -> int:
    """Minimum surface measure over all N-subsets of ``candidate_vertices`` (exhaustive)."""
    cands = sorted(set(candidate_vertices))
    if N > len(cands):
        raise ValueError(f"N={N} exceeds number of candidates {len(cands)}")
    if N == 0:
        return 0
    if parent.kind == "chain" and N <= len(cands) and _has_interval(cands, N):
        return min(surface_measure(c, parent) for c in _intervals(cands, N))
    return min(surface_measure(X, parent) for X in combinations(cands, N))


def check_assumptions(sub: InducedSubgraph, N_max: int | None = None) -> AssumptionReport:
    """Check that ``sub`` is geodesic and holds an N-droplet for every N <= N_max.

    The host-wide minimum is taken over configurations avoiding the
    truncation frontier, which stands in for the infinite host.
    """
    N_max = len(sub.kept) if N_max is None else min(N_max, len(sub.kept))
    geo = sub.is_geodesic()
    interior = [v for v in sub.parent.vertices if v not in sub.parent.frontier]
    minima = {}
    for N in range(1, N_max + 1):
        minima[N] = (isoperimetric_min(sub.parent, interior, N),
                     isoperimetric_min(sub.parent, sub.kept, N))
    return AssumptionReport(geo, minima)


# -- helpers ----------------------------------------------------------------

def _bfs(adjacency: Mapping[int, Sequence[int]], source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in adjacency[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def _is_connected(vertices, adjacency) -> bool:
    vertices = list(vertices)
    if not vertices:
        return True
    return len(_bfs(adjacency, vertices[0])) == len(vertices)


def _intervals(cands, N):
    cs = set(cands)
    for x in cands:
        run = tuple(range(x, x + N))
        if all(s in cs for s in run):
            yield run


def _has_interval(cands, N) -> bool:
    return next(_intervals(cands, N), None) is not None
