"""
Undirected communication graphs with 1-based node ids.

Random graphs are drawn with numpy's PCG64 generator
(``numpy.random.default_rng(seed)``): candidate edges ``(i, j)``, ``i < j``, are
visited in lexicographic order and kept when a uniform draw falls below ``p``.
Disconnected samples are rejected and redrawn from the same stream.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GraphError",
    "Graph",
    "gen_erdos_renyi",
    "is_connected",
    "neighbors",
    "path_graph",
    "complete_graph",
    "cycle_graph",
    "read_edge_list",
    "write_edge_list",
]

MAX_TRIES = 1000


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    n_nodes: int
    edges: frozenset

    def __post_init__(self):
        if self.n_nodes < 1:
            raise GraphError("graph needs at least one node")
        canon = set()
        for e in self.edges:
            i, j = sorted(int(v) for v in e)
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if i < 1 or j > self.n_nodes:
                raise GraphError(f"edge ({i}, {j}) outside 1..{self.n_nodes}")
            canon.add((i, j))
        object.__setattr__(self, "edges", frozenset(canon))
        adj = {i: [] for i in range(1, self.n_nodes + 1)}
        for i, j in canon:
            adj[i].append(j)
            adj[j].append(i)
        object.__setattr__(self, "_adj", {i: tuple(sorted(v)) for i, v in adj.items()})

    @classmethod
    def from_edges(cls, n_nodes, edges):
        """Build from any iterable of pairs; duplicates in either orientation collapse."""
        return cls(n_nodes, frozenset(tuple(e) for e in edges))

    def sorted_edges(self):
        return sorted(self.edges)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def neighbors(g: Graph, i: int) -> list:
    if not 1 <= i <= g.n_nodes:
        raise GraphError(f"node {i} outside 1..{g.n_nodes}")
    return list(g._adj[i])


def is_connected(g: Graph) -> bool:
    seen = {1}
    queue = deque([1])
    while queue:
        for j in g._adj[queue.popleft()]:
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return len(seen) == g.n_nodes


def gen_erdos_renyi(n: int, p: float, seed: int, max_tries: int = MAX_TRIES) -> Graph:
    """Connected G(n, p) sample by rejection."""
    if n < 1:
        raise GraphError("n must be positive")
    if not 0.0 <= p <= 1.0:
        raise GraphError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    for _ in range(max_tries):
        keep = rng.random(len(pairs)) < p
        g = Graph(n, frozenset(e for e, k in zip(pairs, keep) if k))
        if is_connected(g):
            return g
    raise GraphError(f"no connected G({n}, {p}) sample in {max_tries} draws (seed {seed})")


def path_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, i + 1) for i in range(1, n)))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        return path_graph(n)
    return Graph(n, frozenset([(i, i + 1) for i in range(1, n)] + [(1, n)]))


def complete_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)))


def write_edge_list(g: Graph) -> str:
    lines = [f"{g.n_nodes} {g.n_edges}"]
    lines += [f"{i} {j}" for i, j in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def read_edge_list(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise GraphError("edge list must start with 'n m'")
    n, m = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != m:
        raise GraphError(f"header announces {m} edges, found {len(body)}")
    edges = []
    for r in body:
        if len(r) != 2:
            raise GraphError(f"bad edge line: {' '.join(r)}")
        edges.append((int(r[0]), int(r[1])))
    g = Graph.from_edges(n, edges)
    if g.n_edges != m:
        raise GraphError("duplicate edges in edge list")
    return g
