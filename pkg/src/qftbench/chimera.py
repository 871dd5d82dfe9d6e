"""Chimera qubit-connectivity graphs and random open-chain embeddings.

Linear node index: ``((row * N + col) * 2 + shore) * t + k``. Shore 0 qubits
couple vertically to the same ``k`` in the cell below, shore 1 qubits
horizontally to the same ``k`` in the cell to the right; inside a cell the
two shores form a complete bipartite graph K_{t,t}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmbeddingError, ValidationError


class ChimeraGraph:
    def __init__(self, M: int, N: int, t: int = 4):
        if min(M, N, t) < 1:
            raise ValidationError(f"chimera dimensions must be positive, got M={M}, N={N}, t={t}")
        self.M, self.N, self.t = int(M), int(N), int(t)
        edges = []
        for r in range(M):
            for c in range(N):
                for k in range(t):
                    for kk in range(t):
                        edges.append((self.node(r, c, 0, k), self.node(r, c, 1, kk)))
                    if r + 1 < M:
                        edges.append((self.node(r, c, 0, k), self.node(r + 1, c, 0, k)))
                    if c + 1 < N:
                        edges.append((self.node(r, c, 1, k), self.node(r, c + 1, 1, k)))
        self.edges = frozenset(tuple(sorted(e)) for e in edges)
        adjacency: list[set] = [set() for _ in range(self.num_nodes)]
        for a, b in self.edges:
            adjacency[a].add(b)
            adjacency[b].add(a)
        self._adj = tuple(frozenset(s) for s in adjacency)

    def __repr__(self):
        return f"ChimeraGraph(M={self.M}, N={self.N}, t={self.t})"

    @property
    def num_nodes(self) -> int:
        return self.M * self.N * 2 * self.t

    def node(self, row: int, col: int, shore: int, k: int) -> int:
        return ((row * self.N + col) * 2 + shore) * self.t + k

    def coordinates(self, q: int) -> tuple[int, int, int, int]:
        cell, rest = divmod(q, 2 * self.t)
        shore, k = divmod(rest, self.t)
        row, col = divmod(cell, self.N)
        return row, col, shore, k

    def neighbors(self, q: int) -> frozenset:
        return self._adj[q]

    def has_edge(self, a: int, b: int) -> bool:
        return 0 <= a < self.num_nodes and b in self._adj[a]

    def degree(self, q: int) -> int:
        return len(self._adj[q])


def build_chimera(M: int, N: int, t: int = 4) -> ChimeraGraph:
    return ChimeraGraph(M, N, t)


def expected_edge_count(M: int, N: int, t: int = 4) -> int:
    return M * N * t * t + (M - 1) * N * t + M * (N - 1) * t


@dataclass(frozen=True)
class ChainEmbedding:
    nodes: tuple[int, ...]

    @property
    def L(self) -> int:
        return len(self.nodes)

    @property
    def couplers(self) -> list[tuple[int, int]]:
        return list(zip(self.nodes[:-1], self.nodes[1:]))

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "couplers": [list(c) for c in self.couplers]}

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")


@dataclass(frozen=True)
class EmbeddingReport:
    ok: bool
    message: str = "ok"
    position: int | None = None

    def __bool__(self):
        return self.ok


def validate_embedding(graph: ChimeraGraph, chain) -> EmbeddingReport:
    """Check that ``chain`` is a simple path in ``graph``; report the first violation."""
    nodes = list(chain.nodes if isinstance(chain, ChainEmbedding) else chain)
    seen = set()
    for i, q in enumerate(nodes):
        if not 0 <= q < graph.num_nodes:
            return EmbeddingReport(False, f"node {q} at position {i} is not in the graph", i)
        if q in seen:
            return EmbeddingReport(False, f"node {q} repeated at position {i}", i)
        seen.add(q)
        if i and not graph.has_edge(nodes[i - 1], q):
            return EmbeddingReport(False, f"no coupler between {nodes[i - 1]} and {q} (position {i})", i)
    return EmbeddingReport(True)


def random_chain(graph: ChimeraGraph, L: int, seed=None, max_restarts: int = 10_000) -> ChainEmbedding:
    """Seeded random self-avoiding walk of ``L`` qubits, restarting on dead ends."""
    if not 2 <= L <= graph.num_nodes:
        raise ValidationError(f"chain length must lie in [2, {graph.num_nodes}], got {L}")
    rng = np.random.default_rng(seed)
    longest = 0
    for attempt in range(max_restarts + 1):
        path = [int(rng.integers(graph.num_nodes))]
        visited = {path[0]}
        while len(path) < L:
            options = sorted(graph.neighbors(path[-1]) - visited)
            if not options:
                break
            nxt = options[int(rng.integers(len(options)))]
            path.append(nxt)
            visited.add(nxt)
        if len(path) == L:
            return ChainEmbedding(tuple(path))
        longest = max(longest, len(path))
    raise EmbeddingError(
        f"no self-avoiding chain of length {L} on {graph!r} after {max_restarts} restarts "
        f"(longest walk reached {longest} qubits)"
    )
