import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qftbench.chimera import (
    ChainEmbedding,
    build_chimera,
    expected_edge_count,
    random_chain,
    validate_embedding,
)
from qftbench.errors import EmbeddingError, ValidationError


def brute_edges(M, N, t):
    """Oracle: couplers from cell coordinates, without the linear index formula."""
    nodes = {}
    for r in range(M):
        for c in range(N):
            for shore in (0, 1):
                for k in range(t):
                    nodes[(r, c, shore, k)] = len(nodes)
    edges = set()
    for (r, c, shore, k), q in nodes.items():
        for (r2, c2, shore2, k2), q2 in nodes.items():
            if q2 <= q:
                continue
            same_cell = (r, c) == (r2, c2)
            if same_cell and shore != shore2:
                edges.add((q, q2))
            elif shore == shore2 == 0 and c == c2 and abs(r - r2) == 1 and k == k2:
                edges.add((q, q2))
            elif shore == shore2 == 1 and r == r2 and abs(c - c2) == 1 and k == k2:
                edges.add((q, q2))
    return edges


@pytest.mark.parametrize("M,N,t,nodes,edges", [(1, 1, 4, 8, 16), (2, 2, 4, 32, 80), (12, 12, 4, 1152, 3360)])
def test_counts(M, N, t, nodes, edges):
    g = build_chimera(M, N, t)
    assert g.num_nodes == nodes
    assert len(g.edges) == edges == expected_edge_count(M, N, t)


@pytest.mark.parametrize("M,N,t", [(1, 1, 1), (2, 3, 2), (3, 2, 4), (2, 2, 3)])
def test_edges_match_coordinate_oracle(M, N, t):
    assert build_chimera(M, N, t).edges == brute_edges(M, N, t)


def test_count_formula_exhaustive():
    for M in range(1, 17):
        for N in range(1, 17):
            g = build_chimera(M, N)
            assert g.num_nodes == M * N * 8
            assert len(g.edges) == expected_edge_count(M, N)
            assert max(g.degree(q) for q in range(g.num_nodes)) <= 4 + 2


def test_coordinates_roundtrip():
    g = build_chimera(3, 5, 4)
    for q in range(g.num_nodes):
        assert g.node(*g.coordinates(q)) == q


def test_adjacency_queries():
    g = build_chimera(2, 2)
    a, b = g.node(0, 0, 0, 1), g.node(0, 0, 1, 3)
    assert g.has_edge(a, b) and g.has_edge(b, a)
    assert g.has_edge(g.node(0, 0, 0, 2), g.node(1, 0, 0, 2))
    assert not g.has_edge(g.node(0, 0, 0, 2), g.node(0, 1, 0, 2))
    assert g.has_edge(g.node(0, 0, 1, 2), g.node(0, 1, 1, 2))
    assert not g.has_edge(a, g.num_nodes + 3)
    assert g.neighbors(a) == {g.node(0, 0, 1, k) for k in range(4)} | {g.node(1, 0, 0, 1)}


def test_bad_dimensions():
    with pytest.raises(ValidationError):
        build_chimera(0, 2)


def test_validation_reports():
    g = build_chimera(2, 2)
    a, b, c = g.node(0, 0, 0, 0), g.node(0, 0, 1, 0), g.node(0, 0, 0, 1)
    assert validate_embedding(g, [a, b, c])
    rep = validate_embedding(g, [a, b, a])
    assert not rep and rep.position == 2 and "repeated" in rep.message
    rep = validate_embedding(g, [a, c])
    assert not rep and rep.position == 1 and "no coupler" in rep.message
    rep = validate_embedding(g, [a, 10_000])
    assert not rep and "not in the graph" in rep.message


def test_chain_json(tmp_path):
    chain = ChainEmbedding((3, 7, 2))
    assert chain.L == 3
    assert chain.to_dict() == {"nodes": [3, 7, 2], "couplers": [[3, 7], [7, 2]]}
    path = tmp_path / "chain.json"
    chain.to_json(path)
    assert json.loads(path.read_text()) == chain.to_dict()


def test_random_chain_examples():
    g = build_chimera(2, 2)
    pair = random_chain(g, 2, seed=0)
    assert validate_embedding(g, pair) and pair.L == 2
    assert random_chain(g, 20, seed=5) == random_chain(g, 20, seed=5)
    big = build_chimera(12, 12)
    chain = random_chain(big, 50, seed=1)
    assert len(set(chain.nodes)) == 50
    assert all(tuple(sorted(c)) in big.edges for c in chain.couplers)


def test_random_chain_errors():
    g = build_chimera(1, 1, 1)
    with pytest.raises(ValidationError):
        random_chain(g, 1, seed=0)
    with pytest.raises(ValidationError):
        random_chain(g, 3, seed=0)
    # the longest simple path in a 1x3 strip of single-qubit shores has 5 nodes
    with pytest.raises(EmbeddingError, match="restarts"):
        random_chain(build_chimera(1, 3, 1), 6, seed=0, max_restarts=5)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), M=st.integers(1, 4), N=st.integers(1, 4), L=st.integers(2, 12))
def test_random_chains_are_simple_paths(seed, M, N, L):
    g = build_chimera(M, N)
    chain = random_chain(g, min(L, g.num_nodes), seed=seed)
    assert validate_embedding(g, chain)
