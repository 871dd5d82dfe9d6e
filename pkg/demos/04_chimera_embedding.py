"""
Placing a chain on a chimera graph
==================================

The annealers tested are wired as a grid of K_{4,4} cells. A one-dimensional
chain is embedded as a simple path through the couplers.
"""

from qftbench.chimera import build_chimera, expected_edge_count, random_chain, validate_embedding

graph = build_chimera(12, 12)
print(f"12x12 chimera: {graph.num_nodes} qubits, {len(graph.edges)} couplers "
      f"(formula {expected_edge_count(12, 12)})")

chain = random_chain(graph, 50, seed=2017)
print("chain valid:", bool(validate_embedding(graph, chain)))
for q in chain.nodes[:8]:
    row, col, shore, k = graph.coordinates(q)
    print(f"  qubit {q:4d}  cell ({row:2d}, {col:2d})  shore {shore}  index {k}")
print("  ...")

# a walk that revisits a qubit is rejected with the offending position
broken = list(chain.nodes[:5]) + [chain.nodes[2]]
report = validate_embedding(graph, broken)
print(f"broken chain: position {report.position}: {report.message}")
