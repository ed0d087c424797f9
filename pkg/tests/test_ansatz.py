import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_tsp
from qpathfinder.ansatz import (
    DisconnectedGraphError,
    InteractionGraph,
    QaoaAnsatz,
    interaction_graph,
    min_entangling_depth,
    recommend_depth,
)
from qpathfinder.encode import IsingModel, qubo_to_ising, tsp_to_qubo


def path_graph(n):
    return InteractionGraph(n, frozenset((i, i + 1) for i in range(n - 1)))


def floyd_diameter(n, edges):
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0)
    for i, j in edges:
        d[i, j] = d[j, i] = 1
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d.max()


def test_four_node_tsp_graph():
    im = qubo_to_ising(tsp_to_qubo(random_tsp(4, 0), 1.0))
    g = interaction_graph(im)
    assert g.n == 9
    assert min_entangling_depth(g) == 2
    assert recommend_depth(g) == 5


def test_three_node_tsp_graph_is_complete():
    g = interaction_graph(qubo_to_ising(tsp_to_qubo(random_tsp(3, 0), 1.0)))
    assert len(g.edges) == 6
    assert min_entangling_depth(g) == 1
    assert recommend_depth(g) == 3


@pytest.mark.parametrize("n,expected", [(1, 0), (2, 1), (3, 2), (5, 4)])
def test_path_graph_diameter(n, expected):
    assert min_entangling_depth(path_graph(n)) == expected


def test_disconnected_and_empty():
    with pytest.raises(DisconnectedGraphError):
        min_entangling_depth(InteractionGraph(3, frozenset({(0, 1)})))
    with pytest.raises(DisconnectedGraphError):
        min_entangling_depth(InteractionGraph(0, frozenset()))


def test_zero_couplings_are_not_edges():
    im = IsingModel(2, np.zeros(2), {(0, 1): 0.0})
    assert interaction_graph(im).edges == frozenset()


def test_override():
    assert recommend_depth(path_graph(3), override=7) == 7
    with pytest.raises(ValueError):
        recommend_depth(path_graph(3), override=-1)


def test_ansatz_params():
    a = QaoaAnsatz(IsingModel(3, np.ones(3)), 4)
    assert a.n == 3 and a.n_params == 8
    with pytest.raises(ValueError):
        QaoaAnsatz(IsingModel(1, np.ones(1)), -1)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 9), data=st.data())
def test_diameter_matches_floyd_on_connected_graphs(n, data):
    # a random spanning tree plus extra edges keeps the graph connected
    parents = [data.draw(st.integers(0, v - 1)) for v in range(1, n)]
    edges = {(p, v) for v, p in zip(range(1, n), parents)}
    extra = data.draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=8))
    edges |= {(min(a, b), max(a, b)) for a, b in extra if a != b}
    g = InteractionGraph(n, frozenset(edges))
    assert min_entangling_depth(g) == floyd_diameter(n, edges)
    assert recommend_depth(g) == 2 * min_entangling_depth(g) + 1


def test_four_node_edges_follow_encoding_structure():
    from qpathfinder.encode import var_index
    g = interaction_graph(qubo_to_ising(tsp_to_qubo(random_tsp(4, 1), 1.3)))
    m = 4
    expected = set()
    cells = [(v, t) for v in range(1, m) for t in range(1, m)]
    for a in cells:
        for b in cells:
            i, j = var_index(*a, m), var_index(*b, m)
            if i >= j:
                continue
            same_node = a[0] == b[0]
            same_time = a[1] == b[1]
            adjacent = a[0] != b[0] and abs(a[1] - b[1]) == 1
            if same_node or same_time or adjacent:
                expected.add((i, j))
    assert g.edges == frozenset(expected)
    assert len(expected) == 30


def test_single_coupling_single_edge():
    g = interaction_graph(IsingModel(2, np.zeros(2), {(0, 1): 0.5}))
    assert g.edges == frozenset({(0, 1)})


def test_single_vertex_depth():
    g = InteractionGraph(1, frozenset())
    assert min_entangling_depth(g) == 0
    assert recommend_depth(g) == 1
    assert recommend_depth(path_graph(3)) == 5
