import pytest
from hypothesis import given, settings, strategies as st

from peakshave.graph import (
    Graph,
    GraphError,
    complete_graph,
    cycle_graph,
    gen_erdos_renyi,
    is_connected,
    neighbors,
    path_graph,
    read_edge_list,
    write_edge_list,
)


def test_er_two_nodes_full_probability():
    g = gen_erdos_renyi(2, 1.0, seed=99)
    assert g.edges == {(1, 2)}


def test_er_complete_four():
    assert gen_erdos_renyi(4, 1.0, seed=0).n_edges == 6


def test_er_experiment_size_deterministic():
    a = gen_erdos_renyi(15, 0.2, seed=7)
    b = gen_erdos_renyi(15, 0.2, seed=7)
    assert a.edges == b.edges
    assert is_connected(a)
    assert a.n_nodes == 15


def test_er_zero_probability_fails():
    with pytest.raises(GraphError, match="no connected"):
        gen_erdos_renyi(3, 0.0, seed=1)


def test_er_single_node():
    g = gen_erdos_renyi(1, 0.0, seed=1)
    assert g.n_edges == 0 and is_connected(g)


@pytest.mark.parametrize("n,p", [(0, 0.5), (3, -0.1), (3, 1.5)])
def test_er_bad_args(n, p):
    with pytest.raises(GraphError):
        gen_erdos_renyi(n, p, seed=0)


def test_is_connected_examples():
    assert is_connected(path_graph(3))
    assert not is_connected(Graph(2, frozenset()))
    assert is_connected(Graph(1, frozenset()))


def test_neighbors_examples():
    assert neighbors(complete_graph(3), 2) == [1, 3]
    assert neighbors(path_graph(3), 1) == [2]
    assert neighbors(path_graph(3), 2) == [1, 3]
    with pytest.raises(GraphError):
        neighbors(path_graph(3), 4)
    with pytest.raises(GraphError):
        neighbors(path_graph(3), 0)


def test_rejects_self_loop_and_out_of_range():
    with pytest.raises(GraphError):
        Graph(3, frozenset({(2, 2)}))
    with pytest.raises(GraphError):
        Graph(3, frozenset({(1, 4)}))


def test_duplicate_orientations_collapse():
    g = Graph.from_edges(3, [(1, 2), (2, 1), (2, 3)])
    assert g.n_edges == 2


def test_cycle():
    assert cycle_graph(5).n_edges == 5
    assert neighbors(cycle_graph(5), 1) == [2, 5]


def test_edge_list_round_trip():
    g = gen_erdos_renyi(10, 0.3, seed=4)
    text = write_edge_list(g)
    assert text.splitlines()[0] == f"10 {g.n_edges}"
    assert read_edge_list(text) == g


@pytest.mark.parametrize("text", ["", "3\n", "3 2\n1 2\n", "3 1\n1 2 3\n", "3 2\n1 2\n2 1\n"])
def test_edge_list_malformed(text):
    with pytest.raises(GraphError):
        read_edge_list(text)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 20), st.floats(0.15, 1.0), st.integers(0, 10**6))
def test_er_properties(n, p, seed):
    g = gen_erdos_renyi(n, p, seed)
    assert is_connected(g)
    assert g == gen_erdos_renyi(n, p, seed)
    for i in range(1, n + 1):
        nb = neighbors(g, i)
        assert nb == sorted(nb) and i not in nb
        for j in nb:
            assert i in neighbors(g, j)
