import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xxzlab.graphs import (Graph, InducedSubgraph, Unreachable, build_symmetric_product, chain,
                           check_assumptions, distance_dN, distance_dN_bfs_oracle,
                           isoperimetric_min, lex_rank, read_edge_list, strip, surface_measure)


def path(a, b):
    return Graph.from_edges([(x, x + 1) for x in range(a, b)], kind="chain")


def grid(n, m):
    edges = []
    for x in range(n):
        for y in range(m):
            if x + 1 < n:
                edges.append((x * m + y, (x + 1) * m + y))
            if y + 1 < m:
                edges.append((x * m + y, x * m + y + 1))
    return Graph.from_edges(edges)


# -- Graph ----------------------------------------------------------------------

def test_graph_rejects_asymmetric_and_loops():
    with pytest.raises(ValueError):
        Graph((1, 2), {1: (2,), 2: ()})
    with pytest.raises(ValueError):
        Graph((1,), {1: (1,)})


def test_graph_rejects_disconnected():
    with pytest.raises(ValueError, match="connected"):
        Graph.from_edges([(1, 2), (3, 4)])


def test_d_max_and_edges():
    g = grid(3, 3)
    assert g.d_max == 4
    assert len(g.edges) == 12


def test_read_edge_list(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# a triangle\n1 2\n2 3\n3 1\n")
    g = read_edge_list(p)
    assert g.vertices == (1, 2, 3) and g.d_max == 2
    p.write_text("1 2 3\n")
    with pytest.raises(ValueError, match=":1:"):
        read_edge_list(p)


# -- symmetric product -----------------------------------------------------------

def test_product_path3_N2():
    P = build_symmetric_product(path(1, 3), 2)
    assert P.configs == [(1, 2), (1, 3), (2, 3)]
    assert sorted(P.edges) == [(0, 1), (1, 2)]


def test_product_full_is_single_vertex():
    P = build_symmetric_product(path(1, 4), 4)
    assert len(P) == 1 and P.edges == []


def test_product_path4_N2_counts():
    # hand count: 12-13, 13-14, 13-23, 14-24, 23-24, 24-34 (13,14,24,23 is a 4-cycle)
    P = build_symmetric_product(path(1, 4), 2)
    assert len(P) == 6 and len(P.edges) == 6


def test_product_edges_are_symmetric_difference_edges():
    g = grid(2, 3)
    P = build_symmetric_product(g, 2)
    for i, X in enumerate(P.configs):
        for j, Y in enumerate(P.configs):
            diff = set(X) ^ set(Y)
            is_edge = len(diff) == 2 and g.has_edge(*sorted(diff))
            assert (j in P.neighbors[i]) == is_edge


def test_product_N_out_of_range():
    with pytest.raises(ValueError):
        build_symmetric_product(path(1, 3), 0)
    with pytest.raises(ValueError):
        build_symmetric_product(path(1, 3), 4)


def test_lex_rank_matches_index():
    sub = chain(7)
    P = build_symmetric_product(sub, 3)
    for i, X in enumerate(P.configs):
        assert lex_rank(X, sub.kept) == i


def test_degree_full_equals_neighbour_count_when_sub_is_parent():
    for g in (path(1, 6), grid(3, 3)):
        for N in (1, 2, 3):
            P = build_symmetric_product(g, N)
            assert np.array_equal(P.degree_full, [len(nb) for nb in P.neighbors])


# -- distances -------------------------------------------------------------------

def test_distance_examples():
    g = path(1, 6)
    assert distance_dN((1, 2), (1, 2), g) == 0
    assert distance_dN((1, 2), (4, 5), g) == 6
    assert distance_dN((1, 3, 5), (2, 3, 4), g) == 2
    with pytest.raises(ValueError):
        distance_dN((1,), (1, 2), g)


def test_bfs_oracle_examples():
    P = build_symmetric_product(path(1, 5), 2)
    assert distance_dN_bfs_oracle((1, 2), (4, 5), P) == 6
    assert distance_dN_bfs_oracle((1, 2), (1, 2), P) == 0
    P3 = build_symmetric_product(path(1, 3), 2)
    assert distance_dN_bfs_oracle((1, 2), (2, 3), P3) == 2


def test_bfs_oracle_reports_unreachable():
    # two separate components inside the parent: the kept set {1, 3} of a path
    P = build_symmetric_product(InducedSubgraph(path(1, 3), (1, 3)), 1)
    with pytest.raises(Unreachable):
        distance_dN_bfs_oracle((1,), (3,), P)


@pytest.mark.parametrize("g,N", [(path(1, 7), 2), (path(1, 7), 3), (grid(3, 3), 2),
                                 (grid(3, 3), 3), (grid(2, 4), 4)])
def test_distance_matches_bfs_oracle_everywhere(g, N):
    P = build_symmetric_product(g, N)
    for X in P.configs:
        for Y in P.configs:
            assert distance_dN(X, Y, g) == distance_dN_bfs_oracle(X, Y, P)


def test_distances_between_vectorized_agrees():
    for g in (path(1, 6), grid(2, 3)):
        P = build_symmetric_product(g, 2)
        idx = list(range(len(P)))
        D = P.distances_between(idx, idx)
        for i in idx:
            for j in idx:
                assert D[i, j] == distance_dN(P.configs[i], P.configs[j], g)


def test_geodesic_subgraph_distances_agree():
    sub = strip(3, 2)
    P_sub = build_symmetric_product(sub.graph, 2)
    for X, Y in itertools.combinations(P_sub.configs[:30], 2):
        assert distance_dN(X, Y, sub.graph) == distance_dN(X, Y, sub.parent)


configs = st.integers(1, 4).flatmap(
    lambda n: st.tuples(*[st.lists(st.integers(1, 9), min_size=n, max_size=n, unique=True)
                          for _ in range(3)]))


@settings(max_examples=200, deadline=None)
@given(configs)
def test_distance_is_metric_chain(triple):
    g = path(1, 9)
    X, Y, Z = (tuple(sorted(c)) for c in triple)
    assert distance_dN(X, Y, g) == distance_dN(Y, X, g)
    assert distance_dN(X, Z, g) <= distance_dN(X, Y, g) + distance_dN(Y, Z, g)
    assert (distance_dN(X, Y, g) == 0) == (X == Y)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3).flatmap(
    lambda n: st.tuples(*[st.lists(st.integers(0, 8), min_size=n, max_size=n, unique=True)
                          for _ in range(3)])))
def test_distance_is_metric_grid(triple):
    g = grid(3, 3)
    X, Y, Z = (tuple(sorted(c)) for c in triple)
    assert distance_dN(X, Z, g) <= distance_dN(X, Y, g) + distance_dN(Y, Z, g)
    assert distance_dN(X, Y, g) == distance_dN(Y, X, g)
    assert (distance_dN(X, Y, g) == 0) == (X == Y)


# -- surface measure and assumptions ------------------------------------------------

def test_surface_measure_examples():
    host = chain(6, pad=2).parent
    assert surface_measure((1, 2, 4), host) == 4
    assert surface_measure((3,), host) == 2
    assert surface_measure((1,), path(1, 3)) == 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 8), min_size=1, max_size=8, unique=True))
def test_surface_measure_is_twice_cluster_count(X):
    from xxzlab.clusters import cluster_count
    host = chain(8).parent
    assert surface_measure(X, host) == 2 * cluster_count(X)


def test_check_assumptions_interval():
    rep = check_assumptions(chain(6, pad=3))
    assert rep.geodesic and rep.contains_droplets and rep.ok
    assert all(h == 2 for h, _ in rep.droplet_minima.values())


def test_check_assumptions_two_point_subgraph_not_geodesic():
    rep = check_assumptions(InducedSubgraph(path(1, 3), (1, 3)), 1)
    assert not rep.geodesic


def test_isoperimetric_min_examples():
    host = chain(10, pad=5).parent
    interior = [v for v in host.vertices if v not in host.frontier]
    for N in (1, 3, 6):
        assert isoperimetric_min(host, interior, N) == 2
    single = Graph((7,), {7: ()})
    assert isoperimetric_min(single, [7], 1) == 0
    # a 2x2 block inside a 4x4 grid, N = 2: a domino has 6 outgoing edges
    g = grid(4, 4)
    block = [5, 6, 9, 10]
    assert isoperimetric_min(g, block, 2) == 6
