import numpy as np
import pytest

from tembed.errors import EnumerationCapError, StructureError
from tembed.graph import (BLACK, WHITE, CYCLE, aztec_diamond, build_augmented_dual,
                          cover_weight, enumerate_dimer_covers, four_cycle,
                          graph_from_json, graph_to_json, height_function,
                          height_moment, prism_graph)


def test_aztec_vertex_and_edge_counts():
    for m in (1, 2, 3):
        g = aztec_diamond(m)
        assert g.n_vertices == 2 * m * (m + 1)
        assert g.n_edges == 4 * m * m
        assert len(g.black) == len(g.white) == m * (m + 1)


def test_four_cycle_dual_has_four_boundary_vertices():
    dual = build_augmented_dual(four_cycle())
    assert dual.two_n == 4
    assert dual.n_inner == 1


def test_aztec1_boundary_cycle_length_equals_outer_degree():
    g = aztec_diamond(1)
    outer_degree = len(g.faces[g.outer_face])
    dual = build_augmented_dual(g)
    assert dual.two_n == outer_degree == 4


def test_aztec_outer_degree_growth():
    # deg v_out = 8m - 4 for the squares-adjacency Aztec graph
    for m in (1, 2, 3, 4):
        g = aztec_diamond(m)
        assert len(g.faces[g.outer_face]) == 8 * m - 4


def test_octagonal_prism_boundary():
    g = prism_graph(4)
    assert len(g.faces[g.outer_face]) == 8
    dual = build_augmented_dual(g)
    assert dual.two_n == 8


def test_boundary_vertices_have_degree_three():
    dual = build_augmented_dual(aztec_diamond(2))
    adj = dual.dual_neighbors()
    for v in dual.boundary:
        # one spoke + two cycle edges
        assert len(adj[v]) == 1


def test_first_cycle_edge_runs_along_white_vertex():
    for g in (aztec_diamond(2), prism_graph(2), prism_graph(4)):
        dual = build_augmented_dual(g)
        assert g.colors[dual.cycle_vertex[0]] == WHITE
        cols = g.colors[dual.cycle_vertex]
        assert np.all(cols[::2] == WHITE) and np.all(cols[1::2] == BLACK)


def test_edge_dual_bijection():
    g = aztec_diamond(2)
    dual = build_augmented_dual(g)
    assert len(dual.edge_dual) == g.n_edges
    seen = {tuple(sorted(p)) for p in dual.edge_dual}
    assert len(seen) == g.n_edges


def test_enumeration_counts():
    assert len(enumerate_dimer_covers(aztec_diamond(1))) == 2
    assert len(enumerate_dimer_covers(aztec_diamond(2))) == 8
    assert len(enumerate_dimer_covers(aztec_diamond(3), cap=40)) == 64


def test_enumeration_cap_refusal():
    with pytest.raises(EnumerationCapError):
        enumerate_dimer_covers(aztec_diamond(3))


def test_prism_cover_weights():
    g = prism_graph(2, spoke_weights=[2.0, 3.0, 5.0, 7.0])
    covers = enumerate_dimer_covers(g)
    z = sum(cover_weight(g, d) for d in covers)
    # covers: all spokes, two ring pairs (outer+inner aligned), mixed ring/spoke pairs
    assert z > 2 * 3 * 5 * 7


def test_height_zero_for_identical_covers():
    g = aztec_diamond(2)
    dual = build_augmented_dual(g)
    covers = enumerate_dimer_covers(g)
    h = height_function(covers[0], covers[0], dual)
    assert np.all(h == 0)


def test_height_antisymmetry():
    g = aztec_diamond(2)
    dual = build_augmented_dual(g)
    c = enumerate_dimer_covers(g)
    h12 = height_function(c[1], c[2], dual)
    h21 = height_function(c[2], c[1], dual)
    assert np.all(h12 == -h21)


def test_aztec1_height_values():
    g = aztec_diamond(1)
    dual = build_augmented_dual(g)
    c0, c1 = enumerate_dimer_covers(g)
    h = height_function(c1, c0, dual)
    assert set(h[dual.boundary]) == {0}
    inner = h[: dual.n_inner]
    assert sorted(abs(inner)) == [1]


def test_height_closure_exhaustive():
    g = aztec_diamond(2)
    dual = build_augmented_dual(g)
    covers = enumerate_dimer_covers(g)
    for d in covers:
        h = height_function(d, covers[0], dual)   # raises on any face inconsistency
        assert h[dual.boundary[0]] == 0


def test_height_moment_centered():
    g = aztec_diamond(2)
    dual = build_augmented_dual(g)
    for v in range(dual.n_dual):
        assert abs(height_moment(g, dual, [v])) < 1e-12


def test_json_round_trip():
    g = prism_graph(3, spoke_weights=[1, 2, 3, 4, 5, 6])
    doc = graph_to_json(g)
    g2 = graph_from_json(doc)
    assert np.array_equal(g.colors, g2.colors)
    assert np.array_equal(g.edges, g2.edges)
    assert np.allclose(g.weights, g2.weights)
    assert g.faces == g2.faces
    assert g.outer_face == g2.outer_face


def test_invalid_monochrome_edge_rejected():
    g = aztec_diamond(1)
    doc = graph_to_json(g)
    doc["edges"][0]["white"] = doc["edges"][0]["black"]
    with pytest.raises(StructureError):
        graph_from_json(doc)


def test_face_cycle_signs():
    g = aztec_diamond(2)
    dual = build_augmented_dual(g)
    for x in range(g.n_vertices):
        signs = {s for (_, _, kind, _, s) in dual.face_cycle[x] if kind != CYCLE}
        assert signs == ({-1} if g.colors[x] == BLACK else {1})
