import itertools

import numpy as np
import pytest

from tembed.errors import InputError, NoPerfectMatchingError
from tembed.graph import (aztec_diamond, build_augmented_dual, cover_weight,
                          enumerate_dimer_covers, height_moment, prism_graph)
from tembed.kasteleyn import (assign_kasteleyn_signs, check_kasteleyn_signs,
                              correlation_gradient, invert,
                              joint_edge_probability, partition_function)


def kasteleyn_setup(g):
    dual = build_augmented_dual(g)
    kr = assign_kasteleyn_signs(g)
    kinv = invert(kr.matrix)
    return dual, kr, kinv


def test_sign_products_all_faces():
    for g in (aztec_diamond(1), aztec_diamond(2), aztec_diamond(3), prism_graph(2),
              prism_graph(3), prism_graph(4)):
        kr = assign_kasteleyn_signs(g)
        assert check_kasteleyn_signs(g, kr.signs) == []


def test_quadrilateral_face_sign_product_is_minus_one():
    g = aztec_diamond(2)
    kr = assign_kasteleyn_signs(g)
    for f, cyc in enumerate(g.faces):
        if f == g.outer_face:
            continue
        assert len(cyc) == 4
        assert np.prod(kr.signs[list(cyc)]) == -1


def test_hexagonal_face_sign_product_is_plus_one():
    # inner ring face of the 3-prism is a hexagon
    g = prism_graph(3)
    kr = assign_kasteleyn_signs(g)
    hexes = [cyc for f, cyc in enumerate(g.faces)
             if f != g.outer_face and len(cyc) == 6]
    assert hexes
    for cyc in hexes:
        assert np.prod(kr.signs[list(cyc)]) == 1


def test_partition_function_matches_enumeration():
    for m, cap in ((1, 24), (2, 24), (3, 40)):
        g = aztec_diamond(m)
        kr = assign_kasteleyn_signs(g)
        covers = enumerate_dimer_covers(g, cap=cap)
        z = sum(cover_weight(g, d) for d in covers)
        assert z == 2 ** (m * (m + 1) // 2)
        assert abs(partition_function(kr.matrix) - z) < 1e-9 * z


def test_partition_function_weight_scaling():
    g = prism_graph(2)
    kr = assign_kasteleyn_signs(g)
    z = partition_function(kr.matrix)
    c = 1.7
    z2 = partition_function(c * kr.matrix)
    assert np.isclose(z2, c ** len(g.black) * z)


def test_partition_function_no_cover():
    # remove a black vertex's coverability by zeroing its row
    g = aztec_diamond(1)
    kr = assign_kasteleyn_signs(g)
    K = kr.matrix.copy()
    K[0, :] = 0.0
    assert partition_function(K) == 0.0
    with pytest.raises(NoPerfectMatchingError):
        invert(K)


def test_invert_residual():
    g = aztec_diamond(2)
    kr = assign_kasteleyn_signs(g)
    kinv = invert(kr.matrix)
    assert kinv.residual < 1e-12


def test_one_by_one_inverse():
    assert np.allclose(invert(np.array([[2.5]])).matrix, [[0.4]])


def test_gauge_covariance_of_det_and_probabilities():
    rng = np.random.default_rng(7)
    g = aztec_diamond(2)
    dual, kr, kinv = kasteleyn_setup(g)
    gb = np.exp(rng.normal(size=len(g.black)))
    gw = np.exp(rng.normal(size=len(g.white)))
    Kg = np.diag(gb) @ kr.matrix @ np.diag(gw)
    assert np.isclose(partition_function(Kg),
                      partition_function(kr.matrix) * gb.prod() * gw.prod())
    kinv_g = invert(Kg)
    for e in range(g.n_edges):
        p1, _ = joint_edge_probability(g, kr.matrix, kinv, [e])
        p2, _ = joint_edge_probability(g, Kg, kinv_g, [e])
        assert abs(p1 - p2) < 1e-10


def test_empty_edge_list_probability_is_one():
    g = aztec_diamond(1)
    dual, kr, kinv = kasteleyn_setup(g)
    assert joint_edge_probability(g, kr.matrix, kinv, [])[0] == 1.0


def test_aztec1_single_edge_probabilities():
    g = aztec_diamond(1)
    dual, kr, kinv = kasteleyn_setup(g)
    for e in range(g.n_edges):
        p, im = joint_edge_probability(g, kr.matrix, kinv, [e])
        assert abs(p - 0.5) < 1e-12 and im < 1e-12


def disjoint_edge_subsets(g):
    for r in range(1, len(g.black) + 1):
        for sub in itertools.combinations(range(g.n_edges), r):
            verts = [int(v) for e in sub for v in g.edges[e]]
            if len(verts) == len(set(verts)):
                yield sub


def enumeration_probability(g, covers, weights, sub):
    num = sum(w for d, w in zip(covers, weights) if set(sub) <= set(d))
    return num / sum(weights)


@pytest.mark.parametrize("make", [lambda: aztec_diamond(1), lambda: prism_graph(2),
                                  lambda: aztec_diamond(2)])
def test_joint_probabilities_match_enumeration(make):
    g = make()
    dual, kr, kinv = kasteleyn_setup(g)
    covers = enumerate_dimer_covers(g)
    weights = [cover_weight(g, d) for d in covers]
    for sub in disjoint_edge_subsets(g):
        p, im = joint_edge_probability(g, kr.matrix, kinv, list(sub))
        p_ref = enumeration_probability(g, covers, weights, sub)
        assert abs(p - p_ref) < 1e-10
        assert im < 1e-9
        assert -1e-9 <= p <= 1 + 1e-9


def test_full_cover_probability():
    g = prism_graph(2, spoke_weights=[2.0, 1.0, 3.0, 1.0])
    dual, kr, kinv = kasteleyn_setup(g)
    covers = enumerate_dimer_covers(g)
    weights = [cover_weight(g, d) for d in covers]
    z = sum(weights)
    for d, w in zip(covers, weights):
        p, _ = joint_edge_probability(g, kr.matrix, kinv, list(d))
        assert abs(p - w / z) < 1e-12


def test_non_disjoint_edges_rejected():
    g = aztec_diamond(1)
    dual, kr, kinv = kasteleyn_setup(g)
    with pytest.raises(InputError):
        joint_edge_probability(g, kr.matrix, kinv, [0, 1])


# ---------------------------------------------------------------------------
# correlation_gradient against the enumeration oracle
# ---------------------------------------------------------------------------

def shortest_dual_path(dual, a, b, forbidden=()):
    adj = dual.dual_neighbors()
    prev = {a: None}
    queue = [a]
    while queue:
        u = queue.pop(0)
        if u == b:
            break
        for (v, e, s) in adj[u]:
            if v not in prev and v not in forbidden:
                prev[v] = u
                queue.append(v)
    if b not in prev:
        return None
    path = [b]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def disjoint_path_pairs(dual, count):
    """First few ((a1,b1),(a2,b2), path1, path2) with vertex-disjoint paths."""
    out = []
    n = dual.n_dual
    for a1 in range(n):
        for b1 in range(a1 + 1, n):
            p1 = shortest_dual_path(dual, a1, b1)
            if p1 is None or len(p1) < 2:
                continue
            for a2 in range(n):
                for b2 in range(a2 + 1, n):
                    if {a2, b2} & set(p1):
                        continue
                    p2 = shortest_dual_path(dual, a2, b2, forbidden=set(p1))
                    if p2 is None or len(p2) < 2:
                        continue
                    out.append(((a1, b1), (a2, b2), p1, p2))
                    if len(out) >= count:
                        return out
    return out


def oracle_double_difference(g, dual, pairs, cap=24):
    """sum over r in {1,2}^n of (-1)^{r_1+...+r_n} H_n by brute force."""
    total = 0.0
    n = len(pairs)
    for rs in itertools.product((0, 1), repeat=n):
        verts = [pairs[k][rs[k]] for k in range(n)]
        sign = (-1) ** (n + sum(rs))   # r_k = rs_k + 1
        total += sign * height_moment(g, dual, verts, cap=cap)
    return total


def test_correlation_gradient_n1_is_zero():
    g = aztec_diamond(2)
    dual, kr, kinv = kasteleyn_setup(g)
    path = shortest_dual_path(dual, 0, 3)
    val, im = correlation_gradient(dual, kr.matrix, kinv, [path])
    assert val == 0.0 and im == 0.0


def test_correlation_gradient_matches_oracle_n2():
    g = aztec_diamond(2)
    dual, kr, kinv = kasteleyn_setup(g)
    cases = disjoint_path_pairs(dual, 6)
    assert len(cases) >= 3
    for (pair1, pair2, p1, p2) in cases:
        val, im = correlation_gradient(dual, kr.matrix, kinv, [p1, p2])
        ref = oracle_double_difference(g, dual, [pair1, pair2])
        assert abs(val - ref) < 1e-10
        assert im < 1e-10


def test_correlation_gradient_matches_oracle_n2_aztec3():
    g = aztec_diamond(3)
    dual, kr, kinv = kasteleyn_setup(g)
    (pair1, pair2, p1, p2) = disjoint_path_pairs(dual, 20)[-1]
    val, im = correlation_gradient(dual, kr.matrix, kinv, [p1, p2])
    ref = oracle_double_difference(g, dual, [pair1, pair2], cap=40)
    assert abs(val - ref) < 1e-10


def test_correlation_gradient_path_independence():
    g = aztec_diamond(3)
    dual, kr, kinv = kasteleyn_setup(g)
    (pair1, pair2, p1, p2) = disjoint_path_pairs(dual, 1)[0]
    vals = [correlation_gradient(dual, kr.matrix, kinv, [p1, p2])[0]]
    # reroute path 1 through each admissible first step
    adj = dual.dual_neighbors()
    a1, b1 = pair1
    for (v, e, s) in adj[a1]:
        if v == b1 or v in p2:
            continue
        tail = shortest_dual_path(dual, v, b1, forbidden=set(p2) | {a1})
        if tail is None:
            continue
        route = [a1] + tail
        if len(set(route)) != len(route) or set(route) & set(p2):
            continue
        vals.append(correlation_gradient(dual, kr.matrix, kinv, [route, p2])[0])
    assert len(vals) >= 2
    assert max(vals) - min(vals) < 1e-10


def test_correlation_gradient_intersecting_paths_rejected():
    g = aztec_diamond(2)
    dual, kr, kinv = kasteleyn_setup(g)
    p1 = shortest_dual_path(dual, 0, 2)
    p2 = shortest_dual_path(dual, 1, 3)
    assert set(p1) & set(p2)
    with pytest.raises(InputError):
        correlation_gradient(dual, kr.matrix, kinv, [p1, p2])


def test_correlation_gradient_complex_gauge_invariance():
    # multiplying K by unimodular vertex gauges leaves the value unchanged
    rng = np.random.default_rng(3)
    g = aztec_diamond(2)
    dual, kr, kinv = kasteleyn_setup(g)
    (pair1, pair2, p1, p2) = disjoint_path_pairs(dual, 1)[0]
    v0, _ = correlation_gradient(dual, kr.matrix, kinv, [p1, p2])
    gb = np.exp(1j * rng.uniform(0, 2 * np.pi, len(g.black)))
    gw = np.exp(1j * rng.uniform(0, 2 * np.pi, len(g.white)))
    Kg = np.diag(gb) @ kr.matrix.astype(complex) @ np.diag(gw)
    v1, _ = correlation_gradient(dual, Kg, invert(Kg), [p1, p2])
    assert abs(v0 - v1) < 1e-10
