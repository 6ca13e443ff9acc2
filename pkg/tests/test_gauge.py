import numpy as np
import pytest

from tembed.aztec import cluster_profile, solve_aztec
from tembed.embedding import (align_origami, boundary_data, check_perfect,
                              check_proper, compute_origami, compute_origami_sqrt,
                              hyperboloid_residual)
from tembed.errors import NoGaugeError
from tembed.fixtures import aztec1_perfect_embedding
from tembed.gauge import (CoulombGauge, SolverConfig, boost_gauge,
                          boundary_vertex_sets, coulomb_nullspace, extract_gauge,
                          gauge_from_vertex_arrays, maximum_principle_probe,
                          realize, solve_perfect_gauge, verify_theorem41,
                          winding_number)
from tembed.graph import BLACK, WHITE, aztec_diamond, build_augmented_dual, prism_graph
from tembed.kasteleyn import assign_kasteleyn_signs


@pytest.fixture(scope="module")
def cube_solution():
    g = prism_graph(2, spoke_weights=[2.0, 1.0, 1.5, 0.7])
    dual = build_augmented_dual(g)
    kr = assign_kasteleyn_signs(g)
    sol = solve_perfect_gauge(g, kr, dual, SolverConfig(seed=1, restarts=10))
    return g, dual, kr, sol


@pytest.fixture(scope="module")
def aztec2_solution():
    return solve_aztec(2, seed=1)


def test_nullspace_dimensions_four_cycle():
    g = aztec_diamond(1)
    dual = build_augmented_dual(g)
    kr = assign_kasteleyn_signs(g)
    Ub, Uw = coulomb_nullspace(g, kr.matrix, dual)
    assert Ub.shape[1] >= 1 and Uw.shape[1] >= 1


def test_nullspace_dimensions_equal_boundary_counts():
    g = aztec_diamond(2)
    dual = build_augmented_dual(g)
    kr = assign_kasteleyn_signs(g)
    Ub, Uw = coulomb_nullspace(g, kr.matrix, dual)
    bb, bw = boundary_vertex_sets(dual)
    assert Ub.shape[1] == len(bw)
    assert Uw.shape[1] == len(bb)


def test_nullspace_dimensions_gauge_invariant():
    rng = np.random.default_rng(0)
    g = aztec_diamond(2)
    dual = build_augmented_dual(g)
    kr = assign_kasteleyn_signs(g)
    gb = np.exp(rng.normal(size=len(g.black)))
    gw = np.exp(rng.normal(size=len(g.white)))
    Kg = np.diag(gb) @ kr.matrix @ np.diag(gw)
    Ub, Uw = coulomb_nullspace(g, kr.matrix, dual)
    Ub2, Uw2 = coulomb_nullspace(g, Kg, dual)
    assert Ub.shape == Ub2.shape and Uw.shape == Uw2.shape


def test_realize_round_trip_from_perfect_embedding():
    te = aztec1_perfect_embedding()
    K, gauge = extract_gauge(te)
    real = realize(gauge, K, te.dual)
    # realization reproduces T up to a global translation
    shift = te.pos[0] - real.pos[0]
    assert np.max(np.abs(real.pos + shift - te.pos)) < 1e-12


def test_lambda_scaling_leaves_dT_unchanged():
    te = aztec1_perfect_embedding()
    K, gauge = extract_gauge(te)
    lam = 1.7 - 0.4j
    g2 = CoulombGauge(lam * gauge.f_black, gauge.f_white / lam, 0.0)
    r1 = realize(gauge, K, te.dual)
    r2 = realize(g2, K, te.dual)
    assert np.max(np.abs(r1.pos - r2.pos)) < 1e-12


def test_boost_transforms_realization():
    te = aztec1_perfect_embedding()
    K, gauge = extract_gauge(te)
    r1 = realize(gauge, K, te.dual)
    s = 0.37
    r2 = realize(boost_gauge(gauge, s), K, te.dual)
    x, y, th = r1.pos.real, r1.pos.imag, r1.omap.real
    x2 = x * np.cosh(s) - th * np.sinh(s)
    th2 = th * np.cosh(s) - x * np.sinh(s)
    assert np.max(np.abs(r2.pos.real - x2)) < 1e-10
    assert np.max(np.abs(r2.pos.imag - y)) < 1e-10
    assert np.max(np.abs(r2.omap.real - th2)) < 1e-10
    assert np.max(np.abs(r2.omap.imag - r1.omap.imag)) < 1e-10


def test_hyperboloid_residual_trivial_cases():
    te = aztec1_perfect_embedding()
    # boundary on unit circle with O = 0
    pos = te.pos.copy()
    pos[te.dual.boundary] /= np.abs(pos[te.dual.boundary])
    te2 = type(te)(te.dual, pos)
    res = hyperboloid_residual(te2, np.zeros(te.dual.n_dual, complex))
    assert np.max(np.abs(res)) < 1e-12
    # T = e^{i phi}/cos xi, O = tan xi
    rng = np.random.default_rng(2)
    xi = rng.uniform(-1.2, 1.2, te.dual.two_n)
    phi = np.sort(rng.uniform(0, 2 * np.pi, te.dual.two_n))
    pos[te.dual.boundary] = np.exp(1j * phi) / np.cos(xi)
    om = np.zeros(te.dual.n_dual, complex)
    om[te.dual.boundary] = np.tan(xi)
    res = hyperboloid_residual(type(te)(te.dual, pos), om)
    assert np.max(np.abs(res)) < 1e-9


def test_solver_cube_prism(cube_solution):
    g, dual, kr, sol = cube_solution
    assert sol.report.ok and sol.report.strict_ok
    assert sol.residual < 1e-8
    assert abs(sol.boundary.angle_sum - np.pi) < 1e-8
    assert sol.gauge.interior_residue < 1e-9


def test_solver_invariance_suite(cube_solution):
    # the constraint set is invariant under lambda scaling, plane rotation,
    # and the Lorentz boost applied to a solved realization
    g, dual, kr, sol = cube_solution
    T = sol.realization.pos
    O = sol.omap_aligned
    s = 0.25
    al = np.exp(0.4j)
    variants = [
        (T, O),                                     # lambda scaling: unchanged
        (al ** 2 * T, O),                           # rotation
        (T.real * np.cosh(s) - O.real * np.sinh(s) + 1j * T.imag,
         O.real * np.cosh(s) - T.real * np.sinh(s) + 1j * O.imag),  # boost
    ]
    te_type = type(sol.realization.embedding)
    for (T2, O2) in variants:
        res = np.max(np.abs(hyperboloid_residual(te_type(dual, T2), O2)))
        assert res < 1e-8


def test_lambda_scaled_gauge_re_solves(cube_solution):
    # re-realizing a lambda-scaled gauge with the matching constants lands on
    # the same embedding
    g, dual, kr, sol = cube_solution
    te = sol.realization.embedding
    K2, gauge2 = extract_gauge(te)
    lam = 1.3j
    g2 = CoulombGauge(lam * gauge2.f_black, gauge2.f_white / lam, 0.0)
    r2 = realize(g2, K2, dual, t_base=te.pos[0])
    assert np.max(np.abs(r2.pos - te.pos)) < 1e-9


def test_verify_negated_origami_still_accepted(cube_solution):
    g, dual, kr, sol = cube_solution
    real = sol.realization
    flipped = type(real)(real.embedding, -real.omap, real.closure_residue)
    rep = verify_theorem41(flipped)
    assert rep.ok


def test_reflected_embedding_fails_winding(cube_solution):
    g, dual, kr, sol = cube_solution
    real = sol.realization
    reflected = type(real)(type(real.embedding)(dual, np.conj(real.embedding.pos)),
                           np.conj(real.omap), real.closure_residue)
    rep = verify_theorem41(reflected)
    assert rep.winding == -1
    assert not rep.ok


def test_theorem_conclusion_asserted(cube_solution):
    # whenever the conditions hold, proper and perfect checks must pass too
    g, dual, kr, sol = cube_solution
    rep = sol.report
    assert rep.conditions_ok
    assert rep.proper_ok and rep.perfect_ok
    te = sol.realization.embedding
    assert check_proper(te).ok
    assert check_perfect(te, tol=1e-8).ok


def test_round_trip_solved_gauge(cube_solution):
    g, dual, kr, sol = cube_solution
    te = sol.realization.embedding
    K2, gauge2 = extract_gauge(te)
    real2 = realize(gauge2, K2, dual)
    shift = te.pos[0] - real2.pos[0]
    assert np.max(np.abs(real2.pos + shift - te.pos)) < 1e-8


def test_maximum_principle_probe(cube_solution):
    g, dual, kr, sol = cube_solution
    fb = np.real(np.exp(-0.3j) * sol.gauge.f_black)
    fw = np.real(np.exp(0.7j) * sol.gauge.f_white)
    rep = maximum_principle_probe(g, dual, kr.matrix, fb, fw, seed=3)
    assert rep["max_increment_product"] <= 1e-12
    assert rep["interior_extrema"] == 0


def test_maximum_principle_negative_control(cube_solution):
    g, dual, kr, sol = cube_solution
    K_bad = kr.matrix.copy()
    b, w = g.edges[len(g.edges) // 2]
    bidx, widx = g.black_index(), g.white_index()
    K_bad[bidx[b], widx[w]] *= -1.0
    fb = np.real(sol.gauge.f_black)
    fw = np.real(sol.gauge.f_white)
    rep = maximum_principle_probe(g, dual, K_bad, fb, fw, seed=3)
    assert rep["max_increment_product"] > 1e-12


def test_solve_aztec_small_sizes(aztec2_solution):
    g, dual, kr, sol = aztec2_solution
    assert sol.report.ok
    assert sol.report.n_collapsed == 4          # collapsed corner teeth
    assert abs(sol.boundary.angle_sum - np.pi) < 1e-8
    assert sol.residual < 1e-8


def test_aztec3_solves_and_verifies():
    g, dual, kr, sol = solve_aztec(3, seed=0)
    assert sol.report.ok
    assert sol.report.n_collapsed == 8
    assert sol.residual < 1e-8
    assert abs(sol.boundary.angle_sum - np.pi) < 1e-8


def test_aztec_boundary_xi_extremes(aztec2_solution):
    # corner clusters sit at xi = +-pi/4 (Aztec triangle-wave profile)
    g, dual, kr, sol = aztec2_solution
    assert abs(np.max(sol.boundary.xi) - np.pi / 4) < 0.05
    assert abs(np.min(sol.boundary.xi) + np.pi / 4) < 0.05


def test_cluster_profile_consistency():
    phi, xi, pins = cluster_profile(3)
    assert len(phi) == 20 and len(pins) == 8
    assert abs((phi[-1] - phi[0]) + (2 * np.pi - phi[-1]) - 2 * np.pi) < 1e-12
    assert np.max(np.abs(xi)) <= 0.3 * np.pi


def test_solved_eta_matches_boundary_normalization(cube_solution):
    g, dual, kr, sol = cube_solution
    te = sol.realization.embedding
    bd = sol.boundary
    for k in range(dual.two_n):
        x = int(dual.cycle_vertex[k])
        if g.colors[x] == WHITE:
            target = 1j * np.exp(1j * (bd.phi[k] - bd.xi[k]))
        else:
            target = -1j * np.exp(1j * (bd.phi[k] + bd.xi[k]))
        assert abs(np.conj(sol.eta[x]) ** 2 - target) < 1e-7
