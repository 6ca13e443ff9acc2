import numpy as np
import pytest

from tembed.embedding import aztec_xi
from tembed.errors import InputError, OutOfDomainError
from tembed.surface import (ConformalParam, continuum_alternating_sum,
                            deriv_coeffs, gff_npoint, green_disc,
                            holomorphy_residual, invert_param, invert_psi,
                            laplacian_residual, plateau_solve, psi_transform,
                            verify_spacelike, xi_from_arrays)


def flat_xi():
    return xi_from_arrays(np.linspace(0, 2 * np.pi, 9), np.zeros(9))


@pytest.fixture(scope="module")
def flat():
    return plateau_solve(flat_xi(), mesh=96)


@pytest.fixture(scope="module")
def aztec_param():
    return plateau_solve(aztec_xi(), mesh=192)


def test_flat_solution_is_identity(flat):
    rng = np.random.default_rng(0)
    z = 0.9 * np.sqrt(rng.random(50)) * np.exp(2j * np.pi * rng.random(50))
    assert np.max(np.abs(flat.z(z) - z)) < 1e-10
    assert np.max(np.abs(flat.theta(z))) < 1e-12
    assert flat.residual_l2 < 1e-10 and flat.residual_max < 1e-9


def test_flat_spacelike(flat):
    rep = verify_spacelike(flat)
    assert rep["spacelike"]
    assert rep["max_dtheta_over_dz"] < 1e-10


def test_energy_monotone(aztec_param):
    hist = aztec_param.energy_history
    # L-BFGS line search evaluates trial points; the accepted-iterate envelope
    # (running minimum at accepted steps) must be non-increasing
    accepted = np.minimum.accumulate(hist)
    assert accepted[-1] <= accepted[0]
    assert np.all(np.diff(accepted) <= 1e-12)


def test_boundary_on_hyperboloid(aztec_param):
    Z, TH = aztec_param.boundary_points()
    assert np.max(np.abs(np.abs(Z) ** 2 - TH ** 2 - 1.0)) < 1e-12


def test_aztec_conformality_residual(aztec_param):
    assert aztec_param.residual_l2 < 1e-3


def test_residual_shrinks_with_mesh():
    p1 = plateau_solve(aztec_xi(), mesh=96)
    p2 = plateau_solve(aztec_xi(), mesh=192)
    assert p2.residual_l2 < 0.6 * p1.residual_l2


def test_harmonicity_order(aztec_param):
    r1 = laplacian_residual(aztec_param, h=1e-3)
    # spectral representation: Laplacian vanishes to rounding, h^2 scheme noise
    assert r1 < 1e-4


def test_aztec_spacelike(aztec_param):
    rep = verify_spacelike(aztec_param, r_max=0.95)
    assert rep["spacelike"]
    assert rep["max_dtheta_over_dz"] < 1.0


def test_aztec_saddle_shape(aztec_param):
    # theta rises toward two opposite corners and falls toward the others
    corners = aztec_param.z(np.array([0.9, 0.9j, -0.9, -0.9j]))
    ths = aztec_param.theta(np.array([0.9, 0.9j, -0.9, -0.9j])).real
    assert (ths.max() > 0.2) and (ths.min() < -0.2)


def test_rotation_equivariance():
    phi0 = np.pi / 5
    base = plateau_solve(aztec_xi(), mesh=96)
    f = aztec_xi()
    rot = xi_from_arrays(f.phi[:-1] + phi0, f.xi[:-1])
    shifted = plateau_solve(rot, mesh=96, phi0=phi0)
    rng = np.random.default_rng(1)
    z = 0.8 * np.sqrt(rng.random(40)) * np.exp(2j * np.pi * rng.random(40))
    assert np.max(np.abs(shifted.z(z) - np.exp(1j * phi0) * base.z(z))) < 1e-9
    assert np.max(np.abs(shifted.theta(z) - base.theta(z))) < 1e-9


def test_invert_param_round_trip(aztec_param):
    rng = np.random.default_rng(7)
    zs = aztec_param.z(0.8 * np.sqrt(rng.random(100))
                       * np.exp(2j * np.pi * rng.random(100)))
    for z0 in zs:
        zeta = invert_param(aztec_param, z0)
        assert abs(aztec_param.z(zeta) - z0) < 1e-8


def test_invert_param_flat(flat):
    assert abs(invert_param(flat, 0.3 + 0.4j) - (0.3 + 0.4j)) < 1e-8


def test_invert_param_out_of_domain(aztec_param):
    with pytest.raises(OutOfDomainError):
        invert_param(aztec_param, 5.0 + 5.0j)


def test_deriv_coeffs_flat(flat):
    c = deriv_coeffs(flat, 0.3 + 0.2j)
    assert abs(c.bpp - 1.0) < 1e-9
    assert abs(c.bmp) < 1e-9


def test_deriv_coeffs_products(aztec_param):
    rng = np.random.default_rng(3)
    pts = 0.6 * np.sqrt(rng.random(20)) * np.exp(2j * np.pi * rng.random(20))
    for zeta in pts:
        c = deriv_coeffs(aztec_param, zeta)
        dzp = aztec_param.dz(zeta)[0]
        dtp = aztec_param.dtheta(zeta)[0]
        assert abs(c.bpp * c.bpp - dzp) < 1e-8 * max(abs(dzp), 1)
        assert abs(c.bpp * c.bmp - dtp) < 1e-8 * max(abs(dtp), 1)
        assert abs(c.bpp) > abs(c.bmp)          # space-like ordering


def test_deriv_coeffs_branch_continuity(aztec_param):
    # along a ray the continued root varies continuously
    ts = np.linspace(0.05, 0.9, 30)
    roots = np.array([deriv_coeffs(aztec_param, t * np.exp(0.4j)).bpp for t in ts])
    assert np.max(np.abs(np.diff(roots))) < 0.2


def test_psi_transform_round_trip(aztec_param):
    rng = np.random.default_rng(5)
    pts = 0.6 * np.sqrt(rng.random(15)) * np.exp(2j * np.pi * rng.random(15))
    coeffs = [deriv_coeffs(aztec_param, z) for z in pts]
    f = rng.normal(size=15) + 1j * rng.normal(size=15)
    psi = psi_transform(f, "b", coeffs)
    back = invert_psi(psi, coeffs)
    assert np.max(np.abs(back - f)) < 1e-9
    assert np.max(np.abs(psi_transform(np.zeros(15), "b", coeffs))) == 0.0


def test_psi_holomorphy_of_constructed_field(aztec_param):
    # f built from a holomorphic psi by inversion gives back a holomorphic psi
    def psi_target(zeta):
        return zeta ** 2 - 0.3 * zeta + 0.1

    def f_field(zeta):
        c = deriv_coeffs(aztec_param, zeta)
        return invert_psi(psi_target(zeta), c)[0]

    def psi_again(zeta):
        c = deriv_coeffs(aztec_param, zeta)
        return psi_transform(f_field(zeta), "b", c)[0]

    rng = np.random.default_rng(11)
    pts = 0.5 * np.sqrt(rng.random(8)) * np.exp(2j * np.pi * rng.random(8))
    res = holomorphy_residual(psi_again, pts, h=1e-4)
    assert res < 1e-6


def test_green_disc_values():
    assert abs(green_disc(0.0, 0.5) - np.log(2) / (2 * np.pi)) < 1e-12
    assert abs(green_disc(0.2 + 0.1j, -0.4j) - green_disc(-0.4j, 0.2 + 0.1j)) < 1e-15
    assert green_disc(0.1, 0.2) > 0
    with pytest.raises(InputError):
        green_disc(0.3, 0.3)


def test_gff_npoint():
    assert gff_npoint([0.1, 0.5j, -0.3]) == 0.0
    z = [0.1, 0.5j, -0.3, 0.2 - 0.4j]
    g = green_disc
    expect = (g(z[0], z[1]) * g(z[2], z[3]) + g(z[0], z[2]) * g(z[1], z[3])
              + g(z[0], z[3]) * g(z[1], z[2]))
    assert abs(gff_npoint(z) - expect) < 1e-14


def test_continuum_alternating_sum_n2():
    pairs = [(0.1 + 0.2j, -0.3 + 0.1j), (0.4 - 0.2j, -0.1 - 0.4j)]
    val = continuum_alternating_sum(pairs)
    g = green_disc
    (a1, a2), (b1, b2) = pairs
    expect = (g(a1, b1) - g(a1, b2) - g(a2, b1) + g(a2, b2)) / np.pi
    assert abs(val - expect) < 1e-13


def test_xi_too_steep_rejected():
    f = xi_from_arrays(np.linspace(0, 2 * np.pi, 5),
                       np.array([0, 1.57, 0, -1.57, 0]))
    with pytest.raises(InputError):
        plateau_solve(f, mesh=96)
