"""Perfect-gauge pipeline for the homogeneous Aztec diamond family.

The Aztec boundary data degenerates in a structured way: the profile xi_T
follows the triangle wave with corners +-pi/4, which forces the +-1-slope
vertex chain to cluster at the four corners of the limit square with 4(m-1)
collapsed boundary teeth.  Perfect Coulomb gauges of these graphs are also
far from unique (verified solutions form positive-dimensional families), and
the basin of the verifying components shrinks quickly with m; the solver
exploits the half-turn symmetry of the graph to cut the search space in half
and hunts with seeded restarts.  Orders m <= 3 solve in seconds; larger
orders are attempted on a best-effort budget and failures are reported, not
masked.
"""

from __future__ import annotations

import time

import numpy as np

from .errors import SolveFailedError
from .gauge import (CoulombGauge, SolverConfig, _BoundaryTensors, _fit_targets,
                    _lm, _pack, _profile_targets, _residual_and_jac, _unpack,
                    _finish, half_turn_map, solve_perfect_gauge,
                    symmetry_reduced_bases)
from .graph import aztec_diamond, build_augmented_dual
from .kasteleyn import assign_kasteleyn_signs


def aztec_centers(m):
    centers = []
    for i in range(-m, m):
        for j in range(-m, m):
            x, y = i + 0.5, j + 0.5
            if abs(x) + abs(y) <= m:
                centers.append((x, y))
    centers.sort()
    return centers


def cluster_profile(m, delta=0.015 * np.pi):
    """Corner-cluster boundary ansatz (phi, xi, collapsed cycle edges).

    Walking the boundary: [b0, w delta]*(m-1), long black descent,
    [w delta, B0]*(m-1), long white ascent, repeated twice; rotated so the
    first step is white, matching the labeling convention.
    """
    steps, colors = [], []
    long_len = np.pi / 2 - (m - 1) * delta
    for _ in range(2):
        for _ in range(m - 1):
            steps += [0.0, delta]
            colors += [1, 0]
        steps += [long_len]
        colors += [1]
        for _ in range(m - 1):
            steps += [delta, 0.0]
            colors += [0, 1]
        steps += [long_len]
        colors += [0]
    steps = np.array(steps[1:] + steps[:1])
    colors = np.array(colors[1:] + colors[:1])
    phi = np.concatenate([[0.0], np.cumsum(steps)[:-1]])
    xi = np.zeros(len(steps))
    for k in range(1, len(steps)):
        xi[k] = xi[k - 1] + (steps[k - 1] if colors[k - 1] == 0 else -steps[k - 1])
    xi -= (xi.max() + xi.min()) / 2
    pins = tuple(int(k) for k in np.flatnonzero(steps == 0.0))
    return phi, xi, pins


def _sector_hunt(g, dual, kr, bases, seed, budget_s, max_trials, config):
    """Seeded random restarts of the plain LM inside one reduced sector."""
    K = kr.matrix
    Ub, Uw = bases
    nb, nw = Ub.shape[1], Uw.shape[1]
    two_n = dual.two_n
    tensors = _BoundaryTensors(g, K, dual, Ub, Uw)

    def fun(x):
        return _residual_and_jac(x, tensors, nb, nw)

    rng = np.random.default_rng(seed)
    t0 = time.time()
    phi_round = 2 * np.pi * (np.arange(two_n) + 0.5) / two_n
    ts, os_ = _profile_targets(phi_round, np.zeros(two_n))
    for trial in range(max_trials):
        if time.time() - t0 > budget_s:
            break
        if trial % 4 == 0:
            cw0 = (rng.normal(size=nw) + 1j * rng.normal(size=nw)) / np.sqrt(2 * nw)
            x = _fit_targets(tensors, nb, nw, ts, os_, cw0)
        else:
            cb0 = rng.normal(size=nb) + 1j * rng.normal(size=nb)
            cw0 = rng.normal(size=nw) + 1j * rng.normal(size=nw)
            T0 = np.einsum("i,kij,j->k", cb0, tensors.A[:two_n], cw0)
            s = max(np.max(np.abs(T0 - T0.mean())), 1e-12) ** -0.5
            cb0, cw0 = cb0 * s, cw0 * s
            T0 = np.einsum("i,kij,j->k", cb0, tensors.A[:two_n], cw0)
            O0 = np.einsum("i,kij,j->k", cb0, tensors.At[:two_n], np.conj(cw0))
            x = _pack(cb0, cw0, -T0.mean(), -O0.mean())
        x, r, _ = _lm(x, fun, 350, config.tol, config.lambda0,
                      config.lambda_up, config.lambda_down)
        resid = float(np.max(np.abs(r)))
        sol = _finish(g, K, dual, tensors, x, nb, nw, resid, trial + 1, config)
        if sol is not None:
            return sol
    return None


def solve_aztec(m, seed=0, restarts=10, tol=1e-10, budget_s=None):
    """Perfect Coulomb gauge of aztec_diamond(m) with full verification.

    m <= 2 use the generic solver; larger orders hunt in the two half-turn
    equivariant sectors and fall back to the generic solver.  budget_s caps
    the wall-clock spent hunting (default grows with m).  Raises
    SolveFailed when nothing verifies within budget.
    """
    g = aztec_diamond(m)
    dual = build_augmented_dual(g)
    kr = assign_kasteleyn_signs(g)
    if budget_s is None:
        budget_s = 10.0 + 12.0 * m
    if m <= 2:
        sol = solve_perfect_gauge(g, kr, dual,
                                  SolverConfig(seed=seed, restarts=restarts, tol=tol))
        return g, dual, kr, sol
    config = SolverConfig(seed=seed, tol=tol)
    sigma = half_turn_map(aztec_centers(m))
    errors = []
    try:
        sectors = symmetry_reduced_bases(g, kr, dual, sigma)
    except Exception as ex:
        sectors = []
        errors.append(str(ex))
    n_sec = max(len(sectors), 1)
    for si, bases in enumerate(sectors):
        sol = _sector_hunt(g, dual, kr, bases, seed + si, budget_s / (n_sec + 1),
                           max_trials=m * 400, config=config)
        if sol is not None:
            return g, dual, kr, sol
        errors.append(f"sector {si}: exhausted")
    try:
        prof = cluster_profile(m)
        sol = solve_perfect_gauge(
            g, kr, dual, SolverConfig(seed=seed, restarts=restarts, tol=tol,
                                      init_profile=(prof[0], prof[1])))
        return g, dual, kr, sol
    except SolveFailedError as ex:
        errors.append(f"full: {ex}")
    raise SolveFailedError(f"aztec m={m} solve failed: " + "; ".join(errors))
