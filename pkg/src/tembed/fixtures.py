"""Closed-form embeddings used as test fixtures and demo starting points."""

from __future__ import annotations

import numpy as np

from .embedding import TEmbedding
from .graph import aztec_diamond, build_augmented_dual


def aztec1_perfect_embedding():
    """Exact perfect t-embedding of the order-1 Aztec diamond.

    The boundary square has vertices sqrt(2) e^{i(pi/4 + k pi/2)}, whose sides
    are tangent to the unit circle, with the spokes from the center along the
    diagonals (hence bisectors); the single inner vertex sits at 0.
    """
    g = aztec_diamond(1)
    dual = build_augmented_dual(g)
    pos = np.zeros(dual.n_dual, dtype=complex)
    for k in range(4):
        pos[dual.boundary[k]] = np.sqrt(2) * np.exp(1j * (np.pi / 4 + k * np.pi / 2))
    return TEmbedding(dual, pos)


def _aztec_centers(m):
    centers = []
    for i in range(-m, m):
        for j in range(-m, m):
            x, y = i + 0.5, j + 0.5
            if abs(x) + abs(y) <= m:
                centers.append((x, y))
    centers.sort()
    return centers


def aztec_grid_embedding(m, t=0.75):
    """Diagonal-grid t-embedding of the order-m Aztec diamond (not perfect).

    Inner dual vertices sit at the lattice points |x|+|y| <= m-1; the boundary
    vertex of a boundary edge sits at fraction t of the ray from its inner
    face toward the outer lattice point, which keeps the spoke direction and
    hence the angle condition at every inner vertex while separating the two
    boundary vertices that share an outer lattice point.
    """
    g = aztec_diamond(m)
    dual = build_augmented_dual(g)
    centers = np.array(_aztec_centers(m))
    zc = centers[:, 0] + 1j * centers[:, 1]
    pos = np.zeros(dual.n_dual, dtype=complex)
    for i, f in enumerate(dual.face_of_inner):
        pos[i] = np.mean(zc[list(g.face_vertices[f])])
    for k in range(dual.two_n):
        e = int(dual.boundary_edge[k])
        tail, head = dual.edge_dual[e]
        q = pos[tail] if tail < dual.n_inner else pos[head]
        b, w = g.edges[e]
        p = zc[int(b)] + zc[int(w)] - q        # outer lattice point across e
        pos[dual.boundary[k]] = q + t * (p - q)
    return TEmbedding(dual, pos)
