"""Kasteleyn matrices: sign assignment, determinants, inverses, exact dimer statistics.

The real Kasteleyn matrix carries signs +-chi_e with the face condition
(product of signs around a dual face of degree d equals (-1)^{d/2-1}); the
complex one has entries K(b, w) = dT(bw*) read off a t-embedding.  Both give
the partition function as |det K| and exact edge statistics through K^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.linalg

from .errors import (DegenerateEmbeddingError, InputError,
                     NoPerfectMatchingError, StructureError)
from .graph import BLACK, CYCLE

__all__ = [
    "RealKasteleyn", "InverseKasteleyn", "assign_kasteleyn_signs",
    "check_kasteleyn_signs", "partition_function", "log_partition_function",
    "invert", "joint_edge_probability", "correlation_gradient", "matrix_to_csv",
]


@dataclass(frozen=True)
class RealKasteleyn:
    """Signed weighted bipartite adjacency matrix, rows = B, columns = W."""

    matrix: np.ndarray
    signs: np.ndarray          # (E,) +-1 per edge
    b_of_row: np.ndarray       # row index -> black vertex id
    w_of_col: np.ndarray

    def entry(self, g, e):
        b, w = g.edges[e]
        return self.matrix[_row(g, b), _col(g, w)]


@dataclass(frozen=True)
class InverseKasteleyn:
    """Dense inverse, rows = W, columns = B; residual is max |K K^-1 - I|."""

    matrix: np.ndarray
    residual: float


def _row(g, b):
    return int(np.searchsorted(g.black, b))


def _col(g, w):
    return int(np.searchsorted(g.white, w))


def assign_kasteleyn_signs(g):
    """Kasteleyn signs via a spanning tree of the face-adjacency graph.

    Signs on edges that are not dual-tree parent edges are fixed to +1; each
    inner face then determines its parent edge sign from the constraint that
    the sign product around a face of degree d is (-1)^{d/2-1}.  The outer
    face condition holds automatically and is verified.
    """
    F = len(g.faces)
    adj = [[] for _ in range(F)]
    side_faces = [[] for _ in range(g.n_edges)]
    for f, cyc in enumerate(g.faces):
        for e in cyc:
            side_faces[e].append(f)
    for e, (f1, f2) in enumerate(side_faces):
        adj[f1].append((f2, e))
        adj[f2].append((f1, e))
    parent_edge = {}
    order = [g.outer_face]
    seen = {g.outer_face}
    qi = 0
    while qi < len(order):
        f = order[qi]
        qi += 1
        for (f2, e) in adj[f]:
            if f2 not in seen:
                seen.add(f2)
                parent_edge[f2] = e
                order.append(f2)
    if len(seen) != F:
        raise StructureError("face adjacency is not connected")
    x = np.zeros(g.n_edges, dtype=np.int64)   # sign exponent per edge
    determined = np.ones(g.n_edges, dtype=bool)
    for f, e in parent_edge.items():
        determined[e] = False
    for f in reversed(order):
        if f == g.outer_face:
            continue
        e_par = parent_edge[f]
        cyc = g.faces[f]
        c = (len(cyc) // 2 - 1) % 2
        acc = sum(int(x[e]) for e in cyc if e != e_par) % 2
        x[e_par] = (c - acc) % 2
        determined[e_par] = True
    assert determined.all()
    signs = np.where(x % 2 == 0, 1, -1)
    K = np.zeros((len(g.black), len(g.white)))
    for e, (b, w) in enumerate(g.edges):
        K[_row(g, b), _col(g, w)] = signs[e] * g.weights[e]
    kr = RealKasteleyn(K, signs, g.black.copy(), g.white.copy())
    bad = check_kasteleyn_signs(g, signs)
    if bad:
        raise StructureError(f"sign constraints unsatisfied on faces {bad}")
    return kr


def check_kasteleyn_signs(g, signs):
    """Faces (including the outer one) violating the sign-product condition."""
    bad = []
    for f, cyc in enumerate(g.faces):
        prod = int(np.prod(signs[list(cyc)]))
        if prod != (-1) ** (len(cyc) // 2 - 1):
            bad.append(f)
    return bad


def complex_kasteleyn(te, tol=1e-14):
    """Kasteleyn matrix of a t-embedding: K(b, w) = dT(bw*).

    The angle condition makes these entries a valid (complex-phased)
    Kasteleyn matrix for the weights chi_e = |dT(bw*)|.
    """
    g = te.graph
    dT = te.dT()
    scale = max(np.max(np.abs(dT)), 1e-300)
    if np.any(np.abs(dT) <= tol * scale):
        raise DegenerateEmbeddingError("zero-length edge in the embedding")
    K = np.zeros((len(g.black), len(g.white)), dtype=complex)
    for e, (b, w) in enumerate(g.edges):
        K[_row(g, int(b)), _col(g, int(w))] = dT[e]
    return K


def gauge_factor(g, te, tol=1e-9):
    """prod_v g(v) for the vertex gauge with |dT(bw*)| = g(b) chi_e g(w).

    The product over all vertices is gauge-choice independent; the residual
    of the log-linear fit is returned alongside.
    """
    dT = te.dT()
    target = np.log(np.abs(dT) / g.weights)
    V = g.n_vertices
    A = np.zeros((g.n_edges, V))
    for e, (b, w) in enumerate(g.edges):
        A[e, int(b)] = 1.0
        A[e, int(w)] = 1.0
    sol, *_ = np.linalg.lstsq(A, target, rcond=None)
    resid = float(np.max(np.abs(A @ sol - target)))
    return float(np.exp(np.sum(sol))), resid


def partition_function(K):
    """|det K| through pivoted LU with log-scale accumulation."""
    lg = log_partition_function(K)
    return 0.0 if lg == -np.inf else float(np.exp(lg))


def log_partition_function(K):
    K = np.asarray(K)
    if K.shape[0] != K.shape[1]:
        raise InputError("Kasteleyn matrix must be square")
    if K.shape[0] == 0:
        return 0.0
    lu, piv = scipy.linalg.lu_factor(K, check_finite=False)
    diag = np.abs(np.diag(lu))
    if np.any(diag == 0.0):
        return -np.inf
    return float(np.sum(np.log(diag)))


def invert(K, tol=1e-12):
    """Full inverse K^{-1} (rows = W, cols = B) with the KK^{-1}-I residual."""
    K = np.asarray(K)
    n = K.shape[0]
    if n != K.shape[1]:
        raise InputError("Kasteleyn matrix must be square")
    scale = np.max(np.abs(K)) if n else 1.0
    lu, piv = scipy.linalg.lu_factor(K, check_finite=False)
    diag = np.abs(np.diag(lu))
    if np.any(diag <= tol * scale):
        raise NoPerfectMatchingError("Kasteleyn matrix is numerically singular")
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(n, dtype=K.dtype))
    residual = float(np.max(np.abs(K @ inv - np.eye(n))))
    return InverseKasteleyn(inv, residual)


def joint_edge_probability(g, K, Kinv, edge_ids, imag_warn=1e-8):
    """P[edges simultaneously in a random dimer cover].

    Computed as det[K^{-1}(w_j, b_k)] * prod_k K(b_k, w_k) over the listed
    edges, which must be pairwise vertex-disjoint.  Returns (probability,
    imaginary residue).
    """
    edge_ids = list(edge_ids)
    if len(edge_ids) != len(set(edge_ids)):
        raise InputError("edges must be distinct")
    verts = [int(v) for e in edge_ids for v in g.edges[e]]
    if len(verts) != len(set(verts)):
        raise InputError("edges must be vertex-disjoint")
    if not edge_ids:
        return 1.0, 0.0
    rows = [_col(g, int(g.edges[e][1])) for e in edge_ids]   # w_j indexes K^{-1} rows
    cols = [_row(g, int(g.edges[e][0])) for e in edge_ids]
    minor = np.asarray(Kinv.matrix)[np.ix_(rows, cols)]
    K = np.asarray(K)
    pref = np.prod([K[cols[k], rows[k]] for k in range(len(edge_ids))])
    val = complex(np.linalg.det(minor) * pref)
    return float(val.real), abs(val.imag)


def path_steps(dual, path):
    """Resolve a dual-vertex path into primal edges with traversal increments.

    Returns a list of (edge_id, orientation) where orientation is +1 when the
    traversal agrees with the canonical black-on-right dual edge.  Boundary
    cycle edges are not allowed on correlation paths.
    """
    lookup = {}
    for e, (t, h) in enumerate(dual.edge_dual):
        lookup[(int(t), int(h))] = (e, 1)
        lookup[(int(h), int(t))] = (e, -1)
    steps = []
    for a, b in zip(path[:-1], path[1:]):
        try:
            steps.append(lookup[(int(a), int(b))])
        except KeyError:
            raise InputError(f"({a}, {b}) is not a dual edge of a primal edge") from None
    return steps


def correlation_gradient(dual, K, Kinv, paths):
    """Alternating sum of height correlations over path endpoint swaps.

    For vertex-disjoint dual paths gamma_k from v_{k,1} to v_{k,2} this is the
    nested path sum of det[1_{j!=k} K^{-1}(w_j, b_k)] * prod_k (-s_k K(b_k, w_k)),
    with s_k = +1 when the traversal of (b_k w_k)* agrees with the canonical
    black-on-right orientation; it equals E[prod_k (hbar(v_{k,2}) - hbar(v_{k,1}))]
    for any Kasteleyn matrix K of the graph.  Returns (value, imag residue).
    """
    g = dual.graph
    n = len(paths)
    pts = [set(int(v) for v in p) for p in paths]
    for i in range(n):
        for j in range(i + 1, n):
            if pts[i] & pts[j]:
                raise InputError(f"paths {i} and {j} intersect")
    if n == 0:
        return 0.0, 0.0
    K = np.asarray(K)
    steps = [path_steps(dual, p) for p in paths]
    factors, rows, cols = [], [], []
    for k in range(n):
        fk, rk, ck = [], [], []
        for (e, s) in steps[k]:
            b, w = g.edges[e]
            rk.append(_col(g, int(w)))
            ck.append(_row(g, int(b)))
            fk.append(-s * K[ck[-1], rk[-1]])
        factors.append(np.asarray(fk))
        rows.append(rk)
        cols.append(ck)
    Ki = np.asarray(Kinv.matrix)
    total = 0.0 + 0.0j
    if n == 1:
        return 0.0, 0.0       # hollow 1x1 determinant vanishes: H_1 == 0
    for choice in product(*[range(len(s)) for s in steps]):
        M = np.empty((n, n), dtype=complex)
        for j in range(n):
            for k in range(n):
                M[j, k] = 0.0 if j == k else Ki[rows[j][choice[j]], cols[k][choice[k]]]
        pref = np.prod([factors[k][choice[k]] for k in range(n)])
        total += np.linalg.det(M) * pref
    return float(total.real), abs(total.imag)


def matrix_to_csv(M, path):
    """Binary-free dump: one `row,col,re,im` line per nonzero entry."""
    M = np.asarray(M)
    with open(path, "w") as f:
        f.write("row,col,re,im\n")
        for i in range(M.shape[0]):
            for j in range(M.shape[1]):
                v = complex(M[i, j])
                if v != 0:
                    f.write(f"{i},{j},{v.real:.17g},{v.imag:.17g}\n")
