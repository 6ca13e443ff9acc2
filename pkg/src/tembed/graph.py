"""Weighted bipartite planar graphs, their augmented duals, and brute-force dimer oracles.

A graph is stored sphere-like: every edge joins a black and a white vertex,
faces are given as consistently oriented cyclic edge lists (inner faces
counterclockwise in the plane, the outer face clockwise), and one face is
marked as the outer face.  The augmented dual replaces the outer face by a
cycle of boundary vertices, one per boundary edge, labeled counterclockwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import EnumerationCapError, InputError, StructureError

BLACK = 0
WHITE = 1


@dataclass(frozen=True)
class BipartiteDimerGraph:
    """Finite weighted bipartite graph with a planar face structure.

    colors[v] is BLACK or WHITE; edges[e] = (black vertex, white vertex);
    faces[f] is the cyclic tuple of edge ids around face f; outer_face is
    the id of the marked outer face.
    """

    colors: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    faces: tuple[tuple[int, ...], ...]
    outer_face: int
    face_vertices: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "colors", np.asarray(self.colors, dtype=np.int8))
        object.__setattr__(self, "edges", np.asarray(self.edges, dtype=np.int64))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "faces", tuple(tuple(int(e) for e in cyc) for cyc in self.faces))
        object.__setattr__(self, "face_vertices", tuple(
            _face_vertex_cycle(self.edges, cyc) for cyc in self.faces))
        _validate(self)

    @property
    def n_vertices(self):
        return len(self.colors)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def black(self):
        return np.flatnonzero(self.colors == BLACK)

    @property
    def white(self):
        return np.flatnonzero(self.colors == WHITE)

    def black_index(self):
        """Map vertex id -> row index in B-ordered matrices (-1 for white)."""
        idx = np.full(self.n_vertices, -1, dtype=np.int64)
        idx[self.black] = np.arange(len(self.black))
        return idx

    def white_index(self):
        idx = np.full(self.n_vertices, -1, dtype=np.int64)
        idx[self.white] = np.arange(len(self.white))
        return idx

    def degree(self, v):
        return int(np.sum(self.edges == v))

    def vertex_edges(self):
        inc = [[] for _ in range(self.n_vertices)]
        for e, (b, w) in enumerate(self.edges):
            inc[b].append(e)
            inc[w].append(e)
        return inc

    def with_weights(self, weights):
        return BipartiteDimerGraph(self.colors, self.edges, np.asarray(weights, float),
                                   self.faces, self.outer_face)


def _face_vertex_cycle(edges, cycle):
    """Directed vertex cycle (x_0, ..., x_{d-1}) with edge cycle[i] = x_i -> x_{i+1}."""
    d = len(cycle)
    if d < 2:
        raise StructureError("face of degree < 2")
    if d == 2:
        a, b = edges[cycle[0]]
        return (int(min(a, b)), int(max(a, b)))
    verts = []
    for i in range(d):
        e_prev = set(int(v) for v in edges[cycle[i - 1]])
        e_cur = set(int(v) for v in edges[cycle[i]])
        shared = e_prev & e_cur
        if len(shared) != 1:
            raise StructureError(f"edges {cycle[i - 1]} and {cycle[i]} do not chain in a face")
        verts.append(shared.pop())
    return tuple(verts)


def _validate(g):
    V, E, F = g.n_vertices, g.n_edges, len(g.faces)
    if np.any(g.weights <= 0):
        raise StructureError("all edge weights must be positive")
    for e, (b, w) in enumerate(g.edges):
        if g.colors[b] != BLACK or g.colors[w] != WHITE:
            raise StructureError(f"edge {e} does not join black to white")
    if V - E + F != 2:
        raise StructureError(f"Euler formula violated: V-E+F = {V - E + F} != 2")
    if not (0 <= g.outer_face < F):
        raise StructureError("outer_face id out of range")
    # Each edge must appear once per direction across the oriented face cycles,
    # in two distinct faces.
    seen = {}
    side_faces = [[] for _ in range(E)]
    for f, cyc in enumerate(g.faces):
        fv = g.face_vertices[f]
        for i, e in enumerate(cyc):
            key = (e, fv[i])
            if key in seen:
                raise StructureError(
                    f"half-edge of edge {e} used twice (faces {seen[key]}, {f})")
            seen[key] = f
            side_faces[e].append(f)
    for e, fs in enumerate(side_faces):
        if len(fs) != 2 or fs[0] == fs[1]:
            raise StructureError(f"edge {e} must lie on two distinct faces")
    parent = list(range(V))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for b, w in g.edges:
        parent[find(int(b))] = find(int(w))
    if len({find(v) for v in range(V)}) != 1:
        raise StructureError("graph must be connected")


# ---------------------------------------------------------------------------
# Construction from plane coordinates (generators and fixtures)
# ---------------------------------------------------------------------------

def graph_from_coordinates(xy, colors, edge_list, weights=None):
    """Build the face structure of a straight-line plane graph from coordinates.

    Faces are traced from the counterclockwise rotation system induced by the
    coordinates; the outer face is the unique cycle of negative signed area.
    """
    xy = np.asarray(xy, dtype=float)
    V = len(xy)
    colors = np.asarray(colors, dtype=np.int8)
    edges = []
    for (u, v) in edge_list:
        edges.append((u, v) if colors[u] == BLACK else (v, u))
    edges = np.asarray(edges, dtype=np.int64)
    nbr = [[] for _ in range(V)]
    for e, (b, w) in enumerate(edges):
        nbr[b].append((int(w), e))
        nbr[w].append((int(b), e))
    for v in range(V):
        nbr[v].sort(key=lambda t: np.arctan2(*(xy[t[0]] - xy[v])[::-1]))
    rot_pos = {(v, u, e): i for v in range(V) for i, (u, e) in enumerate(nbr[v])}
    # next half-edge of (u -> v) is (v -> w) with (w, e') preceding (u, e) in the
    # ccw rotation at v; this keeps the face interior on the left, tracing inner
    # faces ccw and the outer face cw.
    visited = set()
    faces = []
    for e0, (b0, w0) in enumerate(edges):
        for (u0, v0) in ((int(b0), int(w0)), (int(w0), int(b0))):
            if (u0, v0, e0) in visited:
                continue
            cyc = []
            u, v, e = u0, v0, e0
            while (u, v, e) not in visited:
                visited.add((u, v, e))
                cyc.append(e)
                i = rot_pos[(v, u, e)]
                w, e2 = nbr[v][(i - 1) % len(nbr[v])]
                u, v, e = v, w, e2
            faces.append(tuple(cyc))
    outer = _outer_face_by_area(xy, edges, faces)
    if weights is None:
        weights = np.ones(len(edges))
    return BipartiteDimerGraph(colors, edges, np.asarray(weights, float),
                               tuple(faces), outer)


def _outer_face_by_area(xy, edges, faces):
    areas = []
    for cyc in faces:
        fv = _face_vertex_cycle(edges, cyc)
        pts = xy[list(fv)]
        areas.append(0.5 * np.sum(pts[:, 0] * np.roll(pts[:, 1], -1)
                                  - pts[:, 1] * np.roll(pts[:, 0], -1)))
    return int(np.argmin(areas))


def aztec_diamond(m):
    """Homogeneous Aztec diamond graph of order m >= 1.

    Vertices are the unit squares with half-integer centers (x, y),
    |x| + |y| <= m, adjacent squares joined by weight-1 edges; the vertex
    count is 2m(m+1) and the checkerboard coloring makes it bipartite.
    """
    if m < 1:
        raise InputError("aztec_diamond requires m >= 1")
    centers = []
    for i in range(-m, m):
        for j in range(-m, m):
            x, y = i + 0.5, j + 0.5
            if abs(x) + abs(y) <= m:
                centers.append((x, y))
    centers.sort()
    index = {c: k for k, c in enumerate(centers)}
    colors = [(BLACK if (round(c[0] - 0.5) + round(c[1] - 0.5)) % 2 == 0 else WHITE)
              for c in centers]
    edge_list = []
    for (x, y), k in index.items():
        for dx, dy in ((1.0, 0.0), (0.0, 1.0)):
            c2 = (x + dx, y + dy)
            if c2 in index:
                edge_list.append((k, index[c2]))
    return graph_from_coordinates(np.array(centers), colors, edge_list)


def prism_graph(k, ring_weights=None, spoke_weights=None):
    """Bipartite prism over a 2k-gon: two concentric 2k-cycles joined by spokes.

    The outer ring is the marked outer face, so deg v_out = 2k; k = 2 gives
    the cube prism (deg v_out = 4) and k = 4 the octagonal prism.
    """
    if k < 2:
        raise InputError("prism_graph requires k >= 2")
    n = 2 * k
    ang = 2 * np.pi * np.arange(n) / n
    xy = np.concatenate([
        np.stack([2 * np.cos(ang), 2 * np.sin(ang)], axis=1),   # outer ring 0..n-1
        np.stack([np.cos(ang), np.sin(ang)], axis=1),           # inner ring n..2n-1
    ])
    colors = [(BLACK if j % 2 == 0 else WHITE) for j in range(n)]
    colors += [(WHITE if j % 2 == 0 else BLACK) for j in range(n)]
    edge_list, weights = [], []
    rw = np.ones(2 * n) if ring_weights is None else np.asarray(ring_weights, float)
    sw = np.ones(n) if spoke_weights is None else np.asarray(spoke_weights, float)
    for j in range(n):
        edge_list.append((j, (j + 1) % n))
        weights.append(rw[j])
    for j in range(n):
        edge_list.append((n + j, n + (j + 1) % n))
        weights.append(rw[n + j])
    for j in range(n):
        edge_list.append((j, n + j))
        weights.append(sw[j])
    return graph_from_coordinates(xy, colors, edge_list, weights)


def four_cycle():
    """Smallest accepted graph: the 4-cycle b-w-b-w (same as aztec_diamond(1))."""
    return aztec_diamond(1)


# ---------------------------------------------------------------------------
# Augmented dual
# ---------------------------------------------------------------------------

CYCLE = -1  # step-kind marker for boundary-cycle edges in dual face polygons


@dataclass(frozen=True)
class AugmentedDual:
    """Dual of the graph with the outer face replaced by a boundary cycle.

    Dual vertices 0..n_inner-1 are the inner faces (face_of_inner maps back),
    followed by the 2n boundary vertices v_1..v_{2n} in counterclockwise
    order.  edge_dual[e] = (tail, head) is the dual edge of primal edge e
    oriented so that the black endpoint of e lies to the right of tail->head.
    face_cycle[x] walks the dual face around primal vertex x counterclockwise
    as steps (v_from, v_to, kind, idx, sign): kind is the primal edge id or
    CYCLE with idx the cycle-edge index, sign = +1 when (v_from, v_to) agrees
    with the canonical orientation of that dual edge.
    """

    graph: BipartiteDimerGraph
    n_inner: int
    face_of_inner: tuple[int, ...]
    inner_of_face: dict
    boundary: np.ndarray
    boundary_edge: np.ndarray
    cycle_vertex: np.ndarray
    edge_dual: np.ndarray
    face_cycle: tuple

    @property
    def n_dual(self):
        return self.n_inner + len(self.boundary)

    @property
    def two_n(self):
        return len(self.boundary)

    def cycle_edges(self):
        b = self.boundary
        return np.stack([b, np.roll(b, -1)], axis=1)

    def dual_neighbors(self):
        """Adjacency over dual vertices through primal-dual edges only."""
        adj = [[] for _ in range(self.n_dual)]
        for e, (t, h) in enumerate(self.edge_dual):
            adj[t].append((int(h), e, +1))
            adj[h].append((int(t), e, -1))
        return adj

    def spanning_tree(self, root=0):
        """BFS tree over dual vertices: parent[v] = (u, edge, sign) with
        sign = +1 when the canonical dual edge runs u -> v."""
        adj = self.dual_neighbors()
        parent = {root: None}
        order = [root]
        queue = [root]
        while queue:
            u = queue.pop(0)
            for (v, e, s) in adj[u]:
                if v not in parent:
                    parent[v] = (u, e, s)
                    order.append(v)
                    queue.append(v)
        if len(parent) != self.n_dual:
            raise StructureError("augmented dual is not connected through dual edges")
        return parent, order

    def integrate(self, increments, base=0, base_value=0.0):
        """Primitive of a 1-form given by canonical increments per primal edge."""
        parent, order = self.spanning_tree(base)
        vals = np.empty(self.n_dual, dtype=np.asarray(increments).dtype)
        vals[base] = base_value
        for v in order[1:]:
            u, e, s = parent[v]
            vals[v] = vals[u] + s * increments[e]
        return vals

    def face_closure_residues(self, increments, cycle_increments=None):
        """Max |sum of the 1-form| around every dual face (per primal vertex).

        Without cycle_increments only interior faces are summed (boundary
        faces contain a boundary-cycle step, which is not part of a 1-form
        living on primal-dual edges); passing cycle_increments includes the
        boundary faces too.
        """
        res = np.zeros(self.graph.n_vertices)
        for x in range(self.graph.n_vertices):
            tot = 0.0
            skip = False
            for (_, _, kind, idx, sign) in self.face_cycle[x]:
                if kind == CYCLE:
                    if cycle_increments is None:
                        skip = True
                        break
                    tot = tot + sign * cycle_increments[idx]
                else:
                    tot = tot + sign * increments[kind]
            res[x] = 0.0 if skip else abs(tot)
        return res


def build_augmented_dual(g):
    """Construct the augmented dual with deterministic ccw boundary labels.

    The labeling starts so that the face between v_1 and v_2 is white (the
    cycle edge (v_1 v_2) borders a boundary white face) and, among such
    starts, at the lowest boundary edge id.  Any cyclic relabeling is an
    equivalent choice; this one is just deterministic.
    """
    outer_cyc = g.faces[g.outer_face]
    outer_fv = g.face_vertices[g.outer_face]
    two_n = len(outer_cyc)
    if two_n % 2 != 0:
        raise StructureError("outer face degree must be even")
    if len(set(outer_fv)) != two_n:
        raise StructureError("outer face boundary must be a simple cycle")
    # The stored outer cycle runs clockwise in the plane (consistent sphere
    # orientation); reverse it to get the ccw boundary walk.  In the stored
    # cycle, edge outer_cyc[i] runs outer_fv[i] -> outer_fv[i+1]; reversed,
    # edge edges_ccw[i] runs verts_ccw[i] -> verts_ccw[i+1].
    edges_ccw = [outer_cyc[(two_n - 1 - i) % two_n] for i in range(two_n)]
    verts_ccw = [outer_fv[(two_n - i) % two_n] for i in range(two_n)]
    for i in range(two_n):
        a, b = verts_ccw[i], verts_ccw[(i + 1) % two_n]
        if {int(v) for v in g.edges[edges_ccw[i]]} != {a, b}:
            raise StructureError("outer face cycle is not consistently oriented")
    candidates = [i for i in range(two_n)
                  if g.colors[verts_ccw[(i + 1) % two_n]] == WHITE]
    start = min(candidates, key=lambda i: edges_ccw[i])
    edges_ccw = edges_ccw[start:] + edges_ccw[:start]
    verts_ccw = verts_ccw[start:] + verts_ccw[:start]

    inner_faces = tuple(f for f in range(len(g.faces)) if f != g.outer_face)
    inner_of_face = {f: i for i, f in enumerate(inner_faces)}
    n_inner = len(inner_faces)
    boundary = np.arange(n_inner, n_inner + two_n, dtype=np.int64)
    bvertex_of_edge = {e: int(boundary[i]) for i, e in enumerate(edges_ccw)}
    # cycle edge k joins v_{k+1} -> v_{k+2} and runs along primal vertex
    # verts_ccw[k+1] (the head of boundary edge k in the ccw walk).
    cycle_vertex = np.array([verts_ccw[(i + 1) % two_n] for i in range(two_n)],
                            dtype=np.int64)
    cycle_index_at = {int(cycle_vertex[k]): k for k in range(two_n)}

    half_face = {}
    for f, cyc in enumerate(g.faces):
        fv = g.face_vertices[f]
        for i, e in enumerate(cyc):
            half_face[(e, fv[i])] = f

    def dual_vertex(face, e):
        return bvertex_of_edge[e] if face == g.outer_face else inner_of_face[face]

    edge_dual = np.empty((g.n_edges, 2), dtype=np.int64)
    for e, (b, w) in enumerate(g.edges):
        f_bw = half_face[(e, int(b))]
        f_wb = half_face[(e, int(w))]
        edge_dual[e] = (dual_vertex(f_bw, e), dual_vertex(f_wb, e))

    # Corner chaining: at vertex x inside face f, entering along e_in, the walk
    # leaves along the face-cycle successor of e_in; the next corner lives in
    # the face on the other side of that edge.
    corner_out = {}
    for f, cyc in enumerate(g.faces):
        fv = g.face_vertices[f]
        d = len(cyc)
        for i in range(d):
            x = fv[(i + 1) % d]
            corner_out[(x, f, cyc[i])] = cyc[(i + 1) % d]
    edge_faces = {e: [] for e in range(g.n_edges)}
    for (e, tail), f in half_face.items():
        edge_faces[e].append(f)

    inc = g.vertex_edges()
    face_cycle = []
    for x in range(g.n_vertices):
        degree = len(inc[x])
        e0 = inc[x][0]
        f0 = half_face[(e0, [v for v in g.edges[e0] if v != x][0])]
        # f0 is the face in which e0 points toward x, i.e. x's corner entered via e0.
        ring = []
        f, e_in = f0, e0
        for _ in range(degree + 1):
            e_out = corner_out[(x, f, e_in)]
            ring.append((f, e_in, e_out))
            f = [ff for ff in edge_faces[e_out] if ff != f][0]
            e_in = e_out
            if (f, e_in) == (f0, e0):
                break
        if len(ring) != degree:
            raise StructureError(f"corner rotation at vertex {x} does not close")
        nodes = []   # (dual vertex, crossing kind, crossing idx) leaving this node
        for (fc, e_in_c, e_out_c) in ring:
            if fc == g.outer_face:
                k = cycle_index_at.get(x)
                if k is None:
                    raise StructureError("outer corner at a vertex off the outer cycle")
                nodes.append((bvertex_of_edge[e_in_c], CYCLE, k))
                nodes.append((bvertex_of_edge[e_out_c], e_out_c, None))
            else:
                nodes.append((inner_of_face[fc], e_out_c, None))
        steps = []
        for i, (v_from, kind, idx) in enumerate(nodes):
            v_to = nodes[(i + 1) % len(nodes)][0]
            steps.append((v_from, v_to, kind, idx))
        face_cycle.append(_orient_face(x, steps, g, edge_dual, boundary))

    dual = AugmentedDual(
        graph=g, n_inner=n_inner, face_of_inner=inner_faces,
        inner_of_face=inner_of_face, boundary=boundary,
        boundary_edge=np.asarray(edges_ccw, dtype=np.int64),
        cycle_vertex=cycle_vertex, edge_dual=edge_dual,
        face_cycle=tuple(face_cycle))
    _check_dual(dual)
    return dual


def _orient_face(x, steps, g, edge_dual, boundary):
    """Fix the dual-face walk to run counterclockwise and attach orientation signs.

    Counterclockwise around a black face runs against the canonical (black on
    the right) dual-edge orientations; around a white face it runs with them.
    """
    two_n = len(boundary)

    def signed(seq):
        out = []
        for (v_from, v_to, kind, idx) in seq:
            if kind == CYCLE:
                canon = (int(boundary[idx]), int(boundary[(idx + 1) % two_n]))
            else:
                canon = (int(edge_dual[kind][0]), int(edge_dual[kind][1]))
            if (v_from, v_to) == canon:
                s = 1
            elif (v_to, v_from) == canon:
                s = -1
            else:
                raise StructureError(f"dual face step at vertex {x} is not a dual edge")
            out.append((v_from, v_to, kind, idx, s))
        return out

    walk = signed(steps)
    want = -1 if g.colors[x] == BLACK else 1
    edge_signs = {s for (_, _, kind, _, s) in walk if kind != CYCLE}
    if edge_signs == {want}:
        return tuple(walk)
    if edge_signs == {-want}:
        rev = [(v_to, v_from, kind, idx) for (v_from, v_to, kind, idx) in reversed(steps)]
        return tuple(signed(rev))
    raise StructureError(f"inconsistent dual-edge orientations around vertex {x}")


def _check_dual(dual):
    g = dual.graph
    deg_ok = all(
        sum(1 for (t, h) in dual.edge_dual if t == v or h == v) == 1
        for v in dual.boundary)
    if not deg_ok:
        raise StructureError("each boundary vertex must carry exactly one spoke")
    for x in range(g.n_vertices):
        walk = dual.face_cycle[x]
        for i, (_, v_to, _, _, _) in enumerate(walk):
            if v_to != walk[(i + 1) % len(walk)][0]:
                raise StructureError("dual face walk is not a closed cycle")


# ---------------------------------------------------------------------------
# Dimer covers and height functions
# ---------------------------------------------------------------------------

DEFAULT_ENUM_CAP = 24


def enumerate_dimer_covers(g, cap=DEFAULT_ENUM_CAP):
    """All dimer covers by backtracking; refuses when n_edges exceeds the cap.

    Returns a list of sorted edge-id tuples; oracle use only.
    """
    if g.n_edges > cap:
        raise EnumerationCapError(
            f"{g.n_edges} edges exceeds the enumeration cap {cap}")
    blacks = list(g.black)
    edges_at = [[] for _ in range(g.n_vertices)]
    for e, (b, w) in enumerate(g.edges):
        edges_at[b].append(e)
    used_white = set()
    chosen = []
    covers = []

    def extend(i):
        if i == len(blacks):
            covers.append(tuple(sorted(chosen)))
            return
        b = blacks[i]
        for e in edges_at[b]:
            w = int(g.edges[e][1])
            if w not in used_white:
                used_white.add(w)
                chosen.append(e)
                extend(i + 1)
                chosen.pop()
                used_white.remove(w)

    extend(0)
    return sorted(set(covers))


def cover_weight(g, cover):
    return float(np.prod(g.weights[list(cover)]))


def is_dimer_cover(g, cover):
    touched = [v for e in cover for v in g.edges[e]]
    return len(touched) == g.n_vertices and len(set(int(v) for v in touched)) == g.n_vertices


def height_function(cover, reference, dual, root=None):
    """Integer height on dual vertices of the cover relative to the reference.

    Crossing the dual edge of (b w) along its canonical orientation (black on
    the right of tail->head) changes the height by
    h(tail) - h(head) = 1[(bw) in cover] - 1[(bw) in reference];
    boundary-cycle edges carry no increment.  The root value is pinned to 0.
    """
    g = dual.graph
    for d in (cover, reference):
        if not is_dimer_cover(g, d):
            raise InputError("height_function requires two valid dimer covers")
    if root is None:
        root = int(dual.boundary[0])
    delta = np.zeros(g.n_edges, dtype=np.int64)
    delta[list(cover)] += 1
    delta[list(reference)] -= 1
    h = dual.integrate(-delta, base=root, base_value=0)
    res = dual.face_closure_residues(-delta, cycle_increments=np.zeros(dual.two_n))
    if np.any(res != 0):
        raise AssertionError("height increments are inconsistent around a face")
    return h


def expected_height(g, dual, covers=None, root=None, cap=DEFAULT_ENUM_CAP):
    """E[h] over the dimer measure, relative to the first enumerated cover."""
    if covers is None:
        covers = enumerate_dimer_covers(g, cap=cap)
    if not covers:
        raise InputError("graph has no dimer cover")
    ref = covers[0]
    ws = np.array([cover_weight(g, d) for d in covers])
    ps = ws / ws.sum()
    hs = np.stack([height_function(d, ref, dual, root=root) for d in covers])
    return ps @ hs, covers, ps, hs


def height_moment(g, dual, vertices, covers=None, root=None, cap=DEFAULT_ENUM_CAP):
    """Exact centered height moment E[prod_k hbar(v_k)] by enumeration."""
    eh, covers, ps, hs = expected_height(g, dual, covers=covers, root=root, cap=cap)
    hbar = hs - eh[None, :]
    prod = np.ones(len(covers))
    for v in vertices:
        prod = prod * hbar[:, v]
    return float(ps @ prod)


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------

def graph_to_json(g):
    doc = {
        "vertices": [{"id": int(v), "color": ("black" if g.colors[v] == BLACK else "white")}
                     for v in range(g.n_vertices)],
        "edges": [{"id": int(e), "black": int(b), "white": int(w),
                   "weight": float(g.weights[e])}
                  for e, (b, w) in enumerate(g.edges)],
        "faces": [{"id": int(f), "edges": [int(e) for e in cyc]}
                  for f, cyc in enumerate(g.faces)],
        "outer_face": int(g.outer_face),
    }
    return doc


def graph_from_json(doc):
    verts = sorted(doc["vertices"], key=lambda r: r["id"])
    if [r["id"] for r in verts] != list(range(len(verts))):
        raise StructureError("vertex ids must be 0..V-1")
    colors = [BLACK if r["color"] == "black" else WHITE for r in verts]
    erows = sorted(doc["edges"], key=lambda r: r["id"])
    if [r["id"] for r in erows] != list(range(len(erows))):
        raise StructureError("edge ids must be 0..E-1")
    edges = [(r["black"], r["white"]) for r in erows]
    weights = [r["weight"] for r in erows]
    frows = sorted(doc["faces"], key=lambda r: r["id"])
    faces = tuple(tuple(r["edges"]) for r in frows)
    return BipartiteDimerGraph(np.array(colors), np.array(edges), np.array(weights),
                               faces, int(doc["outer_face"]))


def save_graph(g, path):
    with open(path, "w") as f:
        json.dump(graph_to_json(g), f, indent=1)


def load_graph(path):
    with open(path) as f:
        return graph_from_json(json.load(f))
