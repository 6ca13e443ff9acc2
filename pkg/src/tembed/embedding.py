"""t-embeddings: geometry checks, origami square roots and maps, boundary angles.

A t-embedding assigns complex positions to the augmented-dual vertices so
that faces are convex and the black face angles at every inner vertex sum to
pi.  Faces are indexed by primal vertex id; the 2n outer faces glued along
the boundary cycle get ids V..V+2n-1 (opposite color to the inner face they
touch).  All checkers are tolerance-parameterized and report max residues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateEmbeddingError, InputError, NotATEmbeddingError,
                     NotPerfectError)
from .graph import BLACK, CYCLE, WHITE

TOL_ANGLE = 1e-8


@dataclass(frozen=True)
class TEmbedding:
    """Complex positions of augmented-dual vertices."""

    dual: object
    pos: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pos", np.asarray(self.pos, dtype=complex))
        if len(self.pos) != self.dual.n_dual:
            raise InputError("one position per augmented-dual vertex required")

    @property
    def graph(self):
        return self.dual.graph

    def dT(self):
        """Canonical increments dT(bw*) per primal edge (black on the right)."""
        t, h = self.dual.edge_dual[:, 0], self.dual.edge_dual[:, 1]
        return self.pos[h] - self.pos[t]

    def cycle_dT(self):
        """Increments along boundary cycle edges k: T(v_{k+2}) - T(v_{k+1})."""
        b = self.dual.boundary
        return self.pos[np.roll(b, -1)] - self.pos[b]

    def increment(self, kind, idx):
        if kind == CYCLE:
            b = self.dual.boundary
            return self.pos[b[(idx + 1) % len(b)]] - self.pos[b[idx]]
        t, h = self.dual.edge_dual[kind]
        return self.pos[h] - self.pos[t]

    def face_poly(self, x):
        """Dual vertex ids around the face of primal vertex x, counterclockwise."""
        return [step[0] for step in self.dual.face_cycle[x]]

    def diameter(self):
        pts = self.pos
        return float(max(np.ptp(pts.real), np.ptp(pts.imag)))

    def n_out_faces(self):
        return self.dual.two_n

    def face_color(self, fid):
        """Color of face fid (primal vertices, then outer faces V..V+2n-1)."""
        g = self.graph
        if fid < g.n_vertices:
            return int(g.colors[fid])
        k = fid - g.n_vertices
        return WHITE if g.colors[self.dual.cycle_vertex[k]] == BLACK else BLACK

    def out_face_of_cycle(self, k):
        return self.graph.n_vertices + k


def embed(dual, pos):
    return TEmbedding(dual, pos)


# ---------------------------------------------------------------------------
# Angle condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AngleReport:
    deviations: np.ndarray       # per inner dual vertex |sum black angles - pi|
    failing: np.ndarray
    tol: float

    @property
    def max_deviation(self):
        return float(self.deviations.max()) if len(self.deviations) else 0.0

    @property
    def ok(self):
        return len(self.failing) == 0


def _corner_angles(te, x):
    """Interior angles of face x's polygon keyed by dual vertex id."""
    poly = te.face_poly(x)
    pts = te.pos[poly]
    d = len(poly)
    out = {}
    for i in range(d):
        a = pts[(i + 1) % d] - pts[i]
        b = pts[(i - 1) % d] - pts[i]
        if a == 0 or b == 0:
            raise DegenerateEmbeddingError(f"zero-length edge on face {x}")
        ang = np.angle(b / a) % (2 * np.pi)
        out.setdefault(poly[i], 0.0)
        out[poly[i]] += ang
    return out


def check_angle_condition(te, tol=TOL_ANGLE):
    """Per inner vertex: |sum of black-face angles - pi|; pass iff max < tol."""
    g = te.graph
    sums = np.zeros(te.dual.n_inner)
    for x in g.black:
        for v, ang in _corner_angles(te, int(x)).items():
            if v < te.dual.n_inner:
                sums[v] += ang
    dev = np.abs(sums - np.pi)
    return AngleReport(dev, np.flatnonzero(dev >= tol), tol)


# ---------------------------------------------------------------------------
# Origami square root and origami map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrigamiSqrt:
    """Unit-modulus eta per face of B-bar union W-bar (outer faces appended).

    dT(bw*) lies on the line conj(eta_b) conj(eta_w) R for every edge; the
    consistency residue is the worst angular defect over all edges.
    """

    eta: np.ndarray
    residue: float

    def eta2(self):
        return self.eta ** 2


def _face_adjacency(te):
    """(face, face, unit direction) triples over primal and cycle edges."""
    g = te.graph
    dT = te.dT()
    cyc = te.cycle_dT()
    out = []
    for e, (b, w) in enumerate(g.edges):
        out.append((int(b), int(w), dT[e]))
    for k in range(te.dual.two_n):
        x = int(te.dual.cycle_vertex[k])
        o = te.out_face_of_cycle(k)
        pair = (x, o) if g.colors[x] == BLACK else (o, x)
        out.append((pair[0], pair[1], cyc[k]))
    return out


def compute_origami_sqrt(te, tol=1e-7, collapse_tol=1e-12):
    """Breadth-first eta propagation across edges; deterministic sign choice.

    Starts with eta = 1 at face 0 and crosses edges in input order; raises
    NotATEmbedding when the propagation is inconsistent beyond tol (angular
    residue, scale-free).  Collapsed boundary edges carry no direction and
    are skipped; an outer face reachable only through one keeps eta = NaN.
    """
    g = te.graph
    n_faces = g.n_vertices + te.dual.two_n
    links = _face_adjacency(te)
    scale = max(np.max(np.abs(te.dT())), 1e-300)
    adj = [[] for _ in range(n_faces)]
    live = []
    for (b, w, d) in links:
        if abs(d) <= collapse_tol * scale:
            if b < g.n_vertices and w < g.n_vertices:
                raise DegenerateEmbeddingError("zero-length inner edge")
            continue
        u = d / abs(d)
        adj[b].append((w, u))
        adj[w].append((b, u))
        live.append((b, w, d))
    eta_bar = np.zeros(n_faces, dtype=complex)
    eta_bar[0] = 1.0
    order = [0]
    qi = 0
    while qi < len(order):
        f = order[qi]
        qi += 1
        for (f2, u) in adj[f]:
            if eta_bar[f2] == 0:
                eta_bar[f2] = u / eta_bar[f]
                order.append(f2)
    unreached = np.flatnonzero(eta_bar == 0)
    if np.any(unreached < g.n_vertices):
        raise NotATEmbeddingError("face adjacency is not connected")
    residue = 0.0
    for (b, w, d) in live:
        r = d / (eta_bar[b] * eta_bar[w])
        residue = max(residue, abs(np.imag(r)) / abs(r))
    if residue > tol:
        raise NotATEmbeddingError(f"eta propagation residue {residue:.2e} > {tol:.1e}")
    eta = np.conj(eta_bar)
    eta[unreached] = np.nan
    return OrigamiSqrt(eta, residue)


@dataclass(frozen=True)
class OrigamiMap:
    """Primitive O of the folded form; omap[v] per augmented-dual vertex."""

    omap: np.ndarray
    base: int
    closure_residue: float

    def negate(self):
        return OrigamiMap(-self.omap, self.base, self.closure_residue)


def origami_increments(te, eta):
    """dO per primal edge and per cycle edge: conj(eta_b^2 dT) = eta_w^2 dT.

    Collapsed cycle edges contribute a zero increment; outer faces with
    undefined eta are skipped in the consistency mismatch.
    """
    g = te.graph
    e2 = np.asarray(eta) ** 2
    dT = te.dT()
    b, w = g.edges[:, 0], g.edges[:, 1]
    dO = np.conj(e2[b] * dT)
    mismatch = np.max(np.abs(dO - e2[w] * dT)) if len(dT) else 0.0
    cyc = te.cycle_dT()
    dO_cyc = np.zeros(te.dual.two_n, dtype=complex)
    for k in range(te.dual.two_n):
        if cyc[k] == 0:
            continue
        x = int(te.dual.cycle_vertex[k])
        o = te.out_face_of_cycle(k)
        if g.colors[x] == BLACK:
            dO_cyc[k] = np.conj(e2[x] * cyc[k])
            m2 = abs(dO_cyc[k] - e2[o] * cyc[k])
        else:
            dO_cyc[k] = e2[x] * cyc[k]
            m2 = abs(dO_cyc[k] - np.conj(e2[o] * cyc[k]))
        if np.isfinite(m2):
            mismatch = max(mismatch, m2)
    return dO, dO_cyc, float(mismatch)


def compute_origami(te, eta, base=None, tol=1e-8):
    """Integrate dO over a dual spanning tree; verify closedness on all faces."""
    if base is None:
        base = 0
    dO, dO_cyc, mismatch = origami_increments(te, eta)
    scale = max(te.diameter(), 1e-30)
    if mismatch > tol * scale:
        raise NotATEmbeddingError(f"origami increment mismatch {mismatch:.2e}")
    omap = te.dual.integrate(dO, base=base, base_value=0.0 + 0.0j)
    res = te.dual.face_closure_residues(dO, cycle_increments=dO_cyc)
    worst = float(res.max()) if len(res) else 0.0
    if worst > tol * scale:
        raise NotATEmbeddingError(f"origami closure residue {worst:.2e}")
    return OrigamiMap(omap, base, worst)


# ---------------------------------------------------------------------------
# Boundary data of perfect embeddings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryData:
    """Arrays phi_1..phi_2n (increasing, phi[2n] = phi[0] + 2pi) and xi_k.

    T(v_k) = e^{i phi_k}/cos xi_k and O(v_k) = tan xi_k; pairing identities
    phi - xi constant across white boundary edges (v_{2k-1} v_{2k}) and
    phi + xi constant across black ones.
    """

    phi: np.ndarray
    xi: np.ndarray
    o_sign: int
    chain_residue: float
    hyperboloid_residue: float

    @property
    def angle_sum(self):
        return float(np.sum(self.phi[1::2] - self.phi[0::2]))


def hyperboloid_residual(te, omap):
    """Per boundary vertex: (|T|^2 - (Re O)^2 - 1, Im O)."""
    tv = te.pos[te.dual.boundary]
    ov = np.asarray(omap.omap if isinstance(omap, OrigamiMap) else omap)[te.dual.boundary]
    return np.stack([np.abs(tv) ** 2 - ov.real ** 2 - 1.0, ov.imag], axis=1)


def align_origami(te, omap, eps=1e-12):
    """Canonicalize the rotation/translation gauge of an origami map.

    The origami map of a perfect embedding is real on the boundary only after
    the right rotation; this rotates the boundary values onto a line, kills
    their imaginary mean, and fixes the real shift from the hyperboloid
    relation (a_j - s)^2 - (a_k - s)^2 = |T_j|^2 - |T_k|^2, which is linear
    in the shift s.  Returns the transformed full array mu * O + c.
    """
    om = np.asarray(omap.omap if isinstance(omap, OrigamiMap) else omap)
    bvals = om[te.dual.boundary]
    v = bvals - bvals.mean()
    ssum = np.sum(v * v)
    scale = max(np.max(np.abs(v)), eps)
    if abs(ssum) < (eps * scale) ** 2:
        mu = 1.0 + 0.0j
    else:
        mu = np.conj(np.sqrt(ssum / abs(ssum)))
    o1 = mu * om
    o1 = o1 - 1j * np.mean(o1[te.dual.boundary].imag)
    a = o1[te.dual.boundary].real
    t2 = np.abs(te.pos[te.dual.boundary]) ** 2
    num, den = 0.0, 0.0
    for k in range(len(a)):
        j = (k + 1) % len(a)
        d = a[k] - a[j]
        if abs(d) > eps * scale:
            s_k = (a[k] ** 2 - a[j] ** 2 - (t2[k] - t2[j])) / (2 * d)
            num += abs(d) * s_k
            den += abs(d)
    s = num / den if den > 0 else float(np.mean(a))
    return o1 - s


def _chain_residue(phi, xi):
    """Worst defect of the tangency-point identities, both chains."""
    two_n = len(xi)
    phi_ext = np.append(phi, phi[0] + 2 * np.pi)
    xi_ext = np.append(xi, xi[0])
    res = 0.0
    for j in range(0, two_n, 2):      # white edges (v_{2k-1} v_{2k}): phi - xi
        res = max(res, abs((phi_ext[j + 1] - xi_ext[j + 1]) - (phi_ext[j] - xi_ext[j])))
    for j in range(1, two_n, 2):      # black edges: phi + xi
        res = max(res, abs((phi_ext[j + 1] + xi_ext[j + 1]) - (phi_ext[j] + xi_ext[j])))
    return res


def boundary_data(te, omap, tol=1e-8):
    """Extract (phi_k, xi_k) from boundary positions of a perfect embedding.

    The origami sign is auto-detected: xi is read from s*Re O with the s in
    {+1, -1} that satisfies the pairing identities.  Raises NotPerfect when
    the boundary is off the hyperboloid or no sign works.
    """
    dualb = te.dual.boundary
    hyp = hyperboloid_residual(te, omap)
    hres = float(np.max(np.abs(hyp)))
    if hres > tol:
        raise NotPerfectError(f"boundary hyperboloid residue {hres:.2e} > {tol:.1e}")
    tv = te.pos[dualb]
    raw = np.angle(tv)
    phi = np.empty(len(tv))
    phi[0] = raw[0]
    coincide_tol = 1e-9 * max(np.max(np.abs(tv)), 1e-30)
    for k in range(1, len(tv)):
        if abs(tv[k] - tv[k - 1]) < coincide_tol:     # collapsed boundary tooth
            phi[k] = phi[k - 1]
            continue
        step = (raw[k] - raw[k - 1]) % (2 * np.pi)
        if not (0 < step < np.pi):
            raise NotPerfectError("boundary arguments do not advance within (0, pi)")
        phi[k] = phi[k - 1] + step
    ov = np.asarray(omap.omap if isinstance(omap, OrigamiMap) else omap)[dualb].real
    best = None
    for s in (1, -1):
        xi = np.arctan(s * ov)
        res = _chain_residue(phi, xi)
        if best is None or res < best[1]:
            best = (s, res, xi)
    s, res, xi = best
    if res > tol:
        raise NotPerfectError(f"pairing identities fail with residue {res:.2e}")
    return BoundaryData(phi=phi, xi=xi, o_sign=s, chain_residue=res,
                        hyperboloid_residue=hres)


def normalize_eta_perfect(te, eta, bd, tol=1e-6):
    """Rotate eta^2 (eta_b^2 -> lam eta_b^2, eta_w^2 -> conj(lam) eta_w^2) to the
    boundary normalization conj(eta)^2_{w_k} = i e^{i(phi_{2k-1} - xi_{2k-1})},
    conj(eta)^2_{b_k} = -i e^{i(phi_{2k} + xi_{2k})}.  Returns the new eta and
    the worst target mismatch after rotation.
    """
    g = te.graph
    eta = np.asarray(eta, dtype=complex).copy()
    two_n = te.dual.two_n
    cyc_len = np.abs(te.cycle_dT())
    live = cyc_len > 1e-9 * max(cyc_len.max(), 1e-30)
    ratios = []
    for k in range(two_n):
        if not live[k]:
            continue   # collapsed tooth: its edge fixes no direction
        x = int(te.dual.cycle_vertex[k])
        if g.colors[x] == WHITE:
            target_bar2 = 1j * np.exp(1j * (bd.phi[k] - bd.xi[k]))
            lam = np.conj(np.conj(target_bar2) / eta[x] ** 2)   # eta_w^2 scales by conj(lam)
        else:
            target_bar2 = -1j * np.exp(1j * (bd.phi[k] + bd.xi[k]))
            lam = np.conj(target_bar2) / eta[x] ** 2
        ratios.append(lam)
    lam = np.mean(ratios)
    lam /= abs(lam)
    spread = float(np.max(np.abs(np.asarray(ratios) - lam)))
    if spread > tol:
        raise NotPerfectError(f"eta normalization is inconsistent: spread {spread:.2e}")
    root = np.sqrt(lam)
    colors = np.array([te.face_color(f) for f in range(len(eta))])
    eta = np.where(colors == BLACK, eta * root, eta * np.conj(root))
    return eta, spread


# ---------------------------------------------------------------------------
# xi function and Omega domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class XiFunction:
    """Piecewise-linear 1-Lipschitz xi on R/2piZ with slopes +-1 through (phi_k, xi_k)."""

    phi: np.ndarray      # breakpoints, increasing, phi[-1] = phi[0] + 2pi
    xi: np.ndarray       # values, xi[-1] = xi[0]

    def __call__(self, ang):
        ang = np.asarray(ang, dtype=float)
        a = (ang - self.phi[0]) % (2 * np.pi) + self.phi[0]
        return np.interp(a, self.phi, self.xi)

    def slopes(self):
        return np.diff(self.xi) / np.diff(self.phi)

    def rho(self, ang):
        return 1.0 / np.cos(self(ang))


def xi_function(bd, slope_tol=1e-6):
    phi = np.append(bd.phi, bd.phi[0] + 2 * np.pi)
    xi = np.append(bd.xi, bd.xi[0])
    f = XiFunction(phi, xi)
    s = f.slopes()
    keep = np.diff(phi) > 1e-12
    if np.any(np.abs(np.abs(s[keep]) - 1.0) > slope_tol):
        raise NotPerfectError("xi breakpoints do not have slopes +-1")
    return f


@dataclass(frozen=True)
class OmegaDomain:
    """Star-convex region {rho e^{i phi} : rho < 1/cos xi(phi)}."""

    xi: XiFunction

    def contains(self, z, margin=0.0):
        z = complex(z)
        if z == 0:
            return True
        return abs(z) < self.xi.rho(np.angle(z)) - margin

    def boundary_point(self, ang):
        return self.xi.rho(ang) * np.exp(1j * ang)

    def boundary_distance(self, z, n_probe=720):
        angs = np.linspace(0, 2 * np.pi, n_probe, endpoint=False)
        bpts = self.xi.rho(angs) * np.exp(1j * angs)
        return float(np.min(np.abs(bpts - complex(z))))


def aztec_xi():
    """Triangle-wave profile with xi = -pi/4 at 0, pi and +pi/4 at pi/2, 3pi/2."""
    phi = np.linspace(0, 2 * np.pi, 5)
    xi = np.array([-np.pi / 4, np.pi / 4, -np.pi / 4, np.pi / 4, -np.pi / 4])
    return XiFunction(phi, xi)


# ---------------------------------------------------------------------------
# Perfectness and properness checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerfectReport:
    tangency: np.ndarray        # | dist(line(v_k, v_{k+1}), 0) - 1 | per cycle edge
    bisector: np.ndarray        # angular residue per boundary vertex
    tangency_side: np.ndarray   # sign of the origin's side per edge (reported only)
    tol: float

    @property
    def ok(self):
        return bool(self.tangency.max() < self.tol and self.bisector.max() < self.tol)


def check_perfect(te, tol=1e-8, skip_edges=()):
    """Outer face tangential to the unit circle with bisecting spokes.

    Boundary cycle edges listed in skip_edges (honestly collapsed teeth) are
    excluded from the tangency test and treated as coincidences in the
    bisector test, which then uses the nearest distinct neighbors.
    """
    dual = te.dual
    b = dual.boundary
    two_n = len(b)
    cset = set(skip_edges)
    tang = np.zeros(two_n)
    side = np.zeros(two_n)
    for k in range(two_n):
        if k in cset:
            continue
        p = te.pos[b[k]]
        q = te.pos[b[(k + 1) % two_n]]
        d = q - p
        if abs(d) == 0:
            raise DegenerateEmbeddingError("zero-length boundary edge")
        cross = (d.real * (-p.imag) - d.imag * (-p.real))  # cross(d, 0 - p)
        dist = abs(cross) / abs(d)
        tang[k] = abs(dist - 1.0)
        side[k] = np.sign(cross)
    spokes = {}
    for e, (t, h) in enumerate(dual.edge_dual):
        for v in (t, h):
            if v >= dual.n_inner:
                spokes[int(v)] = int(h if v == t else t)
    # A corner bisector of a polygon tangential to the unit circle passes
    # through the origin, so the bisector condition is exactly that the spoke
    # points radially outward.  At a vertex incident to a collapsed boundary
    # edge one side of the corner has no direction, the bisector condition is
    # vacuous, and the vertex is exempted (its spoke is still constrained to
    # the corner wedge by the strict sign condition).
    bis = np.zeros(two_n)
    for k in range(two_n):
        if k in cset or (k - 1) % two_n in cset:
            continue
        v = int(b[k])
        p = te.pos[v]
        d_spoke = p - te.pos[spokes[v]]
        bis[k] = abs(np.angle(d_spoke * np.conj(p)))
    return PerfectReport(tang, bis, side, tol)


@dataclass(frozen=True)
class ProperReport:
    convexity: np.ndarray     # worst normalized concavity per face
    orientation: np.ndarray   # signed area per face
    coverage_failures: int
    points_tested: int
    tol: float

    @property
    def ok(self):
        nz = self.orientation[self.orientation != 0]
        orient_ok = len(nz) == 0 or bool(np.all(nz > 0) or np.all(nz < 0))
        return bool(np.all(self.convexity < self.tol) and orient_ok
                    and self.coverage_failures == 0)


def _signed_area(pts):
    return 0.5 * float(np.sum(pts.real * np.roll(pts.imag, -1)
                              - pts.imag * np.roll(pts.real, -1)))


def _winding(poly_pts, z):
    d = poly_pts - z
    ang = np.angle(np.roll(d, -1) / d)
    return int(round(np.sum(ang) / (2 * np.pi)))


def check_proper(te, tol=1e-9, samples=64, seed=0, allow_flat=()):
    """Convexity, uniform orientation, and single coverage of interior points.

    Faces in allow_flat (outer teeth folded flat by a collapsed boundary
    edge) are exempt from the convexity/orientation votes.
    """
    g = te.graph
    scale = max(te.diameter(), 1e-30)
    conv = np.zeros(g.n_vertices)
    orient = np.zeros(g.n_vertices)
    flat = set(allow_flat)
    polys = []
    for x in range(g.n_vertices):
        pts = te.pos[te.face_poly(x)]
        polys.append(pts)
        if x in flat:
            continue
        orient[x] = _signed_area(pts)
        a = np.roll(pts, -1) - pts
        crossz = np.imag(np.conj(a) * np.roll(a, -1))
        worst = -np.min(crossz * np.sign(orient[x] if orient[x] != 0 else 1.0))
        conv[x] = max(worst, 0.0) / scale ** 2
    rng = np.random.default_rng(seed)
    bpts = te.pos[te.dual.boundary]
    xlo, xhi = bpts.real.min(), bpts.real.max()
    ylo, yhi = bpts.imag.min(), bpts.imag.max()
    failures = 0
    tested = 0
    tries = 0
    keep = [x for x in range(g.n_vertices) if x not in flat]
    while tested < samples and tries < 50 * samples:
        tries += 1
        z = complex(rng.uniform(xlo, xhi), rng.uniform(ylo, yhi))
        if _winding(bpts, z) != 1 and _winding(bpts[::-1], z) != 1:
            continue
        if min(abs(b - z) for b in bpts) < 1e-3 * scale:
            continue
        cover = sum(abs(_winding(polys[x], z)) for x in keep
                    if min(abs(polys[x] - z)) > 1e-9 * scale)
        tested += 1
        if cover != 1:
            failures += 1
    return ProperReport(conv, orient, failures, tested, tol)


# ---------------------------------------------------------------------------
# Lip(kappa, delta) and Exp-Fat(delta) diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LipReport:
    kappa: float
    delta: float
    worst_ratio: float
    n_pairs: int
    violations: list

    @property
    def ok(self):
        return self.worst_ratio <= self.kappa


def check_lip(te, omap, kappa, delta, center=0.0, radius=np.inf,
              pair_cap=2_000_000, seed=0):
    """Worst |O(z') - O(z)| / |z' - z| over vertex pairs at distance >= delta.

    Exhaustive under pair_cap, otherwise a seeded subsample; region K is the
    disc |z - center| <= radius.
    """
    pos = te.pos
    om = np.asarray(omap.omap if isinstance(omap, OrigamiMap) else omap)
    mask = np.abs(pos - center) <= radius
    pts = pos[mask]
    ov = om[mask]
    n = len(pts)
    pairs_total = n * (n - 1) // 2
    idx_i, idx_j = np.triu_indices(n, k=1)
    if pairs_total > pair_cap:
        rng = np.random.default_rng(seed)
        keep = rng.choice(pairs_total, size=pair_cap, replace=False)
        idx_i, idx_j = idx_i[keep], idx_j[keep]
    dz = np.abs(pts[idx_i] - pts[idx_j])
    sel = dz >= delta
    if not np.any(sel):
        return LipReport(kappa, delta, 0.0, 0, [])
    do = np.abs(ov[idx_i[sel]] - ov[idx_j[sel]])
    ratios = do / dz[sel]
    worst = float(ratios.max())
    bad = np.flatnonzero(ratios > kappa)
    viol = [(int(idx_i[sel][t]), int(idx_j[sel][t]), float(ratios[t])) for t in bad[:32]]
    return LipReport(kappa, delta, worst, int(sel.sum()), viol)


@dataclass(frozen=True)
class ExpFatReport:
    rho: float
    n_fat: int
    n_thin: int
    max_component_diameter: float


def incircle_radius(pts):
    """Radius of the largest disc inside a convex polygon (0 for degenerate)."""
    d = len(pts)
    if d < 3:
        return 0.0
    area = _signed_area(pts)
    if area == 0:
        return 0.0
    orient = np.sign(area)
    per = float(np.sum(np.abs(np.roll(pts, -1) - pts)))
    if d == 3:
        return 2 * abs(area) / per
    # Chebyshev center of the half-plane intersection, via scipy linprog.
    from scipy.optimize import linprog
    A, bb = [], []
    for i in range(d):
        p, q = pts[i], pts[(i + 1) % d]
        e = (q - p) / abs(q - p)
        nvec = orient * 1j * e          # inward normal
        # constraint: Re(conj(nvec) (z - p)) >= r  ->  -n.x x - n.y y + r <= -n.p
        A.append([-nvec.real, -nvec.imag, 1.0])
        bb.append(-(nvec.real * p.real + nvec.imag * p.imag))
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=A, b_ub=bb, bounds=[(None, None)] * 2 + [(0, None)],
                  method="highs")
    return float(res.x[2]) if res.success else 0.0


def check_exp_fat(splitting, te, delta, beta, center=0.0, radius=np.inf):
    """Remove exp(-beta/delta)-fat faces of the splitting; measure what remains.

    Reports the max diameter of vertex-connected components of thin faces
    whose vertices lie in the disc K = {|z - center| <= radius}.
    """
    rho = float(np.exp(-beta / delta))
    faces = splitting.all_faces(te)
    thin = []
    for verts, pts in faces:
        if np.all(np.abs(pts - center) <= radius) and incircle_radius(pts) < rho:
            thin.append(verts)
    n_thin = len(thin)
    n_fat = len(faces) - n_thin
    parent = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for verts in thin:
        for v in verts:
            parent.setdefault(v, v)
        for v in verts[1:]:
            parent[find(verts[0])] = find(v)
    comps = {}
    for verts in thin:
        comps.setdefault(find(verts[0]), set()).update(verts)
    max_diam = 0.0
    for vs in comps.values():
        pts = te.pos[sorted(vs)]
        if len(pts) > 1:
            diam = float(np.max(np.abs(pts[:, None] - pts[None, :])))
            max_diam = max(max_diam, diam)
    return ExpFatReport(rho, n_fat, n_thin, max_diam)


# ---------------------------------------------------------------------------
# Splittings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitPiece:
    """One triangle (or 2-gon) of a split face.

    sides are (line_face, kind) pairs: line_face indexes the extended eta/value
    array (original faces, then outer faces, then inserted 2-gons); kind is
    'edge', 'cycle' or 'diag'.
    """

    face: int
    verts: tuple
    sides: tuple


@dataclass(frozen=True)
class Splitting:
    """Fan triangulation of all faces of one color, 2-gons on the diagonals."""

    color: int                    # color of the faces that were split
    pieces: tuple                 # SplitPiece, grouped by face in fan order
    piece_range: dict             # face -> (start, stop) into pieces
    eta_ext: np.ndarray           # eta on faces + outer faces + 2-gons
    twogon_face: tuple            # 2-gon id offset -> parent face

    def n_twogons(self):
        return len(self.twogon_face)

    def pieces_of(self, x):
        a, b = self.piece_range[x]
        return self.pieces[a:b]

    def all_faces(self, te):
        """(verts, points) for every face of the split embedding: pieces of the
        split color plus unsplit faces of the other color."""
        out = [(p.verts, te.pos[list(p.verts)]) for p in self.pieces]
        for x in range(te.graph.n_vertices):
            if te.graph.colors[x] != self.color:
                verts = tuple(te.face_poly(x))
                out.append((verts, te.pos[list(verts)]))
        return out


def _split(te, eta, color):
    g = te.graph
    n_base = g.n_vertices + te.dual.two_n
    eta_ext = list(np.asarray(eta, dtype=complex))
    pieces = []
    piece_range = {}
    twogon_face = []
    faces = g.black if color == BLACK else g.white
    for x in faces:
        x = int(x)
        walk = te.dual.face_cycle[x]
        poly = [step[0] for step in walk]
        sides_info = []
        for (v_from, v_to, kind, idx, sgn) in walk:
            if kind == CYCLE:
                sides_info.append((te.out_face_of_cycle(idx), "cycle"))
            else:
                b, w = g.edges[kind]
                other = int(w) if color == BLACK else int(b)
                sides_info.append((other, "edge"))
        d = len(poly)
        start = len(pieces)
        if d <= 3:
            pieces.append(SplitPiece(x, tuple(poly), tuple(sides_info)))
        else:
            r = int(np.argmin(poly))
            poly = poly[r:] + poly[:r]
            sides_info = sides_info[r:] + sides_info[:r]
            diag_ids = {}
            for t in range(2, d - 1):
                tg = n_base + len(twogon_face)
                diag_ids[t] = tg
                twogon_face.append(x)
                dvec = te.pos[poly[t]] - te.pos[poly[0]]
                if abs(dvec) == 0:
                    raise DegenerateEmbeddingError(f"zero-length diagonal in face {x}")
                u = dvec / abs(dvec)
                # diagonal direction must lie in conj(eta_x) conj(eta_2g) R
                eta_ext.append(np.conj(u * eta_ext[x]))
            for t in range(1, d - 1):
                first = sides_info[0] if t == 1 else (diag_ids[t], "diag")
                last = sides_info[d - 1] if t == d - 2 else (diag_ids[t + 1], "diag")
                tri = (poly[0], poly[t], poly[t + 1])
                pieces.append(SplitPiece(x, tri, (first, sides_info[t], last)))
        piece_range[x] = (start, len(pieces))
    return Splitting(color, tuple(pieces), piece_range,
                     np.asarray(eta_ext, dtype=complex), tuple(twogon_face))


def split_black(te, eta):
    """Fan-triangulate black faces; inserted diagonals become white 2-gons."""
    return _split(te, eta, BLACK)


def split_white(te, eta):
    """Fan-triangulate white faces; inserted diagonals become black 2-gons."""
    return _split(te, eta, WHITE)
