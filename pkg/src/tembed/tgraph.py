"""T-graphs of a t-embedding and their martingale random walk.

Adding alpha^2 times the origami map (white variant) or its conjugate (black
variant) collapses one color class to segments: the walk from a vertex
interior to a segment jumps to the segment endpoints with the martingale
weights, and projected primitives of t-holomorphic functions are harmonic
for it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAlphaError, InputError
from .graph import BLACK, WHITE

__all__ = [
    "TGraph", "WalkKernel", "build_tgraph", "walk_kernel", "check_harmonic",
    "harmonicity_from_tholo", "discrete_gradient", "gradient_round_trip",
    "oscillation_report",
]

WHITE_VARIANT = "white"    # T + alpha^2 O: black faces become segments
BLACK_VARIANT = "black"    # T + alpha^2 conj(O): white faces become segments


@dataclass(frozen=True)
class TGraph:
    te: object
    omap: np.ndarray
    alpha: complex
    variant: str
    pos: np.ndarray
    segment_param: dict       # face -> projection parameter per polygon vertex
    segment_dir: dict         # face -> unit direction of the segment
    carrier: np.ndarray       # dual vertex -> carrier face (-1 = absorbing)
    collinearity: float
    similarity: float

    @property
    def segment_color(self):
        return BLACK if self.variant == WHITE_VARIANT else WHITE


def build_tgraph(te, omap, eta, alpha, variant=WHITE_VARIANT, tol=1e-9,
                 allow_collapse=()):
    """Build the T-graph T + alpha^2 O (white) or T + alpha^2 conj(O) (black).

    Verifies the face-shape invariants (segment collinearity, polygon
    similarity), resolves the unique carrier segment of every vertex, and
    marks vertices interior to no segment as absorbing.  A vertex interior
    to two segments or a degenerate polygon factor raises DegenerateAlpha,
    except for faces listed in allow_collapse (e.g. the puncture face under
    alpha = i conj(eta), which degenerates to a point by design).
    """
    alpha = complex(alpha)
    if abs(abs(alpha) - 1.0) > 1e-12:
        raise InputError("alpha must be unimodular")
    om = np.asarray(omap.omap if hasattr(omap, "omap") else omap)
    if variant == WHITE_VARIANT:
        pos = te.pos + alpha ** 2 * om
    elif variant == BLACK_VARIANT:
        pos = te.pos + alpha ** 2 * np.conj(om)
    else:
        raise InputError("variant must be 'white' or 'black'")
    g = te.graph
    seg_color = BLACK if variant == WHITE_VARIANT else WHITE
    scale = max(np.ptp(pos.real), np.ptp(pos.imag), 1e-30)
    collin = 0.0
    simil = 0.0
    segment_param = {}
    segment_dir = {}
    for x in range(g.n_vertices):
        verts = te.face_poly(x)
        p = pos[verts]
        if int(g.colors[x]) == seg_color:
            d = alpha * np.conj(eta[x])
            t = np.real(np.conj(d) * p)
            perp = np.imag(np.conj(d) * p)
            collin = max(collin, np.ptp(perp) / scale)
            segment_param[x] = dict(zip(verts, t))
            segment_dir[x] = d
        else:
            factor = 1 + alpha ** 2 * eta[x] ** 2
            if abs(factor) < tol:
                if allow_collapse is not True and x not in allow_collapse:
                    raise DegenerateAlphaError(
                        f"face {x} degenerates: 1 + alpha^2 eta^2 = {factor:.2e}")
                continue
            q = te.pos[verts]
            resid = (p - p[0]) - factor * (q - q[0])
            simil = max(simil, np.max(np.abs(resid)) / scale)
    carrier = np.full(te.dual.n_dual, -1, dtype=np.int64)
    owners = [[] for _ in range(te.dual.n_dual)]
    for x, tmap in segment_param.items():
        ts = np.array(list(tmap.values()))
        lo, hi = ts.min(), ts.max()
        if hi - lo < tol * scale:
            raise DegenerateAlphaError(f"segment of face {x} has zero length")
        for v, t in tmap.items():
            if lo + tol * scale < t < hi - tol * scale:
                owners[v].append(x)
    for v in range(te.dual.n_dual):
        if len(owners[v]) > 1:
            raise DegenerateAlphaError(
                f"vertex {v} lies inside {len(owners[v])} segments; perturb alpha")
        if len(owners[v]) == 1:
            carrier[v] = owners[v][0]
    if collin > tol or simil > tol:
        raise DegenerateAlphaError(
            f"face-shape invariants fail: collinearity {collin:.2e}, "
            f"similarity {simil:.2e}")
    return TGraph(te, om, alpha, variant, pos, segment_param, segment_dir,
                  carrier, float(collin), float(simil))


@dataclass(frozen=True)
class WalkKernel:
    """Per interior vertex: the two jump targets and P(-> plus endpoint)."""

    tg: TGraph
    targets: dict             # vertex -> (v_minus, v_plus, p_plus)

    def interior_vertices(self):
        return sorted(self.targets)

    def martingale_residual(self):
        pos = self.tg.pos
        worst = 0.0
        scale = max(np.ptp(pos.real), np.ptp(pos.imag), 1e-30)
        for v, (vm, vp, p) in self.targets.items():
            e = p * pos[vp] + (1 - p) * pos[vm] - pos[v]
            worst = max(worst, abs(e) / scale)
        return worst


def walk_kernel(tg):
    """Martingale jump distribution: from x on [p-, p+], P(-> p+) = |x-p-|/|p+-p-|."""
    targets = {}
    for v in range(tg.te.dual.n_dual):
        x = int(tg.carrier[v])
        if x < 0:
            continue
        tmap = tg.segment_param[x]
        items = list(tmap.items())
        vs = [it[0] for it in items]
        ts = np.array([it[1] for it in items])
        i_lo, i_hi = int(np.argmin(ts)), int(np.argmax(ts))
        t = tmap[v]
        p_plus = (t - ts[i_lo]) / (ts[i_hi] - ts[i_lo])
        targets[v] = (vs[i_lo], vs[i_hi], float(p_plus))
    return WalkKernel(tg, targets)


def check_harmonic(kernel, H):
    """Max over interior vertices of |E[H(X_next)] - H(x)|."""
    H = np.asarray(H)
    worst = 0.0
    for v, (vm, vp, p) in kernel.targets.items():
        worst = max(worst, abs(p * H[vp] + (1 - p) * H[vm] - H[v]))
    return float(worst)


def harmonicity_from_tholo(kernel, fn, alpha):
    """Local harmonicity residual of Re(conj(alpha) I_C[F]) on the T-graph.

    The primitive increment from a vertex to a segment endpoint telescopes to
    2 F(carrier) (T(v') - T(v)) because the projected value is constant along
    the carrier face, so the martingale identity is checked without a global
    (possibly multivalued) primitive.  Vertices on the puncture face are
    skipped.
    """
    tg = kernel.tg
    te = tg.te
    expected_color = BLACK if fn.color == WHITE else WHITE
    if tg.segment_color != expected_color:
        raise InputError("variant and function color mismatch: white functions "
                         "pair with T + alpha^2 O, black with the conjugate")
    worst = 0.0
    scale = max(np.nanmax(np.abs(fn.proj)), 1e-300)
    for v, (vm, vp, p) in kernel.targets.items():
        x = int(tg.carrier[v])
        if x == fn.puncture:
            continue
        F = fn.proj[x]
        dplus = 2 * F * (te.pos[vp] - te.pos[v])
        dminus = 2 * F * (te.pos[vm] - te.pos[v])
        resid = p * np.real(np.conj(alpha) * dplus) \
            + (1 - p) * np.real(np.conj(alpha) * dminus)
        worst = max(worst, abs(resid) / scale)
    return float(worst)


def discrete_gradient(tg, H):
    """Per segment face, the complex D with dH = D dz along the segment."""
    H = np.asarray(H)
    out = {}
    for x, tmap in tg.segment_param.items():
        items = list(tmap.items())
        vs = [it[0] for it in items]
        ts = np.array([it[1] for it in items])
        i_lo, i_hi = int(np.argmin(ts)), int(np.argmax(ts))
        dz = tg.pos[vs[i_hi]] - tg.pos[vs[i_lo]]
        out[x] = (H[vs[i_hi]] - H[vs[i_lo]]) / dz
    return out


def gradient_round_trip(tg, fn, alpha):
    """Prop-style round trip: alpha * D[Re(conj(alpha) I_C[F])] recovers the
    projected values on the segment faces.  Returns the max relative error.
    """
    te = tg.te
    H = primitive_projection(tg, fn, alpha)
    grads = discrete_gradient(tg, H)
    worst = 0.0
    scale = max(np.nanmax(np.abs(fn.proj)), 1e-300)
    for x, D in grads.items():
        if x == fn.puncture:
            continue
        worst = max(worst, abs(alpha * D - fn.proj[x]) / scale)
    return float(worst)


def primitive_projection(tg, fn, alpha):
    """Global values of Re(conj(alpha) I_C[F]) on dual vertices.

    Integrates the form over a spanning tree avoiding the puncture face; the
    projection is exactly single-valued when Re(conj(alpha) monodromy) = 0
    (e.g. alpha = i conj(eta) at the puncture), and path ambiguities show up
    only as multiples of that projected monodromy.
    """
    from .tholo import primitive
    prim = primitive(tg.te, fn, base=int(tg.te.dual.boundary[0]))
    return np.real(np.conj(alpha) * prim.values)


def oscillation_report(tg, H, center, radii):
    """Oscillations of H over balls in T-graph coordinates, plus Harnack data.

    Returns rows (r, osc, n_vertices, min, max); constants give osc 0 and the
    Harnack ratio is reported as min/max over each ball (meaningful for
    positive H), with None where the ball is empty.
    """
    H = np.asarray(H, dtype=float)
    rows = []
    for r in radii:
        sel = np.abs(tg.pos - center) <= r
        sel &= np.isfinite(H)
        if not np.any(sel):
            rows.append({"r": r, "osc": None, "n": 0, "min": None, "max": None,
                         "harnack": None})
            continue
        vals = H[sel]
        osc = float(vals.max() - vals.min())
        harnack = float(vals.min() / vals.max()) if vals.max() > 0 else None
        rows.append({"r": r, "osc": osc, "n": int(sel.sum()),
                     "min": float(vals.min()), "max": float(vals.max()),
                     "harnack": harnack})
    return rows
