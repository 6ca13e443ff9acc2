"""Plateau problem for space-like surfaces in Minkowski R^{2,1}, disc side.

Given a 1-Lipschitz profile xi the boundary contour lies on the one-sheet
hyperboloid, (cos(phi), sin(phi))/cos(xi(phi)) with height tan(xi(phi)).
The solver follows Douglas: the unknown is the monotone boundary
correspondence t -> phi(t); z and theta are the harmonic (Poisson/Fourier)
extensions of the reparametrized boundary data, and the Lorentz-Dirichlet
energy  E = sum_k 2 pi |k| (|z_k|^2 - |theta_k|^2)  is minimized over
correspondences with a three-point normalization.  At the minimum the
parametrization is simultaneously conformal and harmonic.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
import scipy.optimize

from .embedding import XiFunction
from .errors import InputError, OutOfDomainError

__all__ = [
    "ConformalParam", "plateau_solve", "verify_spacelike", "invert_param",
    "deriv_coeffs", "DerivCoeffs", "psi_transform", "holomorphy_residual",
    "green_disc", "gff_npoint", "continuum_alternating_sum", "xi_from_arrays",
]


def xi_from_arrays(phi, xi):
    phi = np.asarray(phi, float)
    xi = np.asarray(xi, float)
    if abs((phi[-1] - phi[0]) - 2 * np.pi) > 1e-9:
        phi = np.append(phi, phi[0] + 2 * np.pi)
        xi = np.append(xi, xi[0])
    return XiFunction(phi, xi)


def _xi_slope(xi_fn, ang):
    ang = np.asarray(ang, float)
    a = (ang - xi_fn.phi[0]) % (2 * np.pi) + xi_fn.phi[0]
    idx = np.clip(np.searchsorted(xi_fn.phi, a, side="right") - 1, 0,
                  len(xi_fn.phi) - 2)
    num = xi_fn.xi[idx + 1] - xi_fn.xi[idx]
    den = xi_fn.phi[idx + 1] - xi_fn.phi[idx]
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(den > 1e-12, num / np.maximum(den, 1e-300), 0.0)
    return s


@dataclass
class ConformalParam:
    """Fourier data of the harmonic disc parametrization (z, theta)."""

    n: int
    t: np.ndarray                # boundary mesh angles
    phi: np.ndarray              # boundary correspondence phi(t)
    zc: np.ndarray               # fft(Z)/n, coefficient of e^{ikt}
    tc: np.ndarray               # fft(Theta)/n
    energy: float
    energy_history: np.ndarray
    residual_l2: float
    residual_max: float
    xi: object

    def _coeff_split(self, coeffs):
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)
        kmax = self.n // 2
        cpos = np.zeros(kmax + 1, dtype=complex)
        cneg = np.zeros(kmax + 1, dtype=complex)    # coefficient of conj(zeta)^m
        for kk, c in zip(k, coeffs):
            if kk >= 0 and kk <= kmax:
                cpos[kk] += c
            elif kk < 0 and -kk <= kmax:
                cneg[-kk] += c
        return cpos, cneg

    def _powers(self, zeta, coeffs):
        zeta = np.asarray(zeta, dtype=complex)
        cpos, cneg = self._coeff_split(coeffs)
        zb = np.conj(zeta)
        out = np.zeros_like(zeta)
        dout = np.zeros_like(zeta)
        outm = np.zeros_like(zeta)
        doutm = np.zeros_like(zeta)
        # Horner evaluation of the series and their first derivatives
        for c in cpos[::-1]:
            dout = dout * zeta + out
            out = out * zeta + c
        for c in cneg[::-1]:
            doutm = doutm * zb + outm
            outm = outm * zb + c
        return out + outm, dout, doutm

    def z(self, zeta):
        return self._powers(zeta, self.zc)[0]

    def theta(self, zeta):
        return self._powers(zeta, self.tc)[0]

    def dz(self, zeta):
        """(dz/dzeta, dz/dzetabar)."""
        _, dp, dm = self._powers(zeta, self.zc)
        return dp, dm

    def dtheta(self, zeta):
        _, dp, dm = self._powers(zeta, self.tc)
        return dp, dm

    def conformality(self, zeta):
        """dz dzbar/dzeta product minus dtheta dthetabar/dzeta (0 if conformal)."""
        dzp, dzm = self.dz(zeta)
        dtp, dtm = self.dtheta(zeta)
        # for real theta: d(conj theta)/dzeta = conj(dtheta/dzetabar)
        return dzp * np.conj(dzm) - dtp * np.conj(dtm)

    def boundary_points(self):
        return np.exp(1j * self.phi) / np.cos(self.xi(self.phi)), np.tan(self.xi(self.phi))


def _energy_terms(n):
    return 2 * np.pi * np.abs(np.fft.fftfreq(n, d=1.0 / n))


def _phi_from_u(u, pins, n):
    seg = n // 3
    phi = np.empty(n)
    for s in range(3):
        us = u[s * seg:(s + 1) * seg]
        p = np.exp(us - us.max())
        p = p / p.sum()
        gap = pins[s + 1] - pins[s]
        cums = np.cumsum(p)
        phi[s * seg] = pins[s]
        phi[s * seg + 1:(s + 1) * seg] = pins[s] + gap * cums[:-1]
    return phi


def _phi_jac_apply(u, g_phi, pins, n):
    """Chain rule of dE/dphi through the per-segment softmax cumsum."""
    seg = n // 3
    out = np.empty(n)
    for s in range(3):
        us = u[s * seg:(s + 1) * seg]
        p = np.exp(us - us.max())
        p = p / p.sum()
        gap = pins[s + 1] - pins[s]
        gseg = np.zeros(seg)
        gseg[1:] = g_phi[s * seg + 1:(s + 1) * seg]
        # interior node i has phi = pin + gap * C_{i-1}, C the cumsum of p,
        # so d phi_i / d u_m = gap * p_m (1[m <= i-1] - C_{i-1})
        C = np.cumsum(p)
        Ci = np.concatenate([[0.0], C[:-1]])
        inner = float(np.sum(gseg * Ci))
        suffix = np.concatenate([np.cumsum(gseg[::-1])[::-1][1:], [0.0]])
        out[s * seg:(s + 1) * seg] = gap * p * (suffix - inner)
    return out


def plateau_solve(xi_fn, mesh=192, maxiter=4000, gtol=1e-12, phi0=0.0,
                  collar=0.05, n_probe=None, margin=1e-3):
    """Douglas-type solve of the Lorentz Plateau problem for the profile xi.

    Returns the conformal-harmonic disc parametrization with the final
    L2/max conformality residuals on |zeta| <= 1 - collar.  Raises on
    profiles too close to +-pi/2.
    """
    if np.max(np.abs(xi_fn.xi)) >= np.pi / 2 - margin:
        raise InputError("sup |xi| must stay below pi/2")
    n = int(3 * round(mesh / 3))
    t = 2 * np.pi * np.arange(n) / n
    pins = phi0 + np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3, 2 * np.pi])
    terms = _energy_terms(n)
    history = []

    def z_theta(phi):
        xv = xi_fn(phi)
        Z = np.exp(1j * phi) / np.cos(xv)
        TH = np.tan(xv)
        return Z, TH, xv

    def fun(u):
        phi = _phi_from_u(u, pins, n)
        Z, TH, xv = z_theta(phi)
        zc = np.fft.fft(Z) / n
        tc = np.fft.fft(TH) / n
        E = float(np.sum(terms * (np.abs(zc) ** 2 - np.abs(tc) ** 2)))
        sl = _xi_slope(xi_fn, phi)
        dZ = 1j * Z + np.exp(1j * phi) * np.sin(xv) * sl / np.cos(xv) ** 2
        dTH = sl / np.cos(xv) ** 2
        wz = np.fft.ifft(terms * zc)
        wt = np.fft.ifft(terms * tc)
        g_phi = 2 * np.real(dZ * np.conj(wz)) - 2 * np.real(dTH * np.conj(wt))
        history.append(E)
        return E, _phi_jac_apply(u, g_phi, pins, n)

    res = scipy.optimize.minimize(fun, np.zeros(n), jac=True, method="L-BFGS-B",
                                  options={"maxiter": maxiter, "gtol": gtol,
                                           "ftol": 1e-17, "maxcor": 30})
    phi = _phi_from_u(res.x, pins, n)
    Z, TH, _ = z_theta(phi)
    param = ConformalParam(
        n=n, t=t, phi=phi, zc=np.fft.fft(Z) / n, tc=np.fft.fft(TH) / n,
        energy=float(res.fun), energy_history=np.asarray(history),
        residual_l2=np.nan, residual_max=np.nan, xi=xi_fn)
    l2, mx = conformality_residuals(param, collar=collar, n_probe=n_probe)
    param.residual_l2, param.residual_max = l2, mx
    return param


def conformality_residuals(param, collar=0.05, n_probe=None):
    """L2 and max conformality residual on the disc minus a boundary collar."""
    if n_probe is None:
        n_probe = max(24, param.n // 4)
    rr = np.linspace(0.05, 1.0 - collar, n_probe // 2)
    tt = np.linspace(0, 2 * np.pi, n_probe, endpoint=False)
    zz = rr[:, None] * np.exp(1j * tt[None, :])
    resid = param.conformality(zz)
    area_w = rr[:, None] * np.ones_like(tt)[None, :]
    l2 = float(np.sqrt(np.sum(np.abs(resid) ** 2 * area_w)
                       / np.sum(area_w)))
    return l2, float(np.max(np.abs(resid)))


def laplacian_residual(param, r=0.5, n_samples=64, h=1e-3):
    """Five-point Laplacian of z and theta at interior probes (orders h^2)."""
    rng = np.random.default_rng(0)
    pts = r * np.sqrt(rng.random(n_samples)) * np.exp(2j * np.pi * rng.random(n_samples))
    worst = 0.0
    for f in (param.z, param.theta):
        lap = (f(pts + h) + f(pts - h) + f(pts + 1j * h) + f(pts - 1j * h)
               - 4 * f(pts)) / h ** 2
        worst = max(worst, float(np.max(np.abs(lap))))
    return worst


def verify_spacelike(param, r_max=0.95, n_probe=96, hard=True):
    """Pointwise |dz/dzeta| > |dtheta/dzeta| >= |dz/dzetabar| inside r_max."""
    rr = np.linspace(0.02, r_max, n_probe // 2)
    tt = np.linspace(0, 2 * np.pi, n_probe, endpoint=False)
    zz = (rr[:, None] * np.exp(1j * tt[None, :])).ravel()
    dzp, dzm = param.dz(zz)
    dtp, _ = param.dtheta(zz)
    ratio1 = np.abs(dtp) / np.abs(dzp)
    ratio2 = np.abs(dzm) / np.maximum(np.abs(dtp), 1e-300)
    ok = bool(np.all(ratio1 < 1.0))
    report = {"max_dtheta_over_dz": float(ratio1.max()),
              "max_dzbar_over_dtheta": float(np.abs(dzm).max()
                                             / max(np.abs(dtp).max(), 1e-300)),
              "spacelike": ok,
              "second_inequality_ok": bool(np.all(np.abs(dzm) <= np.abs(dtp) + 1e-9))}
    if hard and not ok:
        raise InputError(f"surface is not space-like: max ratio {ratio1.max():.4f}")
    return report


def invert_param(param, z0, tol=1e-8, maxiter=60, grid=48):
    """zeta with z(zeta) = z0: nearest-grid seed plus 2x2 Newton refinement."""
    z0 = complex(z0)
    rr = np.linspace(0.0, 0.97, grid)
    tt = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    zz = (rr[:, None] * np.exp(1j * tt[None, :])).ravel()
    vals = param.z(zz)
    zeta = zz[int(np.argmin(np.abs(vals - z0)))]
    for _ in range(maxiter):
        f = param.z(zeta) - z0
        if abs(f) < tol:
            return complex(zeta)
        dzp, dzm = param.dz(zeta)
        # solve dzp * d + dzm * conj(d) = -f for d
        det = abs(dzp) ** 2 - abs(dzm) ** 2
        if det <= 0:
            break
        d = (-f * np.conj(dzp) + np.conj(-f) * dzm) / det
        step = 1.0
        for _ in range(30):
            cand = zeta + step * d
            if abs(cand) < 0.999 and abs(param.z(cand) - z0) < abs(f):
                zeta = cand
                break
            step *= 0.5
        else:
            break
    if abs(param.z(zeta) - z0) >= tol:
        raise OutOfDomainError(f"inversion failed for {z0}: residual "
                               f"{abs(param.z(zeta) - z0):.2e}")
    return complex(zeta)


@dataclass(frozen=True)
class DerivCoeffs:
    """Square-root derivative fields at one point of the disc.

    bpp = (dz/dzeta)^{1/2} with the branch continued along the ray from 0;
    bmp = (dtheta/dzeta)/bpp; conjugates fill the second column.  The white
    coefficients coincide for real theta.
    """

    bpp: complex
    bmp: complex

    @property
    def bpm(self):
        return np.conj(self.bmp)

    @property
    def bmm(self):
        return np.conj(self.bpp)

    def beta(self, p, r):
        table = {("+", "+"): self.bpp, ("-", "+"): self.bmp,
                 ("+", "-"): self.bpm, ("-", "-"): self.bmm}
        return table[(p, r)]

    alpha = beta     # real theta: the two coefficient families agree


def deriv_coeffs(param, zeta, n_steps=96, min_dz=1e-10):
    """Derivative coefficients at zeta with a ray-continued root branch."""
    zeta = complex(zeta)
    ts = np.linspace(0.0, 1.0, n_steps + 1)[1:]
    ray = zeta * ts if zeta != 0 else np.array([0.0 + 0.0j])
    dzp = param.dz(np.concatenate([[0.0 + 0j], ray]))[0]
    if np.min(np.abs(dzp)) < min_dz:
        raise InputError("dz/dzeta vanishes along the branch ray")
    # principal argument at 0, continued along the ray (no seam crossings)
    ang = np.angle(dzp[0]) + np.sum(np.angle(dzp[1:] / dzp[:-1]))
    root = np.sqrt(abs(dzp[-1])) * np.exp(0.5j * ang)
    dtp = param.dtheta(zeta)[0]
    return DerivCoeffs(bpp=complex(root), bmp=complex(dtp / root))


def psi_transform(f_vals, kind, coeffs):
    """psi = bpp f + bmp conj(f) (black) or with the alpha family (white)."""
    f_vals = np.asarray(f_vals, dtype=complex)
    if kind not in ("b", "w"):
        raise InputError("kind must be 'b' or 'w'")
    if np.ndim(coeffs) == 0:
        coeffs = [coeffs]
    bpp = np.array([c.bpp for c in coeffs])
    bmp = np.array([c.bmp for c in coeffs])
    return bpp * f_vals + bmp * np.conj(f_vals)


def holomorphy_residual(fn, zetas, h=1e-4):
    """Mean |d f / d zetabar| over the probe points, by central differences."""
    zetas = np.asarray(zetas, dtype=complex)
    vals = []
    for z in zetas:
        fx = (fn(z + h) - fn(z - h)) / (2 * h)
        fy = (fn(z + 1j * h) - fn(z - 1j * h)) / (2 * h)
        vals.append(0.5 * (fx + 1j * fy))
    return float(np.mean(np.abs(vals)))


def invert_psi(psi_vals, coeffs):
    """Recover f from psi = bpp f + bmp conj(f) (|bpp| > |bmp| guarantees it)."""
    psi_vals = np.asarray(psi_vals, dtype=complex)
    if np.ndim(coeffs) == 0:
        coeffs = [coeffs]
    bpp = np.array([c.bpp for c in coeffs])
    bmp = np.array([c.bmp for c in coeffs])
    det = np.abs(bpp) ** 2 - np.abs(bmp) ** 2
    return (np.conj(bpp) * psi_vals - bmp * np.conj(psi_vals)) / det


# ---------------------------------------------------------------------------
# Green functions of the unit disc and Wick sums
# ---------------------------------------------------------------------------

def green_disc(z1, z2):
    """Dirichlet Green function -(1/2pi) log |(z1-z2)/(1 - z1 conj(z2))|."""
    z1, z2 = complex(z1), complex(z2)
    if z1 == z2:
        raise InputError("Green function diverges at coincident points")
    return float(-np.log(abs((z1 - z2) / (1 - z1 * np.conj(z2)))) / (2 * np.pi))


def _pairings(items):
    if not items:
        yield []
        return
    a = items[0]
    for i in range(1, len(items)):
        rest = items[1:i] + items[i + 1:]
        for p in _pairings(rest):
            yield [(a, items[i])] + p


def gff_npoint(zetas):
    """n-point function of the disc GFF: Wick sum over pairings (0 for odd n)."""
    zetas = list(zetas)
    if len(zetas) % 2 == 1:
        return 0.0
    total = 0.0
    for pairing in _pairings(list(range(len(zetas)))):
        term = 1.0
        for (i, j) in pairing:
            term *= green_disc(zetas[i], zetas[j])
        total += term
    return total


def continuum_alternating_sum(zeta_pairs):
    """sum over r in {1,2}^n of (-1)^{r_1+...+r_n} pi^{-n/2} G_{D,n}.

    zeta_pairs is a list of (zeta_{k,1}, zeta_{k,2}); this is the continuum
    target of the discrete alternating height-correlation sum.
    """
    n = len(zeta_pairs)
    total = 0.0
    from itertools import product
    for rs in product((0, 1), repeat=n):
        pts = [zeta_pairs[k][rs[k]] for k in range(n)]
        sign = (-1) ** (n + sum(rs))
        total += sign * gff_npoint(pts)
    return total * np.pi ** (-n / 2)
