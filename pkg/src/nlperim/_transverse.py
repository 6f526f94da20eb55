"""Transverse (cross-slice) integrals for coaxial discs.

For a kernel written as k(r, t) with r the transverse radius and t the axial
gap, the slice decomposition of perimeters and interactions of bodies of
revolution needs, per pair of slices at axial gap g:

* I(rho1, rho2, g)   interaction of two coaxial discs D_rho1, D_rho2
* B(rho1, rho2, g)   interaction of D_rho1 with the complement of D_rho2
                     (equals A(rho1) M(g) - I, but is evaluated directly to
                     avoid the catastrophic cancellation at small g)
* pd(R, off, g)      potential of a disc of radius R at transverse offset off

Everything reduces to one-dimensional integrals over the difference radius w:
in n=2 the overlap of two intervals is a trapezoid in w, in n=3 the overlap
of two discs is the classical lens area.  For fractional kernels the interval
pieces have closed forms via incomplete beta functions.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import betainc, beta as beta_fn

from .geometry import unit_ball_volume
from .kernels import Kernel, transverse_mass

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


def _gl_nodes(a: np.ndarray, b: np.ndarray, panels: int):
    """Composite Gauss-Legendre nodes/weights on [a, b] per element.

    a, b broadcast to shape S; returns nodes/weights of shape S + (panels*8,).
    """
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    edges = np.linspace(0.0, 1.0, panels + 1)
    lo = a + (b - a) * edges[:-1]
    hi = a + (b - a) * edges[1:]
    mid = 0.5 * (lo[..., :, None] + hi[..., :, None])
    half = 0.5 * (hi[..., :, None] - lo[..., :, None])
    x = mid + half * _GL8_X
    w = half * _GL8_W
    return x.reshape(*x.shape[:-2], panels * 8), w.reshape(*w.shape[:-2], panels * 8)


def _graded_nodes(a, b, scale, panels: int):
    """Nodes on [a, b] geometrically refined toward a at resolution ``scale``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.asarray(scale, dtype=float), 1e-14 * np.maximum(b - a, 1e-300))
    span = np.maximum(b - a, 0.0)
    theta = np.log1p(span / scale)[..., None]
    u, wu = _gl_nodes(np.zeros_like(a), np.ones_like(b), panels)
    v = np.expm1(theta * u) / np.maximum(np.expm1(theta), 1e-300)
    jac = theta * np.exp(theta * u) / np.maximum(np.expm1(theta), 1e-300)
    x = a[..., None] + span[..., None] * v
    w = span[..., None] * jac * wu
    return x, w


# ---------------------------------------------------------------------------
# fractional closed-form pieces (n = 2)


def _frac_interval_integral(p: float, a, b, g):
    """integral over [a,b] of (w^2+g^2)^(-p) dw, vectorized; requires a<=b.

    Evaluated through the regularized incomplete beta function with argument
    x = w^2/(w^2+g^2), which is stable for w >> g.  Supports g=0 when a>0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    g = np.asarray(g, dtype=float)
    a, b, g = np.broadcast_arrays(a, b, g)
    out = np.zeros(a.shape, dtype=float)
    pos = b > a
    gz = pos & (g <= 0.0)
    if np.any(gz):  # pure power integral; requires a>0 there
        aa, bb = a[gz], b[gz]
        out[gz] = (bb ** (1.0 - 2.0 * p) - aa ** (1.0 - 2.0 * p)) / (1.0 - 2.0 * p)
    gp = pos & (g > 0.0)
    if np.any(gp):
        aa, bb, gg = a[gp], b[gp], g[gp]
        xa = aa * aa / (aa * aa + gg * gg)
        xb = bb * bb / (bb * bb + gg * gg)
        const = 0.5 * beta_fn(0.5, p - 0.5)
        out[gp] = (gg ** (1.0 - 2.0 * p) * const
                   * (betainc(0.5, p - 0.5, xb) - betainc(0.5, p - 0.5, xa)))
    return out


def _frac_interval_integral_tail(p: float, a, g):
    """integral over [a, inf) of (w^2+g^2)^(-p) dw."""
    a = np.asarray(a, dtype=float)
    g = np.asarray(g, dtype=float)
    a, g = np.broadcast_arrays(a, g)
    out = np.empty(a.shape, dtype=float)
    gz = g <= 0.0
    if np.any(gz):
        out[gz] = a[gz] ** (1.0 - 2.0 * p) / (2.0 * p - 1.0)
    gp = ~gz
    if np.any(gp):
        aa, gg = a[gp], g[gp]
        xa = aa * aa / (aa * aa + gg * gg)
        const = 0.5 * beta_fn(0.5, p - 0.5)
        out[gp] = gg ** (1.0 - 2.0 * p) * const * (1.0 - betainc(0.5, p - 0.5, xa))
    return out


def _w_moment(p: float, a, b, g):
    """integral over [a,b] of w (w^2+g^2)^(-p) dw (closed form, any g>=0)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    g = np.asarray(g, dtype=float)
    q = 1.0 - p
    return ((b * b + g * g) ** q - (a * a + g * g) ** q) / (2.0 * q)


def _w_moment_tail(p: float, a, g):
    a = np.asarray(a, dtype=float)
    g = np.asarray(g, dtype=float)
    return (a * a + g * g) ** (1.0 - p) / (2.0 * (p - 1.0))


# ---------------------------------------------------------------------------
# lens area (n = 3 transverse overlap)


def lens_area(a, b, d):
    """Area of the intersection of two discs with radii a, b and center
    distance d (all vectorized)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = np.asarray(d, dtype=float)
    a, b, d = np.broadcast_arrays(a, b, d)
    rmin = np.minimum(a, b)
    out = np.where(d <= np.abs(a - b), math.pi * rmin * rmin, 0.0)
    mid = (d > np.abs(a - b)) & (d < a + b) & (rmin > 0)
    if np.any(mid):
        aa, bb, dd = a[mid], b[mid], d[mid]
        ca = np.clip((dd * dd + aa * aa - bb * bb) / (2.0 * dd * aa), -1.0, 1.0)
        cb = np.clip((dd * dd + bb * bb - aa * aa) / (2.0 * dd * bb), -1.0, 1.0)
        t = ((aa + bb) ** 2 - dd * dd) * (dd * dd - (aa - bb) ** 2)
        out[mid] = (aa * aa * np.arccos(ca) + bb * bb * np.arccos(cb)
                    - 0.5 * np.sqrt(np.maximum(t, 0.0)))
    return out


# ---------------------------------------------------------------------------
# disc / complement-of-disc interaction


def disc_complement_interaction(kernel: Kernel, rho1, rho2, gap,
                                panels: int = 12) -> np.ndarray:
    """B = interaction of D_rho1 with the complement of D_rho2 at axial gap g.

    This is the slice integrand of P_K for bodies of revolution; it behaves
    like g^{-s} when rho1 = rho2 and like (rho1-rho2) M(g) when rho1 > rho2.
    """
    rho1 = np.asarray(rho1, dtype=float)
    rho2 = np.asarray(rho2, dtype=float)
    g = np.asarray(gap, dtype=float)
    rho1, rho2, g = np.broadcast_arrays(rho1, rho2, g)
    n = kernel.dim
    if n == 1:
        # slices are points; B = k(0,g) when the source slice exists and the
        # other slice is empty
        val = kernel.k_rt(np.zeros_like(g), g)
        return np.where((rho1 > 0) & (rho2 <= 0), val, 0.0)
    delta = np.abs(rho1 - rho2)
    sigma_r = rho1 + rho2
    if n == 2:
        if kernel.form == "fractional":
            p = (2.0 + kernel.s) / 2.0
            near = 2.0 * np.maximum(rho1 - rho2, 0.0) * _frac_interval_integral(p, 0.0, delta, g)
            ramp_c = (rho1 - rho2) * _frac_interval_integral(p, delta, sigma_r, g)
            ramp_w = _w_moment(p, delta, sigma_r, g)
            far = 2.0 * rho1 * _frac_interval_integral_tail(p, sigma_r, g)
            return 2.0 * (near + ramp_c + ramp_w + far)
        return _disc_complement_radial_2d(kernel, rho1, rho2, g, panels)
    # n == 3
    if kernel.form == "fractional":
        p = (3.0 + kernel.s) / 2.0
        q_near = math.pi * np.maximum(rho1 * rho1 - rho2 * rho2, 0.0)
        near = q_near * _w_moment(p, 0.0, delta, g)
        far = math.pi * rho1 * rho1 * _w_moment_tail(p, sigma_r, g)
        w, wt = _graded_nodes(delta, sigma_r, np.maximum(g, 1e-3 * np.maximum(sigma_r, 1e-300)), panels)
        qmid = math.pi * rho1[..., None] ** 2 - lens_area(rho1[..., None], rho2[..., None], w)
        kk = (w * w + g[..., None] ** 2) ** (-p)
        mid = np.sum(kk * qmid * w * wt, axis=-1)
        return 2.0 * math.pi * (near + mid + far)
    return _disc_complement_radial_3d(kernel, rho1, rho2, g, panels)


def _phi_wg(kernel: Kernel, w, g):
    return kernel.k_rt(w, np.broadcast_to(np.asarray(g)[..., None], w.shape))


def _disc_complement_radial_2d(kernel, rho1, rho2, g, panels):
    delta = np.abs(rho1 - rho2)
    sigma_r = rho1 + rho2
    scale = np.maximum(g, 1e-6 * np.maximum(sigma_r, 1e-300))
    out = np.zeros(rho1.shape, dtype=float)
    # [0, delta]: constant 2 (rho1-rho2)^+
    coef = 2.0 * np.maximum(rho1 - rho2, 0.0)
    w, wt = _graded_nodes(np.zeros_like(delta), delta, scale, panels)
    out += coef * np.sum(_phi_wg(kernel, w, g) * wt, axis=-1)
    # [delta, sigma]: w + (rho1 - rho2)
    w, wt = _graded_nodes(delta, sigma_r, scale, panels)
    out += np.sum(_phi_wg(kernel, w, g) * (w + (rho1 - rho2)[..., None]) * wt, axis=-1)
    # tail: constant 2 rho1, integrate to an effective infinity
    far = _radial_far_cut(kernel, sigma_r, g)
    w, wt = _graded_nodes(sigma_r, far, np.maximum(sigma_r, scale), panels)
    out += 2.0 * rho1 * np.sum(_phi_wg(kernel, w, g) * wt, axis=-1)
    return 2.0 * out


def _disc_complement_radial_3d(kernel, rho1, rho2, g, panels):
    delta = np.abs(rho1 - rho2)
    sigma_r = rho1 + rho2
    scale = np.maximum(g, 1e-6 * np.maximum(sigma_r, 1e-300))
    q_near = math.pi * np.maximum(rho1 * rho1 - rho2 * rho2, 0.0)
    w, wt = _graded_nodes(np.zeros_like(delta), delta, scale, panels)
    near = q_near * np.sum(_phi_wg(kernel, w, g) * w * wt, axis=-1)
    w, wt = _graded_nodes(delta, sigma_r, scale, panels)
    qmid = math.pi * rho1[..., None] ** 2 - lens_area(rho1[..., None], rho2[..., None], w)
    mid = np.sum(_phi_wg(kernel, w, g) * qmid * w * wt, axis=-1)
    far_cut = _radial_far_cut(kernel, sigma_r, g)
    w, wt = _graded_nodes(sigma_r, far_cut, np.maximum(sigma_r, scale), panels)
    far = math.pi * rho1 * rho1 * np.sum(_phi_wg(kernel, w, g) * w * wt, axis=-1)
    return 2.0 * math.pi * (near + mid + far)


def _radial_far_cut(kernel, sigma_r, g):
    # far cutoff for tabulated/callable radial kernels; sigma < inf guarantees
    # the truncated mass beyond 1e6 * scale is negligible
    base = np.maximum(sigma_r, np.asarray(g, dtype=float))
    return np.maximum(base, 1.0) * 1e6


def disc_disc_interaction(kernel: Kernel, rho1, rho2, gap,
                          panels: int = 12) -> np.ndarray:
    """I = double integral of k(|y-y'|, g) over D_rho1 x D_rho2 (coaxial).

    Computed as A(min) M(g) - B(min, max); near g=0 the relative size of B is
    O(g), so the subtraction is well conditioned.
    """
    rho1 = np.asarray(rho1, dtype=float)
    rho2 = np.asarray(rho2, dtype=float)
    g = np.asarray(gap, dtype=float)
    rho1, rho2, g = np.broadcast_arrays(rho1, rho2, g)
    lo = np.minimum(rho1, rho2)
    hi = np.maximum(rho1, rho2)
    n = kernel.dim
    if n == 1:
        val = kernel.k_rt(np.zeros_like(g), g)
        return np.where((lo > 0), val, 0.0)
    area_lo = unit_ball_volume(n - 1) * lo ** (n - 1)
    M = transverse_mass(kernel, np.maximum(g, 1e-300))
    B = disc_complement_interaction(kernel, lo, hi, g, panels)
    return np.maximum(area_lo * M - B, 0.0)


def point_disc_potential(kernel: Kernel, R, off, gap,
                         panels: int = 12) -> np.ndarray:
    """Potential of a disc of radius R at transverse offset ``off``, gap g."""
    R = np.asarray(R, dtype=float)
    off = np.asarray(off, dtype=float)
    g = np.asarray(gap, dtype=float)
    R, off, g = np.broadcast_arrays(R, off, g)
    n = kernel.dim
    if n == 1:
        return np.where(R > 0, kernel.k_rt(np.zeros_like(g), g), 0.0)
    if n == 2:
        a = off - R
        b = off + R
        if kernel.form == "fractional":
            p = (2.0 + kernel.s) / 2.0
            neg = -np.minimum(a, 0.0)
            pos_lo = np.maximum(a, 0.0)
            return (_frac_interval_integral(p, 0.0, neg, g)
                    + _frac_interval_integral(p, pos_lo, np.maximum(b, pos_lo), g))
        scale = np.maximum(g, 1e-6 * np.maximum(b, 1e-300))
        neg = -np.minimum(a, 0.0)
        w, wt = _graded_nodes(np.zeros_like(neg), neg, scale, panels)
        out = np.sum(_phi_wg(kernel, w, g) * wt, axis=-1)
        w, wt = _graded_nodes(np.maximum(a, 0.0), np.maximum(b, np.maximum(a, 0.0)),
                              scale, panels)
        out += np.sum(_phi_wg(kernel, w, g) * wt, axis=-1)
        return out
    # n == 3: integral of k(u,g) arc(u; off, R) du
    lo = np.abs(off - R)
    hi = off + R
    scale = np.maximum(g, 1e-6 * np.maximum(hi, 1e-300))
    out = np.zeros(R.shape, dtype=float)
    inner = np.maximum(R - off, 0.0)  # full circles of radius u < R - off
    if kernel.form == "fractional":
        p = (3.0 + kernel.s) / 2.0
        out += 2.0 * math.pi * _w_moment(p, 0.0, inner, g)
    else:
        w, wt = _graded_nodes(np.zeros_like(inner), inner, scale, panels)
        out += 2.0 * math.pi * np.sum(_phi_wg(kernel, w, g) * w * wt, axis=-1)
    w, wt = _graded_nodes(lo, hi, scale, panels)
    offb = off[..., None]
    Rb = R[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ca = np.where(offb * w > 0,
                      (offb ** 2 + w * w - Rb ** 2) / (2.0 * offb * w), -1.0)
    arc = 2.0 * np.arccos(np.clip(ca, -1.0, 1.0))
    kk = kernel.k_rt(w, np.broadcast_to(g[..., None], w.shape))
    out += np.sum(kk * arc * w * wt, axis=-1)
    return out
