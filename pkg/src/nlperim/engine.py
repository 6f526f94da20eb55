"""Evaluation engine for kernel perimeters and interaction energies.

Three families of backends:

* closed / quadrature forms in dimension one,
* a deterministic slice backend for bodies of revolution (profile bodies,
  balls, cones, and centered boxes in the plane), built on the transverse
  disc integrals of :mod:`nlperim._transverse`,
* a Monte Carlo backend for general convex bodies, using a mixture proposal
  (uniform over the bounding box plus boundary-layer prisms) whose density is
  known exactly, so the weight of every sample is bounded and the reported
  standard error is honest for every order s in (0, 1).

All Monte Carlo paths draw from counter-based Philox streams keyed by
``(seed, stratum)`` and reduce stratum results in a fixed order, so results
are bitwise reproducible for any worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import kernels as kr
from . import _transverse as tv
from .geometry import ConvexBody, Box, Ball, Cone, Polytope, ProfileBody, unit_ball_volume


class EngineError(Exception):
    pass


class SingularEvaluation(EngineError):
    """The requested quantity is infinite or undefined (e.g. the interaction
    of overlapping bodies under a non-integrable kernel)."""


class UnsupportedGeometry(EngineError):
    pass


class BudgetExceeded(EngineError):
    """Sample budget ran out before the accuracy target was met.

    Carries the partial result in ``estimate``.
    """

    def __init__(self, message: str, estimate: "Estimate"):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class AccuracySpec:
    """Accuracy contract for an evaluation.

    ``rel_tol`` is the target relative error, ``abs_floor`` the absolute
    error below which the target counts as met regardless of the relative
    one, and ``max_samples`` caps the number of (outer) Monte Carlo points.
    """

    rel_tol: float = 1e-3
    abs_floor: float = 1e-9
    max_samples: int = 100_000_000

    def target(self, value: float) -> float:
        return max(self.rel_tol * abs(value), self.abs_floor)


DEFAULT_ACCURACY = AccuracySpec()


@dataclass
class Estimate:
    """A numerical value with an error assessment.

    For Monte Carlo methods ``error`` is one standard error; for
    deterministic methods it is a refinement-based error estimate.
    """

    value: float
    error: float
    method: str
    samples: int = 0
    detail: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


_BATCH = 4096
_MIN_STRATA = 8
_INNER = 16
_DEPTH_EPS = 1e-13


# ---------------------------------------------------------------------------
# quadrature helpers

_GLX, _GLW = np.polynomial.legendre.leggauss(8)


def _panel_nodes(a: float, b: float, panels: int):
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1, None] + edges[1:, None])
    half = 0.5 * (edges[1:, None] - edges[:-1, None])
    return (mid + half * _GLX).ravel(), (half * np.broadcast_to(_GLW, half.shape * 0 + (panels, 8))).ravel()


def _power_graded(a: float, b: float, expnt: float, panels: int):
    """Nodes/weights on (a, b) for integrands behaving like (x-a)^(-expnt).

    Substitutes x = a + (b-a) v^(1/(1-expnt)); the transformed integrand is
    bounded at v = 0.
    """
    q = 1.0 / (1.0 - expnt)
    v, wv = _panel_nodes(0.0, 1.0, panels)
    x = a + (b - a) * v ** q
    w = (b - a) * q * v ** (q - 1.0) * wv
    return x, w


def _grading_exponent(kernel) -> float:
    return kernel.s if kernel.form == "fractional" else 0.5


# ---------------------------------------------------------------------------
# dimension one: closed forms / direct quadrature

def _tail1(kernel, eta):
    """One-sided line tail: integral over (eta, inf) of k."""
    eta = np.asarray(eta, dtype=float)
    if kernel.form == "fractional":
        return eta ** (-kernel.s) / kernel.s
    # radial n=1: reuse the radial tail machinery (n omega_n prefactor is 2)
    return 0.5 * kr.radial_tail(kernel, eta)


def _perimeter_1d(kernel, length: float) -> Estimate:
    if kernel.form == "fractional":
        s = kernel.s
        val = 2.0 * length ** (1.0 - s) / (s * (1.0 - s))
        return Estimate(val, 1e-15 * abs(val), "closed")
    # both ends contribute the same one-sided tail by symmetry
    x, w = _power_graded(0.0, length, 0.5, 24)
    val = 2.0 * float(np.sum(_tail1(kernel, x) * w))
    xh, wh = _power_graded(0.0, length, 0.5, 12)
    half = 2.0 * float(np.sum(_tail1(kernel, xh) * wh))
    return Estimate(val, abs(val - half) + 1e-14 * abs(val), "quad")


def _interaction_1d(kernel, seg1, seg2) -> Estimate:
    (a1, b1), (a2, b2) = sorted([tuple(map(float, seg1)), tuple(map(float, seg2))])
    if a2 < b1 - 1e-15 * max(abs(a1), abs(b2), 1.0):
        raise SingularEvaluation("segments overlap; interaction diverges")
    if kernel.form == "fractional":
        s = kernel.s

        def K2(d):
            # second antiderivative of d^(-1-s)
            return -d ** (1.0 - s) / (s * (1.0 - s))

        val = K2(b2 - a1) - K2(max(a2 - a1, 0.0)) - K2(max(b2 - b1, 0.0)) + K2(max(a2 - b1, 0.0))
        return Estimate(val, 1e-14 * abs(val), "closed")

    def value(panels):
        x, w = _power_graded(0.0, b1 - a1, 0.5, panels)
        t = b1 - x  # graded toward the facing end b1
        return float(np.sum((_tail1(kernel, a2 - t) - _tail1(kernel, b2 - t)) * w))

    v = value(24)
    vh = value(12)
    return Estimate(v, abs(v - vh) + 1e-14 * abs(v), "quad")


def _potential_1d(kernel, seg, x: float) -> Estimate:
    a, b = map(float, seg)
    if a <= x <= b:
        raise SingularEvaluation("evaluation point inside the body")
    d_near = a - x if x < a else x - b
    d_far = b - x if x < a else x - a
    val = float(_tail1(kernel, d_near) - _tail1(kernel, d_far))
    return Estimate(val, 1e-14 * abs(val), "closed" if kernel.form == "fractional" else "quad")


# ---------------------------------------------------------------------------
# slice backend (bodies of revolution)


def _as_profile_arrays(body: ConvexBody):
    """Axis, anchor and (t, r) arrays for revolution-symmetric bodies.

    Returns None when the body has no usable axis of symmetry.
    """
    shape = body.shape
    n = body.dim
    if isinstance(shape, ProfileBody):
        return np.asarray(shape.axis), np.asarray(shape.anchor), np.asarray(shape.t_grid), np.asarray(shape.radii)
    if isinstance(shape, Ball):
        prof = geo.ball_as_profile(body).shape
        return np.asarray(prof.axis), np.asarray(prof.anchor), np.asarray(prof.t_grid), np.asarray(prof.radii)
    if isinstance(shape, Cone):
        prof = geo.cone_as_profile(body).shape
        return np.asarray(prof.axis), np.asarray(prof.anchor), np.asarray(prof.t_grid), np.asarray(prof.radii)
    if isinstance(shape, Box) and n == 2:
        lo, hi = np.asarray(shape.lo), np.asarray(shape.hi)
        axis = np.array([1.0, 0.0])
        anchor = np.array([lo[0], 0.5 * (lo[1] + hi[1])])
        t = np.array([0.0, hi[0] - lo[0]])
        r = np.full(2, 0.5 * (hi[1] - lo[1]))
        return axis, anchor, t, r
    return None


def _slice_panel_counts(accuracy: AccuracySpec):
    boost = max(1.0, (1e-3 / max(accuracy.rel_tol, 1e-12)) ** 0.25)
    pu = int(min(36, round(12 * boost)))
    pt = int(min(48, round(20 * boost)))
    return pu, pt


def _perimeter_slice(body: ConvexBody, kernel, accuracy: AccuracySpec) -> Estimate:
    prof = _as_profile_arrays(body)
    if prof is None:
        raise UnsupportedGeometry("slice backend needs a body of revolution")
    _, _, t, r = prof
    n = body.dim
    t0, tm = float(t[0]), float(t[-1])
    T = tm - t0
    if T <= 0:
        return Estimate(0.0, 0.0, "slice")
    a_gr = _grading_exponent(kernel)
    area_coef = unit_ball_volume(n - 1)

    def R_of(x):
        return np.interp(x, t, r)

    def ends(pu):
        # integral of A(t) [M1(t-t0) + M1(tm-t)] dt, graded toward each end
        x, w = _power_graded(0.0, 0.5 * T, a_gr, pu)
        lo = float(np.sum(area_coef * R_of(t0 + x) ** (n - 1)
                          * kr.transverse_mass_tail(kernel, x) * w))
        hi = float(np.sum(area_coef * R_of(tm - x) ** (n - 1)
                          * kr.transverse_mass_tail(kernel, x) * w))
        # far halves, where the tail factor is smooth
        xc, wc = _panel_nodes(0.0, 0.5 * T, pu)
        m1_far = kr.transverse_mass_tail(kernel, 0.5 * T + xc)
        lo2 = float(np.sum(area_coef * R_of(t0 + 0.5 * T + xc) ** (n - 1) * m1_far * wc))
        hi2 = float(np.sum(area_coef * R_of(tm - 0.5 * T - xc) ** (n - 1) * m1_far * wc))
        return lo + hi + lo2 + hi2

    def double(pu, pt):
        u, wu = _power_graded(0.0, T, a_gr, pu)
        total = 0.0
        for uj, wj in zip(u, wu):
            x, wx = _panel_nodes(t0 + uj, tm, pt)
            ra = R_of(x)
            rb = R_of(x - uj)
            g = np.full_like(x, uj)
            bsym = (tv.disc_complement_interaction(kernel, ra, rb, g)
                    + tv.disc_complement_interaction(kernel, rb, ra, g))
            total += wj * float(np.sum(bsym * wx))
        return total

    pu, pt = _slice_panel_counts(accuracy)
    val = ends(pu) + double(pu, pt)
    half = ends(max(4, pu // 2)) + double(max(4, pu // 2), max(6, pt // 2))
    err = abs(val - half) + 1e-13 * abs(val)
    return Estimate(val, err, "slice", detail={"panels": [pu, pt]})


def _axis_line_offset(axis, anchor, point):
    d = np.asarray(point, dtype=float) - np.asarray(anchor, dtype=float)
    along = float(np.dot(d, axis))
    return np.linalg.norm(d - along * np.asarray(axis))


def _common_axis_profiles(E: ConvexBody, F: ConvexBody):
    """Profiles of E and F in a shared axial coordinate, or None."""
    pe = _as_profile_arrays(E)
    pf = _as_profile_arrays(F)
    if pe is None or pf is None:
        return None
    tol = 1e-9 * max(geo.body_scale(E), geo.body_scale(F))
    axE, anE, tE, rE = pe
    axF, anF, tF, rF = pf
    ball_E = isinstance(E.shape, Ball)
    ball_F = isinstance(F.shape, Ball)
    if ball_E and ball_F:
        d = np.asarray(F.shape.center, dtype=float) - np.asarray(E.shape.center, dtype=float)
        nd = np.linalg.norm(d)
        if nd <= tol:
            return None
        axis = d / nd
    elif ball_E:
        axis = axF
        if _axis_line_offset(axF, anF, E.shape.center) > tol:
            return None
    elif ball_F:
        axis = axE
        if _axis_line_offset(axE, anE, F.shape.center) > tol:
            return None
    else:
        if abs(abs(float(np.dot(axE, axF))) - 1.0) > 1e-12:
            return None
        axis = axE
        if _axis_line_offset(axE, anE, anF) > tol:
            return None

    def in_axis(ax0, an0, t, r):
        c = float(np.dot(np.asarray(an0, dtype=float), axis))
        d = float(np.dot(np.asarray(ax0, dtype=float), axis))
        tt = c + d * np.asarray(t, dtype=float)
        if d < 0:
            return tt[::-1].copy(), np.asarray(r)[::-1].copy()
        return tt, np.asarray(r).copy()

    if ball_E:
        prof = geo.ball_as_profile(E, axis=axis).shape
        axE, anE = np.asarray(prof.axis), np.asarray(prof.anchor)
        tE, rE = np.asarray(prof.t_grid), np.asarray(prof.radii)
    if ball_F:
        prof = geo.ball_as_profile(F, axis=axis).shape
        axF, anF = np.asarray(prof.axis), np.asarray(prof.anchor)
        tF, rF = np.asarray(prof.t_grid), np.asarray(prof.radii)
    sE = in_axis(axE, anE, tE, rE)
    sF = in_axis(axF, anF, tF, rF)
    return sE, sF


def _interaction_slice(kernel, segE, segF, accuracy: AccuracySpec) -> Estimate:
    (tE, rE), (tF, rF) = segE, segF
    if tE[0] > tF[0]:
        (tE, rE), (tF, rF) = (tF, rF), (tE, rE)
    gap = float(tF[0] - tE[-1])
    span = float(tE[-1] - tE[0] + tF[-1] - tF[0])
    if gap < -1e-9 * span:
        raise SingularEvaluation("coaxial bodies overlap along the axis")
    gap = max(gap, 0.0)

    def value(pu, pt):
        # grade toward the facing ends with resolution ~ the axial gap
        xe, we = tv._graded_nodes(np.array(0.0), np.array(tE[-1] - tE[0]),
                                  np.array(max(gap, 1e-9 * (tE[-1] - tE[0] + 1))), pu)
        te = tE[-1] - xe
        total = 0.0
        for tj, wj in zip(np.atleast_1d(te.ravel()), np.atleast_1d(we.ravel())):
            xf, wf = tv._graded_nodes(np.array(0.0), np.array(tF[-1] - tF[0]),
                                      np.array(max(gap + (tE[-1] - tj), 1e-9)), pt)
            tf = tF[0] + xf.ravel()
            I = tv.disc_disc_interaction(kernel, np.interp(tj, tE, rE),
                                         np.interp(tf, tF, rF), tf - tj)
            total += wj * float(np.sum(I * wf.ravel()))
        return total

    pu, pt = _slice_panel_counts(accuracy)
    v = value(pu, pt)
    vh = value(max(4, pu // 2), max(6, pt // 2))
    return Estimate(v, abs(v - vh) + 1e-13 * abs(v), "slice", detail={"gap": gap})


def _potential_slice(body: ConvexBody, kernel, x, accuracy: AccuracySpec) -> Estimate:
    axis, anchor, t, r = _as_profile_arrays(body)
    d = np.asarray(x, dtype=float) - anchor
    tx = float(np.dot(d, axis))
    off = float(np.linalg.norm(d - tx * axis))
    dist = geo.point_distance(body, x)
    if dist <= 0:
        raise SingularEvaluation("evaluation point touches the body")
    t0, tm = float(t[0]), float(t[-1])
    tstar = min(max(tx, t0), tm)

    def value(panels):
        total = 0.0
        for (a, b) in ((t0, tstar), (tstar, tm)):
            if b - a <= 0:
                continue
            xs, ws = tv._graded_nodes(np.array(0.0), np.array(b - a), np.array(max(dist, 1e-12)), panels)
            # grade toward the end nearest to the evaluation point
            tau = (b - xs.ravel()) if b == tstar else (a + xs.ravel())
            pd = tv.point_disc_potential(kernel, np.interp(tau, t, r), off, np.abs(tau - tx))
            total += float(np.sum(pd * ws.ravel()))
        return total

    v = value(16)
    vh = value(8)
    return Estimate(v, abs(v - vh) + 1e-13 * abs(v), "slice")


# ---------------------------------------------------------------------------
# Monte Carlo backend: boundary-layer prism samplers


class _PieceGroup:
    """Common interface: ``k`` atoms with ``areas``; ``sample(rng, m, ids)``
    draws points for local atom indices, ``density(X)`` returns the (m, k)
    matrix of per-atom proposal densities (normalized per atom).

    A sampler is honest only if each group's density describes exactly the
    distribution its sampler draws from; every group below satisfies this by
    construction, with no geometric approximation of the body boundary."""


# Depth law within a prism: pdf proportional to t^(-s_exp) on
# [_TFLOOR_REL * tmax, tmax].  The floor keeps sampled depths far above
# float round-off, so the density routine always recognizes its own samples;
# without it, samples drawn essentially on the boundary get density zero and
# the weight blows up.
_TFLOOR_REL = 1e-9


def _depth_draw(rng, m, tmax, s_exp):
    lo = (_TFLOOR_REL * tmax) ** (1.0 - s_exp)
    hi = tmax ** (1.0 - s_exp)
    return (lo + rng.random(m) * (hi - lo)) ** (1.0 / (1.0 - s_exp))


def _depth_pdf(tdep, tmax, s_exp):
    tfloor = _TFLOOR_REL * tmax
    norm = tmax ** (1.0 - s_exp) - tfloor ** (1.0 - s_exp)
    ok = (tdep >= tfloor * (1.0 - 1e-9)) & (tdep <= tmax)
    t = np.clip(tdep, tfloor, tmax)
    return np.where(ok, (1.0 - s_exp) * t ** (-s_exp) / norm, 0.0)


class _SpherePiece(_PieceGroup):
    k = 1

    def __init__(self, center, radius, dim, tmax, s_exp):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.dim = dim
        self.tmax = float(tmax)
        self.s_exp = s_exp
        self.areas = np.array([dim * unit_ball_volume(dim) * radius ** (dim - 1)])

    def sample(self, rng, m, ids):
        z = rng.standard_normal((m, self.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        tdep = _depth_draw(rng, m, self.tmax, self.s_exp)
        return self.center + (self.radius - tdep)[:, None] * z

    def density(self, X):
        rho = np.linalg.norm(X - self.center, axis=1)
        tdep = self.radius - rho
        pt = _depth_pdf(tdep, self.tmax, self.s_exp)
        out = np.where(rho > 0, pt / self.areas[0]
                       * (self.radius / np.maximum(rho, 1e-300)) ** (self.dim - 1), 0.0)
        return out[:, None]


class _PolygonPiece(_PieceGroup):
    """Prism over one flat convex polygon facet (n=3)."""

    k = 1

    def __init__(self, verts, inward, tmax, s_exp):
        self.verts = np.asarray(verts, dtype=float)
        self.inward = np.asarray(inward, dtype=float)
        self.tmax = float(tmax)
        self.s_exp = s_exp
        v0 = self.verts[0]
        cross = np.cross(self.verts[1:-1] - v0, self.verts[2:] - v0)
        self.tri_areas = 0.5 * np.linalg.norm(cross, axis=1)
        self.areas = np.array([float(np.sum(self.tri_areas))])
        e1 = self.verts[1] - v0
        self.u1 = e1 / np.linalg.norm(e1)
        self.u2 = np.cross(self.inward, self.u1)
        self.poly2 = np.column_stack([(self.verts - v0) @ self.u1,
                                      (self.verts - v0) @ self.u2])
        sa = 0.0
        for i in range(len(self.poly2)):
            a, b = self.poly2[i], self.poly2[(i + 1) % len(self.poly2)]
            sa += a[0] * b[1] - a[1] * b[0]
        self.orient = 1.0 if sa >= 0 else -1.0

    def sample(self, rng, m, ids):
        idx = rng.choice(len(self.tri_areas), size=m,
                         p=self.tri_areas / self.tri_areas.sum())
        r1 = np.sqrt(rng.random(m))[:, None]
        r2 = rng.random(m)[:, None]
        a, b, c = self.verts[0], self.verts[1 + idx], self.verts[2 + idx]
        base = (1 - r1) * a + r1 * (1 - r2) * b + r1 * r2 * c
        tdep = _depth_draw(rng, m, self.tmax, self.s_exp)
        return base + tdep[:, None] * self.inward

    def density(self, X):
        rel = X - self.verts[0]
        tdep = rel @ self.inward
        pt = _depth_pdf(tdep, self.tmax, self.s_exp)
        out = np.zeros(len(X))
        ok = pt > 0
        if np.any(ok):
            foot = rel[ok] - tdep[ok, None] * self.inward
            p = np.column_stack([foot @ self.u1, foot @ self.u2])
            inside = np.ones(len(p), dtype=bool)
            mv = len(self.poly2)
            for i in range(mv):
                a, b = self.poly2[i], self.poly2[(i + 1) % mv]
                e = b - a
                inside &= self.orient * (e[0] * (p[:, 1] - a[1])
                                         - e[1] * (p[:, 0] - a[0])) >= -1e-12
            sel = np.where(ok)[0][inside]
            out[sel] = pt[ok][inside] / self.areas[0]
        return out[:, None]


class _DiscCapPiece(_PieceGroup):
    """Prism over a flat disc cap of a 3D revolution body."""

    k = 1

    def __init__(self, center, axis, radius, inward_sign, tmax, s_exp):
        self.center = np.asarray(center, dtype=float)
        self.axis = np.asarray(axis, dtype=float)
        self.radius = float(radius)
        self.inward = inward_sign * self.axis
        self.tmax = float(tmax)
        self.s_exp = s_exp
        self.areas = np.array([math.pi * radius * radius])
        self.e1 = _orthonormal_to(self.axis)
        self.e2 = np.cross(self.axis, self.e1)

    def sample(self, rng, m, ids):
        rr = self.radius * np.sqrt(rng.random(m))
        psi = 2.0 * math.pi * rng.random(m)
        base = (self.center + rr[:, None] * (np.cos(psi)[:, None] * self.e1
                                             + np.sin(psi)[:, None] * self.e2))
        tdep = _depth_draw(rng, m, self.tmax, self.s_exp)
        return base + tdep[:, None] * self.inward

    def density(self, X):
        rel = X - self.center
        tdep = rel @ self.inward
        foot = rel - tdep[:, None] * self.inward
        pt = _depth_pdf(tdep, self.tmax, self.s_exp)
        ok = np.linalg.norm(foot, axis=1) <= self.radius
        return np.where(ok, pt / self.areas[0], 0.0)[:, None]


class _SegmentGroup(_PieceGroup):
    """Prisms over the edges of a planar convex polygon, vectorized."""

    def __init__(self, ring, tmax, s_exp, clockwise):
        ring = np.asarray(ring, dtype=float)
        m = len(ring)
        keep_a, keep_b = [], []
        for i in range(m):
            a, b = ring[i], ring[(i + 1) % m]
            if np.linalg.norm(b - a) > 1e-14 * (np.abs(ring).max() + 1.0):
                keep_a.append(a)
                keep_b.append(b)
        self.a = np.array(keep_a)
        self.b = np.array(keep_b)
        e = self.b - self.a
        self.len = np.linalg.norm(e, axis=1)
        self.dir = e / self.len[:, None]
        sgn = -1.0 if clockwise else 1.0
        self.nrm = sgn * np.column_stack([-self.dir[:, 1], self.dir[:, 0]])
        self.k = len(self.a)
        self.areas = self.len.copy()
        self.tmax = float(tmax)
        self.s_exp = s_exp

    def sample(self, rng, m, ids):
        lam = rng.random(m)
        base = self.a[ids] + lam[:, None] * (self.b[ids] - self.a[ids])
        tdep = _depth_draw(rng, m, self.tmax, self.s_exp)
        return base + tdep[:, None] * self.nrm[ids]

    def density(self, X):
        d = X[:, None, :] - self.a[None, :, :]
        tdep = np.einsum("mki,ki->mk", d, self.nrm)
        lam = np.einsum("mki,ki->mk", d, self.dir) / self.len
        pt = _depth_pdf(tdep, self.tmax, self.s_exp)
        ok = (lam >= 0) & (lam <= 1)
        return np.where(ok, pt / self.areas[None, :], 0.0)


class _FrustumGroup(_PieceGroup):
    """Lateral prisms of a 3D body of revolution, vectorized over segments.

    Prisms are allowed to cross the symmetry axis; the through-axis preimage
    is accounted for by also evaluating the density at the reflected meridian
    point (u, -rho)."""

    def __init__(self, axis, anchor, t, r, tmax, s_exp):
        self.axis = np.asarray(axis, dtype=float)
        self.anchor = np.asarray(anchor, dtype=float)
        self.s_exp = s_exp
        self.tmax = float(tmax)
        A, B = [], []
        for i in range(len(t) - 1):
            a = np.array([t[i], r[i]])
            b = np.array([t[i + 1], r[i + 1]])
            if max(a[1], b[1]) <= 0 or np.linalg.norm(b - a) < 1e-15:
                continue
            A.append(a)
            B.append(b)
        self.a = np.array(A) if A else np.zeros((0, 2))
        self.b = np.array(B) if B else np.zeros((0, 2))
        self.k = len(self.a)
        if not self.k:
            self.areas = np.zeros(0)
            return
        seg = self.b - self.a
        self.len = np.linalg.norm(seg, axis=1)
        self.dir = seg / self.len[:, None]
        # meridian inward normal: toward the axis
        self.nrm = np.column_stack([self.dir[:, 1], -self.dir[:, 0]])
        flip = self.nrm[:, 1] > 0
        self.nrm[flip] *= -1.0
        rbar = 0.5 * (self.a[:, 1] + self.b[:, 1])
        self.areas = 2.0 * math.pi * rbar * self.len
        self.e1 = _orthonormal_to(self.axis)
        self.e2 = np.cross(self.axis, self.e1)

    def sample(self, rng, m, ids):
        ra = self.a[ids, 1]
        rb = self.b[ids, 1]
        u = rng.random(m)
        # position along the segment with pdf proportional to rho (the area
        # element of the frustum)
        dr = rb - ra
        small = np.abs(dr) < 1e-14 * (ra + rb + 1.0)
        lam = np.where(small, u,
                       (np.sqrt(ra * ra + u * (rb * rb - ra * ra)) - ra)
                       / np.where(small, 1.0, dr))
        p2 = self.a[ids] + lam[:, None] * (self.b[ids] - self.a[ids])
        tdep = _depth_draw(rng, m, self.tmax, self.s_exp)
        p2 = p2 + tdep[:, None] * self.nrm[ids]
        psi = 2.0 * math.pi * rng.random(m)
        radial = np.cos(psi)[:, None] * self.e1 + np.sin(psi)[:, None] * self.e2
        # a negative rho coordinate lands at azimuth psi + pi automatically
        return (self.anchor + p2[:, 0, None] * self.axis + p2[:, 1, None] * radial)

    def _density_meridian(self, p, rho_x):
        d = p[:, None, :] - self.a[None, :, :]
        tdep = np.einsum("mki,ki->mk", d, self.nrm)
        lam = np.einsum("mki,ki->mk", d, self.dir) / self.len
        pt = _depth_pdf(tdep, self.tmax, self.s_exp)
        rho_surf = self.a[None, :, 1] + lam * (self.b[None, :, 1] - self.a[None, :, 1])
        ok = (lam >= 0) & (lam <= 1) & (rho_surf > 0)
        # uniform surface density 1/area per atom times the cylindrical
        # Jacobian rho_surf / rho_offset
        return np.where(ok, pt / self.areas[None, :] * rho_surf
                        / np.maximum(rho_x[:, None], 1e-300), 0.0)

    def density(self, X):
        if not self.k:
            return np.zeros((len(X), 0))
        rel = X - self.anchor
        u = rel @ self.axis
        rho = np.linalg.norm(rel - u[:, None] * self.axis, axis=1)
        out = self._density_meridian(np.column_stack([u, rho]), rho)
        out += self._density_meridian(np.column_stack([u, -rho]), rho)
        return out


def _orthonormal_to(v):
    v = np.asarray(v, dtype=float)
    a = np.zeros(3)
    a[int(np.argmin(np.abs(v)))] = 1.0
    e = np.cross(v, a)
    return e / np.linalg.norm(e)


class _BoundarySampler:
    """Mixture over prism groups; ``weights`` are absolute mixture masses
    (their sum is the boundary component weight of the full proposal)."""

    def __init__(self, groups, weights):
        self.groups = groups
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.total_weight = float(sum(float(np.sum(w)) for w in self.weights))
        flat = np.concatenate([np.ravel(w) for w in self.weights])
        self._choice_p = flat / flat.sum()
        self._offsets = np.cumsum([0] + [g.k for g in self.groups])

    def sample(self, rng, m):
        ids = rng.choice(self._offsets[-1], size=m, p=self._choice_p)
        dim = self._dim()
        out = np.empty((m, dim), dtype=float)
        for gi, g in enumerate(self.groups):
            sel = (ids >= self._offsets[gi]) & (ids < self._offsets[gi + 1])
            if np.any(sel):
                out[sel] = g.sample(rng, int(sel.sum()), ids[sel] - self._offsets[gi])
        return out

    def density(self, X):
        q = np.zeros(len(X))
        for g, w in zip(self.groups, self.weights):
            q += g.density(X) @ np.atleast_1d(w)
        return q

    def _dim(self):
        g = self.groups[0]
        if isinstance(g, _SpherePiece):
            return g.dim
        if isinstance(g, (_SegmentGroup,)):
            return 2
        return 3


def _body_groups(body: ConvexBody, s_exp: float):
    """Exact boundary prism groups for one body."""
    shape = body.shape
    n = body.dim
    groups = []
    if isinstance(shape, Ball):
        groups.append(_SpherePiece(shape.center, shape.radius, n, 0.45 * shape.radius, s_exp))
        return groups
    if isinstance(shape, (Box, Polytope)):
        poly = body if isinstance(shape, Polytope) else geo.as_polytope(body)
        verts = np.asarray(poly.shape.vertices, dtype=float)
        tmax = 0.35 * _inradius(poly)
        if n == 2:
            groups.append(_SegmentGroup(verts, tmax, s_exp, clockwise=False))
        else:
            for facet, hs in zip(poly.shape.facets, poly.shape.halfspaces):
                groups.append(_PolygonPiece(verts[list(facet)],
                                            -np.asarray(hs.normal, dtype=float),
                                            tmax, s_exp))
        return groups
    prof = _as_profile_arrays(body)
    if prof is None:
        raise UnsupportedGeometry(f"no boundary sampler for {body.kind}")
    axis, anchor, t, r = prof
    rmax = float(np.max(r))
    tmax = 0.3 * max(min(rmax, 0.5 * (t[-1] - t[0])), 0.25 * rmax)
    if n == 2:
        e_perp = np.array([-axis[1], axis[0]])
        top = [anchor + t[i] * axis + r[i] * e_perp for i in range(len(t))]
        bot = [anchor + t[i] * axis - r[i] * e_perp for i in range(len(t) - 1, -1, -1)]
        groups.append(_SegmentGroup(top + bot, tmax, s_exp, clockwise=True))
        return groups
    fr = _FrustumGroup(axis, anchor, t, r, tmax, s_exp)
    if fr.k:
        groups.append(fr)
    for (tc, rc, sgn) in ((t[0], r[0], 1.0), (t[-1], r[-1], -1.0)):
        if rc > 1e-14 * (rmax + 1.0):
            groups.append(_DiscCapPiece(anchor + tc * axis, axis, rc, sgn, tmax, s_exp))
    return groups


def _inradius(poly: ConvexBody) -> float:
    A = np.array([h.normal for h in poly.shape.halfspaces], dtype=float)
    b = np.array([h.offset for h in poly.shape.halfspaces], dtype=float)
    verts = np.asarray(poly.shape.vertices, dtype=float)
    c = verts.mean(axis=0)
    return float(np.min(b - A @ c))


def _make_mixture(bodies_weights, s_exp) -> _BoundarySampler:
    """Sampler over several bodies' prisms; each body's prisms carry total
    mixture mass equal to its family weight."""
    groups, weights = [], []
    for body, w in bodies_weights:
        gs = _body_groups(body, s_exp)
        total = sum(float(np.sum(g.areas)) for g in gs)
        for g in gs:
            groups.append(g)
            weights.append(w * np.asarray(g.areas, dtype=float) / total)
    return _BoundarySampler(groups, weights)


# ---------------------------------------------------------------------------
# fast per-body membership / depth / distance closures


class _BodyFrame:
    """Vectorized membership, interior depth (a positive lower bound on the
    distance to the boundary), exterior distance lower bound, and a uniform
    bounding box sampler for one convex body."""

    def __init__(self, body: ConvexBody):
        self.body = body
        self.dim = body.dim
        lo, hi = geo.bounding_box(body)
        self.lo, self.hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        self.volume_box = float(np.prod(self.hi - self.lo))
        self.scale = geo.body_scale(body)
        shape = body.shape
        self._kind = body.kind
        if isinstance(shape, Ball):
            self._c = np.asarray(shape.center, dtype=float)
            self._r = float(shape.radius)
        elif isinstance(shape, (Box, Polytope)):
            poly = body if isinstance(shape, Polytope) else geo.as_polytope(body)
            self._A = np.array([h.normal for h in poly.shape.halfspaces], dtype=float)
            self._b = np.array([h.offset for h in poly.shape.halfspaces], dtype=float)
        else:
            prof = _as_profile_arrays(body)
            if prof is None:
                raise UnsupportedGeometry(f"no MC frame for {body.kind}")
            axis, anchor, t, r = prof
            slopes = np.diff(r) / np.diff(t)
            if np.any(np.diff(slopes) > 1e-8 * (np.max(np.abs(slopes)) + 1.0)):
                raise UnsupportedGeometry("Monte Carlo needs a concave profile "
                                          "(a convex body of revolution)")
            self._axis, self._anchor = axis, anchor
            self._t, self._rr = np.asarray(t, float), np.asarray(r, float)
            # meridian edge lines a.p <= b (outward unit normals), lateral +
            # two end lines; depth/membership are min / sign of b - A p
            segs = []
            for i in range(len(t) - 1):
                dt = t[i + 1] - t[i]
                dr = r[i + 1] - r[i]
                L = math.hypot(dt, dr)
                if L < 1e-15:
                    continue
                nrm = np.array([-dr / L, dt / L])  # outward: positive rho side
                if nrm[1] < 0:
                    nrm = -nrm
                segs.append((nrm, nrm @ np.array([t[i], r[i]])))
            segs.append((np.array([-1.0, 0.0]), -t[0]))
            segs.append((np.array([1.0, 0.0]), t[-1]))
            self._mA = np.array([s[0] for s in segs])
            self._mb = np.array([s[1] for s in segs])

    def meridian(self, X):
        rel = X - self._anchor
        u = rel @ self._axis
        rho = np.linalg.norm(rel - u[:, None] * self._axis, axis=1)
        return u, rho

    def contains(self, X):
        k = self._kind
        if k == "ball":
            return np.linalg.norm(X - self._c, axis=1) <= self._r
        if k in ("box", "polytope"):
            return np.all(X @ self._A.T <= self._b + 1e-12 * self.scale, axis=1)
        u, rho = self.meridian(X)
        P = np.column_stack([u, rho])
        return np.all(P @ self._mA.T <= self._mb + 1e-12 * self.scale, axis=1)

    def depth(self, X):
        k = self._kind
        if k == "ball":
            d = self._r - np.linalg.norm(X - self._c, axis=1)
        elif k in ("box", "polytope"):
            d = np.min(self._b - X @ self._A.T, axis=1)
        else:
            u, rho = self.meridian(X)
            P = np.column_stack([u, rho])
            d = np.min(self._mb - P @ self._mA.T, axis=1)
        return np.maximum(d, _DEPTH_EPS * self.scale)

    def dist_lb(self, X):
        """Lower bound on dist(x, body) for exterior points (0 inside)."""
        k = self._kind
        if k == "ball":
            return np.maximum(np.linalg.norm(X - self._c, axis=1) - self._r, 0.0)
        if k in ("box", "polytope"):
            return np.maximum(np.max(X @ self._A.T - self._b, axis=1), 0.0)
        u, rho = self.meridian(X)
        P = np.column_stack([u, rho])
        return np.maximum(np.max(P @ self._mA.T - self._mb, axis=1), 0.0)

    def maxdist(self, X):
        corners = _box_corners(self.lo, self.hi)
        d = np.linalg.norm(X[:, None, :] - corners[None, :, :], axis=2)
        return np.max(d, axis=1)

    def uniform(self, rng, m):
        return self.lo + rng.random((m, self.dim)) * (self.hi - self.lo)


def _box_corners(lo, hi):
    n = len(lo)
    grids = np.meshgrid(*[[lo[i], hi[i]] for i in range(n)], indexing="ij")
    return np.column_stack([g.ravel() for g in grids])


# ---------------------------------------------------------------------------
# Monte Carlo driver


def _mc_run_parallel(stratum_fn, accuracy: AccuracySpec, method: str,
                     workers: int, detail=None) -> Estimate:
    """Grow the stratum count until the standard error meets the target.

    Stratum means are keyed by index and combined in index order, so the
    result does not depend on the worker count.
    """
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    mapper = pool.map if pool is not None else map
    means = {}
    k = _MIN_STRATA
    try:
        while True:
            todo = [i for i in range(k) if i not in means]
            for i, m in zip(todo, mapper(stratum_fn, todo)):
                means[i] = m
            vals = np.array([means[i] for i in range(k)])
            value = float(np.mean(vals))
            se = float(np.std(vals, ddof=1) / math.sqrt(k))
            est = Estimate(value, se, method, samples=k * _BATCH,
                           detail=dict(detail or {}))
            if se <= accuracy.target(value):
                return est
            if 2 * k * _BATCH > accuracy.max_samples:
                raise BudgetExceeded(
                    f"accuracy target {accuracy.target(value):.3g} not reached "
                    f"(se={se:.3g}) within {accuracy.max_samples} samples", est)
            k *= 2
    finally:
        if pool is not None:
            pool.shutdown(wait=False)


def _rng_for(seed: int, stratum: int):
    return np.random.Generator(np.random.Philox(key=np.array([seed, stratum], dtype=np.uint64)))


def _unit_dirs(rng, m, k, dim):
    z = rng.standard_normal((m, k, dim))
    return z / np.linalg.norm(z, axis=2, keepdims=True)


def _perimeter_mc(body: ConvexBody, kernel, accuracy, seed, workers) -> Estimate:
    frame = _BodyFrame(body)
    s_exp = _grading_exponent(kernel)
    sampler = _make_mixture([(body, 0.5)], s_exp)
    w_u = 0.5
    nb = _BATCH // 2

    def stratum(idx: int) -> float:
        rng = _rng_for(seed, idx)
        Xu = frame.uniform(rng, _BATCH - nb)
        Xb = sampler.sample(rng, nb)
        X = np.vstack([Xu, Xb])
        Q = w_u / frame.volume_box * _in_box(X, frame.lo, frame.hi) + sampler.density(X)
        inside = frame.contains(X)
        terms = np.zeros(_BATCH)
        act = np.where(inside & (Q > 0))[0]
        if len(act):
            Xa = X[act]
            d = frame.depth(Xa)
            rhi = frame.maxdist(Xa)
            tail_lo = kr.radial_tail(kernel, d)
            Z = np.maximum(tail_lo - kr.radial_tail(kernel, rhi), 0.0)
            rr = kr.sample_radial_shell(kernel, d[:, None], rhi[:, None],
                                        rng.random((len(act), _INNER)))
            dirs = _unit_dirs(rng, len(act), _INNER, frame.dim)
            Y = Xa[:, None, :] + rr[:, :, None] * dirs
            iny = frame.contains(Y.reshape(-1, frame.dim)).reshape(len(act), _INNER)
            g_hat = tail_lo - Z * iny.mean(axis=1)
            terms[act] = g_hat / Q[act]
        return float(np.mean(terms))

    return _mc_run_parallel(stratum, accuracy, "mc", workers,
                            detail={"body": body.kind})


def _in_box(X, lo, hi):
    return np.all((X >= lo) & (X <= hi), axis=1).astype(float)


def _interaction_mc_disjoint(E, F, kernel, accuracy, seed, workers) -> Estimate:
    fe, ff = _BodyFrame(E), _BodyFrame(F)
    vol = fe.volume_box * ff.volume_box

    def stratum(idx: int) -> float:
        rng = _rng_for(seed, idx)
        X = fe.uniform(rng, _BATCH)
        Y = ff.uniform(rng, _BATCH)
        ok = fe.contains(X) & ff.contains(Y)
        vals = np.zeros(_BATCH)
        if np.any(ok):
            vals[ok] = kernel.eval_displacements(X[ok] - Y[ok])
        return float(vol * np.mean(vals))

    return _mc_run_parallel(stratum, accuracy, "mc", workers)


def _interaction_mc_touching(E, F, kernel, accuracy, seed, workers) -> Estimate:
    fe, ff = _BodyFrame(E), _BodyFrame(F)
    s_exp = _grading_exponent(kernel)
    sampler = _make_mixture([(E, 0.5)], s_exp)
    w_u = 0.5

    def stratum(idx: int) -> float:
        rng = _rng_for(seed, idx)
        Xu = fe.uniform(rng, _BATCH // 2)
        Xb = sampler.sample(rng, _BATCH - _BATCH // 2)
        X = np.vstack([Xu, Xb])
        Q = w_u / fe.volume_box * _in_box(X, fe.lo, fe.hi) + sampler.density(X)
        inside = fe.contains(X)
        terms = np.zeros(_BATCH)
        act = np.where(inside & (Q > 0))[0]
        if len(act):
            Xa = X[act]
            # distance from x to F is at least the depth of x in E (the
            # bodies have disjoint interiors), and at least the halfspace
            # violation bound for F
            r_lo = np.maximum(fe.depth(Xa), ff.dist_lb(Xa))
            r_lo = np.maximum(r_lo, _DEPTH_EPS * fe.scale)
            r_hi = ff.maxdist(Xa)
            Z = np.maximum(kr.radial_tail(kernel, r_lo) - kr.radial_tail(kernel, r_hi), 0.0)
            rr = kr.sample_radial_shell(kernel, r_lo[:, None], r_hi[:, None],
                                        rng.random((len(act), _INNER)))
            dirs = _unit_dirs(rng, len(act), _INNER, fe.dim)
            Y = Xa[:, None, :] + rr[:, :, None] * dirs
            inF = ff.contains(Y.reshape(-1, fe.dim)).reshape(len(act), _INNER)
            terms[act] = Z * inF.mean(axis=1) / Q[act]
        return float(np.mean(terms))

    return _mc_run_parallel(stratum, accuracy, "mc", workers)


def _relative_perimeter_mc(E, window, kernel, accuracy, seed, workers) -> Estimate:
    fe = _BodyFrame(E)
    fw = _BodyFrame(window)
    s_exp = _grading_exponent(kernel)
    sampler = _make_mixture([(E, 0.4)], s_exp)
    wall = _window_wall_sampler(window, s_exp, 0.2)
    w_u = 0.4
    corners = _box_corners(fw.lo, fw.hi)

    def stratum(idx: int) -> float:
        rng = _rng_for(seed, idx)
        nu = int(_BATCH * w_u)
        ne = int(_BATCH * 0.4)
        Xu = fe.uniform(rng, nu)
        Xe = sampler.sample(rng, ne)
        Xw = wall.sample(rng, _BATCH - nu - ne)
        X = np.vstack([Xu, Xe, Xw])
        Q = (w_u / fe.volume_box * _in_box(X, fe.lo, fe.hi)
             + sampler.density(X) + wall.density(X))
        inside = fe.contains(X)
        inA = fw.contains(X)
        terms = np.zeros(_BATCH)

        act = np.where(inside & inA & (Q > 0))[0]
        if len(act):
            Xa = X[act]
            d = fe.depth(Xa)
            rhi = fe.maxdist(Xa)
            tail_lo = kr.radial_tail(kernel, d)
            Z = np.maximum(tail_lo - kr.radial_tail(kernel, rhi), 0.0)
            rr = kr.sample_radial_shell(kernel, d[:, None], rhi[:, None],
                                        rng.random((len(act), _INNER)))
            dirs = _unit_dirs(rng, len(act), _INNER, fe.dim)
            Y = Xa[:, None, :] + rr[:, :, None] * dirs
            iny = fe.contains(Y.reshape(-1, fe.dim)).reshape(len(act), _INNER)
            terms[act] = (tail_lo - Z * iny.mean(axis=1)) / Q[act]

        act2 = np.where(inside & (~inA) & (Q > 0))[0]
        if len(act2):
            Xa = X[act2]
            dA = _box_dist(Xa, fw.lo, fw.hi)
            r_lo = np.maximum(np.maximum(fe.depth(Xa), dA), _DEPTH_EPS * fe.scale)
            r_hi = np.max(np.linalg.norm(Xa[:, None, :] - corners[None, :, :], axis=2), axis=1)
            Z = np.maximum(kr.radial_tail(kernel, r_lo) - kr.radial_tail(kernel, r_hi), 0.0)
            rr = kr.sample_radial_shell(kernel, r_lo[:, None], r_hi[:, None],
                                        rng.random((len(act2), _INNER)))
            dirs = _unit_dirs(rng, len(act2), _INNER, fe.dim)
            Y = (Xa[:, None, :] + rr[:, :, None] * dirs).reshape(-1, fe.dim)
            good = (fw.contains(Y) & ~fe.contains(Y)).reshape(len(act2), _INNER)
            terms[act2] = Z * good.mean(axis=1) / Q[act2]
        return float(np.mean(terms))

    return _mc_run_parallel(stratum, accuracy, "mc", workers)


def _box_dist(X, lo, hi):
    gap = np.maximum(np.maximum(lo - X, X - hi), 0.0)
    return np.linalg.norm(gap, axis=1)


def _window_wall_sampler(window: ConvexBody, s_exp, weight):
    """Prisms on the window walls pointing outward: they cover the layer just
    outside the window, where the relative-perimeter integrand blows up."""
    box = window.shape
    lo, hi = np.asarray(box.lo, dtype=float), np.asarray(box.hi, dtype=float)
    n = len(lo)
    tmax = 0.35 * float(np.min(hi - lo))
    groups = []
    if n == 2:
        ring = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
        # clockwise=True flips the prisms to the outside of the ring
        groups.append(_SegmentGroup(ring, tmax, s_exp, clockwise=True))
    else:
        for ax in range(3):
            for side, c in ((-1.0, lo[ax]), (1.0, hi[ax])):
                others = [i for i in range(3) if i != ax]
                verts = []
                for u, v in ((0, 0), (1, 0), (1, 1), (0, 1)):
                    p = np.zeros(3)
                    p[ax] = c
                    p[others[0]] = lo[others[0]] if u == 0 else hi[others[0]]
                    p[others[1]] = lo[others[1]] if v == 0 else hi[others[1]]
                    verts.append(p)
                outward = np.zeros(3)
                outward[ax] = side
                groups.append(_PolygonPiece(verts, outward, tmax, s_exp))
    total = sum(float(np.sum(g.areas)) for g in groups)
    weights = [weight * np.asarray(g.areas, dtype=float) / total for g in groups]
    return _BoundarySampler(groups, weights)


# ---------------------------------------------------------------------------
# overlap / geometry predicates for dispatch


def _interiors_overlap(E: ConvexBody, F: ConvexBody) -> bool:
    if geo.body_distance(E, F) > 0:
        return False
    # touching or overlapping; decide via the inscribed polytopes
    pe = E if E.kind in ("polytope",) else geo.as_polytope(E)
    pf = F if F.kind in ("polytope",) else geo.as_polytope(F)
    A = np.vstack([[h.normal for h in pe.shape.halfspaces],
                   [h.normal for h in pf.shape.halfspaces]])
    b = np.concatenate([[h.offset for h in pe.shape.halfspaces],
                        [h.offset for h in pf.shape.halfspaces]])
    from scipy.optimize import linprog
    n = A.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    Aub = np.hstack([A, np.ones((len(A), 1))])
    span = max(geo.body_scale(E), geo.body_scale(F))
    res = linprog(c, A_ub=Aub, b_ub=b, bounds=[(None, None)] * n + [(0, None)],
                  method="highs")
    if not res.success:
        return False
    return float(res.x[-1]) > 1e-9 * span


# ---------------------------------------------------------------------------
# public operations


def perimeter(body: ConvexBody, kernel, accuracy: AccuracySpec | None = None,
              method: str = "auto", seed: int = 0, workers: int = 1) -> Estimate:
    """Kernel perimeter P_K(body) = interaction of the body with its
    complement."""
    accuracy = accuracy or DEFAULT_ACCURACY
    _check_dims(body, kernel)
    if body.dim == 1:
        lo, hi = geo.bounding_box(body)
        return _perimeter_1d(kernel, float(hi[0] - lo[0]))
    if method == "auto":
        method = "slice" if _as_profile_arrays(body) is not None else "mc"
    if method == "slice":
        return _perimeter_slice(body, kernel, accuracy)
    if method == "mc":
        return _perimeter_mc(body, kernel, accuracy, seed, workers)
    raise ValueError(f"unknown method {method!r}")


def interaction(E: ConvexBody, F: ConvexBody, kernel,
                accuracy: AccuracySpec | None = None, method: str = "auto",
                seed: int = 0, workers: int = 1) -> Estimate:
    """Interaction energy L_K(E, F) for bodies with disjoint interiors."""
    accuracy = accuracy or DEFAULT_ACCURACY
    _check_dims(E, kernel)
    _check_dims(F, kernel)
    if _canonical_key(F) < _canonical_key(E):
        E, F = F, E
    if E.dim == 1:
        (l1, h1), (l2, h2) = geo.bounding_box(E), geo.bounding_box(F)
        return _interaction_1d(kernel, (l1[0], h1[0]), (l2[0], h2[0]))
    if _interiors_overlap(E, F):
        raise SingularEvaluation("bodies overlap; interaction diverges for "
                                 "non-integrable kernels")
    dist = geo.body_distance(E, F)
    if method == "auto":
        common = _common_axis_profiles(E, F)
        tol = 1e-9 * max(geo.body_scale(E), geo.body_scale(F))
        if common is not None and (common[0][0][-1] <= common[1][0][0] + tol
                                   or common[1][0][-1] <= common[0][0][0] + tol):
            method = "slice"
        elif dist > 0:
            method = "mc"
        else:
            method = "mc-touching"
    if method == "slice":
        common = _common_axis_profiles(E, F)
        if common is None:
            raise UnsupportedGeometry("bodies are not coaxial")
        return _interaction_slice(kernel, common[0], common[1], accuracy)
    if method == "mc":
        if dist <= 0:
            return _interaction_mc_touching(E, F, kernel, accuracy, seed, workers)
        return _interaction_mc_disjoint(E, F, kernel, accuracy, seed, workers)
    if method == "mc-touching":
        return _interaction_mc_touching(E, F, kernel, accuracy, seed, workers)
    raise ValueError(f"unknown method {method!r}")


def _canonical_key(body: ConvexBody) -> str:
    return json.dumps(geo.body_to_dict(body), sort_keys=True)


def relative_perimeter(E, window: ConvexBody, kernel,
                       accuracy: AccuracySpec | None = None,
                       exterior: dict | None = None,
                       seed: int = 0, workers: int = 1) -> Estimate:
    """Perimeter of E relative to a box window A: counts the kernel mass of
    pairs (x, y) in E x E^c with x or y inside A.

    E may be a convex body (Monte Carlo path) or a voxel set (deterministic
    midpoint sums with near-diagonal refinement; ``exterior`` may describe a
    half-space continuation outside the voxel domain).
    """
    accuracy = accuracy or DEFAULT_ACCURACY
    if window.kind != "box":
        raise UnsupportedGeometry("window must be a box")
    if isinstance(E, ConvexBody):
        if exterior is not None:
            raise UnsupportedGeometry("exterior continuation requires a voxel set")
        _check_dims(E, kernel)
        if E.dim == 1:
            raise UnsupportedGeometry("relative perimeter needs dimension >= 2")
        return _relative_perimeter_mc(E, window, kernel, accuracy, seed, workers)
    return _relative_perimeter_voxel(E, window, kernel, exterior)


def potential(body: ConvexBody, kernel, point,
              accuracy: AccuracySpec | None = None, method: str = "auto",
              seed: int = 0, workers: int = 1) -> Estimate:
    """u_E(x) = integral of K(x - y) over the body; x must be outside."""
    accuracy = accuracy or DEFAULT_ACCURACY
    _check_dims(body, kernel)
    x = np.asarray(point, dtype=float)
    if body.dim == 1:
        lo, hi = geo.bounding_box(body)
        return _potential_1d(kernel, (lo[0], hi[0]), float(x[0]))
    dist = geo.point_distance(body, x)
    if dist <= 0:
        raise SingularEvaluation("evaluation point touches the body")
    if method == "auto":
        method = "slice" if _as_profile_arrays(body) is not None else "mc"
    if method == "slice":
        return _potential_slice(body, kernel, x, accuracy)
    if method == "mc":
        frame = _BodyFrame(body)
        r_hi = float(frame.maxdist(x[None, :])[0])
        Z = float(kr.radial_tail(kernel, dist) - kr.radial_tail(kernel, r_hi))

        def stratum(idx: int) -> float:
            rng = _rng_for(seed, idx)
            rr = kr.sample_radial_shell(kernel, np.full(_BATCH, dist),
                                        np.full(_BATCH, r_hi), rng.random(_BATCH))
            dirs = _unit_dirs(rng, _BATCH, 1, frame.dim)[:, 0, :]
            Y = x[None, :] + rr[:, None] * dirs
            return float(Z * np.mean(frame.contains(Y)))

        return _mc_run_parallel(stratum, accuracy, "mc", workers)
    raise ValueError(f"unknown method {method!r}")


def _check_dims(body: ConvexBody, kernel):
    if body.dim != kernel.dim:
        raise EngineError(f"body dimension {body.dim} != kernel dimension {kernel.dim}")


# ---------------------------------------------------------------------------
# voxel path for relative perimeters


def _relative_perimeter_voxel(vox, window: ConvexBody, kernel, exterior) -> Estimate:
    from .oracle import VoxelSet

    if not isinstance(vox, VoxelSet):
        raise UnsupportedGeometry("expected a ConvexBody or VoxelSet")
    n = vox.dim
    if n != kernel.dim:
        raise EngineError("voxel set and kernel dimensions differ")
    h = vox.spacing
    centers = vox.cell_centers()
    maskE = vox.mask.ravel()
    lo = np.asarray(window.shape.lo, dtype=float)
    hi = np.asarray(window.shape.hi, dtype=float)
    inA = np.all((centers >= lo) & (centers <= hi), axis=1)

    idxE = np.where(maskE)[0]
    idxC = np.where(~maskE)[0]
    pe, pc = centers[idxE], centers[idxC]
    ae, ac = inA[idxE], inA[idxC]

    import math as _m
    sums = []
    cell = h ** n
    near_cut = 3.0 * h
    sub_offsets = _box_corners(np.full(n, -0.25 * h), np.full(n, 0.25 * h))
    chunk = max(1, int(2**22 // max(len(pc), 1)))
    for start in range(0, len(pe), chunk):
        P = pe[start:start + chunk]
        aP = ae[start:start + chunk]
        D = P[:, None, :] - pc[None, :, :]
        r = np.linalg.norm(D, axis=2)
        counted = aP[:, None] | ac[None, :]
        far = counted & (r > near_cut)
        vals = np.zeros_like(r)
        vals[far] = kernel.eval_radial(r[far])
        block = float(np.sum(vals, dtype=np.float64)) * cell * cell
        near = counted & ~far
        if np.any(near):
            ii, jj = np.nonzero(near)
            dp = P[ii][:, None, :] + sub_offsets[None, :, :]
            dq = pc[jj][:, None, :] + sub_offsets[None, :, :]
            dd = dp[:, :, None, :] - dq[:, None, :, :]
            rr = np.linalg.norm(dd, axis=3)
            block += float(np.sum(kernel.eval_radial(rr), dtype=np.float64)) * (cell / 2 ** n) ** 2
        sums.append(block)
    total = _m.fsum(sums)
    err = 0.05 * abs(total)  # midpoint sums carry O(h) discretisation error

    if exterior is not None:
        tails = _halfspace_exterior_terms(vox, kernel, exterior, lo, hi,
                                          pe, ae, pc, ac, cell)
        total += tails
        # the clamped tail corrections converge slower than the pair sums
        err += 0.2 * abs(tails)

    return Estimate(total, err, "voxel", samples=len(pe) * len(pc))


def _halfspace_exterior_terms(vox, kernel, exterior, lo, hi, pe, ae, pc, ac, cell):
    """Tail mass when the voxel set continues as a half-space beyond its grid.

    Valid only when the occupied cells coincide with the half-space inside
    the grid; then both tails have closed forms: the set side pairs window
    cells of E with the complement beyond the grid, the complement side
    pairs window complement cells with the far half-space.
    """
    if exterior.get("kind") != "halfspace":
        raise UnsupportedGeometry("exterior must describe a halfspace")
    hs = exterior["halfspace"]
    nu = np.asarray(hs.normal, dtype=float)
    nu = nu / np.linalg.norm(nu)
    if np.any(pe @ nu > hs.offset) or np.any(pc @ nu <= hs.offset):
        raise EngineError("exterior continuation requires the voxel set to "
                          "equal the half-space within its grid")
    grid_lo = vox.origin
    grid_hi = vox.origin + vox.spacing * np.asarray(vox.shape)
    if np.any(lo < grid_lo - 0.5 * vox.spacing) or np.any(hi > grid_hi + 0.5 * vox.spacing):
        raise EngineError("window must lie inside the voxel grid")

    def tail(front, back):
        # front: window cells on one side; back: all in-grid cells on the
        # other side, already counted in the pair sum
        eta = np.abs(front @ nu - hs.offset)
        m1 = kr.transverse_mass_tail(kernel, eta)
        inner = np.zeros(len(front))
        for start in range(0, len(back), 4096):
            Q = back[start:start + 4096]
            r = np.linalg.norm(front[:, None, :] - Q[None, :, :], axis=2)
            inner += np.sum(kernel.eval_radial(np.maximum(r, 1e-300)), axis=1) * cell
        return float(np.sum(np.maximum(m1 - inner, 0.0))) * cell

    return tail(pe[ae], pc) + tail(pc[ac], pe)
