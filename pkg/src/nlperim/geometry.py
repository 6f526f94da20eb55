"""Convex bodies in dimension n <= 3 and the geometric primitives used by the
perimeter engine.

A body is one of five shapes: ball, axis-aligned box, convex polytope (given by
vertices and half-spaces), solid cone over a disc, or a body of revolution with
a concave radius profile.  Every shape answers the same small set of queries:
membership, volume, Euclidean perimeter, slice measure, bounding box, clipping
by a half-space, and distances.  All coordinates are float64 numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection

# Centralized geometric tolerances.
MEMBERSHIP_TOL = 1e-12
NESTING_TOL = 1e-9
UNIT_NORMAL_TOL = 1e-12
# Edge count used when a curved shape has to be replaced by a polytope.
CURVE_RESOLUTION = 512


class GeometryError(ValueError):
    """Invalid geometric input."""


class EmptyIntersection(GeometryError):
    """A clipping operation produced a set with empty interior."""


class NotNested(GeometryError):
    """An operation requiring A to be contained in B received a non-nested pair."""


def unit_ball_volume(k: int) -> float:
    """Lebesgue measure of the unit ball in R^k (1, 2, pi, 4pi/3 for k=0..3)."""
    return math.pi ** (k / 2.0) / math.gamma(k / 2.0 + 1.0)


def _as_point(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (dim,):
        raise GeometryError(f"expected a point in R^{dim}, got shape {x.shape}")
    return x


def _unit(v: np.ndarray) -> np.ndarray:
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        raise GeometryError("zero vector cannot be normalized")
    return v / nv


@dataclass(frozen=True)
class HalfSpace:
    """Closed half-space {x : normal . x <= offset} with a unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(-1)
        if not (1 <= n.size <= 3):
            raise GeometryError("half-space normal must live in R^1..R^3")
        nn = float(np.linalg.norm(n))
        if abs(nn - 1.0) > 1e-9:
            if nn == 0.0:
                raise GeometryError("half-space normal must be nonzero")
            object.__setattr__(self, "offset", float(self.offset) / nn)
            n = n / nn
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))
        assert abs(np.linalg.norm(self.normal) - 1.0) <= UNIT_NORMAL_TOL


# ---------------------------------------------------------------------------
# shape payloads


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray


@dataclass(frozen=True)
class Polytope:
    """Bounded convex polytope; vertices plus facet half-spaces.

    For n=2 ``vertices`` are ordered counterclockwise.  For n=3 ``facets``
    lists, per facet, the vertex indices ordered around the facet boundary.
    """

    vertices: np.ndarray
    halfspaces: tuple[HalfSpace, ...]
    facets: tuple[tuple[int, ...], ...] = ()


@dataclass(frozen=True)
class Cone:
    """Solid cone: convex hull of a (n-1)-disc and an apex on the disc axis."""

    apex: np.ndarray
    base_center: np.ndarray
    base_radius: float

    @property
    def height(self) -> float:
        return float(np.linalg.norm(self.apex - self.base_center))

    @property
    def axis_unit(self) -> np.ndarray:
        h = self.height
        if h == 0.0:
            raise GeometryError("degenerate cone (h=0) has no canonical axis")
        return (self.apex - self.base_center) / h


@dataclass(frozen=True)
class ProfileBody:
    """Body of revolution around ``axis`` with piecewise-linear radius profile.

    Points are anchor + t*axis + y with y orthogonal to axis, |y| <= R(t).
    ``t_grid`` is strictly increasing and starts at 0; ``radii`` >= 0.  The
    profile of a convex body is concave on its support.
    """

    axis: np.ndarray
    anchor: np.ndarray
    t_grid: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        ax = _unit(np.asarray(self.axis, dtype=float).reshape(-1))
        object.__setattr__(self, "axis", ax)
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float).reshape(-1))
        t = np.asarray(self.t_grid, dtype=float).reshape(-1)
        r = np.asarray(self.radii, dtype=float).reshape(-1)
        if t.size != r.size or t.size < 2:
            raise GeometryError("profile needs matching t_grid/radii with >= 2 nodes")
        if np.any(np.diff(t) <= 0):
            raise GeometryError("profile t_grid must be strictly increasing")
        if np.any(r < -1e-15):
            raise GeometryError("profile radii must be nonnegative")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "radii", np.maximum(r, 0.0))

    @property
    def extent(self) -> float:
        return float(self.t_grid[-1] - self.t_grid[0])

    def radius_at(self, t):
        t = np.asarray(t, dtype=float)
        r = np.interp(t, self.t_grid, self.radii, left=0.0, right=0.0)
        inside = (t >= self.t_grid[0]) & (t <= self.t_grid[-1])
        return np.where(inside, r, 0.0)


_SHAPES = (Ball, Box, Polytope, Cone, ProfileBody)


@dataclass(frozen=True)
class ConvexBody:
    """A bounded convex body in R^n, n in {1,2,3}."""

    dim: int
    shape: object
    _bbox: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise GeometryError(f"dimension must be 1, 2 or 3, got {self.dim}")
        if not isinstance(self.shape, _SHAPES):
            raise GeometryError(f"unknown shape payload {type(self.shape).__name__}")

    @property
    def kind(self) -> str:
        return type(self.shape).__name__.lower().replace("profilebody", "profile")

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return bounding_box(self)


# ---------------------------------------------------------------------------
# constructors


def make_ball(center, radius: float) -> ConvexBody:
    center = np.asarray(center, dtype=float).reshape(-1)
    if radius <= 0:
        raise GeometryError("ball radius must be positive")
    return ConvexBody(center.size, Ball(center, float(radius)))


def make_box(lo, hi) -> ConvexBody:
    lo = np.asarray(lo, dtype=float).reshape(-1)
    hi = np.asarray(hi, dtype=float).reshape(-1)
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise GeometryError("box needs lo < hi componentwise")
    return ConvexBody(lo.size, Box(lo, hi))


def make_segment(a: float, b: float) -> ConvexBody:
    """Interval (a, b) as a 1-dimensional body."""
    return make_box([min(a, b)], [max(a, b)])


def _order_facet(points: np.ndarray, idx: np.ndarray, normal: np.ndarray) -> tuple[int, ...]:
    pts = points[idx]
    ctr = pts.mean(axis=0)
    # in-plane basis
    a = np.argmin(np.abs(normal))
    e1 = np.zeros(3)
    e1[a] = 1.0
    e1 = _unit(e1 - np.dot(e1, normal) * normal)
    e2 = np.cross(normal, e1)
    ang = np.arctan2((pts - ctr) @ e2, (pts - ctr) @ e1)
    return tuple(int(i) for i in idx[np.argsort(ang)])


def make_polytope(points) -> ConvexBody:
    """Convex hull of the given points, stored with facet half-spaces."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise GeometryError("points must be a 2-d array")
    n = pts.shape[1]
    if n == 1:
        lo, hi = float(pts.min()), float(pts.max())
        if hi - lo <= 0:
            raise GeometryError("degenerate 1-d polytope")
        verts = np.array([[lo], [hi]])
        hs = (HalfSpace(np.array([1.0]), hi), HalfSpace(np.array([-1.0]), -lo))
        return ConvexBody(1, Polytope(verts, hs))
    hull = ConvexHull(pts)
    if hull.volume <= 0:
        raise GeometryError("degenerate polytope (zero volume)")
    if n == 2:
        verts = pts[hull.vertices]  # counterclockwise
        hs = []
        m = len(verts)
        for i in range(m):
            p, q = verts[i], verts[(i + 1) % m]
            nrm = _unit(np.array([q[1] - p[1], p[0] - q[0]]))  # outward for CCW
            hs.append(HalfSpace(nrm, float(np.dot(nrm, p))))
        return ConvexBody(2, Polytope(verts, tuple(hs)))
    # n == 3: group coplanar simplices into facets
    vid = hull.vertices
    remap = -np.ones(pts.shape[0], dtype=int)
    remap[vid] = np.arange(vid.size)
    verts = pts[vid]
    groups: dict[tuple, set] = {}
    normals: dict[tuple, np.ndarray] = {}
    scale = max(1.0, float(np.abs(verts).max()))
    for simplex, eq in zip(hull.simplices, hull.equations):
        nrm = eq[:3] / np.linalg.norm(eq[:3])
        off = -eq[3] / np.linalg.norm(eq[:3])
        key = tuple(np.round(np.append(nrm, off / scale), 7))
        groups.setdefault(key, set()).update(remap[simplex])
        normals[key] = np.append(nrm, off)
    hs, facets = [], []
    for key, members in groups.items():
        nrm_off = normals[key]
        nrm, off = nrm_off[:3], float(nrm_off[3])
        idx = np.array(sorted(members), dtype=int)
        facets.append(_order_facet(verts, idx, nrm))
        hs.append(HalfSpace(nrm, off))
    return ConvexBody(3, Polytope(verts, tuple(hs), tuple(facets)))


def make_polytope_from_halfspaces(halfspaces) -> ConvexBody:
    """Vertex enumeration of an intersection of half-spaces (must be bounded)."""
    hs = [h if isinstance(h, HalfSpace) else HalfSpace(*h) for h in halfspaces]
    n = hs[0].normal.size
    if n == 1:
        hi = min((h.offset for h in hs if h.normal[0] > 0), default=math.inf)
        lo = max((-h.offset for h in hs if h.normal[0] < 0), default=-math.inf)
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
            raise EmptyIntersection("1-d half-space intersection empty or unbounded")
        return make_polytope([[lo], [hi]])
    A = np.array([h.normal for h in hs])
    b = np.array([h.offset for h in hs])
    # Chebyshev center gives a strictly interior point when the interior is nonempty.
    res = linprog(
        c=np.append(np.zeros(n), -1.0),
        A_ub=np.hstack([A, np.ones((len(hs), 1))]),
        b_ub=b,
        bounds=[(None, None)] * n + [(0, None)],
        method="highs",
    )
    if not res.success or res.x[-1] <= 1e-12:
        raise EmptyIntersection("half-space intersection has empty interior")
    interior = res.x[:n]
    stacked = np.hstack([A, -b[:, None]])
    hi = HalfspaceIntersection(stacked, interior)
    return make_polytope(hi.intersections)


def build_cone(apex, base_center, base_radius: float, axis=None) -> ConvexBody:
    """Solid cone with the given apex over a disc of radius ``base_radius``.

    The disc is centered at ``base_center`` and orthogonal to the apex
    direction.  If ``axis`` is supplied it must be parallel to
    apex - base_center (up to sign) within 1e-9 relative.  Degenerate cones
    (zero radius or zero height) are representable and have zero volume.
    """
    apex = np.asarray(apex, dtype=float).reshape(-1)
    base_center = _as_point(base_center, apex.size)
    if base_radius < 0:
        raise GeometryError("cone base radius must be nonnegative")
    d = apex - base_center
    h = float(np.linalg.norm(d))
    if axis is not None:
        ax = _unit(np.asarray(axis, dtype=float).reshape(-1))
        if h > 0 and np.linalg.norm(d - np.dot(d, ax) * ax) > 1e-9 * h:
            raise GeometryError("cone axis is not aligned with apex - base_center")
    elif h == 0 and base_radius > 0:
        raise GeometryError("flat cone (h=0) needs an explicit axis")
    return ConvexBody(apex.size, Cone(apex, base_center, float(base_radius)))


def make_profile_body(axis, anchor, t_grid, radii) -> ConvexBody:
    prof = ProfileBody(np.asarray(axis, float), np.asarray(anchor, float),
                       np.asarray(t_grid, float), np.asarray(radii, float))
    dim = prof.anchor.size
    if prof.axis.size != dim:
        raise GeometryError("profile axis/anchor dimension mismatch")
    return ConvexBody(dim, prof)


def ball_as_profile(body: ConvexBody, nodes: int = 512, axis=None) -> ConvexBody:
    """Replace a ball by a profile body on an arc-uniform grid.

    Cosine-spaced t nodes keep the piecewise-linear radius error O(h^2)
    uniformly, including at the poles.
    """
    ball = body.shape
    n = body.dim
    ax = _unit(np.asarray(axis, float)) if axis is not None else _unit(np.ones(n))
    theta = np.linspace(0.0, math.pi, nodes + 1)
    t = ball.radius * (1.0 - np.cos(theta))
    r = ball.radius * np.sin(theta)
    anchor = ball.center - ball.radius * ax
    return make_profile_body(ax, anchor, t, r)


def cone_as_profile(body: ConvexBody) -> ConvexBody:
    """Exact profile form of a nondegenerate cone (linear radius, 2 nodes)."""
    cone = body.shape
    h = cone.height
    if h == 0 or cone.base_radius == 0:
        raise GeometryError("degenerate cone has no profile form")
    ax = cone.axis_unit
    return make_profile_body(ax, cone.base_center, np.array([0.0, h]),
                             np.array([cone.base_radius, 0.0]))


# ---------------------------------------------------------------------------
# meridian helpers for bodies of revolution


def _meridian_coords(prof: ProfileBody, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rel = X - prof.anchor
    u = rel @ prof.axis
    perp = rel - np.outer(u, prof.axis)
    return u, np.linalg.norm(perp, axis=1)


def _meridian_boundary(prof: ProfileBody) -> list[tuple[np.ndarray, np.ndarray]]:
    """Boundary polyline of the meridian region {(u, rho): 0<=rho<=R(u)}."""
    t, r = prof.t_grid, prof.radii
    segs = []
    if r[0] > 0:
        segs.append((np.array([t[0], 0.0]), np.array([t[0], r[0]])))
    for i in range(t.size - 1):
        segs.append((np.array([t[i], r[i]]), np.array([t[i + 1], r[i + 1]])))
    if r[-1] > 0:
        segs.append((np.array([t[-1], r[-1]]), np.array([t[-1], 0.0])))
    return segs


def _seg_dist_2d(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from points P (m,2) to segment [a,b]."""
    ab = b - a
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return np.linalg.norm(P - a, axis=1)
    s = np.clip((P - a) @ ab / L2, 0.0, 1.0)
    proj = a + s[:, None] * ab
    return np.linalg.norm(P - proj, axis=1)


# ---------------------------------------------------------------------------
# membership


def contains_many(body: ConvexBody, X, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    """Vectorized membership test for points X of shape (m, n)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    sh = body.shape
    if isinstance(sh, Ball):
        return np.linalg.norm(X - sh.center, axis=1) <= sh.radius + tol
    if isinstance(sh, Box):
        return np.all((X >= sh.lo - tol) & (X <= sh.hi + tol), axis=1)
    if isinstance(sh, Polytope):
        A = np.array([h.normal for h in sh.halfspaces])
        b = np.array([h.offset for h in sh.halfspaces])
        return np.all(X @ A.T <= b + tol, axis=1)
    if isinstance(sh, Cone):
        h = sh.height
        if h == 0.0:
            d = X - sh.base_center
            return (np.linalg.norm(d, axis=1) <= sh.base_radius + tol)
        ax = sh.axis_unit
        rel = X - sh.base_center
        u = rel @ ax
        rho = np.linalg.norm(rel - np.outer(u, ax), axis=1)
        rmax = sh.base_radius * (1.0 - u / h)
        return (u >= -tol) & (u <= h + tol) & (rho <= rmax + tol)
    prof: ProfileBody = sh
    u, rho = _meridian_coords(prof, X)
    ok = (u >= prof.t_grid[0] - tol) & (u <= prof.t_grid[-1] + tol)
    r = np.interp(np.clip(u, prof.t_grid[0], prof.t_grid[-1]), prof.t_grid, prof.radii)
    return ok & (rho <= r + tol)


def contains(body: ConvexBody, x, tol: float = MEMBERSHIP_TOL) -> bool:
    return bool(contains_many(body, _as_point(x, body.dim), tol)[0])


def inside_depth(body: ConvexBody, X) -> np.ndarray:
    """Distance to the boundary for points inside the body (vectorized).

    For points outside the returned value is negative but only a lower bound
    on -dist; callers use it as an inside test plus depth.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    sh = body.shape
    if isinstance(sh, Ball):
        return sh.radius - np.linalg.norm(X - sh.center, axis=1)
    if isinstance(sh, Box):
        return np.minimum((X - sh.lo).min(axis=1), (sh.hi - X).min(axis=1))
    if isinstance(sh, Polytope):
        A = np.array([h.normal for h in sh.halfspaces])
        b = np.array([h.offset for h in sh.halfspaces])
        return (b - X @ A.T).min(axis=1)
    prof = sh if isinstance(sh, ProfileBody) else None
    if prof is None:  # cone
        body2 = cone_as_profile(ConvexBody(body.dim, sh))
        prof = body2.shape
    u, rho = _meridian_coords(prof, X)
    P = np.stack([u, rho], axis=1)
    d = np.full(X.shape[0], np.inf)
    for a, bseg in _meridian_boundary(prof):
        d = np.minimum(d, _seg_dist_2d(P, a, bseg))
    inside = contains_many(body, X)
    return np.where(inside, d, -d)


# ---------------------------------------------------------------------------
# measures


def volume(body: ConvexBody) -> float:
    sh = body.shape
    n = body.dim
    if isinstance(sh, Ball):
        return unit_ball_volume(n) * sh.radius ** n
    if isinstance(sh, Box):
        return float(np.prod(sh.hi - sh.lo))
    if isinstance(sh, Polytope):
        v = sh.vertices
        if n == 1:
            return float(v.max() - v.min())
        if n == 2:
            x, y = v[:, 0], v[:, 1]
            return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
        return float(ConvexHull(v).volume)
    if isinstance(sh, Cone):
        # (omega_{n-1}/n) * h * r^{n-1}
        return unit_ball_volume(n - 1) / n * sh.height * sh.base_radius ** (n - 1)
    return profile_volume_from_arrays(body.dim, sh.t_grid, sh.radii)


def profile_volume_from_arrays(n: int, t: np.ndarray, r: np.ndarray) -> float:
    """Volume of a revolution body: omega_{n-1} * integral of R(t)^{n-1}.

    The integral of the (n-1)-th power of a piecewise-linear profile is done
    exactly per interval, so linear cone profiles integrate to the exact cone
    volume rather than a trapezoid approximation.
    """
    om = unit_ball_volume(n - 1)
    dt = np.diff(t)
    a, b = r[:-1], r[1:]
    if n == 1:
        seg = dt * ((a > 0) | (b > 0)).astype(float)  # slice measure is 1 on support
        # 1-d "revolution" degenerates; support length
        return float(np.sum(seg))
    if n == 2:
        seg = 0.5 * (a + b) * dt
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            seg = np.where(np.abs(a - b) > 1e-30 * np.maximum(a, b),
                           (b ** 3 - a ** 3) / (3.0 * (b - a)),
                           a * a) * dt
    return om * float(np.sum(seg))


def euclidean_perimeter(body: ConvexBody) -> float:
    """Perimeter P(E) = H^{n-1}(boundary); equals 2 for every segment (n=1)."""
    sh = body.shape
    n = body.dim
    if n == 1:
        return 2.0
    if isinstance(sh, Ball):
        return n * unit_ball_volume(n) * sh.radius ** (n - 1)
    if isinstance(sh, Box):
        e = sh.hi - sh.lo
        if n == 2:
            return 2.0 * float(e.sum())
        return 2.0 * float(e[0] * e[1] + e[1] * e[2] + e[0] * e[2])
    if isinstance(sh, Polytope):
        v = sh.vertices
        if n == 2:
            return float(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1).sum())
        return float(ConvexHull(v).area)
    if isinstance(sh, Cone):
        r, h = sh.base_radius, sh.height
        slant = math.hypot(r, h)
        if n == 2:
            return 2.0 * slant + 2.0 * r
        return math.pi * r * slant + math.pi * r * r
    prof: ProfileBody = sh
    t, r = prof.t_grid, prof.radii
    ds = np.hypot(np.diff(t), np.diff(r))
    if n == 2:
        lateral = 2.0 * float(ds.sum())
        return lateral + 2.0 * float(r[0] + r[-1])
    lateral = 2.0 * math.pi * float(np.sum(0.5 * (r[:-1] + r[1:]) * ds))
    return lateral + math.pi * float(r[0] ** 2 + r[-1] ** 2)


def bounding_box(body: ConvexBody) -> tuple[np.ndarray, np.ndarray]:
    sh = body.shape
    n = body.dim
    if isinstance(sh, Ball):
        return sh.center - sh.radius, sh.center + sh.radius
    if isinstance(sh, Box):
        return sh.lo.copy(), sh.hi.copy()
    if isinstance(sh, Polytope):
        return sh.vertices.min(axis=0), sh.vertices.max(axis=0)
    if isinstance(sh, Cone):
        if sh.height == 0.0:
            ax = None
        else:
            ax = sh.axis_unit
        if ax is None:
            r = sh.base_radius
            return sh.base_center - r, sh.base_center + r
        disc_ext = sh.base_radius * np.sqrt(np.maximum(0.0, 1.0 - ax ** 2))
        lo = np.minimum(sh.apex, sh.base_center - disc_ext)
        hi = np.maximum(sh.apex, sh.base_center + disc_ext)
        return lo, hi
    prof: ProfileBody = sh
    ax = prof.axis
    disc_ext = np.sqrt(np.maximum(0.0, 1.0 - ax ** 2))
    centers = prof.anchor[None, :] + prof.t_grid[:, None] * ax[None, :]
    lo = (centers - prof.radii[:, None] * disc_ext[None, :]).min(axis=0)
    hi = (centers + prof.radii[:, None] * disc_ext[None, :]).max(axis=0)
    return lo, hi


def body_scale(body: ConvexBody) -> float:
    lo, hi = bounding_box(body)
    return max(float(np.max(hi - lo)), 1e-300)


def slice_measure(body: ConvexBody, nu, t: float) -> float:
    """H^{n-1} measure of the slice {x in E : x . nu = t}.

    For n=1 this is the 0-dimensional counting measure: 1 on the support,
    0 outside.
    """
    nu = _unit(_as_point(nu, body.dim))
    n = body.dim
    sh = body.shape
    if n == 1:
        lo, hi = bounding_box(body)
        tt = t * nu[0]
        return 1.0 if lo[0] - MEMBERSHIP_TOL <= tt <= hi[0] + MEMBERSHIP_TOL else 0.0
    if isinstance(sh, Ball):
        d = abs(t - float(np.dot(nu, sh.center)))
        if d > sh.radius:
            return 0.0
        rho2 = sh.radius ** 2 - d ** 2
        return unit_ball_volume(n - 1) * rho2 ** ((n - 1) / 2.0)
    if isinstance(sh, Box):
        return _slice_polytope(as_polytope(body), nu, t)
    if isinstance(sh, Polytope):
        return _slice_polytope(body, nu, t)
    if isinstance(sh, (Cone, ProfileBody)):
        prof = sh if isinstance(sh, ProfileBody) else cone_as_profile(body).shape
        along = float(np.dot(nu, prof.axis))
        if abs(abs(along) - 1.0) <= 1e-12:
            # x.nu = anchor.nu + u * along on the axis, so u = (t - anchor.nu)/along
            u = (t - float(np.dot(nu, prof.anchor))) / along
            r = float(prof.radius_at(u))
            return unit_ball_volume(n - 1) * r ** (n - 1)
        return _slice_polytope(as_polytope(body), nu, t)
    raise GeometryError("unsupported shape for slice")


def _slice_polytope(body: ConvexBody, nu: np.ndarray, t: float) -> float:
    sh: Polytope = body.shape
    v = sh.vertices
    proj = v @ nu
    if t < proj.min() - 1e-13 or t > proj.max() + 1e-13:
        return 0.0
    n = body.dim
    pts = []
    for i, j in _polytope_edges(body):
        a, b = proj[i], proj[j]
        if (a - t) * (b - t) <= 0 and a != b:
            lam = (t - a) / (b - a)
            if -1e-12 <= lam <= 1 + 1e-12:
                pts.append(v[i] + np.clip(lam, 0, 1) * (v[j] - v[i]))
    on = np.abs(proj - t) <= 1e-13 * max(1.0, np.abs(proj).max())
    for p in v[on]:
        pts.append(p)
    if not pts:
        return 0.0
    P = np.array(pts)
    if n == 2:
        # chord length along the direction orthogonal to nu
        tang = np.array([-nu[1], nu[0]])
        s = P @ tang
        return float(s.max() - s.min())
    # planar polygon area
    if P.shape[0] < 3:
        return 0.0
    a = np.argmin(np.abs(nu))
    e1 = np.zeros(3)
    e1[a] = 1.0
    e1 = _unit(e1 - np.dot(e1, nu) * nu)
    e2 = np.cross(nu, e1)
    uv = np.stack([P @ e1, P @ e2], axis=1)
    uv = uv - uv.mean(axis=0)
    if uv.shape[0] >= 3:
        try:
            hull = ConvexHull(uv)
        except Exception:
            return 0.0
        return float(hull.volume)  # 2-d "volume" is the area
    return 0.0


def _polytope_edges(body: ConvexBody) -> list[tuple[int, int]]:
    sh: Polytope = body.shape
    n = body.dim
    if n == 1:
        return [(0, 1)]
    m = sh.vertices.shape[0]
    if n == 2:
        return [(i, (i + 1) % m) for i in range(m)]
    edges = set()
    for facet in sh.facets:
        k = len(facet)
        for i in range(k):
            a, b = facet[i], facet[(i + 1) % k]
            edges.add((min(a, b), max(a, b)))
    return sorted(edges)


# ---------------------------------------------------------------------------
# polytope conversion and clipping


def as_polytope(body: ConvexBody, resolution: int = CURVE_RESOLUTION) -> ConvexBody:
    """Polytope form of a body; curved shapes are sampled at ``resolution``."""
    sh = body.shape
    n = body.dim
    if isinstance(sh, Polytope):
        return body
    if isinstance(sh, Box):
        if n == 1:
            return make_polytope([[sh.lo[0]], [sh.hi[0]]])
        corners = np.array(np.meshgrid(*[[sh.lo[i], sh.hi[i]] for i in range(n)],
                                       indexing="ij")).reshape(n, -1).T
        return make_polytope(corners)
    if isinstance(sh, Ball):
        if n == 1:
            return make_polytope([[sh.center[0] - sh.radius], [sh.center[0] + sh.radius]])
        if n == 2:
            ang = 2.0 * math.pi * np.arange(resolution) / resolution
            pts = sh.center + sh.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
            return make_polytope(pts)
        m = max(resolution * 4, 256)
        i = np.arange(m) + 0.5
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        z = 1.0 - 2.0 * i / m
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        pts = sh.center + sh.radius * np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
        return make_polytope(pts)
    if isinstance(sh, Cone):
        if sh.height == 0.0 or sh.base_radius == 0.0:
            raise GeometryError("degenerate cone has no polytope form")
        if n == 2:
            ax = sh.axis_unit
            perp = np.array([-ax[1], ax[0]])
            return make_polytope([sh.apex,
                                  sh.base_center + sh.base_radius * perp,
                                  sh.base_center - sh.base_radius * perp])
        return as_polytope(cone_as_profile(body), resolution)
    prof: ProfileBody = sh
    ax = prof.axis
    if n == 2:
        perp = np.array([-ax[1], ax[0]])
        centers = prof.anchor[None, :] + prof.t_grid[:, None] * ax[None, :]
        upper = centers + prof.radii[:, None] * perp[None, :]
        lower = centers - prof.radii[:, None] * perp[None, :]
        return make_polytope(np.vstack([upper, lower]))
    a = np.argmin(np.abs(ax))
    e1 = np.zeros(3)
    e1[a] = 1.0
    e1 = _unit(e1 - np.dot(e1, ax) * ax)
    e2 = np.cross(ax, e1)
    k = max(16, resolution // 8)
    ang = 2.0 * math.pi * np.arange(k) / k
    ring = np.cos(ang)[:, None] * e1[None, :] + np.sin(ang)[:, None] * e2[None, :]
    pts = []
    for t, r in zip(prof.t_grid, prof.radii):
        c = prof.anchor + t * ax
        if r == 0.0:
            pts.append(c[None, :])
        else:
            pts.append(c[None, :] + r * ring)
    return make_polytope(np.vstack(pts))


def intersect_halfspace(body: ConvexBody, hs: HalfSpace,
                        resolution: int = CURVE_RESOLUTION) -> ConvexBody:
    """Clip the body by a half-space.

    Returns the body unchanged when the half-space does not cut it.  Curved
    shapes that are actually cut are replaced by their polytope form at the
    configured resolution (exact for polygons/boxes and for profile bodies cut
    orthogonally to their axis).  Raises EmptyIntersection when the interior
    of the result is empty.
    """
    nu, c = hs.normal, hs.offset
    if nu.size != body.dim:
        raise GeometryError("half-space dimension mismatch")
    s_max = _support(body, nu)
    if s_max <= c + NESTING_TOL * body_scale(body):
        return body
    s_min = -_support(body, -nu)
    if s_min >= c - 1e-12 * body_scale(body):
        raise EmptyIntersection("half-space removes the whole body")
    sh = body.shape
    n = body.dim
    if n == 1:
        lo, hi = bounding_box(body)
        if nu[0] > 0:
            hi = np.array([min(hi[0], c / nu[0])])
        else:
            lo = np.array([max(lo[0], c / nu[0])])
        if hi[0] - lo[0] <= 0:
            raise EmptyIntersection("empty 1-d intersection")
        return make_box(lo, hi)
    if isinstance(sh, ProfileBody):
        along = float(np.dot(nu, sh.axis))
        if abs(abs(along) - 1.0) <= 1e-12:
            return _trim_profile(body, along, c)
    if isinstance(sh, Cone) and sh.height > 0 and sh.base_radius > 0:
        along = float(np.dot(nu, sh.axis_unit))
        if abs(abs(along) - 1.0) <= 1e-12 and body.dim == 3:
            return _trim_profile(cone_as_profile(body), along, c)
    poly = as_polytope(body, resolution)
    return _clip_polytope(poly, nu, c)


def _trim_profile(body: ConvexBody, along: float, c: float) -> ConvexBody:
    prof: ProfileBody = body.shape
    base = float(np.dot(prof.anchor, prof.axis))
    if along > 0:
        # constraint anchor.axis + u <= c
        t_hi = c - base
        t_lo = prof.t_grid[0]
    else:
        # constraint -(anchor.axis + u) <= c
        t_lo = -c - base
        t_hi = prof.t_grid[-1]
    t_lo = max(t_lo, prof.t_grid[0])
    t_hi = min(t_hi, prof.t_grid[-1])
    if t_hi - t_lo <= 0:
        raise EmptyIntersection("profile trim left no extent")
    keep = (prof.t_grid > t_lo) & (prof.t_grid < t_hi)
    ts = np.concatenate([[t_lo], prof.t_grid[keep], [t_hi]])
    rs = prof.radius_at(ts)
    new_anchor = prof.anchor + t_lo * prof.axis
    return make_profile_body(prof.axis, new_anchor, ts - t_lo, rs)


def _clip_polytope(body: ConvexBody, nu: np.ndarray, c: float) -> ConvexBody:
    sh: Polytope = body.shape
    v = sh.vertices
    proj = v @ nu
    keep = proj <= c + 1e-13 * max(1.0, np.abs(proj).max())
    pts = [v[keep]]
    for i, j in _polytope_edges(body):
        a, b = proj[i], proj[j]
        if (a - c) * (b - c) < 0:
            lam = (c - a) / (b - a)
            pts.append((v[i] + lam * (v[j] - v[i]))[None, :])
    P = np.vstack([p for p in pts if p.size])
    try:
        return make_polytope(P)
    except Exception as exc:
        raise EmptyIntersection(f"clip produced a degenerate set: {exc}") from exc


def support_interval(body: ConvexBody, nu) -> tuple[float, float]:
    """Range of x . nu over the body (nu normalized first)."""
    nu = _unit(_as_point(nu, body.dim))
    return -_support(body, -nu), _support(body, nu)


def _support(body: ConvexBody, nu: np.ndarray) -> float:
    """Support function max_{x in E} nu . x."""
    sh = body.shape
    if isinstance(sh, Ball):
        return float(np.dot(nu, sh.center)) + sh.radius * float(np.linalg.norm(nu))
    if isinstance(sh, Box):
        return float(np.sum(np.where(nu > 0, nu * sh.hi, nu * sh.lo)))
    if isinstance(sh, Polytope):
        return float((sh.vertices @ nu).max())
    if isinstance(sh, Cone):
        disc = float(np.dot(nu, sh.base_center))
        if sh.base_radius > 0:
            if sh.height > 0:
                ax = sh.axis_unit
            else:
                ax = None
            if ax is not None:
                tang = nu - float(np.dot(nu, ax)) * ax
                disc += sh.base_radius * float(np.linalg.norm(tang))
            else:
                disc += sh.base_radius * float(np.linalg.norm(nu))
        return max(disc, float(np.dot(nu, sh.apex)))
    prof: ProfileBody = sh
    ax = prof.axis
    tang = nu - float(np.dot(nu, ax)) * ax
    tn = float(np.linalg.norm(tang))
    vals = (prof.anchor @ nu) + prof.t_grid * float(np.dot(nu, ax)) + prof.radii * tn
    return float(vals.max())


# ---------------------------------------------------------------------------
# distances, projections, Hausdorff


def extreme_points(body: ConvexBody, curve_samples: int = 4096) -> np.ndarray:
    """Extreme points; curved shapes are sampled densely (documented)."""
    sh = body.shape
    n = body.dim
    if isinstance(sh, Polytope):
        return sh.vertices.copy()
    if isinstance(sh, Box):
        return as_polytope(body).shape.vertices.copy()
    if isinstance(sh, Ball):
        if n == 1:
            return np.array([[sh.center[0] - sh.radius], [sh.center[0] + sh.radius]])
        if n == 2:
            ang = 2.0 * math.pi * np.arange(curve_samples) / curve_samples
            return sh.center + sh.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        m = curve_samples
        i = np.arange(m) + 0.5
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        z = 1.0 - 2.0 * i / m
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return sh.center + sh.radius * np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    if isinstance(sh, Cone):
        if sh.base_radius == 0.0:
            return np.vstack([sh.apex, sh.base_center])
        if n == 2:
            return as_polytope(body).shape.vertices.copy()
        prof = cone_as_profile(body)
        return extreme_points(prof, curve_samples)
    prof: ProfileBody = sh
    if n == 2:
        return as_polytope(body).shape.vertices.copy()
    ax = prof.axis
    a = np.argmin(np.abs(ax))
    e1 = np.zeros(3)
    e1[a] = 1.0
    e1 = _unit(e1 - np.dot(e1, ax) * ax)
    e2 = np.cross(ax, e1)
    k = max(8, curve_samples // max(1, prof.t_grid.size))
    ang = 2.0 * math.pi * np.arange(k) / k
    ring = np.cos(ang)[:, None] * e1[None, :] + np.sin(ang)[:, None] * e2[None, :]
    out = []
    for t, r in zip(prof.t_grid, prof.radii):
        c = prof.anchor + t * ax
        if r == 0.0:
            out.append(c[None, :])
        else:
            out.append(c[None, :] + r * ring)
    return np.vstack(out)


def project_point(body: ConvexBody, y) -> np.ndarray:
    """Nearest point of the body to y (y itself when y is inside)."""
    y = _as_point(y, body.dim)
    if contains(body, y, tol=0.0):
        return y.copy()
    sh = body.shape
    n = body.dim
    if isinstance(sh, Ball):
        return sh.center + sh.radius * _unit(y - sh.center)
    if isinstance(sh, Box):
        return np.clip(y, sh.lo, sh.hi)
    if isinstance(sh, Polytope):
        if n == 1:
            return np.clip(y, sh.vertices.min(), sh.vertices.max())
        best, bd = None, np.inf
        v = sh.vertices
        for i, j in _polytope_edges(body):
            a, b = v[i], v[j]
            ab = b - a
            s = float(np.clip(np.dot(y - a, ab) / np.dot(ab, ab), 0.0, 1.0))
            p = a + s * ab
            d = float(np.linalg.norm(y - p))
            if d < bd:
                best, bd = p, d
        if n == 3:
            for hsp, facet in zip(sh.halfspaces, sh.facets):
                d = float(np.dot(hsp.normal, y) - hsp.offset)
                if d <= 0:
                    continue
                p = y - d * hsp.normal
                poly = v[list(facet)]
                if _point_in_planar_polygon(p, poly, hsp.normal):
                    if d < bd:
                        best, bd = p, d
        return best
    # cone / profile: do the 2-d meridian projection, rotate back
    prof = sh if isinstance(sh, ProfileBody) else cone_as_profile(body).shape
    u, rho = _meridian_coords(prof, y[None, :])
    u, rho = float(u[0]), float(rho[0])
    P = np.array([[u, rho]])
    best, bd = None, np.inf
    for a, b in _meridian_boundary(prof):
        ab = b - a
        L2 = float(ab @ ab)
        s = 0.0 if L2 == 0 else float(np.clip((P[0] - a) @ ab / L2, 0.0, 1.0))
        p2 = a + s * ab
        d = float(np.linalg.norm(P[0] - p2))
        if d < bd:
            best, bd = p2, d
    rel = y - prof.anchor - u * prof.axis
    if rho > 1e-300:
        radial = rel / rho
    else:
        radial = np.zeros(body.dim)
    return prof.anchor + best[0] * prof.axis + best[1] * radial


def _point_in_planar_polygon(p: np.ndarray, poly: np.ndarray, normal: np.ndarray) -> bool:
    k = poly.shape[0]
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        if np.dot(np.cross(b - a, p - a), normal) < -1e-12:
            return False
    return True


def point_distance(body: ConvexBody, y) -> float:
    """Euclidean distance from y to the body (0 inside)."""
    y = _as_point(y, body.dim)
    if contains(body, y, tol=0.0):
        return 0.0
    return float(np.linalg.norm(y - project_point(body, y)))


def is_nested(inner: ConvexBody, outer: ConvexBody, tol: float = NESTING_TOL) -> bool:
    """Whether inner is contained in outer within ``tol`` (checked on extreme points)."""
    ish, osh = inner.shape, outer.shape
    if isinstance(ish, Ball):
        c, R = ish.center, ish.radius
        if isinstance(osh, Ball):
            return float(np.linalg.norm(c - osh.center)) + R <= osh.radius + tol
        if isinstance(osh, (Polytope, Box)):
            poly = outer if isinstance(osh, Polytope) else as_polytope(outer)
            return all(float(np.dot(h.normal, c)) + R <= h.offset + tol
                       for h in poly.shape.halfspaces)
    pts = extreme_points(inner)
    if isinstance(osh, Ball):
        return bool(np.all(np.linalg.norm(pts - osh.center, axis=1) <= osh.radius + tol))
    return bool(np.all(contains_many(outer, pts, tol=tol)))


def hausdorff_distance(A: ConvexBody, B: ConvexBody
                       ) -> tuple[float, np.ndarray, np.ndarray]:
    """One-sided Hausdorff distance of nested convex bodies A <= B.

    Returns (h, a, b): b maximizes dist(., A) over B (attained at an extreme
    point of B), a is the nearest point of A to b.  Among maximizers within
    1e-9 * scale the lexicographically smallest b is returned.  Raises
    NotNested when A is not contained in B.
    """
    if A.dim != B.dim:
        raise GeometryError("dimension mismatch")
    if not is_nested(A, B):
        raise NotNested("A is not contained in B within tolerance")
    scale = max(body_scale(A), body_scale(B))
    if isinstance(A.shape, Ball) and isinstance(B.shape, Ball):
        cA, rA = A.shape.center, A.shape.radius
        cB, rB = B.shape.center, B.shape.radius
        gap = float(np.linalg.norm(cB - cA))
        h = gap + rB - rA
        if h <= NESTING_TOL * scale:
            b = cB + rB * _lex_smallest_dir(A.dim)
            return 0.0, b.copy(), b.copy()
        if gap > 1e-15 * scale:
            d = (cB - cA) / gap
        else:
            d = _lex_smallest_dir(A.dim)
        b = cB + rB * d
        a = cA + rA * d
        return h, a, b
    cand = extreme_points(B)
    dists = np.array([point_distance(A, p) for p in cand])
    hmax = float(dists.max())
    if hmax <= NESTING_TOL * scale:
        b = cand[0]
        return 0.0, b.copy(), b.copy()
    near = np.nonzero(dists >= hmax - 1e-9 * scale)[0]
    order = np.lexsort(tuple(cand[near][:, k] for k in range(A.dim - 1, -1, -1)))
    b = cand[near[order[0]]]
    a = project_point(A, b)
    return float(point_distance(A, b)), a, b


def _lex_smallest_dir(n: int) -> np.ndarray:
    d = np.zeros(n)
    d[0] = -1.0
    return d


def translate(body: ConvexBody, v) -> ConvexBody:
    v = _as_point(v, body.dim)
    sh = body.shape
    if isinstance(sh, Ball):
        return ConvexBody(body.dim, Ball(sh.center + v, sh.radius))
    if isinstance(sh, Box):
        return ConvexBody(body.dim, Box(sh.lo + v, sh.hi + v))
    if isinstance(sh, Polytope):
        moved = [HalfSpace(h.normal, h.offset + float(np.dot(h.normal, v)))
                 for h in sh.halfspaces]
        return ConvexBody(body.dim, Polytope(sh.vertices + v, tuple(moved), sh.facets))
    if isinstance(sh, Cone):
        return ConvexBody(body.dim, Cone(sh.apex + v, sh.base_center + v, sh.base_radius))
    prof: ProfileBody = sh
    return make_profile_body(prof.axis, prof.anchor + v, prof.t_grid, prof.radii)


def scale(body: ConvexBody, lam: float, center=None) -> ConvexBody:
    """Dilation x -> center + lam (x - center)."""
    if lam <= 0:
        raise GeometryError("scaling factor must be positive")
    c = np.zeros(body.dim) if center is None else _as_point(center, body.dim)
    sh = body.shape
    if isinstance(sh, Ball):
        return ConvexBody(body.dim, Ball(c + lam * (sh.center - c), lam * sh.radius))
    if isinstance(sh, Box):
        return make_box(c + lam * (sh.lo - c), c + lam * (sh.hi - c))
    if isinstance(sh, Polytope):
        return make_polytope(c + lam * (sh.vertices - c))
    if isinstance(sh, Cone):
        return ConvexBody(body.dim, Cone(c + lam * (sh.apex - c),
                                         c + lam * (sh.base_center - c),
                                         lam * sh.base_radius))
    prof: ProfileBody = sh
    return make_profile_body(prof.axis, c + lam * (prof.anchor - c),
                             lam * prof.t_grid, lam * prof.radii)


def _meridian_polygon(t: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Closed CCW polygon of the half slab {(t, y): 0 <= y <= R(t)}."""
    top = np.stack([t[::-1], r[::-1]], axis=1)
    base = np.array([[t[0], 0.0], [t[-1], 0.0]])
    return np.vstack([base, top])


def _segment_pair_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Smallest distance between any segment of polyline loop A and of B.

    Both inputs are closed polygons given as vertex arrays; the clamped
    closest-point formula covers crossing segments (distance zero) as well.
    """
    p1 = A
    d1 = np.roll(A, -1, axis=0) - A
    p2 = B
    d2 = np.roll(B, -1, axis=0) - B
    P1 = p1[:, None, :]
    D1 = d1[:, None, :]
    P2 = p2[None, :, :]
    D2 = d2[None, :, :]
    r = P1 - P2
    a = np.sum(D1 * D1, axis=-1)
    e = np.sum(D2 * D2, axis=-1)
    b = np.sum(D1 * D2, axis=-1)
    c = np.sum(D1 * r, axis=-1)
    f = np.sum(D2 * r, axis=-1)
    denom = a * e - b * b
    s = np.where(denom > 1e-30, (b * f - c * e) / np.where(denom > 1e-30, denom, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    t = np.where(e > 1e-30, (b * s + f) / np.where(e > 1e-30, e, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    s = np.where(a > 1e-30, np.clip((b * t - c) / np.where(a > 1e-30, a, 1.0), 0.0, 1.0), 0.0)
    diff = (P1 + s[..., None] * D1) - (P2 + t[..., None] * D2)
    return float(np.sqrt(np.min(np.sum(diff * diff, axis=-1))))


def _point_in_convex_polygon(P: np.ndarray, x: np.ndarray) -> bool:
    edges = np.roll(P, -1, axis=0) - P
    rel = x[None, :] - P
    cross = edges[:, 0] * rel[:, 1] - edges[:, 1] * rel[:, 0]
    return bool(np.all(cross >= -1e-12))


def _coaxial_meridians(E: ConvexBody, F: ConvexBody):
    """Axial (t, R) data for two bodies of revolution around one line.

    Returns (tE, rE, tF, rF) in a shared axial coordinate, or None when the
    pair is not a coaxial profile/cone pair.
    """
    def prof_of(body):
        if isinstance(body.shape, Cone):
            if body.shape.height == 0.0 or body.shape.base_radius == 0.0:
                return None
            return cone_as_profile(body).shape
        if isinstance(body.shape, ProfileBody):
            return body.shape
        return None

    pe, pf = prof_of(E), prof_of(F)
    if pe is None or pf is None:
        return None
    u = pe.axis
    dot = float(np.dot(u, pf.axis))
    scale = max(body_scale(E), body_scale(F))
    if abs(abs(dot) - 1.0) > 1e-9:
        return None
    d = pf.anchor - pe.anchor
    axial = float(np.dot(d, u))
    if np.linalg.norm(d - axial * u) > 1e-9 * scale:
        return None
    tE = pe.t_grid
    if dot > 0:
        tF = axial + pf.t_grid
        rF = pf.radii
    else:
        tF = axial - pf.t_grid[::-1]
        rF = pf.radii[::-1]
    return tE, pe.radii, tF, rF


def body_distance(E: ConvexBody, F: ConvexBody) -> float:
    """Distance between two convex bodies (0 when they intersect).

    Ball cases reduce to point-body distance and coaxial bodies of revolution
    to a planar meridian computation, both exact.  Remaining pairs use a
    separating-axis test on polytope forms, exact for polytopes and inscribed
    (so the distance errs upward) for sampled curved shapes.
    """
    if isinstance(E.shape, Ball):
        d = point_distance(F, E.shape.center) - E.shape.radius
        return max(0.0, d)
    if isinstance(F.shape, Ball):
        d = point_distance(E, F.shape.center) - F.shape.radius
        return max(0.0, d)
    coax = _coaxial_meridians(E, F)
    if coax is not None:
        tE, rE, tF, rF = coax
        # min over pairs of points at equal angle around the axis reduces
        # the distance to the two half slabs in a meridian plane
        PA = _meridian_polygon(tE, rE)
        PB = _meridian_polygon(tF, rF)
        d = _segment_pair_distance(PA, PB)
        if d > 0.0 and (_point_in_convex_polygon(PB, PA[0])
                        or _point_in_convex_polygon(PA, PB[0])):
            return 0.0
        return d
    P = as_polytope(_distance_proxy(E), resolution=128)
    Q = as_polytope(_distance_proxy(F), resolution=128)
    vp, vq = P.shape.vertices, Q.shape.vertices
    n = E.dim
    axes = [h.normal for h in P.shape.halfspaces] + [h.normal for h in Q.shape.halfspaces]
    best = 0.0
    for ax in axes:
        gap = float((vq @ ax).min() - (vp @ ax).max())
        gap2 = float((vp @ ax).min() - (vq @ ax).max())
        best = max(best, gap, gap2)
    if n == 3 and best <= 0.0:
        ep = np.array([vp[j] - vp[i] for i, j in _polytope_edges(P)])
        eq = np.array([vq[j] - vq[i] for i, j in _polytope_edges(Q)])
        for chunk in np.array_split(ep, max(1, len(ep) * len(eq) // 200000 + 1)):
            cr = np.cross(chunk[:, None, :], eq[None, :, :]).reshape(-1, 3)
            nn = np.linalg.norm(cr, axis=1)
            cr = cr[nn > 1e-12] / nn[nn > 1e-12, None]
            if not len(cr):
                continue
            hi_p = (cr @ vp.T).max(axis=1)
            lo_p = (cr @ vp.T).min(axis=1)
            hi_q = (cr @ vq.T).max(axis=1)
            lo_q = (cr @ vq.T).min(axis=1)
            best = max(best, float(np.max(lo_q - hi_p)), float(np.max(lo_p - hi_q)))
    return best


def _distance_proxy(body: ConvexBody) -> ConvexBody:
    """Thin out dense profiles before a separating-axis query."""
    sh = body.shape
    if not isinstance(sh, ProfileBody) or sh.t_grid.size <= 64:
        return body
    t = np.linspace(sh.t_grid[0], sh.t_grid[-1], 64)
    return make_profile_body(sh.axis, sh.anchor, t, np.interp(t, sh.t_grid, sh.radii))


# ---------------------------------------------------------------------------
# JSON round trip


def body_to_dict(body: ConvexBody) -> dict:
    sh = body.shape
    if isinstance(sh, Ball):
        return {"dim": body.dim, "shape": {"type": "ball",
                                           "center": sh.center.tolist(),
                                           "radius": sh.radius}}
    if isinstance(sh, Box):
        return {"dim": body.dim, "shape": {"type": "box",
                                           "lo": sh.lo.tolist(), "hi": sh.hi.tolist()}}
    if isinstance(sh, Polytope):
        return {"dim": body.dim, "shape": {"type": "polytope",
                                           "vertices": sh.vertices.tolist()}}
    if isinstance(sh, Cone):
        return {"dim": body.dim, "shape": {"type": "cone",
                                           "apex": sh.apex.tolist(),
                                           "base_center": sh.base_center.tolist(),
                                           "base_radius": sh.base_radius}}
    prof: ProfileBody = sh
    return {"dim": body.dim, "shape": {"type": "profile",
                                       "axis": prof.axis.tolist(),
                                       "anchor": prof.anchor.tolist(),
                                       "t_grid": prof.t_grid.tolist(),
                                       "radii": prof.radii.tolist()}}


_SHAPE_KEYS = {
    "ball": {"type", "center", "radius"},
    "box": {"type", "lo", "hi"},
    "polytope": {"type", "vertices"},
    "cone": {"type", "apex", "base_center", "base_radius"},
    "profile": {"type", "axis", "anchor", "t_grid", "radii"},
}


def body_from_dict(data: dict) -> ConvexBody:
    if set(data.keys()) != {"dim", "shape"}:
        raise GeometryError(f"body object must have exactly keys dim/shape, got {sorted(data)}")
    dim = data["dim"]
    shp = data["shape"]
    kind = shp.get("type")
    if kind not in _SHAPE_KEYS:
        raise GeometryError(f"unknown shape type {kind!r}")
    if set(shp.keys()) != _SHAPE_KEYS[kind]:
        raise GeometryError(f"shape {kind!r} has wrong keys {sorted(shp)}")
    if kind == "ball":
        body = make_ball(shp["center"], shp["radius"])
    elif kind == "box":
        body = make_box(shp["lo"], shp["hi"])
    elif kind == "polytope":
        body = make_polytope(shp["vertices"])
    elif kind == "cone":
        body = build_cone(shp["apex"], shp["base_center"], shp["base_radius"])
    else:
        body = make_profile_body(shp["axis"], shp["anchor"], shp["t_grid"], shp["radii"])
    if body.dim != dim:
        raise GeometryError("declared dim does not match shape data")
    return body
