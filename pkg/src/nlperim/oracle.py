"""Brute-force voxel evaluation of the interaction functionals.

Ground-truth path for cross-validating the quadrature and Monte-Carlo
engines on small instances: sets become occupancy masks on a regular grid
and every functional is a plain midpoint sum over cell-center pairs.  The
code deliberately shares nothing with the engine beyond the kernel
definition, and it trades speed for transparency (the all-pairs loop is
the specification).

An FFT fast path (exact pair counting through mask cross-correlation) is
available behind ``fast=True`` for experiments; validation runs keep the
direct loop.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import nquad, quad

from . import geometry as geo

MAX_CELLS = 1 << 24
_BLOCK_PAIRS = 1 << 21


class OracleError(ValueError):
    """Invalid voxel input."""


@dataclass(frozen=True, eq=False)
class VoxelSet:
    """Occupancy mask over a regular axis-aligned grid.

    ``origin`` is the low corner of cell (0, ..., 0) and ``spacing`` the
    common cell edge; cell (i1, ..., in) covers origin + spacing * [i, i+1).
    """

    dim: int
    origin: np.ndarray
    spacing: float
    mask: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(-1)
        mask = np.asarray(self.mask, dtype=bool)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "mask", mask)
        if self.dim not in (1, 2, 3):
            raise OracleError(f"dimension must be 1, 2 or 3, got {self.dim}")
        if origin.shape != (self.dim,) or mask.ndim != self.dim:
            raise OracleError("origin/mask shapes do not match the dimension")
        if not (self.spacing > 0):
            raise OracleError("cell spacing must be positive")
        if mask.size > MAX_CELLS:
            raise OracleError(f"grid has {mask.size} cells, limit is {MAX_CELLS}")

    @property
    def shape(self) -> tuple:
        return self.mask.shape

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def volume(self) -> float:
        return self.count * self.spacing ** self.dim

    def cell_centers(self) -> np.ndarray:
        """Centers of every grid cell, C order, shape (n_cells, dim)."""
        axes = [self.origin[k] + self.spacing * (np.arange(self.shape[k]) + 0.5)
                for k in range(self.dim)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def occupied_centers(self) -> np.ndarray:
        return self.cell_centers()[self.mask.ravel()]

    def complement(self) -> "VoxelSet":
        """Complement within this grid (ignores everything outside it)."""
        return VoxelSet(self.dim, self.origin, self.spacing, ~self.mask)

    def same_grid(self, other: "VoxelSet") -> bool:
        return (self.dim == other.dim and self.shape == other.shape
                and abs(self.spacing - other.spacing) <= 1e-12 * self.spacing
                and bool(np.all(np.abs(self.origin - other.origin)
                                <= 1e-9 * self.spacing)))

    # -- run-length JSON payloads (test fixtures) ----------------------------

    def to_dict(self) -> dict:
        flat = self.mask.ravel()
        runs = []
        pos, current = 0, False
        while pos < flat.size:
            nxt = pos
            while nxt < flat.size and flat[nxt] == current:
                nxt += 1
            runs.append(nxt - pos)
            pos, current = nxt, not current
        return {"dim": self.dim, "origin": self.origin.tolist(),
                "spacing": self.spacing, "shape": list(self.shape),
                "runs": runs}

    @classmethod
    def from_dict(cls, data: dict) -> "VoxelSet":
        shape = tuple(int(k) for k in data["shape"])
        flat = np.zeros(int(np.prod(shape)), dtype=bool)
        pos, current = 0, False
        for run in data["runs"]:
            if current:
                flat[pos:pos + run] = True
            pos += run
            current = not current
        if pos != flat.size:
            raise OracleError("run lengths do not cover the grid")
        return cls(int(data["dim"]), np.asarray(data["origin"], dtype=float),
                   float(data["spacing"]), flat.reshape(shape))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, payload: str) -> "VoxelSet":
        return cls.from_dict(json.loads(payload))


def voxelize(body: geo.ConvexBody, resolution: int, pad_cells: int = 1) -> VoxelSet:
    """Center-in/out occupancy of a convex body.

    ``resolution`` counts cells across the longest bounding-box edge; the
    grid covers the bounding box padded by ``pad_cells`` cells on each side.
    """
    if int(resolution) != resolution or not (4 <= resolution <= 64):
        raise OracleError(f"resolution must be an integer in [4, 64], got {resolution}")
    if pad_cells < 0:
        raise OracleError("pad_cells must be non-negative")
    lo, hi = geo.bounding_box(body)
    ext = hi - lo
    h = float(np.max(ext)) / int(resolution)
    counts = np.ceil(ext / h - 1e-9).astype(int) + 2 * int(pad_cells)
    if int(np.prod(counts)) > MAX_CELLS:
        raise OracleError("padded grid exceeds the cell limit")
    origin = lo - pad_cells * h
    vox = VoxelSet(body.dim, origin, h, np.zeros(tuple(counts), dtype=bool))
    inside = geo.contains_many(body, vox.cell_centers())
    return VoxelSet(body.dim, origin, h, inside.reshape(tuple(counts)))


# ---------------------------------------------------------------------------
# pair sums


def _check_same_grid(P: VoxelSet, Q: VoxelSet) -> None:
    if not P.same_grid(Q):
        raise OracleError("voxel sets live on different grids")


_NEAR_RANGE = 2          # offsets with |delta|_inf below this get exact masses


def _gl_panels(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    return ((mid[:, None] + half[:, None] * x[None, :]).ravel(),
            (half[:, None] * w[None, :]).ravel())


_GRADING_LEVELS = 23     # geometric bisections toward the kernel singularity


def _axis_quadrature(delta_i: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """One axis factor of the cell correlation integral.

    Zero components exploit evenness and halve the range.  Panel edges
    always include the hat kink at delta_i h, and ranges reaching the
    kernel singularity at zero are refined geometrically toward it.
    """
    if delta_i == 0:
        edges = np.concatenate([[0.0], h * 2.0 ** -np.arange(_GRADING_LEVELS, -1.0, -1)])
        x, w = _gl_panels(edges, 6)
        return x, 2.0 * w
    if delta_i == 1:
        inner = np.concatenate([[0.0], h * 2.0 ** -np.arange(_GRADING_LEVELS, -1.0, -1)])
        xi, wi = _gl_panels(inner, 6)
        xo, wo = _gl_panels(np.linspace(h, 2.0 * h, 4), 8)
        return np.concatenate([xi, xo]), np.concatenate([wi, wo])
    lo, mid, hi = (delta_i - 1) * h, delta_i * h, (delta_i + 1) * h
    edges = np.concatenate([np.linspace(lo, mid, 3), np.linspace(mid, hi, 3)[1:]])
    return _gl_panels(edges, 8)


def _tensor_mass(kernel, h: float, delta: tuple[int, ...],
                 axes: list[tuple[np.ndarray, np.ndarray]]) -> float:
    shift = h * np.asarray(delta, dtype=float)
    total = 0.0
    # chunk along the first axis: full 3D tensors reach millions of nodes
    x0, w0 = axes[0]
    rest = axes[1:]
    step = max(1, 400_000 // max(1, int(np.prod([a[0].size for a in rest]))))
    for start in range(0, x0.size, step):
        block = [(x0[start:start + step], w0[start:start + step])] + rest
        grids = np.meshgrid(*[a[0] for a in block], indexing="ij")
        wgts = np.meshgrid(*[a[1] for a in block], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        weight = np.prod(np.stack([w.ravel() for w in wgts]), axis=0)
        hats = np.prod(np.maximum(0.0, h - np.abs(pts - shift)), axis=1)
        live = hats > 0
        vals = kernel.eval_displacements(pts[live])
        total += float(np.dot(weight[live] * hats[live], vals))
    return total


def _corner_mass_fractional(kernel, h: float, delta: tuple[int, ...]) -> float:
    """Mass of the corner box [0, h]^n for a nearest offset, exactly.

    On each Duffy piece {w_k = max} the fractional kernel factors out of
    the radial variable, leaving t^(m-1-s) times a polynomial in t, which
    Gauss-Jacobi quadrature integrates exactly; the angular factors are
    smooth, so a fixed Legendre rule suffices.
    """
    from scipy.special import roots_jacobi

    n = len(delta)
    s = kernel.s
    m = int(sum(delta))
    xt, wt = roots_jacobi(10, 0.0, float(m) - 1.0 - s)
    t = 0.5 * h * (1.0 + xt)
    pref = (0.5 * h) ** (m - s)
    if n == 1:
        kv = float(kernel.eval_displacements(np.array([[1.0]]))[0])
        return pref * float(np.sum(wt)) * kv
    xg, wg = np.polynomial.legendre.leggauss(12)
    ug = 0.5 * (xg + 1.0)
    wu = 0.5 * wg
    grids = np.meshgrid(*([ug] * (n - 1)), indexing="ij")
    wgrids = np.meshgrid(*([wu] * (n - 1)), indexing="ij")
    U = np.stack([g.ravel() for g in grids], axis=1)
    WU = np.prod(np.stack([w.ravel() for w in wgrids]), axis=0)
    total = 0.0
    for k in range(n):
        others = [i for i in range(n) if i != k]
        V = np.empty((U.shape[0], n))
        V[:, k] = 1.0
        V[:, others] = U
        kv = kernel.eval_displacements(V)
        ones_others = [i for i in others if delta[i] == 1]
        pre = np.prod(V[:, ones_others], axis=1) if ones_others else 1.0
        acc = np.zeros(U.shape[0])
        for tt, wtt in zip(t, wt):
            hat = np.ones(U.shape[0])
            for j in range(n):
                if delta[j] == 0:
                    wj = tt if j == k else tt * V[:, j]
                    hat = hat * (h - wj)
            acc += wtt * hat
        total += float(np.dot(WU * pre * kv, acc))
    return (2.0 ** (n - m)) * pref * total


def _offset_mass(kernel, h: float, delta: tuple[int, ...]) -> float:
    """Exact kernel mass between two cells at integer offset ``delta``.

    The double cell integral collapses to int K(w) prod_i hat(w_i) dw with
    hat the triangle correlation of the two cell edges, the same identity
    as the self coupling; valid as stated for kernels even in every
    coordinate, hence guarded by ``is_radial`` at the call sites.  For
    fractional kernels the nearest offsets split into an exactly handled
    singular corner plus smooth remainder boxes; other cases fall back to
    a graded tensor rule.
    """
    if max(delta) > 1 or kernel.form != "fractional":
        return _tensor_mass(kernel, h, delta,
                            [_axis_quadrature(d, h) for d in delta])
    ones = [i for i, d in enumerate(delta) if d == 1]
    total = _corner_mass_fractional(kernel, h, delta)
    smooth_low = _gl_panels(np.linspace(0.0, h, 4), 8)
    smooth_high = _gl_panels(np.linspace(h, 2.0 * h, 4), 8)
    for r in range(1, len(ones) + 1):
        for T in itertools.combinations(ones, r):
            axes = []
            for i, d in enumerate(delta):
                if i in T:
                    axes.append(smooth_high)
                elif d == 1:
                    axes.append(smooth_low)
                else:
                    axes.append((smooth_low[0], 2.0 * smooth_low[1]))
            total += _tensor_mass(kernel, h, delta, axes)
    return total


def _near_offset_masses(kernel, h: float, n: int) -> dict[tuple, float]:
    """Exact masses for all offset classes with 0 < |delta|_inf <= range."""
    if not kernel.is_radial:
        return {}
    masses: dict[tuple, float] = {}
    for delta in itertools.product(range(_NEAR_RANGE + 1), repeat=n):
        key = tuple(sorted(delta, reverse=True))
        if key in masses or key[0] == 0:
            continue
        masses[key] = _offset_mass(kernel, h, key)
    return masses


def _substitute_near(vals: np.ndarray, D: np.ndarray, live: np.ndarray,
                     h: float, n: int, masses: dict) -> None:
    """Swap midpoint kernel values for exact masses at small offsets."""
    if not masses:
        return
    delta = np.rint(D / h).astype(np.int64)
    near = live & (np.max(np.abs(delta), axis=1) <= _NEAR_RANGE)
    if not np.any(near):
        return
    keys = -np.sort(-np.abs(delta[near]), axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    table = np.array([masses[tuple(int(v) for v in row)] for row in uniq])
    vals[near] = table[inv] / h ** (2 * n)


def _pair_sum_direct(kernel, P: VoxelSet, Q: VoxelSet, workers: int) -> float:
    """sum over p in P, q in Q, p != q of the pair mass, times h^(2n).

    Midpoint kernel values everywhere except small offsets, which use the
    exact cell pair integrals; the midpoint rule alone underestimates the
    singular near-face mass by several percent at working resolutions.
    """
    cp = P.occupied_centers()
    cq = Q.occupied_centers()
    if len(cp) == 0 or len(cq) == 0:
        return 0.0
    h = P.spacing
    masses = _near_offset_masses(kernel, h, P.dim)
    chunk = max(1, _BLOCK_PAIRS // len(cq))
    starts = range(0, len(cp), chunk)

    def block(start: int) -> float:
        D = (cp[start:start + chunk, None, :] - cq[None, :, :]).reshape(-1, P.dim)
        r2 = np.einsum("ij,ij->i", D, D)
        live = r2 > 0.25 * h * h     # drop shared cells (distance 0)
        vals = np.zeros(len(D))
        if np.any(live):
            vals[live] = kernel.eval_displacements(D[live])
        _substitute_near(vals, D, live, h, P.dim, masses)
        return float(np.sum(vals, dtype=np.float64))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(block, starts))
    else:
        partials = [block(s) for s in starts]
    # fixed block order + fsum keeps the result worker-count independent
    return math.fsum(partials) * h ** (2 * P.dim)


def _pair_sum_fft(kernel, P: VoxelSet, Q: VoxelSet) -> float:
    """Same sum through mask cross-correlation; counts are exact integers."""
    from scipy.signal import fftconvolve

    h = P.spacing
    counts = fftconvolve(P.mask.astype(np.float64),
                         np.flip(Q.mask).astype(np.float64))
    counts = np.rint(counts)
    offsets = np.meshgrid(*[np.arange(-(m - 1), m) * h for m in P.shape],
                          indexing="ij")
    D = np.stack([o.ravel() for o in offsets], axis=1)
    flat = counts.ravel()
    live = (flat > 0) & (np.einsum("ij,ij->i", D, D) > 0.25 * h * h)
    vals = np.zeros(len(D))
    vals[live] = kernel.eval_displacements(D[live])
    _substitute_near(vals, D, live, h, P.dim,
                     _near_offset_masses(kernel, h, P.dim))
    return float(np.dot(flat[live], vals[live])) * h ** (2 * P.dim)


def _cell_self_coupling(kernel, h: float, n: int) -> float:
    """Exact same-cell pair integral, or +inf when the kernel is not
    locally integrable (any fractional kernel)."""
    rs = h * 10.0 ** -np.arange(2, 8, dtype=float)
    probe = rs ** n * kernel.eval_displacements(np.outer(rs, np.ones(n)) / math.sqrt(n))
    if not np.isfinite(probe[-1]) or probe[-1] > 2.0 * probe[0]:
        return math.inf
    # hat-function correlation of the cell with itself
    if n == 1:
        val = 2.0 * quad(lambda w: (h - w) * float(kernel.eval_displacements([[w]])),
                         0.0, h, limit=200)[0]
        return val

    def f(*w):
        weight = np.prod([h - abs(t) for t in w])
        return weight * float(kernel.eval_displacements([list(w)]))
    ranges = [(0.0, h)] * n
    val, _ = nquad(f, ranges, opts={"limit": 120})
    return (2.0 ** n) * val


def brute_interaction(kernel, P: VoxelSet, Q: VoxelSet,
                      fast: bool = False, workers: int = 1) -> float:
    """L_K(P, Q) by the midpoint rule over cell-center pairs.

    Cells occupied by both sets contribute their exact self-interaction,
    which is infinite for kernels with a non-integrable singularity; the
    mainline functionals (perimeters, disjoint interactions) never produce
    such pairs.
    """
    _check_same_grid(P, Q)
    if kernel.dim != P.dim:
        raise OracleError("kernel and voxel dimensions differ")
    shared = int(np.count_nonzero(P.mask & Q.mask))
    off_diag = (_pair_sum_fft(kernel, P, Q) if fast
                else _pair_sum_direct(kernel, P, Q, workers))
    if shared == 0:
        return off_diag
    return off_diag + shared * _cell_self_coupling(kernel, P.spacing, P.dim)


def brute_relative_perimeter(kernel, E: VoxelSet, A: VoxelSet,
                             fast: bool = False, workers: int = 1) -> float:
    """P_K(E; A): kernel mass of pairs (x in E, y in E^c) meeting A.

    Equal to the three-term localized sum; computed as the full E x E^c
    sum minus the pairs that miss A on both sides.
    """
    _check_same_grid(E, A)
    comp = E.complement()
    e_out = VoxelSet(E.dim, E.origin, E.spacing, E.mask & ~A.mask)
    c_out = VoxelSet(E.dim, E.origin, E.spacing, comp.mask & ~A.mask)
    if fast:
        total = _pair_sum_fft(kernel, E, comp)
        missed = _pair_sum_fft(kernel, e_out, c_out)
    else:
        total = _pair_sum_direct(kernel, E, comp, workers)
        missed = _pair_sum_direct(kernel, e_out, c_out, workers)
    return total - missed


def _outside_window_potential(kernel, rho: np.ndarray, W: float) -> np.ndarray:
    """Mass of K(x - .) beyond the ball window B_W(c), for |x - c| = rho.

    Split at radius W + rho around x: beyond that every direction leaves
    the window (pure radial tail); inside the band [W - rho, W + rho] the
    escaping directions form a cap whose measure is elementary.
    """
    from . import kernels as kr

    n = kernel.dim
    rho = np.asarray(rho, dtype=float)
    far = kr.radial_tail(kernel, W + rho)
    if n == 1:
        return 0.5 * (kr.radial_tail(kernel, W - rho) + far)

    def band(p: float) -> float:
        lo = max(W - p, 1e-300)
        if p <= 0 or lo >= W + p:
            return 0.0
        def f(r):
            cosang = np.clip((p * p + r * r - W * W) / (2.0 * p * r), -1.0, 1.0)
            if n == 2:
                s_out = r * (2.0 * math.pi - 2.0 * np.arccos(cosang))
            else:
                s_out = 2.0 * math.pi * r * r * (1.0 + cosang)
            return float(kernel.eval_radial(np.asarray(r))) * s_out
        return quad(f, lo, W + p, limit=200)[0]

    return far + np.array([band(float(p)) for p in np.atleast_1d(rho)]).reshape(rho.shape)


def brute_perimeter(kernel, E: VoxelSet, window_radius: float | None = None,
                    window_center=None, fast: bool = False,
                    workers: int = 1) -> float:
    """P_K of the occupied cells against the complement.

    Without a window the complement is truncated at the grid boundary and
    the result undershoots accordingly.  With ``window_radius`` the pair
    sum runs against complement cells inside the ball window (which must
    fit in the grid) and the mass beyond the window is added exactly via
    the radial tail, leaving only midpoint discretization error.
    """
    if window_radius is None:
        return brute_interaction(kernel, E, E.complement(), fast=fast,
                                 workers=workers)
    centers = E.cell_centers()
    occ = E.occupied_centers()
    if window_center is None:
        window_center = occ.mean(axis=0)
    c = np.asarray(window_center, dtype=float)
    W = float(window_radius)
    d = np.linalg.norm(centers - c, axis=1)
    in_window = (d <= W).reshape(E.shape)
    if not np.all(E.mask <= in_window):
        raise OracleError("window ball must contain the occupied cells")
    lo_corner = E.origin
    hi_corner = E.origin + E.spacing * np.asarray(E.shape)
    if np.any(c - W < lo_corner - 0.5 * E.spacing) or \
       np.any(c + W > hi_corner + 0.5 * E.spacing):
        raise OracleError("window ball must fit inside the voxel grid")
    Q = VoxelSet(E.dim, E.origin, E.spacing, ~E.mask & in_window)
    inner = (_pair_sum_fft(kernel, E, Q) if fast
             else _pair_sum_direct(kernel, E, Q, workers))
    rho = np.linalg.norm(occ - c, axis=1)
    # interpolate the smooth tail on a radius grid instead of one quadrature
    # per cell
    grid = np.linspace(0.0, float(rho.max()) + 1e-12, 257)
    tail_grid = _outside_window_potential(kernel, grid, W)
    tail = np.interp(rho, grid, tail_grid)
    return inner + float(np.sum(tail)) * E.spacing ** E.dim
