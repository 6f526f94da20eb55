"""Schwartz symmetrization about a fixed direction.

``symmetrize(E, nu)`` replaces every slice of E orthogonal to nu by the
centered disc of equal (n-1)-measure, producing a body of revolution
whose axis is the nu-line through the origin.  Volume is preserved slice
by slice, the kernel perimeter never increases, and interactions between
two bodies symmetrized about the same axis never decrease; those
monotonicity properties are what the verification suite exercises.

For a convex body the rearranged radius t -> (slice(t)/omega_{n-1})^{1/(n-1)}
is concave (Brunn-Minkowski), so any convexity violation in the sampled
profile is discretization noise; a pool-adjacent-violators pass on the
slopes repairs it and large repairs trigger a warning.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import geometry as geo
from .geometry import ProfileBody, unit_ball_volume

REPAIR_WARN_REL = 1e-3


def _concave_slopes(d: np.ndarray) -> np.ndarray:
    """Least-squares non-increasing fit of the slope sequence (PAV)."""
    vals = list(d.astype(float))
    weights = [1.0] * len(vals)
    blocks = []
    for v, w in zip(vals, weights):
        blocks.append([v, w])
        while len(blocks) > 1 and blocks[-2][0] < blocks[-1][0]:
            v1, w1 = blocks.pop()
            v0, w0 = blocks.pop()
            blocks.append([(v0 * w0 + v1 * w1) / (w0 + w1), w0 + w1])
    out = np.empty(len(vals))
    pos = 0
    for v, w in blocks:
        out[pos:pos + int(w)] = v
        pos += int(w)
    return out


def symmetrize(body: geo.ConvexBody, nu, nodes: int = 512) -> geo.ConvexBody:
    """Schwartz symmetrization of a convex body in direction nu.

    Returns a profile body on a uniform grid of ``nodes`` points spanning
    the nu-extent of the input, with axis along nu through the origin.  In
    one dimension every slice is a point and the body is returned as the
    (identical) segment.
    """
    if nodes < 16:
        raise geo.GeometryError(f"need at least 16 profile nodes, got {nodes}")
    n = body.dim
    nu = np.asarray(nu, dtype=float).reshape(-1)
    if nu.shape != (n,):
        raise geo.GeometryError("axis dimension does not match the body")
    nu = nu / np.linalg.norm(nu)
    t_lo, t_hi = geo.support_interval(body, nu)
    if n == 1:
        lo, hi = geo.bounding_box(body)
        return geo.make_segment(float(lo[0]), float(hi[0]))

    om = unit_ball_volume(n - 1)
    t = np.linspace(t_lo, t_hi, nodes)
    slices = np.array([geo.slice_measure(body, nu, tt) for tt in t])
    radii = (np.maximum(slices, 0.0) / om) ** (1.0 / (n - 1))

    slopes = np.diff(radii) / np.diff(t)
    repaired = np.concatenate([[radii[0]], radii[0] + np.cumsum(_concave_slopes(slopes) * np.diff(t))])
    repaired += float(np.mean(radii - repaired))
    repaired = np.maximum(repaired, 0.0)
    adjustment = float(np.max(np.abs(repaired - radii)))
    if adjustment > REPAIR_WARN_REL * max(float(radii.max()), 1e-300):
        warnings.warn(f"concavity repair moved the profile by {adjustment:.3g}",
                      stacklevel=2)
    return geo.make_profile_body(nu, t_lo * nu, t - t_lo, repaired)


def profile_volume(p: geo.ConvexBody) -> float:
    """omega_{n-1} * integral of R(t)^{n-1}, exact per linear segment."""
    prof = _as_profile(p)
    return geo.profile_volume_from_arrays(p.dim, np.asarray(prof.t_grid),
                                          np.asarray(prof.radii))


def profile_extent(p: geo.ConvexBody) -> float:
    """Axial extent t_m - t_0 of the profile grid."""
    prof = _as_profile(p)
    t = np.asarray(prof.t_grid, dtype=float)
    return float(t[-1] - t[0])


def _as_profile(p: geo.ConvexBody) -> ProfileBody:
    if not isinstance(p.shape, ProfileBody):
        raise geo.GeometryError("expected a profile body")
    return p.shape
