"""Monotonicity checks and lower bounds on the kernel-perimeter deficit.

For nested convex bodies A inside B the kernel perimeter satisfies
P_K(A) <= P_K(B).  The pipeline here quantifies the gap: from the pair it
builds a separating half-space H through the deepest point of B relative
to A, the slab B cap H, and a circular cone spanning the Hausdorff gap,
then evaluates explicit lower bounds for P_K(B) - P_K(A).

Three bounds of increasing sharpness and cost are provided:

* `bound_explicit`: closed form for fractional kernels, built from the
  isoperimetric lower bound of the cone perimeter minus an explicit
  interpolation term of the slab.
* `bound_interp`: kernel perimeter of the cone (computed by the engine)
  minus the generic interpolation estimate of the slab; any radial kernel.
* `bound_optimized`: cone perimeter minus twice the maximal interaction
  over admissible coaxial competitors (see the optimizer module).

The 1D case has its own exact route, `segment_bound`, under a numerically
verified two-parameter monotonicity condition on the kernel profile.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import cache as cc
from . import engine as eng
from . import geometry as geo
from . import kernels as kr
from .geometry import NotNested

__all__ = [
    "BoundsError", "MisalignedNu", "ConditionViolated", "DeficitReport",
    "check_monotonicity", "deficit_frame", "bound_interp", "bound_explicit",
    "bound_optimized", "evaluate_inequality", "segment_bound",
    "interpolation_bound", "NotNested",
]

UNIQUE_MAXIMIZER_TOL = 1e-6


class BoundsError(ValueError):
    pass


class MisalignedNu(BoundsError):
    """Hausdorff direction is not parallel to the kernel axis."""


class ConditionViolated(BoundsError):
    """The 1D kernel profile fails the two-parameter monotonicity test."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness            # (r, R, t) triple when available


@dataclass
class DeficitReport:
    """Geometric frame plus one lower bound for P_K(B) - P_K(A).

    `deficit_frame` fills the geometry; the bound_* functions fill
    bound_kind / bound_value; `evaluate_inequality` fills lhs, rhs and
    the final verdict.
    """

    dim: int
    h: float
    a: np.ndarray | None = None
    b: np.ndarray | None = None
    nu: np.ndarray | None = None
    halfspace: geo.HalfSpace | None = None
    slab: geo.ConvexBody | None = None
    w: float = 0.0
    area_base: float = 0.0
    perim_slab: float = 0.0
    r: float = 0.0
    cone: geo.ConvexBody | None = None
    degenerate: bool = False
    unique_maximizer: bool = True
    bound_kind: str | None = None
    bound_value: float | None = None
    bound_error: float = 0.0
    lhs: eng.Estimate | None = None
    rhs: eng.Estimate | None = None
    satisfied: bool | None = None
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def arr(x):
            return None if x is None else [float(v) for v in np.atleast_1d(x)]

        def est(e):
            return None if e is None else {"value": e.value, "error": e.error,
                                           "method": e.method}

        return {
            "dim": self.dim,
            "h": self.h,
            "a": arr(self.a),
            "b": arr(self.b),
            "nu": arr(self.nu),
            "halfspace": None if self.halfspace is None else
            {"normal": arr(self.halfspace.normal),
             "offset": float(self.halfspace.offset)},
            "w": self.w,
            "area_base": self.area_base,
            "perim_slab": self.perim_slab,
            "r": self.r,
            "cone": None if self.cone is None else geo.body_to_dict(self.cone),
            "degenerate": self.degenerate,
            "unique_maximizer": self.unique_maximizer,
            "bound_kind": self.bound_kind,
            "bound_value": self.bound_value,
            "bound_error": self.bound_error,
            "lhs": est(self.lhs),
            "rhs": est(self.rhs),
            "satisfied": self.satisfied,
            "provenance": self.provenance,
        }


# ---------------------------------------------------------------------------
# monotonicity


def check_monotonicity(kernel: kr.Kernel, A: geo.ConvexBody,
                       B: geo.ConvexBody,
                       accuracy: eng.AccuracySpec | None = None,
                       seed: int = 0, workers: int = 1
                       ) -> tuple[eng.Estimate, bool]:
    """Deficit P_K(B) - P_K(A) for nested bodies and whether it is >= -3 sigma."""
    if not geo.is_nested(A, B):
        raise NotNested("A is not contained in B")
    pa = eng.perimeter(A, kernel, accuracy, seed=seed, workers=workers)
    pb = eng.perimeter(B, kernel, accuracy, seed=seed + 1, workers=workers)
    deficit = eng.Estimate(pb.value - pa.value, math.hypot(pa.error, pb.error),
                           f"{pb.method}-{pa.method}",
                           samples=pa.samples + pb.samples)
    return deficit, deficit.value >= -3.0 * deficit.error


# ---------------------------------------------------------------------------
# geometric frame


def _maximizer_unique(A: geo.ConvexBody, B: geo.ConvexBody, h: float,
                      scale: float) -> bool:
    if isinstance(B.shape, geo.Ball) and isinstance(A.shape, geo.Ball):
        gap = float(np.linalg.norm(B.shape.center - A.shape.center))
        return gap > UNIQUE_MAXIMIZER_TOL * scale
    cand = geo.extreme_points(B)
    d = np.array([geo.point_distance(A, p) for p in cand])
    ties = np.count_nonzero(d >= h - UNIQUE_MAXIMIZER_TOL * scale)
    return ties <= 1


def deficit_frame(A: geo.ConvexBody, B: geo.ConvexBody,
                  kernel: kr.Kernel | None = None,
                  nu=None) -> DeficitReport:
    """Half-space, slab and cone induced by the Hausdorff gap of A inside B.

    The separating plane passes through the point a of A nearest to the
    deepest point b of B, with inward normal nu = (b - a)/h.  For kernels
    that are only symmetric about a fixed axis the gap direction must be
    parallel to that axis (override with `nu` to assert a direction when
    the maximizer is not unique).
    """
    if A.dim != B.dim:
        raise geo.GeometryError("dimension mismatch")
    if A.dim < 2:
        raise geo.GeometryError("the frame needs n >= 2; use segment_bound")
    h, a, b = geo.hausdorff_distance(A, B)
    scale = max(geo.body_scale(A), geo.body_scale(B))
    report = DeficitReport(dim=A.dim, h=h, a=a, b=b)
    if h <= geo.NESTING_TOL * scale:
        report.h = 0.0
        report.degenerate = True
        report.unique_maximizer = False
        return report
    direction = (b - a) / h

    required = None
    if nu is not None:
        required = np.asarray(nu, dtype=float)
    elif kernel is not None and not kernel.is_radial:
        required = kernel.nu_axis
    if required is not None:
        req = required / np.linalg.norm(required)
        residual = (b - a) - np.dot(b - a, req) * req
        if np.linalg.norm(residual) > 1e-9 * h:
            raise MisalignedNu(
                "gap direction "
                f"{np.array2string(direction, precision=6)} is not parallel "
                "to the requested axis")

    hs = geo.HalfSpace(normal=direction, offset=float(np.dot(direction, a)))
    # A <= B holds already, so A <= B cap H reduces to the support check
    if geo.support_interval(A, direction)[1] > hs.offset + 1e-9 * scale:
        raise NotNested("A crosses the separating plane through its nearest "
                        "point; the gap direction is inconsistent")
    slab = geo.intersect_halfspace(B, hs)
    area = geo.slice_measure(B, direction, float(np.dot(direction, a)))
    r = (area / geo.unit_ball_volume(A.dim - 1)) ** (1.0 / (A.dim - 1))
    report.nu = direction
    report.halfspace = hs
    report.slab = slab
    report.w = geo.volume(slab)
    report.area_base = area
    report.perim_slab = geo.euclidean_perimeter(slab)
    report.r = r
    report.unique_maximizer = _maximizer_unique(A, B, h, scale)
    if r > 0.0:
        report.cone = geo.build_cone(apex=b, base_center=a, base_radius=r,
                                     axis=direction)
    return report


# ---------------------------------------------------------------------------
# interpolation estimates


def interpolation_bound(kernel: kr.Kernel, E: geo.ConvexBody,
                        cache: cc.ConstantsCache | None = None,
                        form: str = "auto") -> float:
    """Upper bound for P_K(E) from Euclidean perimeter and volume.

    Generic form sigma_K * max{P(E)/2, |E|}; fractional kernels also admit
    the scaled product form 2^(1-s) n omega_n / (s(1-s)) P(E)^s |E|^(1-s),
    and by default the smaller of the two is returned.  `form` selects
    "generic" or "product" explicitly.
    """
    P = geo.euclidean_perimeter(E)
    V = geo.volume(E)
    if form not in ("auto", "generic", "product"):
        raise BoundsError(f"unknown interpolation form {form!r}")
    if form == "product" and kernel.form != "fractional":
        raise kr.KernelError("product form requires a fractional kernel")
    generic = None
    if form in ("auto", "generic"):
        sigma = cc.cached_sigma(cache, kernel).value
        generic = sigma * max(0.5 * P, V)
        if form == "generic" or kernel.form != "fractional":
            return generic
    n, s = kernel.dim, kernel.s
    product = (2.0 ** (1.0 - s) * n * geo.unit_ball_volume(n)
               / (s * (1.0 - s)) * P ** s * V ** (1.0 - s))
    return product if generic is None else min(generic, product)


# ---------------------------------------------------------------------------
# deficit lower bounds


def _degenerate_fill(report: DeficitReport, kind: str) -> DeficitReport:
    return dataclasses.replace(report, bound_kind=kind, bound_value=0.0,
                               bound_error=0.0)


def bound_interp(kernel: kr.Kernel, report: DeficitReport,
                 accuracy: eng.AccuracySpec | None = None,
                 cache: cc.ConstantsCache | None = None) -> DeficitReport:
    """Cone kernel perimeter minus the generic interpolation term of the slab.

    Valid for radial kernels; the positive part is returned.
    """
    if not kernel.is_radial:
        raise kr.KernelError("this bound requires a radial kernel")
    if report.degenerate or report.cone is None:
        return _degenerate_fill(report, "interp")
    accuracy = accuracy or eng.AccuracySpec(rel_tol=1e-5)
    p_cone = eng.perimeter(report.cone, kernel, accuracy, method="slice")
    sigma = cc.cached_sigma(cache, kernel)
    sub = sigma.value * max(0.5 * report.perim_slab, report.w)
    raw = p_cone.value - sub
    err = p_cone.error + sigma.error * max(0.5 * report.perim_slab, report.w)
    return dataclasses.replace(report, bound_kind="interp",
                               bound_value=max(0.0, raw), bound_error=err)


def bound_explicit(s: float, report: DeficitReport,
                   cache: cc.ConstantsCache | None = None) -> DeficitReport:
    """Fully explicit fractional bound: isoperimetric cone term minus
    2^(2-s) n omega_n / (s(1-s)) P(slab)^s |slab|^(1-s), clamped at zero."""
    if not (0.0 < s < 1.0):
        raise kr.KernelError(f"fractional order s must lie in (0,1), got {s}")
    if report.degenerate or report.r <= 0.0:
        return _degenerate_fill(report, "explicit")
    n = report.dim
    ciso = cc.cached_c_iso(cache, n, s)
    cone_vol = geo.unit_ball_volume(n - 1) / n * report.h * report.r ** (n - 1)
    first = ciso.value * cone_vol ** (1.0 - s / n)
    sub = (2.0 ** (2.0 - s) * n * geo.unit_ball_volume(n) / (s * (1.0 - s))
           * report.perim_slab ** s * report.w ** (1.0 - s))
    err = ciso.error * cone_vol ** (1.0 - s / n)
    return dataclasses.replace(report, bound_kind="explicit",
                               bound_value=max(0.0, first - sub),
                               bound_error=err)


def bound_optimized(kernel: kr.Kernel, report: DeficitReport,
                    nodes: int = 128, seed: int = 0, workers: int = 1,
                    starts: int = 8,
                    accuracy: eng.AccuracySpec | None = None
                    ) -> DeficitReport:
    """Sharpest of the three: cone perimeter minus twice the maximal
    interaction between the cone and a feasible coaxial competitor."""
    if report.degenerate or report.cone is None or report.w <= 0.0:
        return _degenerate_fill(report, "optimized")
    from . import optimizer as opt
    est = opt.f_value(kernel, report.h, report.area_base, report.w,
                      nodes=nodes, seed=seed, workers=workers, starts=starts,
                      accuracy=accuracy)
    return dataclasses.replace(report, bound_kind="optimized",
                               bound_value=max(0.0, est.value),
                               bound_error=est.error)


def evaluate_inequality(kernel: kr.Kernel, A: geo.ConvexBody,
                        B: geo.ConvexBody, report: DeficitReport,
                        accuracy: eng.AccuracySpec | None = None,
                        seed: int = 0, workers: int = 1) -> DeficitReport:
    """Fill both perimeters and check P_K(A) + bound <= P_K(B) + 3 sigma."""
    lhs = eng.perimeter(A, kernel, accuracy, seed=seed, workers=workers)
    rhs = eng.perimeter(B, kernel, accuracy, seed=seed + 1, workers=workers)
    bound = report.bound_value or 0.0
    slack = 3.0 * math.hypot(math.hypot(lhs.error, rhs.error),
                             report.bound_error)
    ok = lhs.value + bound <= rhs.value + slack
    return dataclasses.replace(report, lhs=lhs, rhs=rhs, satisfied=bool(ok))


# ---------------------------------------------------------------------------
# the 1D route


def _check_two_parameter_condition(kernel: kr.Kernel, psi: Callable,
                                   lengths: tuple[float, float],
                                   pairs: int, seed: int) -> None:
    grid = np.logspace(-6.0, 6.0, 1000)
    phi_grid = np.asarray(kernel.eval_radial(grid), dtype=float)
    usable = np.isfinite(phi_grid) & (phi_grid > 0.0)
    if not np.any(usable):
        raise ConditionViolated("profile is zero or non-finite on the whole "
                                "test grid")
    t, phi_t = grid[usable], phi_grid[usable]
    rng = np.random.default_rng(seed)
    lows = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=pairs))
    highs = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=pairs))
    sample = [tuple(sorted(p)) for p in zip(lows, highs)]
    sample.append(tuple(sorted(lengths)))
    for r, R in sample:
        with np.errstate(all="ignore"):
            num = (R * R * np.asarray(kernel.eval_radial(R * t), dtype=float)
                   - r * r * np.asarray(kernel.eval_radial(r * t), dtype=float))
            lhs = num / phi_t
        # underflow of phi(t) or inf - inf: the sample cannot certify there
        lhs = np.where(np.isfinite(lhs) | (num > 0.0), lhs, -np.inf)
        need = float(psi(R)) - float(psi(r))
        i = int(np.argmin(lhs))
        if not lhs[i] >= need - 1e-9:
            raise ConditionViolated(
                f"profile fails the two-parameter monotonicity condition at "
                f"r={r:.6g}, R={R:.6g}, t={t[i]:.6g}: "
                f"{lhs[i]:.12g} < psi(R)-psi(r) = {need:.12g}",
                witness=(r, R, float(t[i])))


def segment_bound(kernel: kr.Kernel, psi: Callable,
                  A: geo.ConvexBody, B: geo.ConvexBody, *,
                  pairs: int = 20, seed: int = 0,
                  cache: cc.ConstantsCache | None = None,
                  check_condition: bool = True) -> float:
    """Deficit lower bound c_phi (psi(|B|) - psi(|A|)) for segments.

    Requires |A| <= |B| and, unless `check_condition` is disabled, a
    sampled verification that the scaled profile differences dominate
    psi differences (an exact identity for fractional kernels with
    psi(r) = r^(1-s)).  The resulting inequality
    P_phi(A) + bound <= P_phi(B) is re-checked numerically.
    """
    if kernel.dim != 1:
        raise BoundsError("segment bound is one-dimensional")
    if A.dim != 1 or B.dim != 1:
        raise geo.GeometryError("bodies must be segments")
    la, lb = geo.volume(A), geo.volume(B)
    if la > lb * (1.0 + 1e-12):
        raise BoundsError(f"|A| = {la:.6g} exceeds |B| = {lb:.6g}")
    if check_condition:
        _check_two_parameter_condition(kernel, psi, (la, lb), pairs, seed)
    c_phi = cc.cached_c_phi(cache, kernel)
    bound = c_phi.value * (float(psi(lb)) - float(psi(la)))
    pa = eng.perimeter(A, kernel)
    pb = eng.perimeter(B, kernel)
    tol = 1e-9 + 3.0 * math.hypot(pa.error, pb.error)
    if pa.value + bound > pb.value + tol:
        raise ConditionViolated(
            f"segment deficit bound {bound:.12g} exceeds the actual deficit "
            f"{pb.value - pa.value:.12g}; the sampled condition check was "
            "insufficient for this profile")
    return bound
