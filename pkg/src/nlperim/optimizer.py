"""Maximal interaction of a coaxial competitor with a cone.

The sharpest deficit bound for nested bodies subtracts, from the kernel
perimeter of the gap cone C, twice the largest interaction L_K(F, C) over
the family of axially symmetric convex bodies F that sit on the far side
of the cone's base plane, share the base disc radius r, stay under the
reflected cone envelope and have prescribed volume w.  This module solves
that maximization numerically.

Profiles are piecewise linear on a uniform grid over [0, d_max], where
d_max = n w r^(1-n) / omega_(n-1) caps the support of any competitor.
In slope space the constraint set is simply {slopes non-increasing,
slopes <= r/h}, so projected ascent needs one monotone regression and a
scalar volume correction per step.  The objective and its gradient are
fixed quadratures of transverse disc-disc and point-disc integrals, so
a profile's value is deterministic and the gradient matches the
objective's own discretization.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _transverse as tv
from . import engine as eng
from . import geometry as geo
from . import kernels as kr

__all__ = ["OptimizerError", "Infeasible", "NonConvergence", "ProfileProblem",
           "make_problem", "solve_max", "grid_search_trapezoid", "f_value",
           "union_with_cone", "gradient_check"]

VOLUME_TOL = 1e-10
CONVERGENCE_TOL = 1e-6
CONVERGENCE_SPAN = 10


class OptimizerError(ValueError):
    pass


class Infeasible(OptimizerError):
    """Volume budget exceeds the envelope region; reports the exact cap."""


class NonConvergence(OptimizerError):
    pass


@dataclass
class ProfileProblem:
    """Discretized maximization of L_K(F, C) over the competitor family.

    The cone C has base radius r in the plane t = 0 and apex at axial
    height h; competitors live on t in [0, d_max] measured away from the
    cone.  `nodes` counts profile intervals; radii are attached to the
    nodes+1 grid points.
    """

    kernel: kr.Kernel
    r: float
    h: float
    w: float
    nodes: int = 128
    axis: np.ndarray | None = None
    base_point: np.ndarray | None = None
    tau_panels: int = 6
    dd_panels: int = 8
    d_max: float = field(init=False)
    t: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.kernel.dim
        if n < 2:
            raise OptimizerError("profile maximization needs n >= 2")
        if not (self.r > 0.0 and self.h > 0.0 and self.w > 0.0):
            raise OptimizerError("r, h and w must be positive")
        if self.nodes < 8:
            raise OptimizerError("need at least 8 profile intervals")
        if self.axis is None:
            ax = self.kernel.nu_axis
            if ax is None:
                ax = np.zeros(n)
                ax[-1] = 1.0
            self.axis = ax
        self.axis = np.asarray(self.axis, dtype=float)
        self.axis = self.axis / np.linalg.norm(self.axis)
        if self.base_point is None:
            self.base_point = np.zeros(n)
        self.base_point = np.asarray(self.base_point, dtype=float)
        self.d_max = (n * self.w * self.r ** (1 - n)
                      / geo.unit_ball_volume(n - 1))
        self.t = np.linspace(0.0, self.d_max, self.nodes + 1)
        self._build_mesh()
        cap_volume = self.envelope_volume()
        if self.w > cap_volume * (1.0 + 1e-12):
            raise Infeasible(
                f"volume budget {self.w:.12g} exceeds the envelope region "
                f"volume {cap_volume:.12g}")

    # -- mesh ------------------------------------------------------------------

    def _build_mesh(self):
        self._mesh = self._make_mesh(edge_panels=3, interior_order=2,
                                     tau_panels=self.tau_panels)
        self._mesh_fine = None

    def _make_mesh(self, edge_panels: int, interior_order: int,
                   tau_panels: int) -> dict:
        dt = self.t[1] - self.t[0]
        gamma = eng._grading_exponent(self.kernel)
        # the integrand in t has a t^(-gamma) edge at the shared base plane
        x0, w0 = eng._power_graded(0.0, dt, gamma, edge_panels)
        xs, ws = [x0], [w0]
        glx, glw = np.polynomial.legendre.leggauss(interior_order)
        for i in range(1, self.nodes):
            mid = 0.5 * (self.t[i] + self.t[i + 1])
            xs.append(mid + 0.5 * dt * glx)
            ws.append(0.5 * dt * glw)
        tq = np.concatenate(xs)
        idx = np.minimum((tq / dt).astype(int), self.nodes - 1)
        tau, wtau = tv._graded_nodes(np.zeros_like(tq),
                                     np.full_like(tq, self.h),
                                     np.maximum(tq, 1e-6 * self.h),
                                     tau_panels)
        return {
            "tq": tq,
            "wq": np.concatenate(ws),
            "idx": idx,
            "lam": tq / dt - idx,
            "wtau": wtau,
            "rc": self.r * (1.0 - tau / self.h),
            "gap": tq[:, None] + tau,
        }

    def _fine_mesh(self) -> dict:
        if self._mesh_fine is None:
            self._mesh_fine = self._make_mesh(edge_panels=5, interior_order=3,
                                              tau_panels=self.tau_panels + 3)
        return self._mesh_fine

    # -- profile plumbing --------------------------------------------------------

    @property
    def envelope_slope(self) -> float:
        return self.r / self.h

    def envelope_radii(self) -> np.ndarray:
        return self.r + self.envelope_slope * self.t

    def envelope_volume(self) -> float:
        return self.volume(self.envelope_radii())

    def slopes_to_radii(self, s: np.ndarray) -> np.ndarray:
        dt = self.t[1] - self.t[0]
        return self.r + dt * np.concatenate([[0.0], np.cumsum(s)])

    def radii_to_slopes(self, R: np.ndarray) -> np.ndarray:
        return np.diff(R) / (self.t[1] - self.t[0])

    def _clipped_polyline(self, R: np.ndarray):
        """(t, max(R,0)) with the zero crossing inserted exactly."""
        R = np.asarray(R, dtype=float)
        neg = np.nonzero(R <= 0.0)[0]
        if neg.size == 0:
            return self.t, np.maximum(R, 0.0)
        k = int(neg[0])
        if k == 0:
            raise OptimizerError("profile pinned at the base must be positive")
        if R[k] == 0.0:
            return self.t[:k + 1], np.maximum(R[:k + 1], 0.0)
        frac = R[k - 1] / (R[k - 1] - R[k])
        tc = self.t[k - 1] + frac * (self.t[k] - self.t[k - 1])
        return (np.concatenate([self.t[:k], [tc]]),
                np.concatenate([R[:k], [0.0]]))

    def volume(self, R: np.ndarray) -> float:
        tt, rr = self._clipped_polyline(R)
        return geo.profile_volume_from_arrays(self.kernel.dim, tt, rr)

    # -- objective and gradient ---------------------------------------------------

    @staticmethod
    def _rho(mesh: dict, R: np.ndarray) -> np.ndarray:
        vals = ((1.0 - mesh["lam"]) * R[mesh["idx"]]
                + mesh["lam"] * R[mesh["idx"] + 1])
        return np.maximum(vals, 0.0)

    def objective(self, R: np.ndarray, refine: int = 0) -> float:
        """Interaction of the profile body with the cone on the fixed mesh."""
        mesh = self._fine_mesh() if refine else self._mesh
        rho = self._rho(mesh, np.asarray(R, dtype=float))
        dd = tv.disc_disc_interaction(self.kernel, rho[:, None], mesh["rc"],
                                      mesh["gap"],
                                      panels=self.dd_panels + 4 * refine)
        return float(np.sum(np.sum(dd * mesh["wtau"], axis=1) * mesh["wq"]))

    def gradient(self, R: np.ndarray) -> np.ndarray:
        """d objective / d R_i; nonnegative up to quadrature noise."""
        R = np.asarray(R, dtype=float)
        mesh = self._mesh
        rho = self._rho(mesh, R)
        pd = tv.point_disc_potential(self.kernel, mesh["rc"], rho[:, None],
                                     mesh["gap"], panels=self.dd_panels)
        ray = np.sum(pd * mesh["wtau"], axis=1)
        if self.kernel.dim == 2:
            ring = 2.0
        else:
            ring = 2.0 * math.pi * rho
        active = ((1.0 - mesh["lam"]) * R[mesh["idx"]]
                  + mesh["lam"] * R[mesh["idx"] + 1]) > 0.0
        c = mesh["wq"] * ring * ray * active
        grad = np.zeros(self.nodes + 1)
        np.add.at(grad, mesh["idx"], (1.0 - mesh["lam"]) * c)
        np.add.at(grad, mesh["idx"] + 1, mesh["lam"] * c)
        return grad

    # -- feasibility ------------------------------------------------------------

    def project_slopes(self, v: np.ndarray) -> np.ndarray:
        return np.minimum(_pava_nonincreasing(v), self.envelope_slope)

    def restore_volume(self, slopes: np.ndarray) -> np.ndarray:
        """Shift the (projected) slopes by the scalar that restores volume w."""
        cap = self.envelope_slope
        base = _pava_nonincreasing(slopes)

        def vol(delta: float) -> float:
            return self.volume(self.slopes_to_radii(
                np.minimum(base + delta, cap)))

        hi = cap - float(np.min(base))
        if vol(hi) <= self.w * (1.0 + 1e-12):
            return np.full_like(base, cap)      # budget fills the envelope
        lo, span = 0.0, max(cap - float(np.max(base)), 1e-3 * self.r / self.d_max)
        if vol(0.0) > self.w:
            hi, lo = 0.0, -span
            while vol(lo) > self.w:
                hi = lo
                lo *= 2.0
                if lo < -1e12 * (1.0 + cap):
                    raise OptimizerError("volume restoration failed to bracket")
        delta = brentq(lambda d: vol(d) - self.w, lo, hi,
                       xtol=1e-14 * max(1.0, cap), rtol=8.9e-16)
        return np.minimum(base + delta, cap)

    def body(self, R: np.ndarray) -> geo.ConvexBody:
        """Profile body for the radii, trimmed at the zero crossing."""
        tt, rr = self._clipped_polyline(R)
        anchor = self.base_point - tt[-1] * self.axis
        return geo.make_profile_body(self.axis, anchor, tt[-1] - tt[::-1],
                                     rr[::-1])

    def cone_body(self) -> geo.ConvexBody:
        return geo.build_cone(apex=self.base_point + self.h * self.axis,
                              base_center=self.base_point,
                              base_radius=self.r, axis=self.axis)


def make_problem(kernel: kr.Kernel, h: float, area_base: float, w: float,
                 nodes: int = 128, **kw) -> ProfileProblem:
    """Problem from the frame quantities (gap height, base area, volume)."""
    n = kernel.dim
    r = (area_base / geo.unit_ball_volume(n - 1)) ** (1.0 / (n - 1))
    return ProfileProblem(kernel, r, h, w, nodes=nodes, **kw)


# ---------------------------------------------------------------------------
# solver


def _pava_nonincreasing(v: np.ndarray) -> np.ndarray:
    """Least-squares non-increasing fit (pool adjacent violators)."""
    vals = list(map(float, v))
    widths = [1] * len(vals)
    out_v, out_w = [], []
    for val, wid in zip(vals, widths):
        out_v.append(val)
        out_w.append(wid)
        while len(out_v) > 1 and out_v[-2] < out_v[-1]:
            v2, w2 = out_v.pop(), out_w.pop()
            v1, w1 = out_v.pop(), out_w.pop()
            out_v.append((v1 * w1 + v2 * w2) / (w1 + w2))
            out_w.append(w1 + w2)
    return np.repeat(out_v, out_w)


def _initial_slopes(problem: ProfileProblem, index: int, seed: int
                    ) -> np.ndarray:
    N = problem.nodes
    cap = problem.envelope_slope
    down = -problem.r / problem.d_max
    if index == 0:                        # cylinder-like
        s = np.zeros(N)
    elif index == 1:                      # cone hitting zero at d_max
        s = np.full(N, down)
    elif index == 2:                      # envelope-hugging, then steep fall
        s = np.full(N, cap)
        for k in range(N - 1, -1, -1):
            s[k:] = 8.0 * N * down
            R = problem.slopes_to_radii(problem.project_slopes(s))
            if problem.volume(R) <= problem.w:
                break
    elif index == 3:                      # slab-like plateau
        s = np.zeros(N)
        k = max(1, int(math.ceil(N / problem.kernel.dim)))
        s[k:] = 8.0 * N * down
    else:                                 # random feasible
        rng = np.random.Generator(np.random.Philox(
            key=np.array([seed, index], dtype=np.uint64)))
        s = np.sort(rng.uniform(4.0 * down, cap, size=N))[::-1]
    return problem.restore_volume(problem.project_slopes(s))


def _ascend(problem: ProfileProblem, slopes: np.ndarray, max_iters: int):
    J = problem.objective(problem.slopes_to_radii(slopes))
    dt = problem.t[1] - problem.t[0]
    step = 0.1 * problem.r / max(problem.d_max, problem.h)
    history = [J]
    min_grad = math.inf
    converged = False
    iters = 0
    for iters in range(1, max_iters + 1):
        R = problem.slopes_to_radii(slopes)
        g = problem.gradient(R)
        min_grad = min(min_grad, float(np.min(g)))
        gs = dt * np.cumsum(g[::-1])[::-1][1:]    # chain rule to slope space
        norm = float(np.linalg.norm(gs))
        if norm == 0.0:
            converged = True
            break
        improved = False
        for _ in range(16):
            cand = problem.restore_volume(problem.project_slopes(
                slopes + (step / norm) * gs))
            Jc = problem.objective(problem.slopes_to_radii(cand))
            if Jc > J:
                slopes, J = cand, Jc
                step *= 1.3
                improved = True
                break
            step *= 0.4
        history.append(J)
        if not improved:
            converged = True
            break
        if len(history) > CONVERGENCE_SPAN:
            if (history[-1] - history[-1 - CONVERGENCE_SPAN]
                    <= CONVERGENCE_TOL * abs(history[-1])):
                converged = True
                break
    return J, slopes, iters, converged, min_grad


def solve_max(problem: ProfileProblem, *, starts: int = 8, seed: int = 0,
              max_iters: int = 300, workers: int = 1
              ) -> tuple[eng.Estimate, geo.ConvexBody]:
    """Best profile found by projected gradient ascent with multi-start.

    Returns the interaction value (quadrature-refined, with a refinement
    error bar) and the maximizing body.  Deterministic for fixed
    (seed, starts, nodes); start results are reduced by value with ties
    broken toward the lowest start index.
    """
    if starts < 1:
        raise OptimizerError("need at least one start")

    def run(index: int):
        s0 = _initial_slopes(problem, index, seed)
        return _ascend(problem, s0, max_iters)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(starts)))
    else:
        results = [run(i) for i in range(starts)]
    best = max(range(starts), key=lambda i: (results[i][0], -i))
    J, slopes, iters, converged, min_grad = results[best]
    R = problem.slopes_to_radii(slopes)
    J_ref = problem.objective(R, refine=1)
    err = 1.5 * abs(J_ref - J) + 1e-9 * abs(J_ref)
    detail = {
        "start_values": [res[0] for res in results],
        "best_start": best,
        "iterations": iters,
        "converged": all(res[3] for res in results),
        "min_gradient": min_grad,
        "nodes": problem.nodes,
    }
    est = eng.Estimate(J_ref, err, "ascent", samples=0, detail=detail)
    return est, problem.body(R)


# ---------------------------------------------------------------------------
# trapezoid oracle


def grid_search_trapezoid(problem: ProfileProblem, grid: int = 24
                          ) -> tuple[float, np.ndarray]:
    """Exhaustive search over two-slope profiles (rise k1, fall k2).

    The break point is solved from the volume budget, so every evaluated
    profile is feasible; the best value lower-bounds the true maximum.
    Returns (value, radii on the problem grid).
    """
    cap = problem.envelope_slope
    down = problem.r / problem.d_max
    best, best_R = -math.inf, None
    k1s = np.linspace(-4.0 * down, cap, grid)
    k2s = np.linspace(-12.0 * down, cap, grid)
    for k1 in k1s:
        for k2 in k2s:
            if k2 > k1:
                continue
            R = _trapezoid_radii(problem, k1, k2)
            if R is None:
                continue
            val = problem.objective(R)
            if val > best:
                best, best_R = val, R
    if best_R is None:
        raise OptimizerError("no feasible trapezoid profile on the grid")
    return best, best_R


def _trapezoid_radii(problem: ProfileProblem, k1: float, k2: float
                     ) -> np.ndarray | None:
    r, d = problem.r, problem.d_max

    def radii(tbreak: float) -> np.ndarray:
        # raw values; objective clips and volume inserts the zero crossing
        rb = r + k1 * tbreak
        return np.where(problem.t <= tbreak,
                        r + k1 * problem.t,
                        rb + k2 * (problem.t - tbreak))

    def vol(tbreak: float) -> float:
        return problem.volume(radii(tbreak))

    v0, v1 = vol(0.0), vol(d)
    if problem.w < v0 - VOLUME_TOL or problem.w > v1 + VOLUME_TOL:
        return None
    if v1 - v0 < VOLUME_TOL:
        tb = 0.0
    else:
        tb = brentq(lambda tb: vol(tb) - problem.w, 0.0, d, xtol=1e-13 * d)
    return radii(tb)


# ---------------------------------------------------------------------------
# the deficit function and the equality witness


def f_value(kernel: kr.Kernel, h: float, area_base: float, w: float, *,
            nodes: int = 128, seed: int = 0, workers: int = 1,
            starts: int = 8, max_iters: int = 300,
            accuracy: eng.AccuracySpec | None = None) -> eng.Estimate:
    """Deficit lower bound: cone perimeter minus twice the maximal
    competitor interaction; clamped at zero (theory keeps it nonnegative).

    detail carries the raw value, the cone perimeter and the maximum m.
    """
    if h <= 0.0 or area_base <= 0.0 or w <= 0.0:
        return eng.Estimate(0.0, 0.0, "degenerate")
    problem = make_problem(kernel, h, area_base, w, nodes=nodes)
    accuracy = accuracy or eng.AccuracySpec(rel_tol=1e-5)
    p_cone = eng.perimeter(problem.cone_body(), kernel, accuracy,
                           method="slice")
    m, body = solve_max(problem, starts=starts, seed=seed, workers=workers,
                        max_iters=max_iters)
    raw = p_cone.value - 2.0 * m.value
    err = math.hypot(p_cone.error, 2.0 * m.error)
    detail = {
        "raw": raw,
        "m": m.value,
        "m_error": m.error,
        "cone_perimeter": p_cone.value,
        "clamped": raw < 0.0,
        "suspect": raw < -3.0 * err,
        "solver": m.detail,
    }
    return eng.Estimate(max(raw, 0.0), err, "optimized", detail=detail)


def union_with_cone(problem: ProfileProblem, body: geo.ConvexBody
                    ) -> geo.ConvexBody:
    """Glue a competitor body to the cone across the shared base plane.

    The competitor's base slope never exceeds r/h, so the glued profile
    is concave and the union is convex.
    """
    prof = body.shape
    if not isinstance(prof, geo.ProfileBody):
        raise OptimizerError("expected a profile body from solve_max")
    t, rr = np.asarray(prof.t_grid), np.asarray(prof.radii)
    tt = np.concatenate([t, [t[-1] + problem.h]])
    radii = np.concatenate([rr, [0.0]])
    return geo.make_profile_body(prof.axis, prof.anchor, tt, radii)


def gradient_check(problem: ProfileProblem, R: np.ndarray,
                   indices=None, step: float | None = None) -> float:
    """Worst relative gap between the gradient and central differences.

    The base node is excluded by default: its radius is pinned, so the
    ascent never consumes that component, and it sits where the profile
    and cone radii meet at vanishing gap, the one spot where the
    objective's own quadrature error is not differentiable cleanly.
    """
    R = np.asarray(R, dtype=float)
    step = step if step is not None else 1e-4 * problem.r
    g = problem.gradient(R)
    if indices is None:
        indices = range(1, problem.nodes + 1)
    scale = max(float(np.max(np.abs(g))), 1e-300)
    worst = 0.0
    for i in indices:
        up, dn = R.copy(), R.copy()
        up[i] += step
        dn[i] -= step
        fd = (problem.objective(up) - problem.objective(dn)) / (2.0 * step)
        worst = max(worst, abs(fd - g[i]) / scale)
    return worst
