"""Interaction kernels K : R^n -> (0, +inf].

Supported forms:

* fractional      K(x) = |x|^(-n-s), s in (0,1)
* radial          K(x) = phi(|x|) with phi positive and non-increasing
* nu-symmetric    K(x) = k(|x - (x.nu)nu|, |x.nu|), non-increasing in the
                  first argument (transverse radius)

Every kernel must be symmetric (holds by construction here) and integrable
against min{1, |x|}; that weighted mass

    sigma = integral of min{1, |x|} K(x) dx

is the constant appearing in the interpolation bound for P_K.  The transverse
mass M(tau) = integral of k(|y|, tau) dy over R^{n-1} (with M(tau) = k(0, tau)
when n = 1) governs the slice decomposition of perimeters of bodies of
revolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from .geometry import unit_ball_volume

SIGMA_REL_TOL = 1e-8


class KernelError(ValueError):
    """Invalid kernel definition."""


class DivergentKernel(KernelError):
    """A required kernel integral is infinite."""


@dataclass(frozen=True, eq=False)
class Kernel:
    """Immutable kernel; build through the make_* constructors."""

    dim: int
    form: str                        # "fractional" | "radial" | "nusym"
    s: float | None = None
    phi: Callable | None = None      # radial profile phi(r), vectorized
    nu: tuple | None = None          # axis for nu-symmetric kernels
    k_fn: Callable | None = None     # k(r, t) for nu-symmetric kernels
    table: tuple | None = None       # original (r, phi) table when tabulated

    @property
    def is_radial(self) -> bool:
        return self.form in ("fractional", "radial")

    @property
    def nu_axis(self) -> np.ndarray | None:
        return None if self.nu is None else np.asarray(self.nu, dtype=float)

    # -- pointwise evaluation ------------------------------------------------

    def eval_radial(self, r):
        """K on displacement length r (radial forms only)."""
        r = np.asarray(r, dtype=float)
        if self.form == "fractional":
            return r ** (-(self.dim + self.s))
        if self.form == "radial":
            return self.phi(r)
        raise KernelError("nu-symmetric kernel is not a function of |x| alone")

    def eval_displacements(self, X) -> np.ndarray:
        """K(x) for displacement vectors X of shape (m, n)."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if self.is_radial:
            return self.eval_radial(np.linalg.norm(X, axis=1))
        nu = self.nu_axis
        t = X @ nu
        r = np.linalg.norm(X - np.outer(t, nu), axis=1)
        return self.k_fn(r, np.abs(t))

    def k_rt(self, r, t):
        """Transverse form k(r, t), K written in (|x_perp|, |x . nu|)."""
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.form == "fractional":
            return (r * r + t * t) ** (-(self.dim + self.s) / 2.0)
        if self.form == "radial":
            return self.phi(np.hypot(r, t))
        return self.k_fn(r, np.abs(t))


# ---------------------------------------------------------------------------
# constructors


def make_fractional(n: int, s: float) -> Kernel:
    """Fractional kernel |x|^(-n-s); requires s strictly inside (0,1)."""
    if n not in (1, 2, 3):
        raise KernelError(f"dimension must be 1, 2 or 3, got {n}")
    if not (0.0 < s < 1.0):
        raise KernelError(f"fractional order s must lie in (0,1), got {s}")
    return Kernel(dim=n, form="fractional", s=float(s))


def _check_radial_profile(n: int, phi: Callable) -> None:
    r = np.logspace(-6, 3, 181)
    v = np.asarray(phi(r), dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v < 0):
        bad = r[~np.isfinite(v) | (v < 0)][0]
        raise KernelError(f"radial profile not finite/nonnegative at r={bad:g}")
    inc = v[1:] > v[:-1] * (1.0 + 1e-9)
    if np.any(inc):
        i = int(np.nonzero(inc)[0][0])
        raise KernelError(
            f"radial profile increases between r={r[i]:g} and r={r[i+1]:g}; "
            "kernels must be non-increasing in the transverse radius")


def make_radial(n: int, phi: Callable, validate: bool = True) -> Kernel:
    """Radial kernel phi(|x|); phi must accept numpy arrays."""
    if n not in (1, 2, 3):
        raise KernelError(f"dimension must be 1, 2 or 3, got {n}")
    if validate:
        _check_radial_profile(n, phi)
        sigma_of(Kernel(dim=n, form="radial", phi=phi))  # raises if divergent
    return Kernel(dim=n, form="radial", phi=phi)


def make_radial_table(n: int, table) -> Kernel:
    """Radial kernel from a [(r, phi)] table, log-linearly interpolated.

    Outside the tabulated range the end power laws are continued, so the
    integrability checks see the actual asymptotics of the table.
    """
    arr = np.asarray(table, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise KernelError("kernel table must be a list of [r, phi] pairs (>= 2 rows)")
    r, v = arr[:, 0], arr[:, 1]
    if np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise KernelError("table radii must be positive and strictly increasing")
    if np.any(v <= 0):
        raise KernelError("table values must be positive")
    lr, lv = np.log(r), np.log(v)
    lo_slope = (lv[1] - lv[0]) / (lr[1] - lr[0])
    hi_slope = (lv[-1] - lv[-2]) / (lr[-1] - lr[-2])

    def phi(x):
        x = np.maximum(np.asarray(x, dtype=float), 1e-300)
        lx = np.log(x)
        out = np.interp(lx, lr, lv)
        out = np.where(lx < lr[0], lv[0] + lo_slope * (lx - lr[0]), out)
        out = np.where(lx > lr[-1], lv[-1] + hi_slope * (lx - lr[-1]), out)
        return np.exp(out)

    kern = make_radial(n, phi, validate=True)
    return Kernel(dim=n, form="radial", phi=kern.phi,
                  table=tuple((float(a), float(b)) for a, b in arr))


def make_nu_symmetric(n: int, nu, k_fn: Callable, validate: bool = True) -> Kernel:
    """Kernel k(|x_perp|, |x . nu|), non-increasing in the transverse radius."""
    if n not in (1, 2, 3):
        raise KernelError(f"dimension must be 1, 2 or 3, got {n}")
    nu = np.asarray(nu, dtype=float).reshape(-1)
    if nu.size != n:
        raise KernelError("nu dimension mismatch")
    nn = float(np.linalg.norm(nu))
    if nn == 0:
        raise KernelError("nu must be nonzero")
    nu = nu / nn
    if validate:
        tgrid = np.array([1e-3, 1e-1, 1.0, 10.0])
        rgrid = np.logspace(-4, 2, 61)
        for t in tgrid:
            v = np.asarray(k_fn(rgrid, np.full_like(rgrid, t)), dtype=float)
            if np.any(~np.isfinite(v)) or np.any(v < 0):
                raise KernelError(f"k(r, t={t:g}) not finite/nonnegative")
            inc = v[1:] > v[:-1] * (1.0 + 1e-9)
            if np.any(inc):
                i = int(np.nonzero(inc)[0][0])
                raise KernelError(
                    f"k(r, t) increases in r at witness r in [{rgrid[i]:g}, "
                    f"{rgrid[i+1]:g}], t={t:g}")
    kern = Kernel(dim=n, form="nusym", nu=tuple(nu.tolist()), k_fn=k_fn)
    if validate:
        sigma_of(kern)
    return kern


# ---------------------------------------------------------------------------
# integral constants


def _quad(f, a, b, **kw):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, err = quad(f, a, b, limit=200, epsabs=1e-13, epsrel=SIGMA_REL_TOL, **kw)
    return val, err


@lru_cache(maxsize=None)
def sigma_of(kernel: Kernel) -> float:
    """sigma = integral of min{1,|x|} K(x) dx; closed form when fractional.

    Raises DivergentKernel when the integral is infinite (the kernel then
    fails the integrability assumption and no interpolation bound exists).
    """
    n = kernel.dim
    if kernel.form == "fractional":
        s = kernel.s
        return n * unit_ball_volume(n) / (s * (1.0 - s))
    if kernel.form == "radial":
        surf = n * unit_ball_volume(n)

        def f(r):
            return min(1.0, r) * float(kernel.phi(r)) * r ** (n - 1)

        inner, e1 = _quad(f, 0.0, 1.0)
        outer, e2 = _quad(f, 1.0, np.inf)
        val = surf * (inner + outer)
        if not math.isfinite(val) or val > 1e15 or (e1 + e2) > 1e-4 * max(val, 1e-30):
            raise DivergentKernel("sigma integral does not converge")
        return val
    # nu-symmetric: reduce to (r, t) with the transverse surface factor
    if n == 1:
        def f(t):
            return min(1.0, t) * float(kernel.k_fn(np.zeros(1), np.array([t]))[0])
        a, e1 = _quad(f, 0.0, 1.0)
        b, e2 = _quad(f, 1.0, np.inf)
        val = 2.0 * (a + b)
    else:
        ring = (n - 1) * unit_ball_volume(n - 1)  # surface of S^{n-2} times ...

        def inner(t):
            def g(r):
                return (min(1.0, math.hypot(r, t))
                        * float(kernel.k_fn(np.array([r]), np.array([t]))[0])
                        * r ** (n - 2))
            v1, _ = _quad(g, 0.0, 1.0)
            v2, _ = _quad(g, 1.0, np.inf)
            return v1 + v2
        a, e1 = _quad(inner, 0.0, 1.0)
        b, e2 = _quad(inner, 1.0, np.inf)
        val = 2.0 * ring * (a + b)
    if not math.isfinite(val) or val > 1e15:
        raise DivergentKernel("sigma integral does not converge")
    return val


@lru_cache(maxsize=None)
def beta_constant(n: int, s: float) -> float:
    """beta_{n,s} = integral over R^{n-1} of (1+|u|^2)^(-(n+s)/2).

    Scales the transverse mass of the fractional kernel:
    M(tau) = beta_{n,s} tau^(-1-s).  For n=1 the transverse space is a point
    and beta = 1.
    """
    if n == 1:
        return 1.0
    if n == 2:
        return math.sqrt(math.pi) * gamma_fn((1.0 + s) / 2.0) / gamma_fn((2.0 + s) / 2.0)
    return 2.0 * math.pi / (1.0 + s)


def transverse_mass(kernel: Kernel, tau) -> np.ndarray:
    """M(tau) = integral of k(|y|, tau) over y in R^{n-1}; k(0, tau) when n=1."""
    tau = np.abs(np.asarray(tau, dtype=float))
    n = kernel.dim
    if kernel.form == "fractional":
        return beta_constant(n, kernel.s) * tau ** (-1.0 - kernel.s)
    if n == 1:
        return kernel.k_rt(np.zeros_like(tau), tau)
    ring = (n - 1) * unit_ball_volume(n - 1)
    out = np.empty_like(tau)
    flat = tau.reshape(-1)
    res = np.empty_like(flat)
    for i, t in enumerate(flat):
        def g(r):
            return float(kernel.k_rt(np.array([r]), np.array([t]))[0]) * r ** (n - 2)
        v1, _ = _quad(g, 0.0, max(1.0, t))
        v2, _ = _quad(g, max(1.0, t), np.inf)
        res[i] = ring * (v1 + v2)
    out = res.reshape(tau.shape)
    return out


def transverse_mass_tail(kernel: Kernel, eta) -> np.ndarray:
    """M1(eta) = integral of M(u) du over u > eta.

    Equals the kernel mass of a half-space at distance eta, used for the
    slice decomposition of P_K and for half-space tail corrections.
    """
    eta = np.asarray(eta, dtype=float)
    if kernel.form == "fractional":
        s = kernel.s
        return beta_constant(kernel.dim, s) / s * eta ** (-s)
    flat = eta.reshape(-1)
    res = np.empty_like(flat)
    for i, e in enumerate(flat):
        v, _ = _quad(lambda u: float(transverse_mass(kernel, u)), e, np.inf)
        res[i] = v
    return res.reshape(eta.shape)


def radial_tail(kernel: Kernel, r) -> np.ndarray:
    """Lambda(r) = integral of K over {|x| > r} (radial kernels only)."""
    r = np.asarray(r, dtype=float)
    n = kernel.dim
    if kernel.form == "fractional":
        s = kernel.s
        return n * unit_ball_volume(n) / s * r ** (-s)
    if kernel.form != "radial":
        raise KernelError("radial tail undefined for nu-symmetric kernels")
    interp = _radial_tail_interp(kernel)
    return interp(r)


@lru_cache(maxsize=None)
def _radial_tail_interp(kernel: Kernel):
    n = kernel.dim
    surf = n * unit_ball_volume(n)
    grid = np.logspace(-7, 4, 331)
    vals = np.empty_like(grid)
    hi, _ = _quad(lambda u: float(kernel.phi(u)) * u ** (n - 1), grid[-1], np.inf)
    vals[-1] = hi
    for i in range(grid.size - 2, -1, -1):
        seg, _ = _quad(lambda u: float(kernel.phi(u)) * u ** (n - 1), grid[i], grid[i + 1])
        vals[i] = vals[i + 1] + seg
    vals *= surf
    from scipy.interpolate import CubicSpline
    lg = np.log(grid)
    lv = np.log(np.maximum(vals, 1e-300))
    spline = CubicSpline(lg, lv)

    def tail(r):
        r = np.maximum(np.asarray(r, dtype=float), grid[0])
        out = np.exp(spline(np.log(np.minimum(r, grid[-1]))))
        return np.where(r >= grid[-1], 0.0, out)

    return tail


def sample_radial_shell(kernel: Kernel, r_lo, r_hi, u) -> np.ndarray:
    """Inverse-CDF sampling of |y-x| with density prop. to K restricted to the
    shell r_lo < |y-x| < r_hi; u are uniforms in (0,1)."""
    r_lo = np.asarray(r_lo, dtype=float)
    r_hi = np.asarray(r_hi, dtype=float)
    u = np.asarray(u, dtype=float)
    if kernel.form == "fractional":
        s = kernel.s
        a = r_lo ** (-s)
        b = r_hi ** (-s)
        return (a - u * (a - b)) ** (-1.0 / s)
    tail = _radial_tail_interp(kernel)
    # numeric inversion on a per-call log grid spanning the shell
    lo = float(np.min(r_lo))
    hi = float(np.max(r_hi))
    grid = np.logspace(math.log10(max(lo, 1e-12)), math.log10(max(hi, 2e-12)), 256)
    tv = tail(grid)
    targets = tail(r_lo) - u * (tail(r_lo) - tail(r_hi))
    # tail is decreasing in r: invert by interpolating r against tail values
    order = np.argsort(tv)
    return np.interp(targets, tv[order], grid[order])


# ---------------------------------------------------------------------------
# JSON round trip


def kernel_to_dict(kernel: Kernel) -> dict:
    if kernel.form == "fractional":
        return {"type": "fractional", "dim": kernel.dim, "s": kernel.s}
    if kernel.form == "radial":
        if kernel.table is None:
            raise KernelError("only tabulated radial kernels serialize to JSON")
        return {"type": "radial", "dim": kernel.dim,
                "table": [list(row) for row in kernel.table]}
    raise KernelError("nu-symmetric kernels have no JSON form")


def kernel_from_dict(data: dict) -> Kernel:
    kind = data.get("type")
    if kind == "fractional":
        if set(data) != {"type", "dim", "s"}:
            raise KernelError(f"fractional kernel keys must be type/dim/s, got {sorted(data)}")
        return make_fractional(int(data["dim"]), float(data["s"]))
    if kind == "radial":
        if set(data) != {"type", "dim", "table"}:
            raise KernelError(f"radial kernel keys must be type/dim/table, got {sorted(data)}")
        return make_radial_table(int(data["dim"]), data["table"])
    raise KernelError(f"unknown kernel type {kind!r}")


def parse_kernel_spec(spec: str) -> Kernel:
    """Parse a compact kernel spec like ``frac:2:0.5``."""
    parts = spec.split(":")
    if parts[0] in ("frac", "fractional") and len(parts) == 3:
        return make_fractional(int(parts[1]), float(parts[2]))
    raise KernelError(f"cannot parse kernel spec {spec!r} "
                      "(expected frac:<dim>:<s> or a JSON file)")
