"""Persistent store for expensive kernel constants.

A single JSON file holds values such as the transverse-mass constant, the
integrability constant sigma, the unit-segment perimeter and the
isoperimetric ratio of the unit ball.  Writes go through an advisory file
lock and an atomic replace, so concurrent processes race benignly
(last-write-wins).  The first time a process reads an entry it re-derives
the value by a much cheaper computation; a disagreement beyond five
combined standard deviations means the file was edited by hand or written
by a broken build, and the entry is rejected.
"""

from __future__ import annotations

import contextlib
import hashlib
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import quad

from . import engine as eng
from . import geometry as geo
from . import kernels as kr

try:
    import fcntl
except ImportError:                                    # non-POSIX fallback
    fcntl = None

SCHEMA_VERSION = 1
VALIDATION_NSIGMA = 5.0


class CacheError(RuntimeError):
    """Cache file unusable for a reason other than a stale value."""


class CacheIntegrityError(CacheError):
    """A stored constant disagrees with its cheap recomputation."""


@dataclass(frozen=True)
class CachedValue:
    value: float
    error: float
    method: str
    timestamp: str

    def to_dict(self) -> dict:
        return {"value": self.value, "error": self.error,
                "method": self.method, "timestamp": self.timestamp}


def default_path() -> Path:
    env = os.environ.get("NLPERIM_CACHE")
    if env:
        return Path(env).expanduser()
    return Path.home() / ".cache" / "nlperim" / "constants.json"


@contextlib.contextmanager
def _locked(lock_path: Path, exclusive: bool):
    lock_path.parent.mkdir(parents=True, exist_ok=True)
    fd = os.open(lock_path, os.O_CREAT | os.O_RDWR, 0o644)
    try:
        if fcntl is not None:
            fcntl.flock(fd, fcntl.LOCK_EX if exclusive else fcntl.LOCK_SH)
        yield
    finally:
        if fcntl is not None:
            fcntl.flock(fd, fcntl.LOCK_UN)
        os.close(fd)


class ConstantsCache:
    """Keyed float store; see `get` for the read-validate-compute cycle."""

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else default_path()
        self._lock_path = self.path.with_suffix(self.path.suffix + ".lock")
        self._validated: set[str] = set()

    # -- file plumbing -------------------------------------------------------

    def _read_file(self) -> dict:
        if not self.path.exists():
            return {}
        try:
            data = json.loads(self.path.read_text())
        except (OSError, ValueError) as exc:
            raise CacheIntegrityError(
                f"cache file {self.path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict) or data.get("schema") != SCHEMA_VERSION:
            raise CacheIntegrityError(
                f"cache file {self.path} has unsupported schema "
                f"{data.get('schema') if isinstance(data, dict) else data!r}")
        entries = data.get("entries")
        if not isinstance(entries, dict):
            raise CacheIntegrityError(f"cache file {self.path} lacks entries")
        return entries

    def _write_file(self, entries: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"schema": SCHEMA_VERSION, "entries": entries}
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
            os.replace(tmp, self.path)
        except BaseException:
            with contextlib.suppress(OSError):
                os.unlink(tmp)
            raise

    def entries(self) -> dict:
        with _locked(self._lock_path, exclusive=False):
            return self._read_file()

    def peek(self, key: str) -> CachedValue | None:
        raw = self.entries().get(key)
        if raw is None:
            return None
        try:
            return CachedValue(float(raw["value"]), float(raw["error"]),
                               str(raw["method"]), str(raw["timestamp"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise CacheIntegrityError(
                f"cache entry {key!r} is malformed: {raw!r}") from exc

    def put(self, key: str, value: float, error: float, method: str
            ) -> CachedValue:
        stamp = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        entry = CachedValue(float(value), float(error), method, stamp)
        with _locked(self._lock_path, exclusive=True):
            entries = self._read_file()
            entries[key] = entry.to_dict()
            self._write_file(entries)
        self._validated.add(key)
        return entry

    def invalidate(self, key: str) -> None:
        with _locked(self._lock_path, exclusive=True):
            entries = self._read_file()
            if entries.pop(key, None) is not None:
                self._write_file(entries)
        self._validated.discard(key)

    # -- the read-validate-compute cycle --------------------------------------

    def get(self, key: str,
            compute: Callable[[], tuple[float, float, str]],
            coarse: Callable[[], tuple[float, float]] | None = None,
            nsigma: float = VALIDATION_NSIGMA) -> CachedValue:
        """Return the cached constant under `key`, computing it on a miss.

        `compute` returns (value, error, method) and runs at full accuracy.
        `coarse` returns (value, error) from a recomputation roughly an
        order of magnitude cheaper; on the first hit per process the stored
        value must agree with it within `nsigma` combined deviations, else
        the entry is dropped and CacheIntegrityError raised.
        """
        cached = self.peek(key)
        if cached is not None:
            if coarse is not None and key not in self._validated:
                ref_value, ref_error = coarse()
                tol = nsigma * math.hypot(cached.error, ref_error)
                tol = max(tol, nsigma * 1e-12 * max(1.0, abs(ref_value)))
                if not math.isfinite(cached.value) or \
                        abs(cached.value - ref_value) > tol:
                    self.invalidate(key)
                    raise CacheIntegrityError(
                        f"cached constant {key!r} = {cached.value!r} "
                        f"disagrees with its recomputation {ref_value:.6g} "
                        f"(tolerance {tol:.3g}); entry dropped")
                self._validated.add(key)
            return cached
        value, error, method = compute()
        return self.put(key, value, error, method)


# ---------------------------------------------------------------------------
# keys and the standard constants


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def kernel_key(kernel: kr.Kernel) -> str | None:
    """Stable identity of a kernel, or None when it cannot be keyed.

    Callable-backed kernels have no serializable content, so their derived
    constants are computed per process instead of persisted.
    """
    if kernel.form == "fractional":
        return f"frac:{kernel.dim}:{_fmt(kernel.s)}"
    if kernel.form == "radial" and kernel.table is not None:
        blob = json.dumps(kernel.table).encode()
        return f"table:{kernel.dim}:{hashlib.sha256(blob).hexdigest()[:16]}"
    return None


def _quad_loose(f, a, b, rel):
    with np.errstate(all="ignore"):
        val, err = quad(f, a, b, epsabs=0.0, epsrel=rel, limit=200)
    return val, err


def cached_sigma(cache: ConstantsCache | None, kernel: kr.Kernel
                 ) -> CachedValue:
    """sigma = integral of min{1,|x|} K(x); persisted for keyable kernels."""

    def compute():
        val = kr.sigma_of(kernel)
        if kernel.form == "fractional":
            return val, 1e-12 * val, "closed-form"
        return val, 2e-8 * abs(val), "radial-quadrature"

    def coarse():
        n = kernel.dim
        surf = n * geo.unit_ball_volume(n)

        def f(r):
            return min(1.0, r) * float(kernel.eval_radial(r)) * r ** (n - 1)

        v1, e1 = _quad_loose(f, 0.0, 1.0, 1e-4)
        v2, e2 = _quad_loose(f, 1.0, np.inf, 1e-4)
        val = surf * (v1 + v2)
        return val, surf * (e1 + e2) + 1e-4 * abs(val)

    if not kernel.is_radial:
        val = kr.sigma_of(kernel)
        return CachedValue(val, 2e-8 * abs(val), "direct", "")
    key = kernel_key(kernel)
    if key is None or cache is None:
        val, err, method = compute()
        return CachedValue(val, err, method, "")
    return cache.get(f"sigma:{key}", compute, coarse)


def cached_beta(cache: ConstantsCache | None, n: int, s: float
                ) -> CachedValue:
    """Transverse-mass constant of the fractional kernel."""

    def compute():
        return kr.beta_constant(n, s), 1e-12 * kr.beta_constant(n, s), \
            "closed-form"

    def coarse():
        if n == 1:
            return 1.0, 1e-15
        if n == 2:
            f = lambda u: 2.0 * (1.0 + u * u) ** (-(2.0 + s) / 2.0)
        else:
            f = lambda u: 2.0 * math.pi * u * (1.0 + u * u) ** (-(3.0 + s) / 2.0)
        val, err = _quad_loose(f, 0.0, np.inf, 1e-5)
        return val, err + 1e-5 * abs(val)

    key = f"beta:{n}:{_fmt(s)}"
    if cache is None:
        v, e, m = compute()
        return CachedValue(v, e, m, "")
    return cache.get(key, compute, coarse)


def cached_c_phi(cache: ConstantsCache | None, kernel: kr.Kernel
                 ) -> CachedValue:
    """Perimeter of the unit segment, the 1D normalizing constant."""
    if kernel.dim != 1:
        raise kr.KernelError("unit-segment constant requires a 1-d kernel")
    seg = geo.make_segment(0.0, 1.0)

    def compute():
        est = eng.perimeter(seg, kernel)
        return est.value, est.error, est.method

    def coarse():
        # midpoint rule on P = 2 * int_0^1 M1(x) dx; the substitution
        # x = u^p flattens the x^(-gamma) edge for the actual gamma
        gamma = eng._grading_exponent(kernel)
        p = 2.0 / (1.0 - gamma)
        u = (np.arange(64) + 0.5) / 64.0
        x = u ** p
        w = p * u ** (p - 1.0) / 64.0
        val = 2.0 * float(np.sum(kr.transverse_mass_tail(kernel, x) * w))
        return val, 2e-3 * abs(val)

    key = kernel_key(kernel)
    if key is None or cache is None:
        v, e, m = compute()
        return CachedValue(v, e, m, "")
    return cache.get(f"c_phi:{key}", compute, coarse)


def cached_c_iso(cache: ConstantsCache | None, n: int, s: float
                 ) -> CachedValue:
    """Fractional isoperimetric ratio P_s(B_1) / |B_1|^((n-s)/n)."""
    if n == 1:
        seg = geo.make_segment(-1.0, 1.0)
        kern = kr.make_fractional(1, s)
        val = eng.perimeter(seg, kern).value / 2.0 ** ((1.0 - s))
        return CachedValue(val, 1e-14 * val, "closed-form", "")
    ball = geo.make_ball(np.zeros(n), 1.0)
    kern = kr.make_fractional(n, s)
    denom = geo.unit_ball_volume(n) ** ((n - s) / n)

    def compute():
        est = eng.perimeter(ball, kern, eng.AccuracySpec(rel_tol=1e-4),
                            method="slice")
        return est.value / denom, est.error / denom, "slice"

    def coarse():
        est = eng.perimeter(ball, kern, eng.AccuracySpec(rel_tol=1e-3),
                            method="slice")
        return est.value / denom, max(est.error, 1e-3 * est.value) / denom

    key = f"c_iso:{n}:{_fmt(s)}"
    if cache is None:
        v, e, m = compute()
        return CachedValue(v, e, m, "")
    return cache.get(key, compute, coarse)
