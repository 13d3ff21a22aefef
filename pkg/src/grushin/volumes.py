"""Ball membership and ball volumes for d_K and d_CC.

Both volumes are integrals over the unit ball ``|z| < 1`` of functions that
depend on ``z`` only through ``t = |z|`` and ``x.z = |x| t cos(psi)``. For
``n >= 2`` this gives

    int_0^1 int_0^pi  f(t, |x| t cos psi) |S^{n-2}| t^{n-1} sin^{n-2}(psi) dpsi dt,

and for ``n = 1`` the angle takes only the values 0 and pi. The outer
variable is ``t = sin(alpha)``, which smooths the square-root edge at
``t = 1``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateEnvelope, DimensionMismatch, DomainError, NonpositiveScale
from .geometry import Point, _coords, invariants_arrays
from .mu import _mm, _mp, d_CC_arrays, solve_half_angle
from .numerics import (EstimateWithError, QuadratureSpec, integrate_1d, log_ball_volume, log_beta,
                       log_sphere_area, spawn_rng, x_minus_sin)

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi
VOLUME_QUAD = QuadratureSpec(rel_tol=1e-10, max_refinements=40, max_panels=4000)
CC_QUAD = QuadratureSpec(rel_tol=1e-8, max_refinements=40, max_panels=4000)
MC_BATCH = 1 << 17


class Metric(str, Enum):
    K = "K"
    CC = "CC"


@dataclass(frozen=True)
class BallSpec:
    metric: Metric
    center: Point
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(self.metric))
        if not self.radius > 0:
            raise NonpositiveScale(f"radius must be positive, got {self.radius}")


def _distance(metric, center, pts):
    x0, u0 = _coords(center)
    x, u = pts
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != x0.shape[-1]:
        raise DimensionMismatch(f"dimensions {x0.shape[-1]} and {x.shape[-1]} differ")
    if Metric(metric) is Metric.K:
        return invariants_arrays(x0, u0, x, u)["dK"]
    return d_CC_arrays(np.broadcast_to(x0, x.shape), u0, x, u)


def in_ball(spec: BallSpec, pts):
    """``d(center, g') < radius`` for a point or stacked ``(x, u)`` arrays."""
    if isinstance(pts, Point):
        pts = (np.array(pts.x), pts.u)
    out = _distance(spec.metric, spec.center, pts) < spec.radius
    return bool(out) if np.ndim(out) == 0 else out


def in_BK_closed_form(center, pts, r=1.0):
    """Membership in the d_K ball by the explicit description

    ``|x' - x| < r`` and ``2|u' - u| < sqrt(r^2 - |x' - x|^2) sqrt(r^2 + |x' + x|^2)``.
    """
    x0, u0 = _coords(center)
    x, u = pts
    x = np.asarray(x, dtype=float)
    q = np.sum((x - x0) ** 2, axis=-1)
    p = np.sum((x + x0) ** 2, axis=-1)
    half = 0.5 * np.sqrt(np.clip(r * r - q, 0.0, None)) * np.sqrt(r * r + p)
    return (q < r * r) & (np.abs(np.asarray(u, dtype=float) - u0) < half)


# ---------------------------------------------------------------------------
# Radial-angular reduction
# ---------------------------------------------------------------------------

def _ball_integral(integrand, n, rho, spec, inner_spec=None):
    """Integral over ``|z| < 1`` of ``integrand(t, w)`` with ``w = x.z``.

    ``integrand`` receives broadcastable arrays ``t`` (|z|) and ``w`` and is
    even-free: no symmetry in ``w`` is assumed.
    """
    inner_spec = inner_spec or spec
    inner_err = [0.0]

    if n == 1 or rho == 0.0:
        def radial(t):
            if n == 1:
                return integrand(t, rho * t) + integrand(t, -rho * t)
            return integrand(t, 0.0 * t)
        weight = 1.0 if n == 1 else math.exp(log_sphere_area(n))
    else:
        weight = math.exp(log_sphere_area(n - 1))

        def radial(t):
            t = np.asarray(t, dtype=float)

            def ang(psi):
                return (integrand(t[:, None], rho * t[:, None] * np.cos(psi)[None, :])
                        * np.sin(psi)[None, :] ** (n - 2))
            est = integrate_1d(ang, 0.0, math.pi, inner_spec)
            rel = np.max(np.asarray(est.error) / np.maximum(np.abs(est.value), 1e-300))
            inner_err[0] = max(inner_err[0], float(rel))
            return np.asarray(est.value)

    def outer(alpha):
        t = np.sin(alpha)
        c = np.cos(alpha)
        return radial(t) * t ** (n - 1) * c

    est = integrate_1d(outer, 0.0, HALF_PI, spec)
    value = weight * est.value
    error = weight * est.error + abs(value) * inner_err[0]
    return EstimateWithError(value, error, est.samples, converged=est.converged,
                             method="radial-angular", extra={"inner_rel_err": inner_err[0]})


def _edge(t):
    return np.sqrt(np.clip(1.0 - t * t, 0.0, None))


def _unit_BK_integrand(rho):
    def f(t, w):
        return _edge(t) * np.sqrt(1.0 + 4.0 * rho * rho - 4.0 * w + t * t)
    return f


def unit_BK_volume(rho, n, spec=VOLUME_QUAD):
    """``|B_K((x, 0), 1)|`` for ``|x| = rho``."""
    return _ball_integral(_unit_BK_integrand(rho), n, rho, spec)


def volume_BK_exact(xnorm, n, r=1.0, spec=VOLUME_QUAD, method="dilation"):
    """Exact ``|B_K((x, u), r)|`` with ``|x| = xnorm``.

    ``method="dilation"`` evaluates the unit ball at ``|x|/r`` and rescales by
    ``r^{n+2}``; ``method="direct"`` integrates the radius-``r`` description
    itself, which the tests use to confirm the scaling law.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if not r > 0:
        raise NonpositiveScale(f"radius must be positive, got {r}")
    if xnorm < 0:
        raise DomainError("|x| must be nonnegative")
    if method == "dilation":
        est = unit_BK_volume(xnorm / r, n, spec)
        scale = r ** (n + 2)
    elif method == "direct":
        # z = r t' with |t'| < 1 turns sqrt(r^2 - |z|^2) sqrt(r^2 + |2x - z|^2) dz
        # into r^{n+1} sqrt(1 - |t'|^2) sqrt(r^2 + 4|x|^2 - 4 r x.t' + r^2 |t'|^2) dt'
        rho = xnorm

        def f(t, w):
            return _edge(t) * np.sqrt(r * r + 4.0 * rho * rho - 4.0 * r * w + r * r * t * t)
        est = _ball_integral(f, n, rho, spec)
        scale = r ** (n + 1)
    else:
        raise DomainError(f"unknown method {method!r}")
    return EstimateWithError(scale * est.value, scale * est.error, est.samples,
                             converged=est.converged, method=f"BK-{method}", extra=est.extra)


def volume_bounds(xnorm, n, r=1.0):
    """``(lower, upper)`` with ``upper = r^{n+1}(r + |x|) B(n/2, 3/2) |S^{n-1}|`` and ``lower = upper/8``."""
    ub = math.exp((n + 1) * math.log(r) + math.log(r + xnorm)
                  + log_beta(0.5 * n, 1.5) + log_sphere_area(n))
    return ub / 8.0, ub


# ---------------------------------------------------------------------------
# CC ball
# ---------------------------------------------------------------------------

def theta0(xnorm, zx, znorm):
    """``theta_0 in [0, pi)`` for ``|x|``, ``x.z`` and ``|z| < 1``.

    Solves ``|z|^2 + 2(|x|^2 + x.z)(1 - cos t) = (sin t / t)^2`` through its
    half-angle form ``p (y/cos y)^2 + q (y/sin y)^2 = 1`` with
    ``p = |2x + z|^2``, ``q = |z|^2`` and ``t = 2y``. Where ``p = 0`` and the
    right side never reaches 1 the value ``pi`` is returned (a null set).
    """
    znorm = np.asarray(znorm, dtype=float)
    if np.any(znorm >= 1.0) or np.any(znorm < 0):
        raise DomainError("theta0 needs 0 <= |z| < 1")
    y, _, _, _ = _theta0_half(xnorm, zx, znorm)
    out = 2.0 * y
    return float(out) if np.ndim(out) == 0 else out


def _theta0_half(xnorm, zx, znorm):
    c = xnorm * xnorm + np.asarray(zx, dtype=float)
    q = np.asarray(znorm, dtype=float) ** 2
    p = np.clip(4.0 * c + q, 0.0, None)
    y, sy, cy, ok = solve_half_angle("psi", p, q, 1.0)
    return y, sy, cy, (p, q, ok)


def theta0_residual(xnorm, zx, znorm, th):
    c = xnorm * xnorm + np.asarray(zx, dtype=float)
    th = np.asarray(th, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(th == 0, 1.0, np.sin(th) / np.where(th == 0, 1.0, th))
    return np.asarray(znorm) ** 2 + 2.0 * c * (1.0 - np.cos(th)) - sinc ** 2


def _cc_integrand(rho):
    def f(t, w):
        t, w = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(w, dtype=float))
        shape = t.shape
        y, sy, cy, (p, q, ok) = _theta0_half(rho, w.ravel(), t.ravel())
        mp = np.where(p > 0, _mp(y, sy, cy), 0.0)
        val = 0.5 * (p * mp + q * _mm(y, sy))
        # the exceptional null set: p = 0 with no root
        return np.where(ok, val, 0.5 * q * HALF_PI).reshape(shape)
    return f


def volume_BCC_exact(xnorm, n, spec=CC_QUAD):
    """``|B_CC((x, 0), 1)|`` by integrating ``R^2 mu(a; theta_0)`` over ``|z| < 1``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if xnorm < 0:
        raise DomainError("|x| must be nonnegative")
    est = _ball_integral(_cc_integrand(xnorm), n, xnorm, spec)
    est.method = "BCC-theta0"
    return est


def J_function(xnorm, zx, znorm):
    """``(2t - sin 2t)/(2t^2) + 2(|x|^2 + x.z) sin t`` at ``t = theta_0``."""
    th = np.asarray(theta0(xnorm, zx, znorm), dtype=float)
    c = xnorm * xnorm + np.asarray(zx, dtype=float)
    safe = np.where(th == 0, 1.0, th)
    first = np.where(th == 0, 0.0, x_minus_sin(2.0 * safe) / (2.0 * safe * safe))
    return first + 2.0 * c * np.sin(th)


def J_lower_ratio(rng, n, samples, x_scale=3.0):
    """Smallest ``J / ((1 + |x|) sqrt(1 - |z|^2))`` over random ``(x, z)``."""
    x = rng.normal(size=(samples, n)) * rng.uniform(0.0, x_scale, size=(samples, 1)) / math.sqrt(n)
    z = rng.normal(size=(samples, n))
    z *= (rng.uniform(0.0, 1.0, size=(samples, 1)) ** (1.0 / n)) / np.linalg.norm(z, axis=1, keepdims=True)
    z *= 0.999999
    xn = np.linalg.norm(x, axis=1)
    zx = np.sum(x * z, axis=1)
    zn = np.linalg.norm(z, axis=1)
    out = J_function(xn, zx, zn)
    ratio = out / ((1.0 + xn) * np.sqrt(1.0 - zn ** 2))
    k = int(np.argmin(ratio))
    return {"n": n, "samples": samples, "min_ratio": float(ratio[k]),
            "at": {"|x|": float(xn[k]), "x.z": float(zx[k]), "|z|": float(zn[k])}}


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def envelope(xnorm, n, r):
    """Half-height and volume of the sampling region for balls of radius ``r``.

    The region is the Euclidean ball ``|x' - x| < r`` times
    ``|u' - u| < (r/2) sqrt(r^2 + (2|x| + r)^2)``. It contains the d_K ball
    because there ``2|u' - u| < sqrt(r^2 - |x'-x|^2) sqrt(r^2 + |x'+x|^2)``,
    the first root is at most ``r`` and ``|x' + x| <= 2|x| + r``. The d_CC
    ball sits inside the d_K ball, so one region serves both.
    """
    half = 0.5 * r * math.sqrt(r * r + (2.0 * xnorm + r) ** 2)
    log_vol = log_ball_volume(n) + n * math.log(r) + math.log(2.0 * half)
    vol = math.exp(log_vol)
    if not (math.isfinite(vol) and vol > 0 and half > 0):
        raise DegenerateEnvelope(f"envelope volume {vol} for |x|={xnorm}, n={n}, r={r}")
    return half, vol


def _sample_envelope(rng, size, center_x, u0, r, half):
    n = center_x.size
    d = rng.normal(size=(size, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    rad = r * rng.uniform(size=(size, 1)) ** (1.0 / n)
    x = center_x + rad * d
    u = u0 + rng.uniform(-half, half, size=size)
    return x, u


def sample_ball(spec: BallSpec, count, seed, max_batches=10_000):
    """``count`` points drawn uniformly from the ball by rejection."""
    x0, u0 = _coords(spec.center)
    half, _ = envelope(float(np.linalg.norm(x0)), x0.size, spec.radius)
    xs, us, got = [], [], 0
    for b in range(max_batches):
        rng = spawn_rng(seed, b)
        x, u = _sample_envelope(rng, max(4 * count, 1024), x0, u0, spec.radius, half)
        hit = in_ball(spec, (x, u))
        xs.append(x[hit])
        us.append(u[hit])
        got += int(hit.sum())
        if got >= count:
            break
    return np.concatenate(xs)[:count], np.concatenate(us)[:count]


def _mc_batch(spec, seed, b, size, half, x0, u0, also_cc):
    rng = spawn_rng(seed, b)
    x, u = _sample_envelope(rng, size, x0, u0, spec.radius, half)
    k_hit = in_ball(BallSpec(Metric.K, spec.center, spec.radius), (x, u))
    if spec.metric is Metric.K and not also_cc:
        return int(k_hit.sum()), 0, 0
    cc_hit = np.zeros(size, dtype=bool)
    if np.any(k_hit):
        # only K-hits can be CC-hits; the inclusion is checked on the K misses separately
        cc_hit = in_ball(BallSpec(Metric.CC, spec.center, spec.radius), (x, u))
    outside = int(np.sum(cc_hit & ~k_hit))
    return int(k_hit.sum()), int(cc_hit.sum()), outside


def volume_monte_carlo(spec: BallSpec, N, seed, jobs=1, batch=MC_BATCH, also_cc=False):
    """Rejection estimate of the ball volume with its binomial standard error.

    Samples are drawn in batches; batch ``b`` uses the generator seeded by
    ``(seed, b)``, so the result does not depend on ``jobs``. ``extra`` holds
    hit counts for both metrics when ``also_cc`` is set (or the metric is CC),
    along with the number of CC hits outside the K ball (expected 0).
    """
    N = int(N)
    if N < 1000:
        raise DomainError(f"Monte Carlo needs N >= 1000, got {N}")
    x0, u0 = _coords(spec.center)
    half, env_vol = envelope(float(np.linalg.norm(x0)), x0.size, spec.radius)
    sizes = [batch] * (N // batch) + ([N % batch] if N % batch else [])

    def work(b):
        return _mc_batch(spec, seed, b, sizes[b], half, x0, float(u0), also_cc)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            counts = list(pool.map(work, range(len(sizes))))
    else:
        counts = [work(b) for b in range(len(sizes))]
    k_hits = sum(c[0] for c in counts)
    cc_hits = sum(c[1] for c in counts)
    outside = sum(c[2] for c in counts)
    hits = k_hits if spec.metric is Metric.K else cc_hits
    frac = hits / N
    value = frac * env_vol
    err = env_vol * math.sqrt(frac * (1.0 - frac) / N)
    extra = {"envelope_volume": env_vol, "hits_K": k_hits, "batches": len(sizes)}
    if spec.metric is Metric.CC or also_cc:
        extra.update(hits_CC=cc_hits, cc_outside_k=outside)
    return EstimateWithError(value, err, N, seed=seed, method="monte-carlo", extra=extra)


def check_EF1(g, n=None, samples=2000, seed=0):
    """Smallest ``n^{3/2} |B_K(g, 1)| / (D_K |S^{n-1}|)`` over sampled ``g'`` in ``B_K(g, 1)``.

    ``g'`` equal to ``g`` is allowed since only ``D_K`` enters.
    """
    x0, u0 = _coords(g)
    n = n or x0.size
    if x0.size != n:
        raise DimensionMismatch(f"point has dimension {x0.size}, expected {n}")
    vol = volume_BK_exact(float(np.linalg.norm(x0)), n).value
    xs, us = sample_ball(BallSpec(Metric.K, Point(x0, float(u0)), 1.0), samples, seed)
    DK = invariants_arrays(x0, u0, xs, us)["DK"]
    log_const = 1.5 * math.log(n) + math.log(vol) - log_sphere_area(n)
    vals = np.exp(log_const - np.log(DK))
    return float(vals.min())


CSV_FIELDS = ("metric", "n", "|x|", "r", "method", "value", "error", "samples", "seed")


def volume_row(metric, n, xnorm, r, est: EstimateWithError):
    return {"metric": str(Metric(metric).value), "n": n, "|x|": xnorm, "r": r,
            "method": est.method, "value": est.value, "error": est.error,
            "samples": est.samples, "seed": est.seed if est.seed is not None else ""}
