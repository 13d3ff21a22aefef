"""Shared numerical primitives.

Root finding on monotone functions, adaptive Gauss-Kronrod quadrature,
log-Gamma/log-Beta helpers and a few elementary functions evaluated
without cancellation near their removable singularities.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import DomainError, NoConvergence, NoSignChange, ToleranceNotMet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureSpec:
    """Budget and tolerances for one-dimensional integrals.

    ``truncation`` is the half-length of the window used when a caller has to
    cut an infinite range; finite-range callers ignore it.
    """

    truncation: float = 60.0
    max_refinements: int = 200
    rel_tol: float = 1e-10
    abs_tol: float = 1e-300
    max_panels: int = 20000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("rel_tol and abs_tol must be positive")
        if not (math.isfinite(self.truncation) and self.truncation > 0):
            raise DomainError("truncation must be finite and positive")
        if self.max_refinements < 0:
            raise DomainError("max_refinements must be nonnegative")


@dataclass(frozen=True)
class RootSpec:
    bracket_lo: float
    bracket_hi: float
    tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not self.bracket_lo < self.bracket_hi:
            raise DomainError("bracket_lo must be < bracket_hi")
        if not self.tol > 0:
            raise DomainError("tol must be positive")


@dataclass
class EstimateWithError:
    """A numerical estimate with its error bar.

    ``error`` is a quadrature error bound or a Monte Carlo standard error,
    ``samples`` the node or sample count. ``seed`` is set for Monte Carlo
    estimates only.
    """

    value: float
    error: float
    samples: int
    seed: Optional[int] = None
    converged: bool = True
    method: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.asarray(self.error) < 0):
            raise DomainError("error must be nonnegative")

    def as_dict(self):
        return {
            "value": _plain(self.value),
            "error": _plain(self.error),
            "samples": int(self.samples),
            "seed": self.seed,
            "converged": bool(self.converged),
            "method": self.method,
        }


def _plain(v):
    a = np.asarray(v)
    return float(a) if a.ndim == 0 else a.tolist()


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------

def find_root_monotone(f: Callable[[float], float], spec: RootSpec) -> float:
    """Root of a continuous monotone ``f`` on ``[spec.bracket_lo, spec.bracket_hi]``.

    Illinois-modified regula falsi, with a bisection step whenever the
    bracket fails to halve over two iterations. Stops when the bracket is
    narrower than ``tol * max(1, |x|)`` or ``f`` vanishes exactly.
    """
    lo, hi = float(spec.bracket_lo), float(spec.bracket_hi)
    flo, fhi = float(f(lo)), float(f(hi))
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NoSignChange(f"f({lo})={flo} and f({hi})={fhi} have the same sign")

    side = 0
    width_two_ago = width_prev = hi - lo
    for _ in range(spec.max_iter):
        width = hi - lo
        if width <= spec.tol * max(1.0, abs(lo), abs(hi)):
            return 0.5 * (lo + hi)
        if width > 0.5 * width_two_ago:
            x = 0.5 * (lo + hi)
        else:
            x = (lo * fhi - hi * flo) / (fhi - flo)
            if not lo < x < hi:
                x = 0.5 * (lo + hi)
        width_two_ago, width_prev = width_prev, width
        fx = float(f(x))
        if fx == 0.0:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi, fhi = x, fx
            if side == 1:
                flo *= 0.5
            side = 1
    raise NoConvergence(f"no convergence after {spec.max_iter} iterations; bracket [{lo}, {hi}]")


def solve_increasing(func, target, lo, hi, fprime=None, tol=1e-14, max_iter=200):
    """Vectorized solve of ``func(x, idx) = target`` for increasing ``func``.

    All of ``target``, ``lo``, ``hi`` broadcast together and are flattened;
    ``func`` and ``fprime`` receive the points together with the flat indices
    they belong to, so per-entry parameters can be looked up. Newton steps (when
    ``fprime`` is given, secant steps otherwise) are kept only while they
    stay strictly inside the current bracket; otherwise the bracket is
    bisected.
    """
    target, lo, hi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (target, lo, hi)))
    shape = target.shape
    target, lo, hi = target.ravel().copy(), lo.ravel().copy(), hi.ravel().copy()
    every = np.arange(target.size)
    flo = func(lo, every) - target
    fhi = func(hi, every) - target
    # a root on an endpoint may miss the bracket by rounding only
    band = 64 * np.finfo(float).eps * np.maximum(np.abs(target), 1e-300)
    flo = np.where((flo > 0) & (flo <= band), 0.0, flo)
    fhi = np.where((fhi < 0) & (fhi >= -band), 0.0, fhi)
    if np.any(flo > 0) or np.any(fhi < 0):
        bad = np.flatnonzero((flo > 0) | (fhi < 0))
        raise NoSignChange(f"{bad.size} bracket(s) without a sign change, first at index {bad[0]}")

    x = np.where(flo == 0, lo, np.where(fhi == 0, hi, 0.5 * (lo + hi)))
    active = (flo != 0) & (fhi != 0)
    idx = np.flatnonzero(active)
    flo, fhi = flo[idx], fhi[idx]
    xa = x[idx]
    la, ha, ta = lo[idx], hi[idx], target[idx]
    prev_width = ha - la
    for _ in range(max_iter):
        if idx.size == 0:
            break
        fx = func(xa, idx) - ta
        below = fx < 0
        la = np.where(below, xa, la)
        flo = np.where(below, fx, flo)
        ha = np.where(below, ha, xa)
        fhi = np.where(below, fhi, fx)
        if fprime is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = xa - fx / fprime(xa, idx)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = (la * fhi - ha * flo) / (fhi - flo)
        width = ha - la
        slow = width > 0.5 * prev_width
        bisect = ~np.isfinite(xn) | (xn <= la) | (xn >= ha) | slow
        xn = np.where(bisect, 0.5 * (la + ha), xn)
        prev_width = np.where(slow, width, prev_width)
        scale = np.maximum(1.0, np.abs(xn))
        done = (fx == 0) | (np.abs(xn - xa) <= tol * scale) | (width <= tol * scale)
        x[idx] = np.where(fx == 0, xa, xn)
        keep = ~done
        idx, xa, la, ha, ta = idx[keep], xn[keep], la[keep], ha[keep], ta[keep]
        flo, fhi, prev_width = flo[keep], fhi[keep], prev_width[keep]
    else:
        if idx.size:
            raise NoConvergence(f"{idx.size} root(s) unresolved after {max_iter} iterations")
    return x.reshape(shape)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
# 15 Kronrod nodes on [-1, 1]; Gauss nodes are the odd-indexed ones of the half rule
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[[13, 11, 9]] = _WG[:3]
_WG15[7] = _WG[3]


def _gk_panels(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    t = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    y = np.asarray(f(t))
    y = y.reshape(y.shape[:-1] + (a.size, 15))
    k = (y @ _WK) * half
    g = (y @ _WG15) * half
    return k, np.abs(k - g)


def integrate_1d(f, a, b, spec: QuadratureSpec = None, points=None, raise_on_fail=False, floor=None):
    """Adaptive Gauss-Kronrod (7/15) integral of ``f`` over ``[a, b]``.

    ``f`` is called with a 1-d array of nodes and returns values with the
    node axis last; leading axes are integrated componentwise, which lets a
    caller integrate many related integrands over a shared set of panels.
    ``points`` are optional interior breakpoints for the initial partition.
    ``floor`` (scalar or one value per component) is an absolute error level
    below which a component counts as converged, for integrands whose value
    is far below their magnitude.

    Panels carrying the largest share of the error are bisected each round
    until the summed error meets ``max(abs_tol, rel_tol * |I|)`` for every
    component. When the budget runs out the best estimate is returned with
    ``converged=False`` (or :class:`ToleranceNotMet` is raised).
    """
    spec = spec or QuadratureSpec()
    a, b = float(a), float(b)
    if a == b:
        return EstimateWithError(0.0, 0.0, 0, method="gk15")
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    edges = [a]
    if points is not None:
        edges += sorted(float(p) for p in points if a < p < b)
    edges.append(b)
    lo = np.array(edges[:-1])
    hi = np.array(edges[1:])
    k, e = _gk_panels(f, lo, hi)
    out_shape = k.shape[:-1]
    k = k.reshape(-1, lo.size)
    e = e.reshape(-1, lo.size)
    nodes = 15 * lo.size
    converged = False
    for _ in range(spec.max_refinements + 1):
        total = k.sum(axis=1)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if floor is not None:
            tol = np.maximum(tol, np.broadcast_to(np.ravel(floor), tol.shape))
        if np.all(e.sum(axis=1) <= tol):
            converged = True
            break
        if not np.all(np.isfinite(total)) or lo.size >= spec.max_panels:
            break
        score = (e / tol[:, None]).max(axis=0)
        order = np.argsort(score)[::-1]
        csum = np.cumsum(score[order])
        nsplit = int(np.searchsorted(csum, 0.5 * (csum[-1] - 1.0))) + 1
        nsplit = max(1, min(nsplit, spec.max_panels - lo.size, lo.size))
        split = order[:nsplit]
        keep = np.ones(lo.size, dtype=bool)
        keep[split] = False
        mids = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mids])
        new_hi = np.concatenate([mids, hi[split]])
        nk, ne = _gk_panels(f, new_lo, new_hi)
        nodes += 15 * new_lo.size
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        k = np.concatenate([k[:, keep], nk.reshape(-1, new_lo.size)], axis=1)
        e = np.concatenate([e[:, keep], ne.reshape(-1, new_lo.size)], axis=1)
    total = (sign * k.sum(axis=1)).reshape(out_shape)
    err = e.sum(axis=1).reshape(out_shape)
    value = float(total) if total.ndim == 0 else total
    error = float(err) if err.ndim == 0 else err
    est = EstimateWithError(value, error, nodes, converged=converged, method="gk15",
                            extra={"panels": int(lo.size)})
    if not converged:
        if raise_on_fail:
            raise ToleranceNotMet(f"quadrature budget exhausted on [{a}, {b}]", est)
        logger.debug("integrate_1d: tolerance not met on [%g, %g] (err=%s)", a, b, error)
    return est


# ---------------------------------------------------------------------------
# Gamma / Beta
# ---------------------------------------------------------------------------

def log_gamma(z):
    """``log Gamma(z)`` for ``z > 0`` (scalar or array)."""
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise DomainError("log_gamma requires positive arguments")
    out = special.gammaln(z)
    return float(out) if out.ndim == 0 else out


def log_beta(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(~(p > 0)) or np.any(~(q > 0)):
        raise DomainError("log_beta requires positive arguments")
    out = special.betaln(p, q)
    return float(out) if out.ndim == 0 else out


def log_sphere_area(n):
    """log |S^{n-1}|, the surface area of the unit sphere in R^n."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return math.log(2.0) + 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n)


def log_ball_volume(n):
    """log of the Lebesgue volume of the unit ball in R^n."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0)


# ---------------------------------------------------------------------------
# Elementary functions without cancellation near 0
# ---------------------------------------------------------------------------

def _odd_series(x, coeffs, first_power):
    x = np.asarray(x, dtype=float)
    x2 = x * x
    acc = np.zeros_like(x)
    for c in coeffs[::-1]:
        acc = acc * x2 + c
    return acc * x ** first_power


_XMS = [(-1) ** k / math.factorial(2 * k + 3) for k in range(9)]
_SMXC = [(-1) ** k * (2 * k + 2) / math.factorial(2 * k + 3) for k in range(9)]


def x_minus_sin(x):
    """``x - sin(x)``, accurate for small ``|x|``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1.0
    out = np.where(small, _odd_series(np.where(small, x, 0.0), _XMS, 3), x - np.sin(x))
    return out if out.ndim else float(out)


def sin_minus_x_cos(x):
    """``sin(x) - x cos(x)``, accurate for small ``|x|``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1.0
    out = np.where(small, _odd_series(np.where(small, x, 0.0), _SMXC, 3), np.sin(x) - x * np.cos(x))
    return out if out.ndim else float(out)


def sinc(x):
    """``sin(x)/x`` with the value 1 at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def spawn_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for batch ``stream`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))
