"""Scalar functions behind the comparison d_K <= d_CC and the volume bound,
plus grid sweeps that check their sign and size conditions.

All two-variable functions take ``r`` in ``[-1, 1]`` and ``omega`` in
``[0, pi)`` and are evaluated in the half angle ``y = omega / 2`` so the
removable singularity at ``omega = 0`` and the growth near ``pi`` need no
special casing beyond the helpers in :mod:`grushin.mu`.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .mu import HALF_PI, _mm, _mp, _y_over_sin
from .numerics import sin_minus_x_cos, x_minus_sin

logger = logging.getLogger(__name__)

PI = math.pi
SERIES_RADIUS = 0.5


def _arr(v):
    return np.asarray(v, dtype=float)


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def _check_r_omega(r, omega):
    r, omega = np.broadcast_arrays(_arr(r), _arr(omega))
    if np.any(np.abs(r) > 1.0):
        raise DomainError("r must lie in [-1, 1]")
    if np.any(omega < 0.0) or np.any(omega >= PI):
        raise DomainError("omega must lie in [0, pi)")
    return r, omega


def _check_interval(v, lo, hi, name, closed_hi=False):
    v = _arr(v)
    bad = (v < lo) | ((v > hi) if closed_hi else (v >= hi))
    if np.any(bad) or not np.all(np.isfinite(v)):
        raise DomainError(f"{name} outside [{lo}, {hi}{']' if closed_hi else ')'}")
    return v


def _parts(r, omega):
    y = 0.5 * omega
    sy, cy = np.sin(y), np.cos(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        yc2 = (y / cy) ** 2
    ys2 = _y_over_sin(y) ** 2
    return y, sy, cy, yc2, ys2


def Psi(r, omega):
    """``(omega / sin omega)^2 (1 - r cos omega)``."""
    r, omega = _check_r_omega(r, omega)
    _, _, _, yc2, ys2 = _parts(r, omega)
    return _out((1.0 + r) * yc2 + (1.0 - r) * ys2)


def Phi_cap(r, omega):
    """``Psi(r, omega) + r``."""
    r, omega = _check_r_omega(r, omega)
    return _out(_arr(Psi(r, omega)) + r)


def _mu_half(r, y, sy, cy):
    return 0.5 * ((1.0 + r) * _mp(y, sy, cy) + (1.0 - r) * _mm(y, sy))


def G1(r, omega):
    r, omega = _check_r_omega(r, omega)
    y, sy, cy, yc2, ys2 = _parts(r, omega)
    phi = (1.0 + r) * yc2 + (1.0 - r) * ys2 + r
    return _out(phi - _mu_half(r, y, sy, cy))


def G2(r, omega):
    r, omega = _check_r_omega(r, omega)
    y, sy, cy, yc2, ys2 = _parts(r, omega)
    phi = (1.0 + r) * yc2 + (1.0 - r) * ys2 + r
    return _out(phi + _mu_half(r, y, sy, cy))


def G(r, omega):
    """``Phi^2 - mu^2``, formed as the product ``G1 * G2``."""
    return _out(_arr(G1(r, omega)) * _arr(G2(r, omega)))


def G_direct(r, omega):
    """``Phi^2 - mu^2`` formed literally; used to cross-check :func:`G`."""
    r, omega = _check_r_omega(r, omega)
    y, sy, cy, _, _ = _parts(r, omega)
    return _out(_arr(Phi_cap(r, omega)) ** 2 - _mu_half(r, y, sy, cy) ** 2)


def dG1_dr(r, omega):
    """Exact partial derivative in ``r`` (``G1`` is affine in ``r``)."""
    r, omega = _check_r_omega(r, omega)
    y, sy, cy, yc2, ys2 = _parts(r, omega)
    return _out(yc2 - ys2 + 1.0 - 0.5 * (_mp(y, sy, cy) - _mm(y, sy)) + 0.0 * r)


def dG2_dr(r, omega):
    r, omega = _check_r_omega(r, omega)
    y, sy, cy, yc2, ys2 = _parts(r, omega)
    return _out(yc2 - ys2 + 1.0 + 0.5 * (_mp(y, sy, cy) - _mm(y, sy)) + 0.0 * r)


def Z1(y):
    """``G(-1, 2y)`` written in ``y``; defined on ``[0, pi/2)``."""
    y = _check_interval(y, 0.0, HALF_PI, "y")
    sy = np.sin(y)
    return _out((2.0 * _y_over_sin(y) ** 2 - 1.0) ** 2 - _mm(y, sy) ** 2)


def Z2(y):
    """``G(1, 2y)`` written in ``y``; defined on ``[0, pi/4)``."""
    y = _check_interval(y, 0.0, 0.25 * PI, "y")
    sy, cy = np.sin(y), np.cos(y)
    return _out((2.0 * (y / cy) ** 2 + 1.0) ** 2 - _mp(y, sy, cy) ** 2)


def Xi(omega):
    """``(2 omega - sin 2 omega) / (2 omega^2 sin omega)`` on ``[0, pi)``.

    The value at 0 is the limit 2/3.
    """
    w = _check_interval(omega, 0.0, PI, "omega")
    small = w < 1e-3
    ws = np.where(small, 1.0, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = x_minus_sin(2.0 * ws) / (2.0 * ws * ws * np.sin(ws))
    series = 2.0 / 3.0 - w * w / 45.0
    return _out(np.where(small, series, val))


def K_fn(omega):
    """``sin^2 w - sin w - cos w (w^2 - w)``, the sign of ``dG1/dr`` times ``sin^2 w``."""
    w = _arr(omega)
    if not np.all(np.isfinite(w)):
        raise DomainError("omega must be finite")
    s = np.sin(w)
    return _out(s * s - s - np.cos(w) * (w * w - w))


def _even_series(w, terms):
    w = _arr(w)
    w2 = w * w
    acc = np.zeros_like(w)
    for _, c in reversed(terms):
        acc = acc * w2 + c
    return acc * w ** terms[0][0]


def _frac_terms(pairs):
    return [(k, float(Fraction(c))) for k, c in pairs]


# Taylor coefficients (power, coefficient); consecutive powers differ by 2.
_T_SERIES = _frac_terms([
    (6, "2/45"), (8, "-2/315"), (10, "2/4725"), (12, "-8/467775"), (14, "4/8513505"),
    (16, "-2/212837625"), (18, "2/13956067125"), (20, "-16/9280784638125"),
    (22, "4/238206805711875"), (24, "-4/29585285269414875"),
    (26, "4/4370553505709015625"), (28, "-16/3028793579456347828125"),
    (30, "8/304044278553117993515625"),
])
_ZSTAR_SERIES = _frac_terms([
    (6, "16/9"), (8, "8/9"), (10, "-1114/4725"), (12, "1133/42525"),
    (14, "-49877/26195400"), (16, "329191/3405402000"), (18, "-1357511/367783416000"),
    (20, "39313/357275318400"), (22, "-3023159/1147876560230400"),
    (24, "3540419/68425368979968000"), (26, "-19117579367/22505103857511475200000"),
    (28, "234824713727/19849501602325121126400000"),
    (30, "-297451955569/2101711934363836354560000000"),
])


def T(omega):
    """``w^2 + (w/2) sin 2w - 2 sin^2 w``; vanishes to sixth order at 0."""
    w = _arr(omega)
    small = np.abs(w) < SERIES_RADIUS
    direct = w * w + 0.5 * w * np.sin(2.0 * w) - 2.0 * np.sin(w) ** 2
    return _out(np.where(small, _even_series(np.where(small, w, 0.0), _T_SERIES), direct))


def T_prime(omega):
    """``2w + w cos 2w - (3/2) sin 2w``, cancellation-free near 0."""
    w = _arr(omega)
    # w cos 2w = w - 2w sin^2 w
    return _out(1.5 * x_minus_sin(2.0 * w) - 2.0 * w * np.sin(w) ** 2)


def V(h):
    """``h^3 + h cos h - sin h``; equals ``h^3 - (sin h - h cos h)``."""
    h = _arr(h)
    return _out(h ** 3 - sin_minus_x_cos(h))


def z_star(y):
    """Numerator of ``Z1'(y) sin^5 y``; vanishes to sixth order at 0."""
    y = _arr(y)
    small = np.abs(y) < SERIES_RADIUS
    direct = ((1.0 + 6.0 * y ** 2 - 16.0 * y ** 4) * np.cos(y)
              - (1.0 + 2.0 * y ** 2) * np.cos(3.0 * y)
              + 2.0 * y * (-5.0 + 8.0 * y ** 2 + np.cos(2.0 * y)) * np.sin(y))
    return _out(np.where(small, _even_series(np.where(small, y, 0.0), _ZSTAR_SERIES), direct))


def z_star_prime(y):
    """Derivative of :func:`z_star` in a form whose terms are all nonnegative on ``(0, pi/2)``."""
    y = _arr(y)
    s, c = np.sin(y), np.cos(y)
    y2_s2 = x_minus_sin(y) * (y + s)  # y^2 - sin^2 y
    smxc = sin_minus_x_cos(y)
    return _out(4.0 * (4.0 * y * y * s * y2_s2 + s * y2_s2
                       + smxc * (12.0 * y * y - 2.0 * y * s * c - 3.0 * s * s)))


def cubic_remainder_ratio(omega):
    """``(w - sin w) / w^3``; tends to 1/6 at 0 and 1/pi^2 at pi."""
    w = _arr(omega)
    small = np.abs(w) < 1e-4
    ws = np.where(small, 1.0, w)
    return _out(np.where(small, 1.0 / 6.0 - w * w / 120.0, x_minus_sin(ws) / ws ** 3))


def chain_gaps(y):
    """Gaps of ``1 > sin y / y > (sin y / y)^2 > cos y``; all positive on ``(0, pi)``."""
    y = _arr(y)
    s = np.sin(y)
    q = s / y
    g1 = x_minus_sin(y) / y
    g2 = q * g1
    # q^2 - cos y = (sin^2 y - y^2 cos y) / y^2, split to avoid cancellation near 0
    g3 = (s * s - y * y * np.cos(y)) / (y * y)
    tiny = np.abs(y) < 1e-2
    g3 = np.where(tiny, y * y / 6.0 + y ** 4 / 360.0, g3)
    return np.stack([g1, g2, g3])


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Axis:
    """Uniform grid axis; open endpoints are dropped from the point set."""

    lo: float
    hi: float
    count: int
    open_lo: bool = False
    open_hi: bool = False

    def points(self):
        if self.count <= 0:
            return np.empty(0)
        extra = int(self.open_lo) + int(self.open_hi)
        pts = np.linspace(self.lo, self.hi, self.count + extra)
        if self.open_lo:
            pts = pts[1:]
        if self.open_hi:
            pts = pts[:-1]
        return pts

    def describe(self):
        left = "(" if self.open_lo else "["
        right = ")" if self.open_hi else "]"
        return f"{left}{self.lo:.6g}, {self.hi:.6g}{right} x {self.count}"


@dataclass
class SweepReport:
    name: str
    domain: str
    grid_sizes: list
    min_value: float
    argmin: list
    violations: int
    tolerance: float
    threshold: float
    strict: bool = False
    valid: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.valid and self.violations == 0

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class SweepTarget:
    """A function of one or two grid variables and the bound it must respect."""

    func: Callable
    axes: Sequence[Axis]
    threshold: float
    slack: float = 0.0
    strict: bool = False


_EPS = 1e-3

SWEEPS = {
    "G": SweepTarget(lambda r, w: G(r, w),
                     (Axis(-1.0, 1.0, 201), Axis(0.0, PI - _EPS, 2000)), 1.0, 1e-9),
    "Z1": SweepTarget(Z1, (Axis(0.0, HALF_PI, 2000, open_hi=True),), 1.0, 1e-9),
    "Z2": SweepTarget(Z2, (Axis(0.0, 0.25 * PI, 2000, open_hi=True),), 1.0, 1e-9),
    "Xi": SweepTarget(Xi, (Axis(1e-4, PI - 1e-4, 10000),), 2.0 / PI, 1e-9),
    "chain": SweepTarget(lambda y: chain_gaps(y).min(axis=0),
                         (Axis(0.0, PI, 4000, open_lo=True, open_hi=True),), 0.0, 0.0, strict=True),
    "K": SweepTarget(K_fn, (Axis(HALF_PI, PI, 2000, open_lo=True, open_hi=True),), 0.0, 0.0, strict=True),
    "T": SweepTarget(T, (Axis(0.0, PI, 2000, open_lo=True, open_hi=True),), 0.0, 0.0, strict=True),
    "V": SweepTarget(V, (Axis(0.0, HALF_PI, 2000, open_lo=True, open_hi=True),), 0.0, 0.0, strict=True),
    "z_star_prime": SweepTarget(z_star_prime, (Axis(0.0, HALF_PI, 2000, open_lo=True, open_hi=True),),
                                0.0, 0.0),
    "Phi_cap": SweepTarget(lambda r, w: Phi_cap(r, w),
                           (Axis(-1.0, 1.0, 201), Axis(0.0, PI - _EPS, 2000)), 1.0, 1e-9),
    # sign conditions on the r-derivatives, checked with central differences
    "dG2_dr": SweepTarget(lambda w: fd_dr(G2, w),
                          (Axis(0.0, PI - _EPS, 2000, open_lo=True),), 0.0, 0.0, strict=True),
    "dG1_dr_lower": SweepTarget(lambda w: -fd_dr(G1, w),
                                (Axis(0.0, HALF_PI, 2000),), 0.0, 1e-7),
    "dG1_dr_upper": SweepTarget(lambda w: fd_dr(G1, w),
                                (Axis(HALF_PI, PI - _EPS, 2000),), 0.0, 1e-7),
}


def fd_dr(func, omega, r=0.0, h=1e-5):
    """Central difference in ``r`` of ``func(r, omega)``."""
    return (_arr(func(r + h, omega)) - _arr(func(r - h, omega))) / (2.0 * h)


def sweep(name, axes=None, threshold=None, slack=None, jobs=1, func=None, strict=None):
    """Evaluate a registered (or supplied) function on a grid and count violations.

    A point violates when ``value < threshold - slack`` (or ``<=`` for strict
    bounds). An empty grid yields a report with ``valid=False``.
    """
    target = SWEEPS.get(name)
    if target is None and func is None:
        raise KeyError(f"unknown sweep {name!r}; known: {sorted(SWEEPS)}")
    if target is None and (axes is None or threshold is None):
        raise ValueError("an unregistered sweep needs axes and a threshold")
    f = func or target.func
    axes = tuple(axes if axes is not None else target.axes)
    threshold = target.threshold if threshold is None else threshold
    slack = (target.slack if target else 0.0) if slack is None else slack
    strict = (target.strict if target else False) if strict is None else strict

    pts = [ax.points() for ax in axes]
    sizes = [int(p.size) for p in pts]
    domain = " x ".join(ax.describe() for ax in axes)
    if any(s == 0 for s in sizes):
        return SweepReport(name, domain, sizes, float("nan"), [], 0, slack, threshold,
                           strict, valid=False)

    mesh = np.meshgrid(*pts, indexing="ij")
    chunks = np.array_split(np.arange(sizes[0]), max(1, min(jobs, sizes[0])))

    def run(rows):
        return _arr(f(*(m[rows] for m in mesh)))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(rows) for rows in chunks]
    vals = np.concatenate(parts, axis=0).reshape(sizes)

    bound = threshold - slack
    bad = (vals <= bound) if strict else (vals < bound)
    bad |= ~np.isfinite(vals)
    k = int(np.nanargmin(vals))
    where = np.unravel_index(k, vals.shape)
    report = SweepReport(
        name=name, domain=domain, grid_sizes=sizes, min_value=float(vals[where]),
        argmin=[float(p[i]) for p, i in zip(pts, where)], violations=int(bad.sum()),
        tolerance=slack, threshold=threshold, strict=strict,
    )
    logger.debug("sweep %s: min %.3e at %s, %d violations", name, report.min_value,
                 report.argmin, report.violations)
    return report


def concavity_check(r_count=201, omega_count=500, slack=1e-9):
    """For each ``omega <= pi/2`` the grid minimum over ``r`` of ``G`` is at an endpoint.

    Returns a report whose violations count the ``omega`` columns where some
    interior ``r`` falls below ``min(G(-1, w), G(1, w)) - slack``.
    """
    r = np.linspace(-1.0, 1.0, r_count)
    w = np.linspace(0.0, HALF_PI, omega_count)
    vals = _arr(G(r[:, None], w[None, :]))
    ends = np.minimum(vals[0], vals[-1])
    col_min = vals.min(axis=0)
    bad = col_min < ends - slack
    return SweepReport("G_concavity", f"r in [-1,1] x {r_count}, omega in [0, pi/2] x {omega_count}",
                       [r_count, omega_count], float((col_min - ends).min()),
                       [float(w[int(np.argmin(col_min - ends))])], int(bad.sum()), slack, 0.0)


def cubic_remainder_bounds(count=20000):
    """Grid inf and sup of ``(w - sin w)/w^3`` on ``(0, pi)``."""
    w = Axis(0.0, PI, count, open_lo=True, open_hi=True).points()
    vals = _arr(cubic_remainder_ratio(w))
    return {"c1": float(vals.min()), "C1": float(vals.max()),
            "argmin": float(w[int(np.argmin(vals))]), "argmax": float(w[int(np.argmax(vals))]),
            "limit_at_zero": 1.0 / 6.0, "limit_at_pi": 1.0 / PI ** 2}


def identity_checks(count=400):
    """Max absolute deviations of identities that should hold to rounding."""
    rng = np.random.default_rng(0)
    r = rng.uniform(-1.0, 1.0, count)
    w = rng.uniform(0.0, PI - 1e-2, count)
    y1 = np.linspace(0.0, HALF_PI - 1e-3, count)
    y2 = np.linspace(0.0, 0.25 * PI - 1e-3, count)
    g = _arr(G(r, w))
    return {
        "G_vs_direct": float(np.max(np.abs(g - _arr(G_direct(r, w))) / np.maximum(1.0, np.abs(g)))),
        "Z1_vs_G": float(np.max(np.abs(_arr(Z1(y1)) - _arr(G(-1.0, 2.0 * y1))))),
        "Z2_vs_G": float(np.max(np.abs(_arr(Z2(y2)) - _arr(G(1.0, 2.0 * y2))))),
    }


DEFAULT_SWEEPS = ("G", "Z1", "Z2", "Xi", "chain", "K", "T", "V", "z_star_prime",
                  "dG2_dr", "dG1_dr_lower", "dG1_dr_upper")


def run_all(jobs=1, names=DEFAULT_SWEEPS):
    """Every default sweep plus the concavity check."""
    reports = [sweep(nm, jobs=jobs) for nm in names]
    reports.append(concavity_check())
    return reports
