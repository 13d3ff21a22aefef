"""Discrete centered maximal operators on (x, u) grids.

A :class:`GridFunction` stores cell values on a product grid with cell
centers ``lo + (i + 1/2) * spacing``. Ball averages count the cells whose
centers lie in the ball, using only cells inside the grid, so averages of a
constant are exact.

For a K ball centered at a grid point, the cells with a given ``x'`` form a
window ``|u' - u| < H`` around the center's ``u`` with
``H = sqrt((r^2 - |x - x'|^2)(r^2 + |x + x'|^2)) / 2``. The same holds for CC
balls with ``H`` obtained from the distance formula. Window sums come from
cumulative sums along ``u``, so one ball costs one gather per ``x'`` cell.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionMismatch, DomainError, EmptyBall, ZeroMass
from .geometry import Point, _coords, invariants_arrays
from .mu import _mm, _mp, solve_half_angle
from .numerics import log_beta, log_sphere_area, spawn_rng

logger = logging.getLogger(__name__)

GRID_SCHEMA = "grushin.grid/1"


class MaxMetric(str, Enum):
    K = "K"
    CC = "CC"
    EuclideanX = "EuclideanX"
    Euclidean1D = "Euclidean1D"


# ---------------------------------------------------------------------------
# Grid functions
# ---------------------------------------------------------------------------

@dataclass
class GridFunction:
    """Nonnegative values on the cells of ``prod(x_box) x u_range``.

    ``x_box`` holds one ``(lo, hi, count)`` per x axis; ``values`` has shape
    ``(*x_counts, u_count)``.
    """

    n: int
    x_box: tuple
    u_range: tuple
    values: np.ndarray

    def __post_init__(self):
        self.x_box = tuple((float(lo), float(hi), int(c)) for lo, hi, c in self.x_box)
        lo, hi, c = self.u_range
        self.u_range = (float(lo), float(hi), int(c))
        if len(self.x_box) != self.n:
            raise DimensionMismatch(f"x_box has {len(self.x_box)} axes, expected {self.n}")
        for lo, hi, c in self.x_box + (self.u_range,):
            if c < 1 or not hi > lo:
                raise DomainError("every axis needs count >= 1 and hi > lo")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.shape:
            raise DimensionMismatch(f"values shape {self.values.shape} != grid shape {self.shape}")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise DomainError("grid values must be finite and nonnegative")

    @property
    def shape(self):
        return tuple(c for _, _, c in self.x_box) + (self.u_range[2],)

    @property
    def x_spacing(self):
        return np.array([(hi - lo) / c for lo, hi, c in self.x_box])

    @property
    def u_spacing(self):
        lo, hi, c = self.u_range
        return (hi - lo) / c

    @property
    def cell_measure(self):
        return float(np.prod(self.x_spacing) * self.u_spacing)

    def x_centers(self):
        """Cell centers in x, flattened to shape ``(Nx, n)``."""
        axes = [lo + (np.arange(c) + 0.5) * (hi - lo) / c for lo, hi, c in self.x_box]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def u_centers(self):
        lo, hi, c = self.u_range
        return lo + (np.arange(c) + 0.5) * (hi - lo) / c

    def flat(self):
        return self.values.reshape(-1, self.u_range[2])

    def mass(self):
        return float(self.values.sum() * self.cell_measure)

    def like(self, values):
        return GridFunction(self.n, self.x_box, self.u_range, np.asarray(values).reshape(self.shape))

    def same_grid(self, other):
        return self.n == other.n and self.x_box == other.x_box and self.u_range == other.u_range

    @classmethod
    def zeros(cls, n, x_box, u_range):
        shape = tuple(int(c) for _, _, c in x_box) + (int(u_range[2]),)
        return cls(n, x_box, u_range, np.zeros(shape))

    def header(self, data_file=None, fmt="csv"):
        return {"schema": GRID_SCHEMA, "n": self.n, "x_box": [list(b) for b in self.x_box],
                "u_range": list(self.u_range), "shape": list(self.shape),
                "spacing": list(self.x_spacing) + [self.u_spacing],
                "cell_measure": self.cell_measure, "format": fmt, "data": data_file}

    def save(self, path, fmt="csv"):
        """Write ``<path>.json`` (header) and ``<path>.csv`` or ``<path>.bin``."""
        path = Path(path)
        if fmt not in ("csv", "bin"):
            raise ConfigError(f"unknown grid format {fmt!r}")
        data = path.with_suffix("." + fmt)
        flat = self.values.ravel()
        if fmt == "csv":
            idx = np.arange(flat.size)
            np.savetxt(data, np.column_stack([idx, flat]), fmt=["%d", "%.17g"], delimiter=",",
                       header="index,value", comments="")
        else:
            flat.astype("<f8").tofile(data)
        header = path.with_suffix(".json")
        header.write_text(json.dumps(self.header(data.name, fmt), indent=2))
        return header

    @classmethod
    def load(cls, header_path):
        header_path = Path(header_path)
        h = json.loads(header_path.read_text())
        if h.get("schema") != GRID_SCHEMA:
            raise ConfigError(f"unexpected grid schema {h.get('schema')!r}")
        data = header_path.parent / h["data"]
        size = int(np.prod(h["shape"]))
        if h["format"] == "csv":
            rows = np.loadtxt(data, delimiter=",", skiprows=1, ndmin=2)
            flat = np.zeros(size)
            flat[rows[:, 0].astype(int)] = rows[:, 1]
        else:
            flat = np.fromfile(data, dtype="<f8")
        return cls(h["n"], tuple(tuple(b) for b in h["x_box"]), tuple(h["u_range"]),
                   flat.reshape(h["shape"]))


@dataclass(frozen=True)
class RadiiSet:
    radii: tuple

    def __post_init__(self):
        r = tuple(float(v) for v in self.radii)
        if not r:
            raise DomainError("radii set is empty")
        if any(not v > 0 for v in r) or any(b <= a for a, b in zip(r, r[1:])):
            raise DomainError("radii must be positive and strictly increasing")
        object.__setattr__(self, "radii", r)

    def __iter__(self):
        return iter(self.radii)

    def __len__(self):
        return len(self.radii)

    @classmethod
    def geometric(cls, lo, hi, ratio=2.0 ** 0.25):
        count = int(math.floor(math.log(hi / lo) / math.log(ratio) + 1e-9)) + 1
        return cls(tuple(lo * ratio ** np.arange(count)))


def resolvable_range(f: GridFunction):
    """``(2 * max x spacing, d_K diameter of the grid box)``."""
    lo = np.array([b[0] for b in f.x_box])
    hi = np.array([b[1] for b in f.x_box])
    ulo, uhi, _ = f.u_range
    corners = [(lo, hi), (hi, lo), (lo, lo), (hi, hi)]
    diam = max(float(invariants_arrays(a, ulo, b, uhi)["dK"]) for a, b in corners)
    return 2.0 * float(f.x_spacing.max()), diam


def default_radii(f: GridFunction, ratio=2.0 ** 0.25):
    lo, hi = resolvable_range(f)
    return RadiiSet.geometric(lo, hi, ratio)


# ---------------------------------------------------------------------------
# Ball geometry on the grid
# ---------------------------------------------------------------------------

def half_height_K(x, xs, r):
    """u half-height of the K ball of radius ``r`` at ``x`` above each ``x'`` (NaN outside)."""
    q = np.sum((xs - x) ** 2, axis=-1)
    p = np.sum((xs + x) ** 2, axis=-1)
    inside = q < r * r
    with np.errstate(invalid="ignore"):
        h = 0.5 * np.sqrt((r * r - q) * (r * r + p))
    return np.where(inside, h, np.nan)


def half_height_CC(x, xs, r):
    """u half-height of the CC ball: the ``s`` where ``d_CC = r`` above each ``x'``.

    Along the geodesic family ``d^2 = p (y/cos y)^2 + q (y/sin y)^2`` and
    ``4 s = p mp(y) + q mm(y)``; ``d_CC`` increases with ``s``. When
    ``x' = -x`` and ``r`` exceeds ``(pi/2)|x - x'|`` the distance is
    ``sqrt(2 pi s)``, giving ``s = r^2 / (2 pi)``.
    """
    q = np.sum((xs - x) ** 2, axis=-1)
    p = np.sum((xs + x) ** 2, axis=-1)
    inside = q < r * r
    qq = np.where(inside, q, 0.0)
    y, sy, cy, ok = solve_half_angle("psi", p, qq, r * r)
    with np.errstate(invalid="ignore", divide="ignore"):
        mp = np.where(p > 0, p * np.where(p > 0, _mp(y, sy, cy), 0.0), 0.0)
    s = 0.25 * (mp + qq * _mm(y, sy))
    s = np.where(ok, s, r * r / (2.0 * math.pi))
    return np.where(inside, s, np.nan)


def _window(h, du):
    """Largest ``m`` with ``m * du < h`` (``-1`` when the window is empty)."""
    with np.errstate(invalid="ignore"):
        m = np.ceil(h / du) - 1.0
    return np.where(np.isfinite(m), m, -1).astype(np.int64)


def ball_windows(f: GridFunction, center_index, r, metric="K"):
    """``(x' indices, window half-widths)`` of the ball at x-cell ``center_index``."""
    xs = f.x_centers()
    x = xs[center_index]
    hh = half_height_K(x, xs, r) if MaxMetric(metric) == MaxMetric.K else half_height_CC(x, xs, r)
    m = _window(hh, f.u_spacing)
    sel = np.nonzero(m >= 0)[0]
    return sel, m[sel]


# ---------------------------------------------------------------------------
# Maximal operators
# ---------------------------------------------------------------------------

def _u_window_sums(C, rows, m, Nu):
    """Window sums ``sum_{|j'-j|<=m} F[row, j']`` for every ``j``, summed over rows."""
    j = np.arange(Nu)
    lo = np.clip(j[None, :] - m[:, None], 0, Nu)
    hi = np.clip(j[None, :] + m[:, None] + 1, 0, Nu)
    num = (np.take_along_axis(C[rows], hi, axis=1) - np.take_along_axis(C[rows], lo, axis=1)).sum(axis=0)
    cnt = (hi - lo).sum(axis=0)
    return num, cnt


def _max_ball(f, radii, metric, jobs):
    F = f.flat()
    Nx, Nu = F.shape
    C = np.zeros((Nx, Nu + 1))
    np.cumsum(F, axis=1, out=C[:, 1:])
    xs = f.x_centers()
    height = half_height_K if metric == MaxMetric.K else half_height_CC
    out = np.zeros_like(F)

    def one(i):
        best = np.zeros(Nu)
        any_hit = False
        for r in radii:
            m = _window(height(xs[i], xs, r), f.u_spacing)
            rows = np.nonzero(m >= 0)[0]
            if rows.size == 0:
                continue
            num, cnt = _u_window_sums(C, rows, m[rows], Nu)
            ok = cnt > 0
            if not np.any(ok):
                continue
            any_hit = True
            best = np.maximum(best, np.where(ok, num / np.where(ok, cnt, 1), 0.0))
        if not any_hit:
            raise EmptyBall(f"no radius captures a cell at x-index {i}")
        out[i] = best

    _run(one, range(Nx), jobs)
    return out


def _run(fn, items, jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(fn, items))
    else:
        for it in items:
            fn(it)


def maximal_u(F, du, radii=None):
    """Centered maximal function along the last axis of ``F``.

    ``radii=None`` takes the supremum over every window width.
    """
    F = np.asarray(F, dtype=float)
    Nu = F.shape[-1]
    flat = F.reshape(-1, Nu)
    C = np.zeros((flat.shape[0], Nu + 1))
    np.cumsum(flat, axis=1, out=C[:, 1:])
    ms = range(Nu) if radii is None else sorted({int(v) for v in _window(np.asarray(list(radii)), du) if v >= 0})
    j = np.arange(Nu)
    best = np.zeros_like(flat)
    for m in ms:
        lo = np.clip(j - m, 0, Nu)
        hi = np.clip(j + m + 1, 0, Nu)
        best = np.maximum(best, (C[:, hi] - C[:, lo]) / (hi - lo))
    return best.reshape(F.shape)


def maximal_x(F, xs, radii=None, jobs=1):
    """Centered maximal function over the x cells for each u column.

    ``F`` has shape ``(Nx, Nu)`` and ``xs`` the matching centers. With
    ``radii=None`` every distinct center distance is used, i.e. the exact
    discrete supremum: cells are sorted by distance and averages over each
    complete distance shell are read off cumulative sums.
    """
    F = np.asarray(F, dtype=float)
    Nx, Nu = F.shape
    out = np.zeros_like(F)
    rset = None if radii is None else np.asarray(list(radii))

    def one(i):
        d2 = np.sum((xs - xs[i]) ** 2, axis=-1)
        order = np.argsort(d2, kind="stable")
        ds = d2[order]
        cs = np.cumsum(F[order], axis=0)
        # prefix ends at the last cell of each distance shell
        ends = np.nonzero(np.append(np.diff(ds) > 1e-12 * (1.0 + ds[:-1]), True))[0]
        if rset is not None:
            # radius r contains shells with d < r: prefix end = last shell below r
            k = np.searchsorted(ds, rset ** 2, side="left") - 1
            ends = np.unique(k[k >= 0])
        avg = cs[ends] / (ends + 1.0)[:, None]
        out[i] = avg.max(axis=0)

    _run(one, range(Nx), jobs)
    return out


def maximal(f: GridFunction, metric, radii: RadiiSet = None, jobs=1, check_range=True):
    """Discrete centered maximal function of ``f`` for the given ball family.

    ``K`` and ``CC`` use Grushin balls; ``EuclideanX`` averages over x-balls
    at fixed u and ``Euclidean1D`` over u-intervals at fixed x.
    """
    metric = MaxMetric(metric)
    if radii is None:
        radii = default_radii(f)
    if check_range and metric in (MaxMetric.K, MaxMetric.CC):
        lo, hi = resolvable_range(f)
        if radii.radii[0] < lo * (1 - 1e-12) or radii.radii[-1] > hi * (1 + 1e-12):
            raise DomainError(f"radii must lie in the resolvable range [{lo:.4g}, {hi:.4g}]")
    if metric in (MaxMetric.K, MaxMetric.CC):
        out = _max_ball(f, radii.radii, metric, jobs)
    elif metric == MaxMetric.EuclideanX:
        out = maximal_x(f.flat(), f.x_centers(), radii.radii, jobs)
    else:
        out = maximal_u(f.flat(), f.u_spacing, radii.radii)
    return f.like(out)


def cc_subset_of_k(f: GridFunction, radii: RadiiSet, centers=None):
    """True when every discrete CC ball's cell set lies inside the K ball's."""
    xs = f.x_centers()
    idx = range(xs.shape[0]) if centers is None else centers
    for i in idx:
        for r in radii:
            mk = _window(half_height_K(xs[i], xs, r), f.u_spacing)
            mc = _window(half_height_CC(xs[i], xs, r), f.u_spacing)
            if np.any(mc > mk):
                return False
    return True


def weak_type_ratio(Mf: GridFunction, f: GridFunction, lambdas=None):
    """``max_lambda lambda |{Mf > lambda}| / ||f||_1``.

    ``lambdas=None`` scans every distinct value of ``Mf`` from just below,
    which gives the exact supremum over lambda on the grid.
    """
    if not Mf.same_grid(f):
        raise DimensionMismatch("Mf and f live on different grids")
    mass = f.mass()
    if not mass > 0:
        raise ZeroMass("||f||_1 = 0")
    v = np.sort(Mf.values.ravel())[::-1]
    if lambdas is None:
        # |{Mf > lambda}| -> count of values >= v_k as lambda -> v_k from below
        counts = np.arange(1, v.size + 1)
        keep = np.append(v[1:] < v[:-1], True)
        best = float(np.max(v[keep] * counts[keep])) * Mf.cell_measure
    else:
        lam = np.asarray(lambdas, dtype=float)
        if np.any(lam <= 0):
            raise DomainError("lambdas must be positive")
        counts = np.searchsorted(-v, -lam, side="left")
        best = float(np.max(lam * counts)) * Mf.cell_measure
    return best / mass


def composition_check(f: GridFunction, radii: RadiiSet = None, jobs=1, constant=8.0):
    """``(M_K f, constant * M_x(M_u f), max ratio)`` on the grid.

    The right side takes exact discrete suprema (every window width in u,
    every distance shell in x). Points where both sides vanish are skipped.
    """
    if f.n not in (1, 2):
        raise DomainError("composition_check is limited to n in {1, 2}")
    lhs = maximal(f, MaxMetric.K, radii, jobs=jobs)
    mu_f = maximal_u(f.flat(), f.u_spacing)
    rhs = constant * maximal_x(mu_f, f.x_centers(), None, jobs)
    L = lhs.flat()
    pos = rhs > 0
    if np.any(L[~pos] > 0):
        ratio = math.inf
    else:
        ratio = float(np.max(L[pos] / rhs[pos])) if np.any(pos) else 0.0
    return lhs, f.like(rhs), ratio


def phi_kernel(x, n=None):
    """``sqrt(1 - |x|^2)`` on the unit ball, normalized to integral 1.

    ``x`` is a vector (or stack of vectors along the last axis); with
    ``n=1`` plain arrays of scalars are accepted too.
    """
    x = np.asarray(x, dtype=float)
    if n is None:
        n = 1 if x.ndim == 0 else x.shape[-1]
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        r2 = x * x
    else:
        r2 = np.sum(x * x, axis=-1)
    log_norm = math.log(0.5) + log_sphere_area(n) + log_beta(0.5 * n, 1.5)
    val = np.sqrt(np.clip(1.0 - r2, 0.0, None)) * math.exp(-log_norm)
    val = np.where(r2 < 1.0, val, 0.0)
    return float(val) if val.ndim == 0 else val


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------

def spike(n, x_box, u_range, x_index, u_index, mass=1.0):
    f = GridFunction.zeros(n, x_box, u_range)
    f.values[tuple(x_index) + (u_index,)] = mass / f.cell_measure
    return f


def random_sparse(n, x_box, u_range, seed, density=0.01):
    f = GridFunction.zeros(n, x_box, u_range)
    rng = spawn_rng(seed, 0)
    mask = rng.random(f.shape) < density
    f.values[mask] = rng.exponential(1.0, size=int(mask.sum()))
    if not mask.any():
        f.values[tuple(rng.integers(0, c) for c in f.shape)] = 1.0
    return f


def u_line(n, x_box, u_range, x_index, seed=0):
    f = GridFunction.zeros(n, x_box, u_range)
    rng = spawn_rng(seed, 1)
    f.values[tuple(x_index)] = rng.exponential(1.0, size=f.shape[-1])
    return f


# ---------------------------------------------------------------------------
# Comparison with Poisson time averages
# ---------------------------------------------------------------------------

def boundary_points(g, gps, eps=1e-9, iters=80):
    """Move each ``g'`` along the segment from ``g`` until ``d_K = 1 - eps``."""
    x0, u0 = _coords(g)
    xs, us = (np.asarray(v, dtype=float) for v in gps)
    dx, du = xs - x0, us - u0

    def dk(tau):
        return invariants_arrays(x0, u0, x0 + tau[:, None] * dx, u0 + tau * du)["dK"]

    lo = np.zeros(us.size)
    hi = np.ones(us.size)
    while np.any(dk(hi) < 1.0 - eps):
        hi = np.where(dk(hi) < 1.0 - eps, 2.0 * hi, hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = dk(mid) < 1.0 - eps
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return x0 + lo[:, None] * dx, u0 + lo * du


@dataclass
class HDSReport:
    n: int
    U: float
    t: float
    samples: int
    seed: int
    ball_volume: float
    max_ratio: float
    min_efin: float
    median_ratio: float
    boundary_max_ratio: float = math.nan
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def hds_comparison(g: Point, n, U, samples, seed=0, boundary=True, cfg=None):
    """Ratio ``|B_K(g,1)|^{-1} / [(n/t) int_0^t P_h(g, g') dh]`` over sampled ``g'``.

    ``t = 1/(U sqrt n)`` and ``g'`` is uniform on ``B_K(g, 1)``. The maximum
    is the constant of the pointwise domination at this ``n``; ``boundary``
    also probes ``g'`` pushed to ``d_K = 1^-``.
    """
    from .kernels import KernelConfig, efin_values
    from .volumes import BallSpec, Metric, sample_ball, volume_BK_exact

    if n < 2:
        raise DomainError("hds_comparison needs n >= 2")
    g = g if isinstance(g, Point) else Point(*g)
    if g.n != n:
        raise DimensionMismatch(f"point has n={g.n}, expected {n}")
    cfg = cfg or KernelConfig(n)
    vol = volume_BK_exact(float(np.linalg.norm(g.xa)), n).value
    xs, us = sample_ball(BallSpec(Metric.K, g, 1.0), samples, seed)
    keep = invariants_arrays(g.xa, g.u, xs, us)["dK"] > 0
    xs, us = xs[keep], us[keep]
    E = efin_values(g, (xs, us), n, U, vol, cfg)
    ratio = 1.0 / E
    rep = HDSReport(n=n, U=float(U), t=1.0 / (U * math.sqrt(n)), samples=int(E.size), seed=seed,
                    ball_volume=vol, max_ratio=float(ratio.max()), min_efin=float(E.min()),
                    median_ratio=float(np.median(ratio)))
    if boundary:
        bx, bu = boundary_points(g, (xs, us))
        Eb = efin_values(g, (bx, bu), n, U, vol, cfg)
        rep.boundary_max_ratio = float((1.0 / Eb).max())
    return rep
