"""Heat, Green and Poisson kernels of the Grushin operator.

Every kernel depends on a pair only through ``R2``, ``q = |x - x'|^2``,
``s``, ``dK``, ``DK`` and ``phi``, so all functions accept a single pair
(``Point`` or ``(x, u)`` tuples) or stacked arrays of pairs and integrate all
of them on a shared adaptive partition.

Two identities are used throughout:

* ``R2 (lam coth lam - a lam / sinh lam) = R2 lam tanh(lam/2) + q lam / sinh lam``,
  which is free of cancellation near ``lam = 0``;
* after moving the Poisson integral to the line ``Im lam = phi``,
  ``P_h = C h int S^{3/2} [h^2 S + dK^2 + 2 DK^2 sinh^2(lam/2)]^{-(n+3)/2}``
  with ``S = sinh(lam + i phi)/(lam + i phi)`` and
  ``C = Gamma(n/2 + 3/2) / pi^{n/2 + 3/2}``. The bracket does not vanish for
  any ``h >= 0``, which also gives closed forms for time integrals of ``P_h``.

Large-``n`` constants are assembled as logarithms and the scale
``dK^{-(Q+1)}`` is factored out of the integrands.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BranchCutViolation, DomainError, SingularPoint, ToleranceNotMet
from .geometry import Point, _coords, invariants_arrays
from .numerics import EstimateWithError, QuadratureSpec, integrate_1d, log_beta, log_gamma

logger = logging.getLogger(__name__)

LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class KernelConfig:
    """Dimension and quadrature settings for kernel evaluations.

    ``quad.truncation`` is the half-width of the ``lambda`` window. Every
    integrand decays at least like ``exp(-n |lambda| / 2)``, so the default of
    60 leaves a tail below ``e^{-30}`` of the peak for ``n = 1``.
    """

    n: int
    quad: QuadratureSpec = field(default_factory=lambda: QuadratureSpec(rel_tol=1e-10))
    log_space: bool = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")

    @property
    def Q(self):
        return self.n + 2


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _pairs(g, gp):
    x1, u1 = _coords(g)
    x2, u2 = _coords(gp)
    inv = invariants_arrays(x1, u1, x2, u2)
    scalar = np.ndim(inv["dK"]) == 0
    return {k: np.atleast_1d(v).astype(float) for k, v in inv.items()}, scalar


def _ret(values, scalar):
    values = np.asarray(values, dtype=float)
    return float(values[0]) if scalar else values


def _log_l_over_sinh(lam):
    """``log(lam / sinh lam)`` for real ``lam``."""
    a = np.abs(lam)
    small = a < 1e-4
    big = np.where(small, 1.0, a)
    val = np.log(big) - big + math.log(2.0) - np.log1p(-np.exp(-2.0 * big))
    return np.where(small, -a * a / 6.0, val)


def _sinhc(z):
    """``sinh(z)/z`` for complex ``z``."""
    small = np.abs(z) < 1e-4
    zs = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z * z / 6.0, np.sinh(zs) / zs)


def _integrate(f, lo, hi, spec, points=None, floor=None):
    est = integrate_1d(f, lo, hi, spec, points=points, floor=floor)
    if not est.converged:
        raise ToleranceNotMet(f"kernel quadrature did not converge on [{lo}, {hi}]", est)
    return est


def _conj_symmetric(w, T, spec, imag=False):
    """``int_{-T}^{T} w`` for an integrand with ``w(-lam) = conj(w(lam))``.

    The value is twice the integral of ``Re w`` over ``[0, T]``. With
    ``imag=True`` the imaginary part over the full window is also computed
    (it vanishes analytically) with an absolute tolerance tied to the real
    value; it is returned as a consistency residue.
    """
    est = _integrate(lambda lam: w(lam).real, 0.0, T, spec)
    est = EstimateWithError(2.0 * np.asarray(est.value), 2.0 * np.asarray(est.error), est.samples,
                            converged=est.converged, method=est.method, extra=est.extra)
    if not imag:
        return est, None
    scale = float(np.min(np.abs(est.value)))
    ispec = QuadratureSpec(truncation=spec.truncation, max_refinements=spec.max_refinements,
                           rel_tol=spec.rel_tol, abs_tol=max(spec.abs_tol, spec.rel_tol * scale),
                           max_panels=spec.max_panels)
    im = integrate_1d(lambda lam: w(lam).imag, -T, T, ispec, points=[0.0])
    return est, np.asarray(im.value)


def _log_C(n):
    return log_gamma(0.5 * n + 1.5) - (0.5 * n + 1.5) * LOG_PI


def _finish(log_scale, est, scalar, full, method, extra=None):
    raw = np.real(np.asarray(est.value))
    value = np.exp(log_scale) * raw
    if not full:
        return _ret(value, scalar)
    error = np.exp(log_scale) * np.asarray(est.error)
    extra = dict(extra or {})
    with np.errstate(divide="ignore", invalid="ignore"):
        extra["log_value"] = _ret(log_scale + np.log(raw), scalar)
    return EstimateWithError(_ret(value, scalar), _ret(error, scalar), est.samples, method=method,
                             converged=est.converged, extra=extra)


def log_ratio(num: EstimateWithError, den: EstimateWithError):
    """``num / den`` through their ``log_value`` entries (safe when both underflow)."""
    return np.exp(np.asarray(num.extra["log_value"]) - np.asarray(den.extra["log_value"]))


# ---------------------------------------------------------------------------
# Heat kernel
# ---------------------------------------------------------------------------

def _heat_core(R2, q, s, h, n, spec):
    """``p_h`` for flat arrays of invariants and times (all broadcast)."""
    R2, q, s, h = (np.ravel(v).astype(float) for v in np.broadcast_arrays(R2, q, s, h))
    s1 = R2 / (4.0 * h)
    q4 = q / (4.0 * h)
    s3 = s / (4.0 * h)

    def f(lam):
        lam = lam[None, :]
        logL = _log_l_over_sinh(lam)
        expo = 0.5 * n * logL - s1[:, None] * lam * np.tanh(0.5 * lam) - q4[:, None] * np.exp(logL)
        return np.exp(expo) * np.cos(2.0 * lam * s3[:, None])

    # |value| can sit far below the integrand size; settle for roundoff there
    floor = 1e-12 * 0.5 * _heat_mass_lambda_integral(n, spec)
    est = _integrate(f, 0.0, spec.truncation, spec, floor=floor)
    log_pref = math.log(2.0) - (0.5 * n + 1.0) * np.log(4.0 * math.pi * h)
    return np.exp(log_pref) * np.asarray(est.value), np.exp(log_pref) * np.asarray(est.error), est


def heat_kernel(g, gp, h, cfg: KernelConfig, full=False):
    """``p_h(g, g')``, the integral kernel of ``exp(h Delta_G)``.

    The ``lambda`` integrand is conjugate-symmetric, so twice the integral of
    its real part over ``[0, truncation]`` is taken.
    """
    if not np.all(np.asarray(h) > 0):
        raise DomainError("h must be positive")
    inv, scalar = _pairs(g, gp)
    val, err, est = _heat_core(inv["R2"], inv["q"], inv["s"], h, cfg.n, cfg.quad)
    if not full:
        return _ret(val, scalar and np.ndim(h) == 0)
    return EstimateWithError(_ret(val, scalar), _ret(err, scalar), est.samples, method="heat-direct")


def heat_origin_oracle(s, h, n, nodes=200001, lam_max=60.0):
    """Independent check of ``p_h((0,0), (0,s))`` by a plain trapezoid rule."""
    lam = np.linspace(0.0, lam_max, nodes)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(lam == 0, 1.0, lam / np.sinh(np.where(lam == 0, 1.0, lam)))
    vals = ratio ** (0.5 * n) * np.cos(2.0 * lam * s / (4.0 * h))
    return 2.0 * np.trapezoid(vals, lam) * (4.0 * math.pi * h) ** (-0.5 * n - 1.0)


@functools.lru_cache(maxsize=64)
def _heat_mass_lambda_integral(n, spec):
    # K0 = int_R (lam / sinh lam)^{n/2}; large-time limit of (4 pi h)^{n/2+1} p_h
    est = _integrate(lambda lam: np.exp(0.5 * n * _log_l_over_sinh(lam)), 0.0, spec.truncation, spec)
    return 2.0 * est.value


def heat_mass(x0, h, cfg: KernelConfig, nx=24, ns=10, chunk=4096):
    """``int p_h((x0, 0), g') dg'`` for ``n = 1`` on a tensor Gauss-Legendre grid.

    ``x'`` runs over ``x0 +- 12 sqrt(h)`` (two panels of ``nx`` nodes) and
    ``s = |u'|`` over ``[0, S]`` (eight geometric panels of ``ns`` nodes),
    with ``S`` covering both the decay ``exp(-pi s / 4h)`` at ``x' = 0`` and
    the Gaussian decay in ``s / |x'|``.
    """
    if cfg.n != 1:
        raise DomainError("heat_mass is implemented for n = 1")
    L = 12.0 * math.sqrt(h)
    S = 60.0 * h + 12.0 * (abs(x0) + L) * math.sqrt(h)
    gx, wx = np.polynomial.legendre.leggauss(nx)
    gs, ws = np.polynomial.legendre.leggauss(ns)
    xs = np.concatenate([x0 - L + 0.5 * L * (gx + 1.0), x0 + 0.5 * L * (gx + 1.0)])
    wxs = np.concatenate([0.5 * L * wx, 0.5 * L * wx])
    edges = np.concatenate([[0.0], S * np.geomspace(1e-3, 1.0, 8)])
    ss = np.concatenate([0.5 * (a + b) + 0.5 * (b - a) * gs for a, b in zip(edges[:-1], edges[1:])])
    wss = np.concatenate([0.5 * (b - a) * ws for a, b in zip(edges[:-1], edges[1:])])
    X, Sg = np.meshgrid(xs, ss, indexing="ij")
    W = np.outer(wxs, wss)
    R2 = x0 * x0 + X.ravel() ** 2
    q = (X.ravel() - x0) ** 2
    total = 0.0
    flatW = W.ravel()
    spec = QuadratureSpec(rel_tol=1e-9)
    for i in range(0, R2.size, chunk):
        sl = slice(i, i + chunk)
        val, _, _ = _heat_core(R2[sl], q[sl], Sg.ravel()[sl], h, 1, spec)
        total += float(np.sum(val * flatW[sl]))
    return 2.0 * total


# ---------------------------------------------------------------------------
# Green function
# ---------------------------------------------------------------------------

def green_Y(n, b, spec=None):
    """``Y = int_0^inf (1 + b sinh^2 lam)^{-n/2} d lam`` for ``b >= 1``.

    Evaluated after ``sinh lam = tan(beta) / sqrt(b)``, which maps it to
    ``int_0^{pi/2} cos^{n-1}(beta) / sqrt(b cos^2 beta + sin^2 beta) d beta``.
    """
    spec = spec or QuadratureSpec(rel_tol=1e-12)
    b = np.atleast_1d(np.asarray(b, dtype=float))

    def f(beta):
        c = np.cos(beta)[None, :]
        sn = np.sin(beta)[None, :]
        return c ** (n - 1) / np.sqrt(b[:, None] * c * c + sn * sn)

    knee = [float(np.arctan(np.sqrt(bb))) for bb in np.unique(b)][:16]
    est = _integrate(f, 0.0, 0.5 * math.pi, spec, points=knee)
    return est


def green_function(g, gp, cfg: KernelConfig, full=False):
    """``(Gamma(n/2) / pi^{n/2+1}) dK^{-n} Y`` with ``b = 2 DK^2 / dK^2``."""
    inv, scalar = _pairs(g, gp)
    dK, DK = inv["dK"], inv["DK"]
    if np.any(dK == 0):
        raise SingularPoint("the Green function is singular on the diagonal")
    n = cfg.n
    b = 2.0 * (DK / dK) ** 2
    est = green_Y(n, b, cfg.quad)
    log_scale = math.lgamma(0.5 * n) - (0.5 * n + 1.0) * LOG_PI - n * np.log(dK)
    return _finish(log_scale, est, scalar, full, "green-Y", {"Y": _ret(est.value, scalar)})


def green_comparison_ratio(n, b, spec=None):
    """Green function over ``Gamma(n/2)/(4 pi^{n/2+1}) dK^{-n} n^{-1/2} dK/DK``.

    Depends only on ``n`` and ``b = 2 DK^2/dK^2``: it equals ``2 sqrt(2 n b) Y``.
    """
    b = np.asarray(b, dtype=float)
    Y = np.asarray(green_Y(n, b, spec).value).reshape(b.shape)
    out = 2.0 * np.sqrt(2.0 * n * b) * Y
    return float(out) if out.ndim == 0 else out


def green_Y_scaled(n, b, spec=None):
    """``Y sqrt(n) DK / dK = Y sqrt(n b / 2)``."""
    b = np.asarray(b, dtype=float)
    Y = np.asarray(green_Y(n, b, spec).value).reshape(b.shape)
    out = Y * np.sqrt(0.5 * n * b)
    return float(out) if out.ndim == 0 else out


def green_from_heat(g, gp, cfg: KernelConfig, t_max_factor=1e4, full=False):
    """``int_0^inf p_h dh`` by quadrature in ``log h``.

    Times below ``dK^2/200`` are dropped (the kernel is smaller than
    ``exp(-50)`` there relative to its peak) and the range above
    ``T = t_max_factor * max(1, dK^2)`` is replaced by its large-time limit
    ``(4 pi)^{-n/2-1} K0 T^{-n/2} / (n/2)``.
    """
    inv, scalar = _pairs(g, gp)
    n = cfg.n
    dK2 = inv["dK"] ** 2
    if np.any(dK2 == 0):
        raise SingularPoint("the Green function is singular on the diagonal")
    lo = float(np.log(dK2.min() / 200.0))
    T = t_max_factor * max(1.0, float(dK2.max()))
    hi = math.log(T)
    P = inv["R2"].size
    inner = QuadratureSpec(rel_tol=1e-9, max_panels=4000)

    def f(tau):
        h = np.exp(tau)
        R2 = np.repeat(inv["R2"], h.size)
        q = np.repeat(inv["q"], h.size)
        s = np.repeat(inv["s"], h.size)
        hh = np.tile(h, P)
        val, _, _ = _heat_core(R2, q, s, hh, n, inner)
        return val.reshape(P, h.size) * h[None, :]

    est = _integrate(f, lo, hi, QuadratureSpec(rel_tol=1e-7, max_panels=2000))
    K0 = _heat_mass_lambda_integral(n, inner)
    tail = (4.0 * math.pi) ** (-0.5 * n - 1.0) * K0 * T ** (-0.5 * n) / (0.5 * n)
    value = np.asarray(est.value) + tail
    if not full:
        return _ret(value, scalar)
    return EstimateWithError(_ret(value, scalar), _ret(np.asarray(est.error) + 0.01 * tail, scalar),
                             est.samples, method="heat-time-integral", extra={"tail": tail})


# ---------------------------------------------------------------------------
# Poisson kernel
# ---------------------------------------------------------------------------

def _check_distinct(inv):
    if np.any(inv["dK"] == 0):
        raise SingularPoint("g and g' coincide")


def poisson_kernel(g, gp, cfg: KernelConfig, h=1.0, full=False):
    """``P_h(g, g')`` from the real-axis integral

    ``C h int (lam/sinh lam)^{n/2} [h^2 + R2 lam tanh(lam/2) + q lam/sinh lam - 2 i s lam]^{-(n+3)/2}``.

    With ``full`` the (analytically zero) imaginary part over ``[-T, T]`` is
    reported in ``extra['imag']``.
    """
    if not h > 0:
        raise DomainError("h must be positive")
    inv, scalar = _pairs(g, gp)
    _check_distinct(inv)
    n = cfg.n
    m = 0.5 * n + 1.5
    R2, q, s, dK = inv["R2"], inv["q"], inv["s"], inv["dK"]
    log_d2 = 2.0 * np.log(dK)

    def f(lam):
        lam = lam[None, :]
        logL = _log_l_over_sinh(lam)
        Z = h * h + R2[:, None] * lam * np.tanh(0.5 * lam) + q[:, None] * np.exp(logL) \
            - 2j * s[:, None] * lam
        logw = 0.5 * n * logL - m * (np.log(Z) - log_d2[:, None])
        return np.exp(logw)

    est, im = _conj_symmetric(f, cfg.quad.truncation, cfg.quad, imag=full)
    log_scale = _log_C(n) + math.log(h) - (n + 3) * np.log(dK)
    extra = {} if im is None else {"imag": _ret(np.exp(log_scale) * im, scalar)}
    return _finish(log_scale, est, scalar, full, "poisson-direct", extra)


def _shifted_terms(lam, phi):
    z = lam[None, :] + 1j * phi[:, None]
    S = _sinhc(z)
    if np.any(S.real <= 0):
        raise BranchCutViolation("Re sinh(z)/z <= 0 on the shifted contour")
    return S


def poisson_kernel_shifted(g, gp, cfg: KernelConfig, h=1.0, full=False):
    """``P_h(g, g')`` on the line ``Im lam = phi``:

    ``C h dK^{-(Q+1)} int S^{3/2} [1 + b sinh^2(lam/2) + h^2 S / dK^2]^{-(n+3)/2}``
    with ``b = 2 DK^2 / dK^2``. Powers use the principal branch; both bases
    are checked to have positive real part, otherwise
    :class:`BranchCutViolation` is raised.
    """
    if not h > 0:
        raise DomainError("h must be positive")
    inv, scalar = _pairs(g, gp)
    _check_distinct(inv)
    n = cfg.n
    m = 0.5 * n + 1.5
    dK, DK, phi = inv["dK"], inv["DK"], inv["phi"]
    b = 2.0 * (DK / dK) ** 2
    c = h * h / dK ** 2

    def f(lam):
        S = _shifted_terms(lam, phi)
        base = 1.0 + b[:, None] * np.sinh(0.5 * lam)[None, :] ** 2 + c[:, None] * S
        if np.any(base.real <= 0):
            raise BranchCutViolation("bracket left the right half-plane")
        return np.exp(1.5 * np.log(S) - m * np.log(base))

    est, im = _conj_symmetric(f, cfg.quad.truncation, cfg.quad, imag=full)
    log_scale = _log_C(n) + math.log(h) - (n + 3) * np.log(dK)
    extra = {} if im is None else {"imag": _ret(np.exp(log_scale) * im, scalar)}
    return _finish(log_scale, est, scalar, full, "poisson-shifted", extra)


def poisson_asymptotic(g, gp, cfg: KernelConfig, full=False):
    """Large-distance main term

    ``(sin phi / phi)^{3/2} C sqrt(2) (dK/DK) B(n/2 + 1, 1/2) dK^{-(Q+1)}``.
    """
    inv, scalar = _pairs(g, gp)
    _check_distinct(inv)
    n = cfg.n
    phi = inv["phi"]
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(phi == 0, 1.0, np.sin(phi) / np.where(phi == 0, 1.0, phi))
    logv = (1.5 * np.log(sinc) + _log_C(n) + 0.5 * math.log(2.0) + np.log(inv["dK"] / inv["DK"])
            + log_beta(0.5 * n + 1.0, 0.5) - (cfg.Q + 1) * np.log(inv["dK"]))
    value = np.exp(logv)
    if not full:
        return _ret(value, scalar)
    return EstimateWithError(_ret(value, scalar), 0.0, 0, method="poisson-asymptotic",
                             extra={"log_value": _ret(logv, scalar)})


def poisson_scaled(g, gp, h, cfg: KernelConfig, shifted=True):
    """``h^{-Q} P(delta_{1/h} g, delta_{1/h} g')``."""
    x1, u1 = _coords(g)
    x2, u2 = _coords(gp)
    kern = poisson_kernel_shifted if shifted else poisson_kernel
    return h ** (-cfg.Q) * kern((x1 / h, u1 / h ** 2), (x2 / h, u2 / h ** 2), cfg)


def poisson_subordinated(g, gp, cfg: KernelConfig, t_max_factor=1e4, full=False):
    """``(1 / 2 sqrt(pi)) int_0^inf t^{-3/2} exp(-1/4t) p_t dt`` in ``log t``.

    The range beyond ``T`` is replaced by the large-time limit of ``p_t``.
    """
    inv, scalar = _pairs(g, gp)
    n = cfg.n
    T = t_max_factor * max(1.0, float(inv["dK"].max() ** 2))
    lo, hi = math.log(1.0 / 240.0), math.log(T)
    P = inv["R2"].size
    inner = QuadratureSpec(rel_tol=1e-9, max_panels=4000)

    def f(tau):
        t = np.exp(tau)
        val, _, _ = _heat_core(np.repeat(inv["R2"], t.size), np.repeat(inv["q"], t.size),
                               np.repeat(inv["s"], t.size), np.tile(t, P), n, inner)
        return val.reshape(P, t.size) * (t ** -0.5 * np.exp(-0.25 / t))[None, :]

    est = _integrate(f, lo, hi, QuadratureSpec(rel_tol=1e-7, max_panels=2000))
    K0 = _heat_mass_lambda_integral(n, inner)
    tail = (4.0 * math.pi) ** (-0.5 * n - 1.0) * K0 * T ** (-0.5 * n - 0.5) / (0.5 * n + 0.5)
    value = (np.asarray(est.value) + tail) / (2.0 * math.sqrt(math.pi))
    if not full:
        return _ret(value, scalar)
    return EstimateWithError(_ret(value, scalar), _ret(np.asarray(est.error), scalar), est.samples,
                             method="poisson-subordinated", extra={"tail": tail})


# ---------------------------------------------------------------------------
# Time integrals of P_h
# ---------------------------------------------------------------------------

def _one_minus_pow(w, k):
    """``1 - (1 + w)^{-k}`` for complex ``w`` with ``Re w > 0``, accurate for small ``|w|``."""
    small = np.abs(w) < 1e-4
    ws = np.where(small, w, 0.0)
    series = k * ws * (1.0 - (k + 1) / 2.0 * ws * (1.0 - (k + 2) / 3.0 * ws * (1.0 - (k + 3) / 4.0 * ws)))
    wl = np.where(small, 1.0, w)
    return np.where(small, series, 1.0 - np.exp(-k * np.log1p(wl)))


def _time_integral(inv, T, n, spec, imag=False):
    """``int_0^T P_h dh`` (``T = inf`` allowed) via the shifted closed form.

    With ``k = (n + 1)/2`` and ``B = dK^2 (1 + b sinh^2(lam/2))``,
    ``int_0^T h [h^2 S + B]^{-k-1} dh = (B^{-k} - (T^2 S + B)^{-k}) / (2 k S)``.
    Returns ``(log_scale, estimate)`` so that the value is
    ``exp(log_scale) * estimate.value``.
    """
    k = 0.5 * (n + 1)
    dK, DK, phi = inv["dK"], inv["DK"], inv["phi"]
    b = 2.0 * (DK / dK) ** 2
    T = np.broadcast_to(np.asarray(T, dtype=float), dK.shape)
    c = np.where(np.isfinite(T), T * T, 0.0) / dK ** 2
    finite = np.isfinite(T)

    def f(lam):
        S = _shifted_terms(lam, phi)
        Bt = 1.0 + b[:, None] * np.sinh(0.5 * lam)[None, :] ** 2
        diff = np.where(finite[:, None], _one_minus_pow(c[:, None] * S / Bt, k), 1.0)
        return np.sqrt(S) * Bt ** (-k) * diff

    est, im = _conj_symmetric(f, spec.truncation, spec, imag=imag)
    log_scale = _log_C(n) - math.log(n + 1.0) - (n + 1) * np.log(dK)
    return log_scale, est, im


def poisson_time_average(g, gp, t, cfg: KernelConfig, full=False):
    """``(1/t) int_0^t P_h(g, g') dh``."""
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    inv, scalar = _pairs(g, gp)
    _check_distinct(inv)
    log_scale, est, im = _time_integral(inv, t, cfg.n, cfg.quad, imag=full)
    extra = {} if im is None else {"imag": _ret(np.exp(log_scale) * im, scalar)}
    return _finish(log_scale - math.log(t), est, scalar, full, "poisson-time-average", extra)


def half_inverse(g, gp, cfg: KernelConfig):
    """``(-Delta)^{-1/2}(g, g') = int_0^inf P_h dh``."""
    inv, scalar = _pairs(g, gp)
    _check_distinct(inv)
    log_scale, est, _ = _time_integral(inv, np.inf, cfg.n, cfg.quad)
    return _ret(np.exp(log_scale) * np.asarray(est.value), scalar)


def a3_probe(g, gp, c, cfg: KernelConfig):
    """Share of ``(-Delta)^{-1/2}(g, g')`` carried by times below ``c dK / sqrt(n)``.

    This is ``[(-Delta)^{-1/2} - (-Delta)^{-1/2} e^{-h sqrt(-Delta)}](g, g')``
    at ``h = c dK/sqrt(n)``, divided by ``(-Delta)^{-1/2}(g, g')``.
    """
    inv, scalar = _pairs(g, gp)
    _check_distinct(inv)
    h = c * inv["dK"] / math.sqrt(cfg.n)
    _, part, _ = _time_integral(inv, h, cfg.n, cfg.quad)
    _, whole, _ = _time_integral(inv, np.inf, cfg.n, cfg.quad)
    return _ret(np.asarray(part.value) / np.asarray(whole.value), scalar)


def efin_values(g, gps, n, U, ball_volume, cfg: KernelConfig = None):
    """``n t^{-1} int_0^t P_h(g, g') dh * |B_K(g, 1)|`` with ``t = 1/(U sqrt n)`` for each ``g'``."""
    cfg = cfg or KernelConfig(n)
    t = 1.0 / (U * math.sqrt(n))
    x0, u0 = _coords(g)
    xs, us = gps
    avg = poisson_time_average((np.broadcast_to(x0, np.shape(xs)), np.broadcast_to(u0, np.shape(us))),
                               (xs, us), t, cfg)
    return n * np.atleast_1d(avg) * ball_volume


KERNEL_CSV_FIELDS = ("kernel", "n", "|x|", "|x'|", "a", "s", "method", "value", "error")


def kernel_row(kernel, n, g, gp, method, value, error=0.0):
    x1, u1 = _coords(g)
    x2, u2 = _coords(gp)
    inv = invariants_arrays(x1, u1, x2, u2)
    return {"kernel": kernel, "n": n, "|x|": float(np.linalg.norm(x1)),
            "|x'|": float(np.linalg.norm(x2)), "a": float(inv["a"]), "s": float(inv["s"]),
            "method": method, "value": float(value), "error": float(error)}
