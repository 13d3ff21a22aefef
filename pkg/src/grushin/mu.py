"""The function mu(a; phi), its inverse, and the Carnot-Caratheodory distance.

Everything here is evaluated in the half angle ``y = phi / 2``, where

    mu(a; phi) = (1 + a)/2 * mp(y) + (1 - a)/2 * mm(y),
    mp(y) = y / cos(y)^2 + tan(y),     mm(y) = y / sin(y)^2 - cot(y),

and ``(phi/sin phi)^2 (1 - a cos phi) = (1 + a)(y/cos y)^2 + (1 - a)(y/sin y)^2``.
Multiplying through by ``R2`` turns ``(1 + a) R2`` into ``|x + x'|^2`` and
``(1 - a) R2`` into ``|x - x'|^2``, so the distance never divides by ``R2``
and never forms ``1 + a`` for nearly antipodal ``x, x'``.

Roots close to ``y = pi/2`` are solved in the variable ``pi/2 - y`` so that
``cos y`` keeps full relative precision there.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, OutOfRange
from .geometry import _coords, invariants_arrays
from .numerics import sin_minus_x_cos, sinc, solve_increasing, x_minus_sin

HALF_PI = 0.5 * math.pi
QUARTER_PI = 0.25 * math.pi
ANTIPODAL_TOL = 1e-12


def _trig(v, upper):
    """``(y, sin y, cos y)`` for the solver variable ``v``.

    Lower region: ``y = v`` in ``[0, pi/4]``. Upper region: ``v = -(pi/2 - y)``
    in ``[-pi/4, 0]``.
    """
    d = -v
    y = np.where(upper, HALF_PI - d, v)
    sy = np.where(upper, np.cos(d), np.sin(v))
    cy = np.where(upper, np.sin(d), np.cos(v))
    return y, sy, cy


def _mp(y, sy, cy):
    with np.errstate(divide="ignore", invalid="ignore"):
        return y / (cy * cy) + sy / cy


def _mm(y, sy):
    y = np.asarray(y, dtype=float)
    tiny = np.abs(y) < 1e-5
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 0.5 * x_minus_sin(2.0 * y) / (sy * sy)
    return np.where(tiny, 2.0 * y / 3.0 + 4.0 * y ** 3 / 45.0, val)


def _dmp(y, sy, cy):
    with np.errstate(divide="ignore", invalid="ignore"):
        return 2.0 * (cy + y * sy) / cy ** 3


def _dmm(y, sy):
    y = np.asarray(y, dtype=float)
    tiny = np.abs(y) < 1e-5
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 2.0 * sin_minus_x_cos(y) / sy ** 3
    return np.where(tiny, 2.0 / 3.0 + 4.0 * y * y / 15.0, val)


def _y_over_sin(y):
    return 1.0 / sinc(y)


def _weighted(w, term):
    # w * term with 0 * inf := 0 (term blows up only where its weight vanishes)
    return np.where(w > 0, w * np.where(w > 0, term, 0.0), 0.0)


def _mu_F(p, q, y, sy, cy):
    return _weighted(p, _mp(y, sy, cy)) + q * _mm(y, sy)


def _mu_dF(p, q, y, sy, cy):
    return _weighted(p, _dmp(y, sy, cy)) + q * _dmm(y, sy)


def _psi_F(p, q, y, sy, cy):
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (y / cy) ** 2
    return _weighted(p, t1) + q * _y_over_sin(y) ** 2


def _psi_dF(p, q, y, sy, cy):
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = 2.0 * (y / cy) * (cy + y * sy) / (cy * cy)
        t2 = 2.0 * _y_over_sin(y) * sin_minus_x_cos(y) / (sy * sy)
    t2 = np.where(np.abs(y) < 1e-8, 2.0 * y / 3.0, t2)
    return _weighted(p, t1) + q * t2


_KINDS = {"mu": (_mu_F, _mu_dF), "psi": (_psi_F, _psi_dF)}


def solve_half_angle(kind, p, q, target, tol=1e-15):
    """Solve ``F(y) = target`` on ``[0, pi/2)`` for the increasing functions

    * ``kind="mu"``:  ``F = p mp(y) + q mm(y)``
    * ``kind="psi"``: ``F = p (y/cos y)^2 + q (y/sin y)^2``

    with ``p, q >= 0`` and ``target >= F(0)``. Returns ``(y, sin y, cos y,
    ok)``; ``ok`` is False where ``p = 0`` and the target exceeds
    ``sup F = F(pi/2)``, in which case ``y = pi/2`` is returned.
    """
    F, dF = _KINDS[kind]
    p, q, target = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (p, q, target)))
    shape = p.shape
    p, q, target = p.ravel(), q.ravel(), target.ravel()

    f_mid = F(p, q, QUARTER_PI, math.sin(QUARTER_PI), math.cos(QUARTER_PI))
    upper = f_mid < target
    if kind == "mu":
        sup_p0 = q * HALF_PI
        with np.errstate(divide="ignore", invalid="ignore"):
            dmin = np.sqrt(p * QUARTER_PI / target)
    else:
        sup_p0 = q * HALF_PI ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            dmin = QUARTER_PI * np.sqrt(p / target)
    dmin = np.where(p > 0, np.minimum(QUARTER_PI, np.nan_to_num(dmin, nan=0.0)), 0.0)
    ok = ~((p == 0) & (target > sup_p0))
    if kind == "psi":
        # exact equality at the pi/2 limit is also unattainable for y < pi/2
        ok &= ~((p == 0) & (target >= sup_p0) & upper)

    lo = np.where(upper, -QUARTER_PI, 0.0)
    hi = np.where(upper, -dmin, QUARTER_PI)
    # p == 0 and target == sup: root sits exactly at y = pi/2
    at_top = upper & (p == 0) & (target == sup_p0)

    solve = ok & ~at_top
    v = np.where(upper, 0.0, QUARTER_PI)
    if np.any(solve):
        up, ps, qs = upper[solve], p[solve], q[solve]
        v[solve] = solve_increasing(
            lambda vv, i: F(ps[i], qs[i], *_trig(vv, up[i])),
            target[solve], lo[solve], hi[solve],
            fprime=lambda vv, i: dF(ps[i], qs[i], *_trig(vv, up[i])),
            tol=tol,
        )
    y, sy, cy = _trig(v, upper)
    y = np.where(ok, y, HALF_PI)
    sy = np.where(ok, sy, 1.0)
    cy = np.where(ok, cy, 0.0)
    return y.reshape(shape), sy.reshape(shape), cy.reshape(shape), ok.reshape(shape)


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def _check_a(a):
    a = np.asarray(a, dtype=float)
    if np.any(np.abs(a) > 1.0) or not np.all(np.isfinite(a)):
        raise DomainError("a must lie in [-1, 1]")
    return a


def _check_phi(phi):
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.abs(phi) < math.pi):
        raise DomainError("|phi| must be < pi")
    return phi


def mu(a, phi):
    """``mu(a; phi)``, odd in ``phi``; vectorized over ``a`` and ``phi``."""
    a, phi = np.broadcast_arrays(_check_a(a), _check_phi(phi))
    y = 0.5 * np.abs(phi)
    sy, cy = np.sin(y), np.cos(y)
    val = 0.5 * _mu_F(1.0 + a, 1.0 - a, y, sy, cy)
    return _scalar(np.sign(phi) * val)


def mu_prime(a, phi):
    """Derivative of ``mu(a; .)`` in ``phi``; even in ``phi``."""
    a, phi = np.broadcast_arrays(_check_a(a), _check_phi(phi))
    y = 0.5 * np.abs(phi)
    sy, cy = np.sin(y), np.cos(y)
    return _scalar(0.25 * _mu_dF(1.0 + a, 1.0 - a, y, sy, cy))


def mu_inverse(a, m):
    """The ``phi`` in ``(-pi, pi)`` with ``mu(a; phi) = m``.

    For ``a = -1`` the range of ``mu`` is ``(-pi/2, pi/2)``; targets outside
    it raise :class:`OutOfRange`.
    """
    a, m = np.broadcast_arrays(_check_a(a), np.asarray(m, dtype=float))
    if not np.all(np.isfinite(m)):
        raise DomainError("m must be finite")
    if np.any((a == -1.0) & (np.abs(m) >= HALF_PI)):
        raise OutOfRange("mu(-1; .) only takes values in (-pi/2, pi/2)")
    y, _, _, ok = solve_half_angle("mu", 1.0 + a, 1.0 - a, 2.0 * np.abs(m))
    if not np.all(ok):  # pragma: no cover - excluded above
        raise OutOfRange("target outside the range of mu")
    return _scalar(np.sign(m) * 2.0 * y)


def d_CC_arrays(x1, u1, x2, u2, antipodal_tol=ANTIPODAL_TOL):
    """Vectorized Carnot-Caratheodory distance for stacked coordinates."""
    inv = invariants_arrays(x1, u1, x2, u2)
    p, q, s = inv["p"], inv["q"], inv["s"]
    # relative band, so the dispatch commutes with dilations and with swapping the points
    scale = np.linalg.norm(np.asarray(x1, dtype=float), axis=-1) + np.linalg.norm(np.asarray(x2, dtype=float), axis=-1)
    special = (np.sqrt(p) <= antipodal_tol * scale) & (4.0 * s >= math.pi * inv["R2"])
    p_gen = np.where(special, 1.0, p)
    q_gen = np.where(special, 0.0, q)
    t_gen = np.where(special, 0.0, 4.0 * s)
    y, sy, cy, ok = solve_half_angle("mu", p_gen, q_gen, t_gen)
    if np.any(~ok & ~special):
        raise OutOfRange("case dispatch left an unattainable target")
    with np.errstate(divide="ignore", invalid="ignore"):
        d2 = _weighted(p_gen, (y / cy) ** 2) + q_gen * _y_over_sin(y) ** 2
    d = np.where(special, np.sqrt(2.0 * math.pi * s), np.sqrt(d2))
    return d


def d_CC(g, gp, antipodal_tol=ANTIPODAL_TOL):
    """Carnot-Caratheodory distance between ``g`` and ``gp``.

    Accepts :class:`~grushin.geometry.Point` instances or ``(x, u)`` tuples of
    stacked arrays.
    """
    x1, u1 = _coords(g)
    x2, u2 = _coords(gp)
    return _scalar(d_CC_arrays(x1, u1, x2, u2, antipodal_tol))
