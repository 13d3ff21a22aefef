"""Points of R^n x R, pair invariants, the gauge d_K and the dilations.

Every function that takes points also accepts stacked arrays: ``x`` of shape
``(..., n)`` and ``u`` of shape ``(...)``. Scalars come back for single
pairs, arrays for batches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError, NonpositiveScale


@dataclass(frozen=True)
class Point:
    """A point ``(x, u)`` with ``x`` in R^n and ``u`` in R."""

    x: tuple
    u: float

    def __init__(self, x, u):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.ndim != 1 or x.size < 1:
            raise DomainError("x must be a nonempty vector")
        if not (np.all(np.isfinite(x)) and math.isfinite(u)):
            raise DomainError("coordinates must be finite")
        object.__setattr__(self, "x", tuple(float(v) for v in x))
        object.__setattr__(self, "u", float(u))

    @property
    def n(self):
        return len(self.x)

    @property
    def xa(self):
        return np.array(self.x)

    @classmethod
    def origin(cls, n):
        return cls(np.zeros(n), 0.0)


@dataclass(frozen=True)
class PairInvariants:
    """Scalars describing a pair of points.

    ``R2 = |x|^2 + |x'|^2``, ``s = |u - u'|``, ``a = 2 x.x' / R2`` (0 when
    ``R2 = 0``), ``DK = (R2^2 + 4 s^2)^(1/4)``, ``phi = atan2(2s, R2)`` and
    ``dK`` the gauge. ``p = |x + x'|^2`` and ``q = |x - x'|^2`` are kept as
    well because they let downstream formulas avoid ``1 +- a`` cancellations
    (``p = (1 + a) R2``, ``q = (1 - a) R2``).
    """

    R2: float
    s: float
    a: float
    dK: float
    DK: float
    phi: float
    p: float
    q: float


def _coords(g):
    if isinstance(g, Point):
        return np.array(g.x), g.u
    x, u = g
    return np.asarray(x, dtype=float), np.asarray(u, dtype=float)


def invariants_arrays(x1, u1, x2, u2):
    """Vectorized pair invariants; returns a dict of arrays."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape[-1] != x2.shape[-1]:
        raise DimensionMismatch(f"dimensions {x1.shape[-1]} and {x2.shape[-1]} differ")
    s = np.abs(np.asarray(u1, dtype=float) - np.asarray(u2, dtype=float))
    p = np.sum((x1 + x2) ** 2, axis=-1)
    q = np.sum((x1 - x2) ** 2, axis=-1)
    R2 = np.sum(x1 * x1, axis=-1) + np.sum(x2 * x2, axis=-1)
    dot2 = 0.5 * (p - q)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(R2 > 0, np.clip(dot2 / np.where(R2 > 0, R2, 1.0), -1.0, 1.0), 0.0)
    DK2 = np.hypot(R2, 2.0 * s)
    # DK^2 - R2 = 4 s^2 / (DK^2 + R2): no cancellation for nearby points
    denom = DK2 + R2
    excess = np.where(denom > 0, 4.0 * s * s / np.where(denom > 0, denom, 1.0), 0.0)
    dK = np.sqrt(q + excess)
    return {
        "R2": R2, "s": s, "a": a, "dK": dK, "DK": np.sqrt(DK2),
        "phi": np.arctan2(2.0 * s, R2), "p": p, "q": q,
    }


def pair_invariants(g, gp) -> PairInvariants:
    x1, u1 = _coords(g)
    x2, u2 = _coords(gp)
    inv = invariants_arrays(x1, u1, x2, u2)
    return PairInvariants(**{k: float(v) for k, v in inv.items()})


def d_K(g, gp):
    """The gauge ``(sqrt(R2^2 + 4 s^2) - 2 x.x')^(1/2)``.

    Accepts :class:`Point` instances or ``(x, u)`` tuples of arrays.
    """
    x1, u1 = _coords(g)
    x2, u2 = _coords(gp)
    dK = invariants_arrays(x1, u1, x2, u2)["dK"]
    return float(dK) if np.ndim(dK) == 0 else dK


def dilate(g, r):
    """``delta_r(x, u) = (r x, r^2 u)``."""
    if not r > 0:
        raise NonpositiveScale(f"dilation factor must be positive, got {r}")
    if isinstance(g, Point):
        return Point(r * np.array(g.x), r * r * g.u)
    x, u = g
    return r * np.asarray(x, dtype=float), r * r * np.asarray(u, dtype=float)


def random_points(rng, size, n, x_scale=1.0, u_scale=1.0):
    """Gaussian x and u coordinates, for sampling pairs in property checks."""
    return rng.normal(scale=x_scale, size=(size, n)), rng.normal(scale=u_scale, size=size)


def triangle_probe(rng, n, trials, x_scale=1.0, u_scale=1.0, metric=None):
    """Worst ratio ``d(g, g'') / (d(g, g') + d(g', g''))`` over random triples.

    Only reports; nothing here asserts the triangle inequality.
    """
    metric = metric or (lambda a, b: invariants_arrays(a[0], a[1], b[0], b[1])["dK"])
    g1, g2, g3 = (random_points(rng, trials, n, x_scale, u_scale) for _ in range(3))
    lhs = metric(g1, g3)
    rhs = metric(g1, g2) + metric(g2, g3)
    ratio = lhs / rhs
    i = int(np.argmax(ratio))
    return {"n": n, "trials": trials, "worst_ratio": float(ratio[i]),
            "worst_triple": [[g[0][i].tolist(), float(g[1][i])] for g in (g1, g2, g3)]}
