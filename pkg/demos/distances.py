"""How far apart are two points of R^n x R?

Two answers are compared: the closed-form gauge d_K and the
Carnot-Caratheodory distance d_CC, which needs an inversion of mu.

    python demos/distances.py
"""
import math

import numpy as np

from grushin import Point, d_CC, d_K, mu, mu_inverse
from grushin.geometry import invariants_arrays
from grushin.mu import d_CC_arrays

rng = np.random.default_rng(1)

print("Points on the axis x = 0 only move in u, and there d_CC = sqrt(2 pi |u - u'|):")
g, gp = Point([0.0, 0.0], 0.0), Point([0.0, 0.0], 2.0)
print(f"  d_CC = {d_CC(g, gp):.12f}   sqrt(4 pi) = {math.sqrt(4 * math.pi):.12f}")
print(f"  d_K  = {d_K(g, gp):.12f}   (smaller, as it always is)\n")

print("At equal height both distances reduce to |x - x'|:")
g, gp = Point([1.0, 2.0], 0.5), Point([-1.0, 0.0], 0.5)
print(f"  d_CC = {d_CC(g, gp):.12f}   |x - x'| = {math.hypot(2, 2):.12f}   d_K = {d_K(g, gp):.6f}\n")

print("mu(a; .) is increasing, so its inverse is a bracketed root solve:")
for a, m in [(1.0, 0.5), (0.0, 3.0), (-1.0, 1.5)]:
    phi = mu_inverse(a, m)
    print(f"  a={a:+.1f} m={m:.2f} -> phi={phi:.12f}, mu(a; phi)={mu(a, phi):.12f}")
print()

print("The ratio d_CC / d_K over random pairs stays bounded in every dimension:")
for n in (1, 2, 5, 10, 50):
    x1, x2 = rng.normal(size=(20000, n)), rng.normal(size=(20000, n))
    u1, u2 = rng.normal(size=20000) * 3, rng.normal(size=20000) * 3
    x2[:1000] = -x1[:1000]
    r = d_CC_arrays(x1, u1, x2, u2) / invariants_arrays(x1, u1, x2, u2)["dK"]
    print(f"  n={n:3d}: min {r.min():.4f}  max {r.max():.4f}")
print("The maximum creeps up to sqrt(pi) = %.4f, reached on antipodal pairs high above each other." % math.sqrt(math.pi))
