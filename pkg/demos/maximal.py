"""Maximal functions on a grid.

A single spike shows the shape of M_K f; random sparse functions test the
bound of M_K by eight times an x-average of u-maximal functions; the weak
type ratio is measured for spikes in n = 1, 2, 3.

    python demos/maximal.py
"""
import numpy as np

from grushin import maximal_ops as mx
from grushin.geometry import Point
from grushin.suites import GRIDS

box, ur = GRIDS[1]
f = mx.spike(1, box, ur, (36,), 24)
Mf = mx.maximal(f, "K")
print("M_K of a spike along the row through it (n = 1):")
row = Mf.values[:, 24]
print("  " + " ".join(f"{v:.2f}" for v in row[::4]))

print("\nComposition bound, max of M_K f / (8 M_x M_u f) over random sparse f:")
for n in (1, 2):
    box, ur = GRIDS[n]
    worst = max(mx.composition_check(mx.random_sparse(n, box, ur, seed=k, density=0.02))[2] for k in range(5))
    print(f"  n={n}: {worst:.4f}")

print("\nWeak type ratio lambda |{Mf > lambda}| / ||f||_1 for centered spikes:")
for n in (1, 2, 3):
    box, ur = GRIDS[n]
    shape = tuple(c for _, _, c in box)
    f = mx.spike(n, box, ur, tuple(c // 2 for c in shape), ur[2] // 2)
    print(f"  n={n}: {mx.weak_type_ratio(mx.maximal(f, 'K'), f):.4f}")

print("\nPointwise domination by Poisson time averages at U = 10:")
for n in (5, 10):
    x = np.zeros(n)
    x[0] = 0.5
    rep = mx.hds_comparison(Point(x, 0.0), n, 10.0, 100, seed=0)
    print(f"  n={n:2d}: worst ratio {rep.max_ratio:.2f}, at the ball boundary {rep.boundary_max_ratio:.2f}")
