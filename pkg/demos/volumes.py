"""Volumes of the unit balls for d_K and d_CC.

The K ball has an explicit description; its volume reduces to a two
variable integral. The CC ball needs the geodesic parameter theta_0 at each
point of the integration domain. Monte Carlo sampling checks both.

    python demos/volumes.py
"""
import numpy as np

from grushin import BallSpec, Point, volume_BCC_exact, volume_BK_exact, volume_monte_carlo
from grushin.volumes import volume_bounds

print(" n   |x|     |B_K|        bracket [UB/8, UB]          |B_CC|/|B_K|")
for n in (1, 2, 3, 5):
    for xn in (0.0, 1.0, 5.0):
        bk = volume_BK_exact(xn, n).value
        lo, hi = volume_bounds(xn, n)
        frac = volume_BCC_exact(xn, n).value / bk
        print(f"{n:2d}  {xn:4.1f}  {bk:11.6f}   [{lo:10.5f}, {hi:10.5f}]   {frac:.4f}")

print("\nScaling: |B(g, r)| = r^(n+2) |B(delta_(1/r) g, 1)|, checked against a direct integral at radius r.")
for r in (0.5, 3.0):
    a = volume_BK_exact(1.0, 2, r, method="direct").value
    b = volume_BK_exact(1.0, 2, r).value
    print(f"  r={r}: direct {a:.10f}  via scaling {b:.10f}")

print("\nRejection sampling from a box around the ball (one million points, seed 7):")
x = np.array([1.0, 0.0])
mc = volume_monte_carlo(BallSpec("K", Point(x, 0.0), 1.0), 1_000_000, seed=7, also_cc=True)
env, N = mc.extra["envelope_volume"], mc.samples
print(f"  K : {mc.value:.5f} +- {mc.error:.5f}   exact {volume_BK_exact(1.0, 2).value:.5f}")
cc = mc.extra["hits_CC"] / N * env
print(f"  CC: {cc:.5f}                exact {volume_BCC_exact(1.0, 2).value:.5f}")
print(f"  CC samples outside the K ball: {mc.extra['cc_outside_k']}")
