"""Discrete energies of polygons inscribed in the round circle.

The circle of length 1 has Möbius energy 4, integral Menger curvature
(2 pi)^s and ropelength 2 pi. Polygons inscribed in it approach these
values as the number of vertices grows; the Möbius energy does so at
first order, so the log-log slope of the error is close to 1.

Run with ``python3 demos/circle_convergence.py``.
"""
from knotforge.curves import Circle
from knotforge.experiments import convergence_study
from knotforge.reference import menger_smooth

circle = Circle()

print(convergence_study(circle, "moebius", [32, 64, 128, 256, 512]).table())
print()

# O(n^3) sum, so a shorter ladder
menger = convergence_study(circle, "menger", [16, 32, 64, 128], s=2)
print(menger.table())
ref = menger_smooth(circle, 2, n_max=128)
print(f"extrapolated from n = {ref.n_used}: {ref.value:.8f} (estimated error {ref.estimated_error:.2e})")
print()

# second order: the inscribed n-gon's ropelength is 2 pi / cos(pi / n)
print(convergence_study(circle, "thickness_inv", [16, 32, 64, 128, 256]).table())
