"""The explicit bound for the minimum distance energy.

For a curve of thickness Delta, polygons with n vertices at equal arc
spacing satisfy |E - E_md,n| <= 290 Delta^(-1/4) n^(-1/4) once n is large
enough. Uniform inscriptions of the circle are regular n-gons, so their
normalized minimum distance energy is exactly zero and the gap stays at 4;
the bound is nevertheless far above it. A thinner ellipse gives a
non-trivial sequence, and its gap also tends to 4: the minimum distance
energy vanishes on regular polygons while the Möbius energy of the circle
is 4, so it is E - 4 that the polygonal energies approach. The last
column shows that normalized gap going to zero.

Run with ``python3 demos/rawdon_bound.py``.
"""
from knotforge.curves import Circle, Ellipse
from knotforge.experiments import rawdon_bound_check

ns = [8, 16, 32, 64, 128, 256, 512]
print(rawdon_bound_check(Circle(), ns).table())
print()
print(rawdon_bound_check(Ellipse(1.0, 0.6), ns[:-1]).table())
