"""Annealing a perturbed 16-gon back towards the regular one.

The discrete ropelength of an equilateral 16-gon is minimized by the
regular 16-gon, 32 tan(pi/16). Starting from a perturbed copy, the
annealer proposes single-vertex Gaussian moves, restores equal edge
lengths, rejects anything that could pass one edge through another, and
accepts by the Metropolis rule. About 30 seconds.

Run with ``python3 demos/anneal_unknot.py``.
"""
import math

from knotforge.experiments import initial_polygon
from knotforge.minimize import MinimizeConfig, anneal

p0 = initial_polygon("unknot", 16, seed=1)
cfg = MinimizeConfig(energy="thickness_inv", iterations=30_000, initial_step=0.003, temperature_initial=0.01,
                     epoch_length=3000, seed=1)
run = anneal(p0, cfg)

target = 32 * math.tan(math.pi / 16)
print(f"ropelength {run.initial_energy:.6f} -> {run.final_energy:.6f} (regular 16-gon {target:.6f})")
print(f"accepted {run.accepted}, rejected {run.rejected}, blocked by the crossing guard {run.crossing_rejected}")
for it, e in run.trace[:: max(1, len(run.trace) // 12)]:
    print(f"  iteration {it:6d}: best {e:.6f}")
