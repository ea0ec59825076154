"""Tightening a polygonal trefoil without changing its knot type.

The starting polygon is the 24-vertex equilateral inscription of the (2,3)
torus knot shipped with the package. After annealing, the move log is
replayed with the exact sweep test to confirm that no accepted move let
the polygon pass through itself, and a short finite-difference descent
polishes the result. The run is written to ``trefoil_run.json``.

Run with ``python3 demos/tighten_trefoil.py``.
"""
from knotforge.experiments import initial_polygon
from knotforge.io import RunManifest, save_report
from knotforge.minimize import MinimizeConfig, anneal, descend_fd, replay_move_log

p0 = initial_polygon("trefoil", 24)
cfg = MinimizeConfig(energy="thickness_inv", iterations=3000, initial_step=0.01, temperature_initial=0.01,
                     epoch_length=500, seed=3)
run = anneal(p0, cfg)
print(f"ropelength {run.initial_energy:.4f} -> {run.final_energy:.4f} with {run.accepted} accepted moves")

violations, _ = replay_move_log(p0, run.move_log, cfg, exact=True)
print(f"replayed {len(run.move_log)} moves: {violations} crossing violations")

polished = descend_fd(run.final, MinimizeConfig.from_dict({**cfg.to_dict(), "iterations": 5}))
print(f"after finite-difference polish: {polished.final_energy:.4f}")

save_report(run, "trefoil_run.json", RunManifest.create(["demos/tighten_trefoil.py"], cfg.to_dict(), seed=cfg.seed)
            .finish())
print("run written to trefoil_run.json")
