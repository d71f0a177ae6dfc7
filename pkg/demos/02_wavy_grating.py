"""
Efficiencies of a sinusoidal negative-index grating
===================================================

The shipped reference grating ``f(x1) = 1 + 0.2 cos(x1)`` is lit at 30
degrees. Two orders propagate. Without loss the reflected power adds up
to the incident power. With loss the deficit is exactly what the grating
absorbs.
"""

from pathlib import Path

from nimgrating import solver
from nimgrating.assembly import assemble
from nimgrating.problem import load_config

cfg, _ = load_config(Path(__file__).resolve().parent.parent / "configs" / "reference.ini")
mesh, modes = solver.prepare(cfg)
print("mesh", mesh.resolution, "modes n =", modes.n.min(), "..", modes.n.max())
print("propagating orders:", [int(n) for n, p in zip(modes.n, modes.propagating) if p])

# %%
# Lossless run.
field, rep = solver.solve(assemble(cfg, mesh, modes))
for n, e in sorted(rep.efficiencies.items()):
    print(f"  order {n:+d}: efficiency {e:.6f}")
print("sum", rep.efficiency_sum, " energy residual", f"{rep.energy_residual:.1e}")

# %%
# Turning on absorption in the grating.
for sigma in (0.1, 1.0):
    _, r = solver.solve(assemble(cfg.replace(sigma=sigma), mesh, modes))
    print(f"sigma={sigma}: reflected {r.efficiency_sum:.6f} + absorbed {r.absorption:.6f}"
          f" = {r.efficiency_sum + r.absorption:.12f}")
