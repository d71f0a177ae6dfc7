"""
Interface diagnostics
=====================

Two checks on the sign-changing interface. First, the complementing
condition: after flattening and mirroring, the transmission conditions
must stay independent modulo the decaying roots. Second, the coercivity
constant ``K``, which compares the energy of the harmonic extension of the
interface trace with the energy above the interface.
"""

import numpy as np

from nimgrating import analysis, solver
from nimgrating.assembly import assemble
from nimgrating.problem import reference_config

cfg = reference_config()

# %%
# Margins over 32 interface points and four tangential frequencies.
x1 = analysis.default_x1_grid(cfg, 32)
for sigma in (1.0, 0.1, 0.01, 0.0):
    samples = analysis.adn_sweep(cfg, x1, [1.0, -1.0, 2.0, -2.0], [sigma])
    m = [s.independence_margin for s in samples]
    print(f"sigma={sigma:<5} margin min {min(m):.4f} max {max(m):.4f}")

# %%
# The margin collapses as the contrast approaches eps2 = -eps1.
for eps2 in (-2.0, -1.1, -1.01, -1.001):
    s = analysis.adn_check(cfg.replace(eps2=eps2), 1.0, 1.0, 0.0)
    print(f"eps2={eps2:<7} margin {s.independence_margin:.2e}")

# %%
# K from the lossless solution, and the worst case over all interface traces.
mesh, modes = solver.prepare(cfg)
system = assemble(cfg, mesh, modes)
field, _ = solver.solve(system)
rep = analysis.coercivity_check(cfg, field)
print(f"K = {rep.K:.4f}, condition value {rep.condition_value:.4f}, met: {rep.condition_met}")
worst = analysis.worst_case_K(system)
print(f"worst-case K = {worst:.4f}, condition value {analysis.coercivity_factor(cfg) * worst:.4f}")
print("extension bound on this mesh:", round(analysis.extension_bound(system), 4))
