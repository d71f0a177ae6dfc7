"""
Flat interface against the closed-form layered solution
=======================================================

A flat negative-index slab on a perfect conductor has a mode-by-mode
closed-form solution. We use it to watch the finite element error fall
as the mesh is refined.
"""

import numpy as np

from nimgrating import dtn, oracle, solver
from nimgrating.assembly import assemble
from nimgrating.mesh import build_mesh, refine
from nimgrating.problem import derive_scalars, reference_flat_config

# %%
# Normal incidence on a 2*pi period puts modes n = +-1 on a Wood anomaly
# (|alpha_n| = kappa_1). A flat stack only couples to mode 0 there, so one
# mode is exact.
cfg = reference_flat_config()
modes = dtn.build_mode_set(derive_scalars(cfg), cfg.period, 0)
exact = oracle.solve_flat(cfg, modes)
print("reflection coefficient r0 =", np.round(exact.reflection.coeffs[0], 6))
print("|r0| =", abs(exact.reflection.coeffs[0]))

# %%
# Four uniformly refined meshes, starting from 16 cells across.
mesh = build_mesh(cfg, 16, 3, 3)
errors = []
for level in range(4):
    field, rep = solver.solve(assemble(cfg, mesh, modes))
    errors.append(oracle.l2_error(field, exact))
    print(f"nx={mesh.nx:4d}  L2 error {errors[-1]:.3e}  efficiency sum {rep.efficiency_sum:.12f}")
    mesh = refine(mesh)

rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
print("observed rates:", np.round(rates, 3))
