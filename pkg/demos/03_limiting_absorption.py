"""
Switching off the loss
======================

Solutions with a small absorption ``sigma`` should approach the lossless
solution as ``sigma`` goes to zero, with a solution norm that stays
bounded. We halve ``sigma`` thirteen times and compare with a direct
lossless solve.
"""

import numpy as np

from nimgrating import solver
from nimgrating.problem import reference_config

cfg = reference_config()
mesh, modes = solver.prepare(cfg)

res = solver.laps_continuation(cfg, mesh, modes, sigma0=1.0, num_steps=13)
u0 = res.sigma0_field.l2_norm()
for s, gap in zip(res.sigmas, res.gaps):
    print(f"sigma={s:.3e}  ||u_sigma - u_0|| / ||u_0|| = {gap / u0:.3e}")
print("fitted rate in sigma:", round(res.fitted_rate, 3))

# %%
# The stability ratio ``||u||_H1 / ||g||`` across six decades of sigma.
sweep = solver.stability_sweep(cfg, [1.0, 1e-2, 1e-4, 1e-6, 0.0], mesh, modes)
print("stability ratios:", np.round(sweep.ratios, 4))
print("max/min:", round(sweep.spread, 4))
