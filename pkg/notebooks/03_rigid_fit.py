# coding: utf-8
# Recover an in-plane translation of a triangle from one orthographic view.

# %%
import numpy as np

from silrender.experiments import rigid_triangle_experiment
from silrender.optim import fit

scene, init, truth = rigid_triangle_experiment(offset=(3.0, 4.0))
res = fit(scene, init, 500, alpha=0.05)

# %%
for r in res.records[50::50]:
    print(f"iter {r.iteration:4d}  E_sl {r.E_sl:10.4f}  t = ({r.params[0]:+.4f}, {r.params[1]:+.4f})")
print("translation error (px):", float(np.hypot(*(res.params - truth)[:2])))
