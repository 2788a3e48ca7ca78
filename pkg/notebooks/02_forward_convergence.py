# coding: utf-8
# Supersampled coverage against exact polygon-clip coverage as F grows.
# Pixels crossed by one straight edge stay within 0.5/F; pixels holding a
# vertex or two edges of a thin triangle can exceed it at small F.

# %%
import numpy as np

from silrender.clip import liang_barsky_clip
from silrender.forward import RenderSettings, rasterize
from silrender.geometry import Rect, ScreenMesh, signed_area
from silrender.oracle import exact_image

rng = np.random.default_rng(4)
size = 16
tris = []
while len(tris) < 100:
    v = rng.uniform(1.0, size - 1.0, (3, 2))
    if abs(signed_area(*v)) > 1.0:
        tris.append(v)


# %%
def crossing_count(tri):
    n = np.zeros((size, size), int)
    for i in range(size):
        for j in range(size):
            n[i, j] = sum(liang_barsky_clip((tri[k], tri[(k + 1) % 3]), Rect.pixel(i, j)) is not None
                          for k in range(3))
    for x, y in tri:
        n[int(y), int(x)] = 99  # vertex pixel
    return n


refs = [exact_image(t, size, size).data for t in tris]
kinds = [crossing_count(t) for t in tris]

# %%
print(" F   max err  F*err(all)  F*err(1 edge)  F*err(2 edges)  F*err(vertex)")
for F in (1, 2, 4, 8, 16, 32, 64):
    worst = {"all": 0.0, 1: 0.0, 2: 0.0, 99: 0.0}
    for t, ref, kind in zip(tris, refs, kinds):
        err = np.abs(rasterize(ScreenMesh(t, [[0, 1, 2]]), size, size, RenderSettings(F)).data - ref)
        worst["all"] = max(worst["all"], err.max())
        for k in (1, 2, 99):
            worst[k] = max(worst[k], err[kind == k].max(initial=0.0))
    print(f"{F:2d}  {worst['all']:.5f}  {F * worst['all']:10.3f}  {F * worst[1]:13.3f}  "
          f"{F * worst[2]:14.3f}  {F * worst[99]:13.3f}")
