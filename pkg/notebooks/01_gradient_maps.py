# coding: utf-8
# Gradient images: dI/dparam for a disk under translation, rotation and scale.
# Nonzero values sit only on the silhouette rim; the sign pattern shows which
# way each boundary pixel moves. Writes PNGs to notebooks/out/.

# %%
import os

import numpy as np

from silrender.backward import parameter_gradient_image
from silrender.forward import RenderSettings, rasterize
from silrender.geometry import ScreenMesh
from silrender.io import write_gradient_png, write_pgm

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "out")
os.makedirs(OUT, exist_ok=True)

# %%
# a 48-gon in screen space, fanned from its centre
H = W = 64
n = 48
ang = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
centre = np.array([32.0, 30.0])
ring = centre + 18.0 * np.stack([np.cos(ang), 1.2 * np.sin(ang)], 1)
verts = np.vstack([centre, ring])
faces = [[0, 1 + (k + 1) % n, 1 + k] for k in range(n)]
screen = ScreenMesh(verts, faces)
settings = RenderSettings(4)
img = rasterize(screen, H, W, settings)
write_pgm(os.path.join(OUT, "disk.pgm"), img.data)

# %%
# per-vertex screen velocity for each parameter
rel = verts - centre
directions = {
    "tx": np.tile([1.0, 0.0], (len(verts), 1)),
    "ty": np.tile([0.0, 1.0], (len(verts), 1)),
    "rot": np.stack([-rel[:, 1], rel[:, 0]], 1),
    "scale": rel,
}
for name, d in directions.items():
    g = parameter_gradient_image(screen, d, H, W, settings, img)
    write_gradient_png(os.path.join(OUT, f"grad_{name}.png"), g)
    rim = np.count_nonzero(g)
    print(f"{name:6s} nonzero pixels {rim:4d}  sum {g.sum():+9.3f}  range [{g.min():+.3f}, {g.max():+.3f}]")

# %%
# Translation moves area from one side to the other, so the sum is ~0.
# Scale grows the area: the sum approximates d(area)/d(scale) = 2 * area.
area = 0.5 * np.abs(np.sum(ring[:, 0] * np.roll(ring[:, 1], -1) - np.roll(ring[:, 0], -1) * ring[:, 1]))
print(f"2 * polygon area = {2 * area:.3f}")
