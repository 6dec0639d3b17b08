"""Rasterize a toy hand mesh into the guidance map the sampler conditions on.

The renderer is a plain z-buffer triangle fill: nearer surfaces shade
brighter, boundary pixels have a single owner, and the padded bounding box
of the rendered support becomes the inpainting mask.
"""

from pathlib import Path

import numpy as np

from handmend import Camera, HandMesh, Point2, mask_from_map, rasterize
from handmend.imgio import save_mask_pgm, save_pgm

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

# Two overlapping triangles at different depths, roughly where a palm and a
# thumb would sit. Camera z points into the scene; units are arbitrary.
mesh = HandMesh(
    vertices=np.array(
        [
            [-0.45, -0.40, 2.0],
            [0.50, -0.30, 2.0],
            [0.05, 0.55, 2.0],
            [-0.10, -0.55, 1.6],
            [0.35, -0.10, 1.6],
            [-0.25, 0.10, 1.7],
        ]
    ),
    faces=np.array([[0, 1, 2], [3, 4, 5]]),
)
cam = Camera(focal=64.0, principal=Point2(32.0, 32.0), height=64, width=64)

guidance = rasterize(mesh, cam)
mask = mask_from_map(guidance)  # pad defaults to 10% of the support diagonal

print(f"guidance support: {int((guidance > 0).sum())} px,"
      f" shades {guidance[guidance > 0].min():.2f}..{guidance.max():.2f}")
print(f"mask box: {int(mask.sum())} px")

# Coarse terminal view: mask box '.', far surface 'o', near surface '#'.
for row in range(0, 64, 2):
    line = ""
    for col in range(0, 64, 2):
        g = guidance[row, col]
        if g >= 0.8:
            line += "#"
        elif g > 0:
            line += "o"
        else:
            line += "." if mask[row, col] else " "
    print(line)

save_pgm(out_dir / "guidance.pgm", guidance)
save_mask_pgm(out_dir / "mask.pgm", mask)
print(f"wrote {out_dir / 'guidance.pgm'} and {out_dir / 'mask.pgm'}")
