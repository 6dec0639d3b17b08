"""Walk through the similarity alignment between two hand poses.

A pose is just two labeled points: the wrist and an anchor keypoint further
up the hand. The alignment is built from three pieces (scale from the
keypoint distance ratio, translation from the wrist shift, rotation about
the wrist from the direction change), and the composed matrix lands both
keypoints of the source pose exactly on the destination pose.
"""

import numpy as np

from handmend import HandPose2D, Point2, apply, compute_alignment

src = HandPose2D(wrist=Point2(40.0, 60.0), anchor=Point2(52.0, 60.0))
dst = HandPose2D(wrist=Point2(100.0, 80.0), anchor=Point2(100.0, 104.0))

# src points right with keypoint distance 12; dst points down with distance 24,
# so we expect scale 2 and a 90 degree rotation.
t = compute_alignment(src, dst)
np.set_printoptions(precision=4, suppress=True)
print("alignment matrix:")
print(t.m)

for name, p, want in (("wrist", src.wrist, dst.wrist), ("anchor", src.anchor, dst.anchor)):
    got = apply(t, p)
    print(f"{name}: ({p.x:.1f}, {p.y:.1f}) -> ({got.x:.4f}, {got.y:.4f})"
          f"   target ({want.x:.1f}, {want.y:.1f})")

# Any other point of the source hand rides along with the same map. A point
# halfway between wrist and anchor stays halfway between their images.
mid = Point2(46.0, 60.0)
moved = apply(t, mid)
print(f"midpoint: ({mid.x:.1f}, {mid.y:.1f}) -> ({moved.x:.4f}, {moved.y:.4f})")
