"""The existence gate that runs before any mesh prediction.

One detector contributes hand boxes (it cannot tell left from right), the
other contributes labeled keypoints 1-8 (left hand 1-4, right hand 5-8) but
no presence decision. A hand counts as present only when its keypoints land
inside the box mask; prediction is skipped entirely when neither hand does.
"""

import numpy as np

from handmend import (
    LabeledKeypoints,
    NoHandDetectedError,
    boxes_to_mask,
    double_check_predict,
    judge_existence,
)

H = W = 48
keypoints = LabeledKeypoints(
    {
        1: (10.0, 12.0), 2: (13.0, 15.0), 3: (11.0, 18.0), 4: (15.0, 20.0),  # left
        5: (34.0, 30.0), 6: (37.0, 28.0), 7: (40.0, 33.0), 8: (36.0, 35.0),  # right
    }
)

for label, boxes in (
    ("boxes around both hands", [[8, 10, 17, 22], [32, 26, 42, 37]]),
    ("box around the left hand only", [[8, 10, 17, 22]]),
    ("box misses keypoint 8", [[34, 28, 41, 34]]),
    ("no boxes at all", []),
):
    mask = boxes_to_mask(boxes, H, W)
    existence = judge_existence(mask, keypoints)
    print(f"{label:34s} -> left={existence.left} right={existence.right}")

# Wired into prediction: the predictor double below would blow up if it were
# ever reached without a hand, which is exactly what the gate prevents.
def predictor(image, existence):
    raise AssertionError("predictor must not run when no hand exists")

try:
    double_check_predict(
        lambda img: boxes_to_mask([], H, W),
        lambda img: keypoints,
        predictor,
        np.zeros((H, W)),
    )
except NoHandDetectedError as exc:
    print(f"gate raised before prediction: {exc}")
