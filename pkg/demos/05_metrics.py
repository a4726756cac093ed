"""
Segmentation metrics worked by hand
===================================

Frame-level scores count per-frame agreement; segment-level scores
compare the order and overlap of constant-label runs, which is what
exposes over-fragmented predictions.
"""

import numpy as np

from sftmn.metrics import (edit_score, f1_at_overlap, f1_avg, frame_scores,
                           labels_to_segments)

pred = np.array([0, 0, 1, 1])
gt = np.array([0, 1, 1, 1])
scores = frame_scores(pred, gt)
print(f"pred {pred.tolist()} vs gt {gt.tolist()}:")
print(f"  accuracy  {scores.accuracy:.2f}   (3 of 4 frames)")
print(f"  precision {scores.precision:.2f}   (class 0: 1/2, class 1: 2/2, macro)")
print(f"  recall    {scores.recall:.2f}   (class 0: 1/1, class 1: 2/3)")
print(f"  jaccard   {scores.jaccard:.2f}   (class 0: 1/2, class 1: 2/3)")

# the edit score compares run-length-encoded label orders; one
# substitution among three runs costs a third of the score
pred = np.array([0, 1, 2])
gt = np.array([0, 2, 2])
print(f"\nedit score of {pred.tolist()} vs {gt.tolist()}: "
      f"{edit_score(pred, gt):.2f}")

# a single 10-frame prediction against two 5-frame truth segments:
# the one overlap >= 50% gives one true positive, leaving one false
# positive impossible and one truth segment missed
pred = np.zeros(10, dtype=np.int64)
gt = np.array([0] * 5 + [1] * 5)
print(f"\npred segments: {labels_to_segments(pred)}")
print(f"gt segments:   {labels_to_segments(gt)}")
for threshold in (0.1, 0.25, 0.5):
    print(f"  F1@{round(threshold * 100):<2}: "
          f"{f1_at_overlap(pred, gt, threshold):.2f}")

print(f"\nf1_avg(85.1, 83.4, 76.0) = {f1_avg(85.1, 83.4, 76.0):.2f}")
