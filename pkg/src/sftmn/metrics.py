"""Frame-level and segmental evaluation metrics for action segmentation.

All scores are percentages in [0, 100]. Frame metrics other than accuracy
are macro-averaged per video over the classes present in either sequence
(configurable, see frame_scores). Segmental metrics operate on maximal
constant runs of the label sequences and do not require the two sequences
to share a length.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_OVERLAPS = (0.10, 0.25, 0.50)


@dataclass(frozen=True)
class Segment:
    """Maximal constant run [start, end) of one class."""

    label: int
    start: int
    end: int

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError(f"segment needs 0 <= start < end, got [{self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class FrameScores:
    accuracy: float
    precision: float
    recall: float
    jaccard: float


@dataclass(frozen=True)
class SegmentalScores:
    edit: float
    f1_scores: tuple[float, ...]
    overlaps: tuple[float, ...] = DEFAULT_OVERLAPS

    @property
    def f1_at(self) -> dict[int, float]:
        """Scores keyed by threshold as a percentage (10, 25, 50 by default)."""
        return {round(k * 100): s for k, s in zip(self.overlaps, self.f1_scores)}

    @property
    def f1_avg(self) -> float:
        return float(np.mean(self.f1_scores))


def labels_to_segments(labels: np.ndarray) -> list[Segment]:
    """Split a label sequence into maximal constant runs, in order."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or len(labels) == 0:
        raise ValueError("labels must be a non-empty 1-D array")
    boundaries = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [len(labels)]))
    return [Segment(int(labels[s]), int(s), int(e)) for s, e in zip(starts, ends)]


def segments_to_labels(segments: Sequence[Segment]) -> np.ndarray:
    """Inverse of labels_to_segments. Segments must tile [0, T) contiguously."""
    validate_segments(segments)
    out = np.empty(segments[-1].end, dtype=np.int64)
    for segment in segments:
        out[segment.start:segment.end] = segment.label
    return out


def validate_segments(segments: Sequence[Segment]) -> None:
    """Check that segments tile [0, T) with no gaps and distinct neighbors."""
    if not segments:
        raise ValueError("no segments given")
    expected_start = 0
    previous_label = None
    for segment in segments:
        if segment.start != expected_start:
            raise ValueError(f"segments must be contiguous from 0; got start "
                             f"{segment.start} where {expected_start} was expected")
        if segment.label == previous_label:
            raise ValueError(f"adjacent segments share class {segment.label}")
        expected_start = segment.end
        previous_label = segment.label


def _as_labels(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values)
    if values.ndim != 1 or len(values) == 0:
        raise ValueError(f"{what} must be a non-empty 1-D sequence, got shape "
                         f"{values.shape}")
    return values


def frame_scores(predicted: np.ndarray, ground_truth: np.ndarray,
                 class_set: str = "union") -> FrameScores:
    """Frame accuracy plus macro precision/recall/Jaccard.

    class_set picks the classes the macro average runs over: "union"
    (default) averages over classes present in either sequence, scoring 0
    for any class whose denominator is empty; "gt" averages over classes
    present in the ground truth only.
    """
    predicted = _as_labels(predicted, "predicted")
    ground_truth = _as_labels(ground_truth, "ground truth")
    if predicted.shape != ground_truth.shape:
        raise ValueError(f"length mismatch: {len(predicted)} predicted vs "
                         f"{len(ground_truth)} ground-truth frames")
    if class_set not in ("union", "gt"):
        raise ValueError(f"class_set must be 'union' or 'gt', got {class_set!r}")
    accuracy = float(np.mean(predicted == ground_truth)) * 100.0

    classes = (np.union1d(predicted, ground_truth) if class_set == "union"
               else np.unique(ground_truth))
    precisions, recalls, jaccards = [], [], []
    for c in classes:
        in_pred = predicted == c
        in_gt = ground_truth == c
        tp = float(np.sum(in_pred & in_gt))
        fp = float(np.sum(in_pred & ~in_gt))
        fn = float(np.sum(~in_pred & in_gt))
        precisions.append(tp / (tp + fp) if tp + fp > 0 else 0.0)
        recalls.append(tp / (tp + fn) if tp + fn > 0 else 0.0)
        jaccards.append(tp / (tp + fp + fn) if tp + fp + fn > 0 else 0.0)
    return FrameScores(
        accuracy=accuracy,
        precision=float(np.mean(precisions)) * 100.0,
        recall=float(np.mean(recalls)) * 100.0,
        jaccard=float(np.mean(jaccards)) * 100.0,
    )


def _levenshtein(a: Sequence[int], b: Sequence[int]) -> int:
    """Classic edit distance (insert/delete/substitute, unit costs)."""
    m, n = len(a), len(b)
    row = list(range(n + 1))
    for i in range(1, m + 1):
        prev_diag = row[0]
        row[0] = i
        for j in range(1, n + 1):
            prev_row = row[j]
            if a[i - 1] == b[j - 1]:
                row[j] = prev_diag
            else:
                row[j] = 1 + min(prev_diag, prev_row, row[j - 1])
            prev_diag = prev_row
    return row[n]


def edit_score_segments(predicted: Sequence[Segment], ground_truth: Sequence[Segment]
                        ) -> float:
    """Normalized segmental edit similarity over segment class strings."""
    validate_segments(predicted)
    validate_segments(ground_truth)
    distance = _levenshtein([s.label for s in predicted],
                            [s.label for s in ground_truth])
    score = (1.0 - distance / max(len(predicted), len(ground_truth))) * 100.0
    return max(0.0, score)


def edit_score(predicted: np.ndarray, ground_truth: np.ndarray) -> float:
    """edit_score_segments applied to the label sequences' constant runs."""
    return edit_score_segments(labels_to_segments(_as_labels(predicted, "predicted")),
                               labels_to_segments(_as_labels(ground_truth, "ground truth")))


def f1_at_overlap_segments(predicted: Sequence[Segment],
                           ground_truth: Sequence[Segment], overlap: float) -> float:
    """Segmental F1 at the given IoU threshold.

    Each predicted segment claims its best-IoU ground-truth segment of the
    same class (first best on ties, in ground-truth order); the claim is a
    true positive iff the IoU meets the threshold and that ground-truth
    segment is still unclaimed. Unclaimed ground-truth segments are false
    negatives. F1 is 0 when there are no true positives.
    """
    if not 0.0 < overlap <= 1.0:
        raise ValueError(f"overlap threshold must be in (0, 1], got {overlap}")
    validate_segments(predicted)
    validate_segments(ground_truth)

    claimed = np.zeros(len(ground_truth), dtype=bool)
    tp = 0
    fp = 0
    for p in predicted:
        ious = np.zeros(len(ground_truth))
        for j, g in enumerate(ground_truth):
            if g.label != p.label:
                continue
            intersection = min(p.end, g.end) - max(p.start, g.start)
            union = max(p.end, g.end) - min(p.start, g.start)
            ious[j] = max(0, intersection) / union
        best = int(np.argmax(ious))
        if ious[best] >= overlap and not claimed[best]:
            claimed[best] = True
            tp += 1
        else:
            fp += 1
    fn = len(ground_truth) - tp

    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall) * 100.0


def f1_at_overlap(predicted: np.ndarray, ground_truth: np.ndarray,
                  overlap: float) -> float:
    """f1_at_overlap_segments applied to the label sequences' constant runs."""
    return f1_at_overlap_segments(
        labels_to_segments(_as_labels(predicted, "predicted")),
        labels_to_segments(_as_labels(ground_truth, "ground truth")), overlap)


def f1_avg(*scores: float) -> float:
    """Arithmetic mean of F1 percentages, e.g. f1_avg(f1_10, f1_25, f1_50)."""
    if not scores:
        raise ValueError("f1_avg needs at least one score")
    for s in scores:
        if not 0.0 <= s <= 100.0:
            raise ValueError(f"F1 scores are percentages in [0, 100], got {s}")
    return float(np.mean(scores))


def segmental_scores(predicted: np.ndarray, ground_truth: np.ndarray,
                     overlaps: Sequence[float] = DEFAULT_OVERLAPS) -> SegmentalScores:
    pred_segments = labels_to_segments(_as_labels(predicted, "predicted"))
    gt_segments = labels_to_segments(_as_labels(ground_truth, "ground truth"))
    return SegmentalScores(
        edit=edit_score_segments(pred_segments, gt_segments),
        f1_scores=tuple(f1_at_overlap_segments(pred_segments, gt_segments, k)
                        for k in overlaps),
        overlaps=tuple(overlaps),
    )


def aggregate(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation (ddof=0) over per-video scores."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot aggregate an empty score list")
    return float(arr.mean()), float(arr.std(ddof=0))


def evaluate_videos(pairs: Sequence[tuple[np.ndarray, np.ndarray]],
                    overlaps: Sequence[float] = DEFAULT_OVERLAPS,
                    ids: Sequence[str] | None = None,
                    class_set: str = "union") -> dict:
    """Score (predicted, ground_truth) pairs per video and aggregate.

    Returns a report dict with per-video rows plus mean/std summaries for
    every metric, ready for the JSON/CSV writers.
    """
    if not pairs:
        raise ValueError("no videos to evaluate")
    if ids is not None and len(ids) != len(pairs):
        raise ValueError(f"{len(ids)} ids for {len(pairs)} videos")
    rows = []
    for i, (predicted, ground_truth) in enumerate(pairs):
        frame = frame_scores(predicted, ground_truth, class_set=class_set)
        seg = segmental_scores(predicted, ground_truth, overlaps)
        row = {
            "video_id": ids[i] if ids is not None else str(i),
            "accuracy": frame.accuracy,
            "precision": frame.precision,
            "recall": frame.recall,
            "jaccard": frame.jaccard,
            "edit": seg.edit,
        }
        for k, score in zip(seg.overlaps, seg.f1_scores):
            row[f"f1@{round(k * 100)}"] = score
        row["f1_avg"] = seg.f1_avg
        rows.append(row)

    metric_names = [k for k in rows[0] if k != "video_id"]
    summary = {}
    for name in metric_names:
        mean, std = aggregate([row[name] for row in rows])
        summary[name] = {"mean": mean, "std": std}
    return {"videos": rows, "summary": summary, "overlaps": list(overlaps)}


def write_report_json(report: dict, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_csv(report: dict, path: str | os.PathLike) -> None:
    """Per-video rows plus trailing mean/std rows, one column per metric."""
    rows = report["videos"]
    fieldnames = list(rows[0].keys())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        for stat in ("mean", "std"):
            stat_row = {"video_id": stat}
            for name in fieldnames[1:]:
                stat_row[name] = report["summary"][name][stat]
            writer.writerow(stat_row)
