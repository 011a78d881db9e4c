"""Pluggable detectors, a trainable color-histogram model, and evaluation.

The production CNNs sit behind the :class:`Detector` seam; the desk-scale
stand-in is a per-class HSV color-histogram model trained from ground-truth
box crops.  Evaluation follows the standard detection methodology: greedy
IoU matching per class, all-points interpolated average precision, and an
aggregate accuracy of TP / (TP + FP + FN).

Every ordering here is fully deterministic: detections tie-break by box
coordinates and class name after score, so evaluation and prediction are
reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from . import imaging
from .domain import BoundingBox, DefectClass, Detection, Frame, PipelineParams

HIST_SHAPE = (12, 4, 4)  # hue x saturation x value bins
MODEL_FORMAT_VERSION = 1

FrameLoader = Callable[[str], Frame]


class TrainingError(ValueError):
    """Raised when a model cannot be trained from the given dataset."""


class EvaluationError(ValueError):
    """Raised when a detector cannot be evaluated on the given dataset."""


class Detector(Protocol):
    """Anything that can turn a frame into scored, classified boxes."""

    name: str
    classes: tuple[DefectClass, ...]

    def predict(self, frame: Frame) -> list[Detection]: ...


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0.0 for disjoint boxes."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    intersection = ix * iy
    union = a.area + b.area - intersection
    return intersection / union


def _det_sort_key(det: Detection) -> tuple:
    return (-det.score, det.box.as_tuple(), det.cls.name)


def nms(detections: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy per-class suppression of overlapping detections.

    A detection survives iff its IoU with every higher-ranked surviving
    detection of the same class is strictly below the threshold.  Output is
    a subsequence of the score-sorted input, which makes the operation
    idempotent.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError("iou_threshold must lie in [0,1]")
    kept: list[Detection] = []
    for det in sorted(detections, key=_det_sort_key):
        suppressed = any(
            other.cls == det.cls and iou(other.box, det.box) >= iou_threshold
            for other in kept
        )
        if not suppressed:
            kept.append(det)
    return kept


@dataclass(frozen=True, eq=False)
class HistogramModel:
    """Per-class normalized 3D HSV histograms plus the proposal parameters."""

    classes: tuple[DefectClass, ...]
    centroids: dict  # class name -> (12, 4, 4) float64 array summing to 1
    proposal_params: PipelineParams
    trained_on: str

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "classes": [c.name for c in self.classes],
            "centroids": {
                name: centroid.reshape(-1).tolist()
                for name, centroid in self.centroids.items()
            },
            "proposal_params": self.proposal_params.to_dict(),
            "trained_on": self.trained_on,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HistogramModel":
        version = data.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version!r}")
        centroids = {
            name: np.asarray(values, dtype=np.float64).reshape(HIST_SHAPE)
            for name, values in data["centroids"].items()
        }
        return cls(
            classes=tuple(DefectClass(n) for n in data["classes"]),
            centroids=centroids,
            proposal_params=PipelineParams.from_dict(data["proposal_params"]),
            trained_on=data["trained_on"],
        )


def hsv_histogram(arr: np.ndarray) -> np.ndarray:
    """Raw pixel counts over the 12x4x4 HSV grid for an (h, w, 3) crop."""
    hue, saturation, value = imaging.rgb_to_hsv(arr)
    h_bin = np.minimum((hue / 30.0).astype(np.int64), 11)
    s_bin = np.minimum((saturation * 4.0).astype(np.int64), 3)
    v_bin = np.minimum((value * 4.0).astype(np.int64), 3)
    flat = (h_bin * 16 + s_bin * 4 + v_bin).reshape(-1)
    counts = np.bincount(flat, minlength=12 * 16)
    return counts.reshape(HIST_SHAPE).astype(np.float64)


def _crop(arr: np.ndarray, box: BoundingBox) -> np.ndarray:
    return arr[box.y_min : box.y_max, box.x_min : box.x_max]


def train_histogram_model(
    dataset,
    classes: list[DefectClass],
    params: PipelineParams,
    load_frame: FrameLoader,
) -> HistogramModel:
    """Build per-class centroids from the dataset's training split.

    Each centroid is the normalized sum of the raw HSV histograms of every
    ground-truth crop of that class, so duplicated crops and image order do
    not change the result.
    """
    wanted = {c.name for c in classes}
    sums = {name: np.zeros(HIST_SHAPE, dtype=np.float64) for name in wanted}
    train_indices = dataset.split.train if dataset.split else range(len(dataset.images))
    for idx in train_indices:
        image = dataset.images[idx]
        arr = imaging.frame_to_array(load_frame(image.image_ref))
        for cls, box in image.objects:
            if cls.name in wanted:
                sums[cls.name] += hsv_histogram(_crop(arr, box))
    centroids = {}
    for name in sorted(wanted):
        total = sums[name].sum()
        if total == 0:
            raise TrainingError(f"class {name!r} has no training samples")
        centroids[name] = sums[name] / total
    return HistogramModel(
        classes=tuple(sorted(classes)),
        centroids=centroids,
        proposal_params=params,
        trained_on=dataset.id,
    )


def predict_with_model(model: HistogramModel, frame: Frame) -> list[Detection]:
    """Propose regions on the rainbow mask, then classify each by centroid.

    The class is the L1-nearest centroid (ties by class name); the score is
    ``max(0, 1 - d/2)`` where d is the L1 distance between normalized
    histograms, so an exact centroid match scores 1.0.
    """
    params = model.proposal_params
    mask = imaging.rainbow_mask(frame, params.flattener_window)
    proposals = imaging.propose_regions(
        mask, params.rainbow_threshold, params.min_region_area
    )
    arr = imaging.frame_to_array(frame)
    detections = []
    for proposal in proposals:
        counts = hsv_histogram(_crop(arr, proposal.box))
        total = counts.sum()
        if total == 0:
            continue
        histogram = counts / total
        best_name, best_distance = None, None
        for name in sorted(model.centroids):
            distance = float(np.abs(histogram - model.centroids[name]).sum())
            if best_distance is None or distance < best_distance:
                best_name, best_distance = name, distance
        detections.append(
            Detection(
                box=proposal.box,
                cls=DefectClass(best_name),
                score=max(0.0, 1.0 - best_distance / 2.0),
            )
        )
    return nms(detections, params.nms_iou_threshold)


class HistogramDetector:
    """Adapter giving a trained HistogramModel the Detector interface."""

    def __init__(self, model: HistogramModel, name: str = "histogram"):
        self.model = model
        self.name = name
        self.classes = model.classes

    def predict(self, frame: Frame) -> list[Detection]:
        return predict_with_model(self.model, frame)


@dataclass(frozen=True)
class EvalReport:
    """Detection quality on a test split at a fixed IoU threshold."""

    per_class_ap: dict
    map_score: float
    accuracy: float
    iou_threshold: float
    counts: dict  # class name -> {"tp": int, "fp": int, "fn": int}

    def to_dict(self) -> dict:
        return {
            "per_class_ap": dict(self.per_class_ap),
            "map_score": self.map_score,
            "accuracy": self.accuracy,
            "iou_threshold": self.iou_threshold,
            "counts": {name: dict(c) for name, c in self.counts.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            per_class_ap=dict(data["per_class_ap"]),
            map_score=data["map_score"],
            accuracy=data["accuracy"],
            iou_threshold=data["iou_threshold"],
            counts={name: dict(c) for name, c in data["counts"].items()},
        )

    def to_text_table(self) -> str:
        lines = [f"{'class':<24} {'AP':>8} {'TP':>5} {'FP':>5} {'FN':>5}"]
        for name in sorted(self.per_class_ap):
            c = self.counts[name]
            lines.append(
                f"{name:<24} {self.per_class_ap[name]:>8.4f}"
                f" {c['tp']:>5} {c['fp']:>5} {c['fn']:>5}"
            )
        lines.append(f"mAP {self.map_score:.4f}  accuracy {self.accuracy:.4f}"
                     f"  IoU >= {self.iou_threshold}")
        return "\n".join(lines)


def match_detections(
    detections: list[tuple[int, Detection]],
    truths: list[tuple[int, BoundingBox]],
    iou_threshold: float,
) -> list[bool]:
    """Greedy TP/FP labels for score-ranked detections of a single class.

    ``detections`` are (image index, detection); ``truths`` are (image
    index, box).  Each detection matches the unmatched ground truth in its
    image with the highest IoU >= threshold; IoU ties go to the earliest
    ground truth.
    """
    order = sorted(
        range(len(detections)),
        key=lambda i: (-detections[i][1].score, detections[i][0],
                       detections[i][1].box.as_tuple()),
    )
    matched = [False] * len(truths)
    labels = [False] * len(detections)
    for det_index in order:
        image_index, det = detections[det_index]
        best_truth, best_iou = None, 0.0
        for truth_index, (truth_image, truth_box) in enumerate(truths):
            if truth_image != image_index or matched[truth_index]:
                continue
            overlap = iou(det.box, truth_box)
            if overlap >= iou_threshold and overlap > best_iou:
                best_truth, best_iou = truth_index, overlap
        if best_truth is not None:
            matched[best_truth] = True
            labels[det_index] = True
    return labels


def average_precision(labels_in_rank_order: list[bool], truth_count: int) -> float:
    """All-points interpolated AP from ranked TP/FP labels.

    Precision at each recall level is the maximum precision at any recall
    greater than or equal to it.
    """
    if truth_count == 0:
        return 0.0
    recalls, precisions = [], []
    tp = fp = 0
    for is_tp in labels_in_rank_order:
        if is_tp:
            tp += 1
        else:
            fp += 1
        recalls.append(tp / truth_count)
        precisions.append(tp / (tp + fp))
    # envelope: best precision achievable at or beyond each rank
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])
    ap = 0.0
    previous_recall = 0.0
    for recall, precision in zip(recalls, precisions):
        if recall > previous_recall:
            ap += (recall - previous_recall) * precision
            previous_recall = recall
    return ap


def evaluate(
    detector: Detector,
    dataset,
    iou_threshold: float = 0.5,
    load_frame: FrameLoader | None = None,
) -> EvalReport:
    """Run the detector over the dataset's test split and score it.

    Classes with no ground truth in the split contribute AP 0.0.  The
    aggregate accuracy is total TP / (TP + FP + FN) across classes.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise EvaluationError("iou_threshold must lie in [0,1]")
    test_indices = list(dataset.split.test) if dataset.split else list(range(len(dataset.images)))
    if not test_indices:
        raise EvaluationError("test split is empty")

    per_image_detections = []
    for image_index in test_indices:
        image = dataset.images[image_index]
        frame = load_frame(image.image_ref)
        per_image_detections.append(detector.predict(frame))

    per_class_ap: dict[str, float] = {}
    counts: dict[str, dict[str, int]] = {}
    total_tp = total_fp = total_fn = 0
    for cls in dataset.classes:
        detections = [
            (i, det)
            for i, dets in enumerate(per_image_detections)
            for det in dets
            if det.cls == cls
        ]
        truths = [
            (i, box)
            for i, image_index in enumerate(test_indices)
            for obj_cls, box in dataset.images[image_index].objects
            if obj_cls == cls
        ]
        labels = match_detections(detections, truths, iou_threshold)
        rank = sorted(
            range(len(detections)),
            key=lambda i: (-detections[i][1].score, detections[i][0],
                           detections[i][1].box.as_tuple()),
        )
        ranked_labels = [labels[i] for i in rank]
        tp = sum(ranked_labels)
        fp = len(ranked_labels) - tp
        fn = len(truths) - tp
        per_class_ap[cls.name] = average_precision(ranked_labels, len(truths))
        counts[cls.name] = {"tp": tp, "fp": fp, "fn": fn}
        total_tp += tp
        total_fp += fp
        total_fn += fn

    denominator = total_tp + total_fp + total_fn
    accuracy = total_tp / denominator if denominator else 0.0
    map_score = (
        sum(per_class_ap.values()) / len(per_class_ap) if per_class_ap else 0.0
    )
    return EvalReport(
        per_class_ap=per_class_ap,
        map_score=map_score,
        accuracy=accuracy,
        iou_threshold=iou_threshold,
        counts=counts,
    )
