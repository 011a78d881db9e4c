"""Independent brute-force oracles used to check the production paths.

Everything here is written as plainly as possible (scalar loops, explicit
scans) and never calls into the code path it is meant to check.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from iridescan.domain import BoundingBox


def box_mean_oracle(arr: np.ndarray, window: int) -> np.ndarray:
    """Per-pixel neighborhood mean with clamped (edge-replicated) indexing."""
    h, w = arr.shape[:2]
    radius = window // 2
    out = np.zeros((h, w, 3), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            for c in range(3):
                total = 0
                for dy in range(-radius, radius + 1):
                    for dx in range(-radius, radius + 1):
                        yy = min(max(y + dy, 0), h - 1)
                        xx = min(max(x + dx, 0), w - 1)
                        total += int(arr[yy, xx, c])
                out[y, x, c] = total / (window * window)
    return out


def hsv_scalar(r: int, g: int, b: int) -> tuple[float, float, float]:
    maxc = max(r, g, b)
    minc = min(r, g, b)
    v = maxc / 255.0
    s = 0.0 if maxc == 0 else (maxc - minc) / maxc
    d = maxc - minc
    if d == 0:
        h = 0.0
    elif maxc == r:
        h = (((g - b) / d) % 6.0) * 60.0
    elif maxc == g:
        h = ((b - r) / d + 2.0) * 60.0
    else:
        h = ((r - g) / d + 4.0) * 60.0
    return h, s, v


def rainbow_mask_oracle(arr: np.ndarray, window: int) -> np.ndarray:
    """Scalar re-derivation of the per-pixel iridescence score."""
    h, w = arr.shape[:2]
    radius = window // 2
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            bins = set()
            sat_total = 0.0
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    hue, sat, val = hsv_scalar(*(int(v) for v in arr[yy, xx]))
                    sat_total += sat
                    if sat >= 0.2 and val >= 0.1:
                        bins.add(min(int(hue / 30.0), 11))
            coverage = len(bins) / 12.0
            out[y, x] = coverage * (sat_total / (window * window))
    return out


def percentile95_oracle(values: list[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    rank = (95 * n + 99) // 100
    return ordered[rank - 1]


def flood_fill_oracle(scores: np.ndarray, threshold: float, min_area: int):
    """4-connected components by BFS; returns (box, mean, area) tuples."""
    h, w = scores.shape
    seen = np.zeros((h, w), dtype=bool)
    regions = []
    for sy in range(h):
        for sx in range(w):
            if seen[sy, sx] or scores[sy, sx] < threshold:
                continue
            queue = deque([(sy, sx)])
            seen[sy, sx] = True
            pixels = []
            while queue:
                y, x = queue.popleft()
                pixels.append((y, x))
                for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                    if 0 <= ny < h and 0 <= nx < w and not seen[ny, nx]:
                        if scores[ny, nx] >= threshold:
                            seen[ny, nx] = True
                            queue.append((ny, nx))
            if len(pixels) < min_area:
                continue
            ys = [p[0] for p in pixels]
            xs = [p[1] for p in pixels]
            box = BoundingBox(min(xs), min(ys), max(xs) + 1, max(ys) + 1)
            mean = math.fsum(float(scores[y, x]) for y, x in sorted(pixels)) / len(pixels)
            regions.append((box, mean, len(pixels)))
    regions.sort(key=lambda r: (-r[1], r[0].y_min, r[0].x_min))
    return regions


def iou_scalar(a: BoundingBox, b: BoundingBox) -> float:
    ix0, iy0 = max(a.x_min, b.x_min), max(a.y_min, b.y_min)
    ix1, iy1 = min(a.x_max, b.x_max), min(a.y_max, b.y_max)
    if ix1 <= ix0 or iy1 <= iy0:
        return 0.0
    inter = (ix1 - ix0) * (iy1 - iy0)
    area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min)
    area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min)
    return inter / (area_a + area_b - inter)


def nms_oracle(detections, iou_threshold: float):
    """Greedy suppression re-simulated over explicit index sets."""
    order = sorted(
        range(len(detections)),
        key=lambda i: (
            -detections[i].score,
            detections[i].box.as_tuple(),
            detections[i].cls.name,
        ),
    )
    kept_indices = []
    for i in order:
        det = detections[i]
        ok = True
        for k in kept_indices:
            other = detections[k]
            if other.cls == det.cls and iou_scalar(other.box, det.box) >= iou_threshold:
                ok = False
                break
        if ok:
            kept_indices.append(i)
    return [detections[i] for i in kept_indices]


def evaluate_oracle(images_truths, images_detections, class_names, iou_threshold):
    """Exhaustive re-derivation of per-class AP, counts, accuracy, and mAP.

    ``images_truths``: per image, list of (class_name, box).
    ``images_detections``: per image, list of Detection.
    """
    per_class_ap = {}
    counts = {}
    total_tp = total_fp = total_fn = 0
    for cls_name in class_names:
        dets = [
            (i, d)
            for i, dl in enumerate(images_detections)
            for d in dl
            if d.cls.name == cls_name
        ]
        order = sorted(
            range(len(dets)),
            key=lambda k: (-dets[k][1].score, dets[k][0], dets[k][1].box.as_tuple()),
        )
        truths = [
            (i, box)
            for i, tl in enumerate(images_truths)
            for (name, box) in tl
            if name == cls_name
        ]
        matched = set()
        flags = []
        for k in order:
            image_index, det = dets[k]
            best, best_iou = None, 0.0
            for truth_index, (truth_image, truth_box) in enumerate(truths):
                if truth_image != image_index or truth_index in matched:
                    continue
                overlap = iou_scalar(det.box, truth_box)
                if overlap >= iou_threshold and overlap > best_iou:
                    best, best_iou = truth_index, overlap
            if best is not None:
                matched.add(best)
                flags.append(True)
            else:
                flags.append(False)
        n_truth = len(truths)
        points = []
        tp = fp = 0
        for flag in flags:
            if flag:
                tp += 1
            else:
                fp += 1
            points.append((tp / n_truth if n_truth else 0.0, tp / (tp + fp)))
        ap = 0.0
        previous_recall = 0.0
        for idx, (recall, _) in enumerate(points):
            if recall > previous_recall:
                best_precision = max(p for _, p in points[idx:])
                ap += (recall - previous_recall) * best_precision
                previous_recall = recall
        if n_truth == 0:
            ap = 0.0
        fn = n_truth - tp
        per_class_ap[cls_name] = ap
        counts[cls_name] = {"tp": tp, "fp": fp, "fn": fn}
        total_tp += tp
        total_fp += fp
        total_fn += fn
    denominator = total_tp + total_fp + total_fn
    accuracy = total_tp / denominator if denominator else 0.0
    map_score = sum(per_class_ap.values()) / len(per_class_ap) if per_class_ap else 0.0
    return per_class_ap, counts, accuracy, map_score
