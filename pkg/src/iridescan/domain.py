"""Shared vocabulary types for the pipe inspection platform.

All values here are immutable; mutation happens only behind the stores.
Every type has a canonical JSON form (snake_case field names, RFC 3339 UTC
timestamps, compact separators, sorted keys) which is the wire and disk
format used by every other module.

Constructors do not enforce range invariants: ill-formed values are
representable so that :func:`validate_inspection` can report violations as
data instead of raising.  Structurally impossible values (a pixel buffer
whose length disagrees with the declared dimensions) still raise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Any

SOURCE_MANUAL = "manual"
SOURCE_AUTOMATIC = "automatic"
ANNOTATION_SOURCES = (SOURCE_MANUAL, SOURCE_AUTOMATIC)


def canonical_dumps(value: Any) -> str:
    """Serialize to the canonical JSON text used for hashing and storage."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_bytes(value: Any) -> bytes:
    return canonical_dumps(value).encode("utf-8")


def format_timestamp(ts: datetime) -> str:
    """RFC 3339 in UTC with a Z suffix; fractional seconds only when nonzero."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class Frame:
    """A single RGB image: row-major interleaved 8-bit triples."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")
        expected = self.width * self.height * 3
        if len(self.pixels) != expected:
            raise ValueError(
                f"pixel buffer holds {len(self.pixels)} bytes, expected {expected}"
            )

    def at(self, x: int, y: int) -> tuple[int, int, int]:
        off = (y * self.width + x) * 3
        return (self.pixels[off], self.pixels[off + 1], self.pixels[off + 2])

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "pixels": list(self.pixels),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Frame":
        return cls(
            width=data["width"],
            height=data["height"],
            pixels=bytes(data["pixels"]),
        )


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Axis-aligned box, inclusive-min / exclusive-max pixel coordinates."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "y_min": self.y_min,
            "x_max": self.x_max,
            "y_max": self.y_max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundingBox":
        return cls(data["x_min"], data["y_min"], data["x_max"], data["y_max"])


@dataclass(frozen=True, order=True)
class DefectClass:
    """A named defect category, e.g. "Junction" or "Misaligned Junction"."""

    name: str

    def to_dict(self) -> str:
        return self.name

    @classmethod
    def from_dict(cls, data: str) -> "DefectClass":
        return cls(data)


@dataclass(frozen=True)
class Detection:
    """A classified box with recognition confidence in [0, 1]."""

    box: BoundingBox
    cls: DefectClass
    score: float

    def to_dict(self) -> dict:
        return {
            "box": self.box.to_dict(),
            "class": self.cls.name,
            "score": self.score,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Detection":
        return cls(
            box=BoundingBox.from_dict(data["box"]),
            cls=DefectClass(data["class"]),
            score=data["score"],
        )


@dataclass(frozen=True)
class PipelineParams:
    """Tunable knobs of the analysis pipeline; snapshotted onto annotations."""

    flattener_window: int = 15
    rainbow_threshold: float = 0.5
    min_region_area: int = 25
    nms_iou_threshold: float = 0.5

    def to_dict(self) -> dict:
        return {
            "flattener_window": self.flattener_window,
            "rainbow_threshold": self.rainbow_threshold,
            "min_region_area": self.min_region_area,
            "nms_iou_threshold": self.nms_iou_threshold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineParams":
        return cls(
            flattener_window=data["flattener_window"],
            rainbow_threshold=data["rainbow_threshold"],
            min_region_area=data["min_region_area"],
            nms_iou_threshold=data["nms_iou_threshold"],
        )


@dataclass(frozen=True)
class DefectAnnotation:
    """One tagged defect on one frame, manual or automatic.

    Automatic annotations always carry the pipeline parameters under which
    they were produced so the original view can be restored later.
    """

    frame_index: int
    detection: Detection
    source: str
    params: PipelineParams
    created_at: datetime
    screenshot_ref: str | None = None

    def to_dict(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "detection": self.detection.to_dict(),
            "source": self.source,
            "params": self.params.to_dict(),
            "screenshot_ref": self.screenshot_ref,
            "created_at": format_timestamp(self.created_at),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DefectAnnotation":
        return cls(
            frame_index=data["frame_index"],
            detection=Detection.from_dict(data["detection"]),
            source=data["source"],
            params=PipelineParams.from_dict(data["params"]),
            screenshot_ref=data.get("screenshot_ref"),
            created_at=parse_timestamp(data["created_at"]),
        )


@dataclass(frozen=True)
class Inspection:
    """One recorded pipe survey: ordered frames plus metadata and defects.

    ``locked`` is true exactly while an analysis job for this inspection is
    queued or running; ``revision`` increases by one on every mutation and is
    the optimistic-concurrency handle for all writes.
    """

    id: str
    title: str
    created_at: datetime
    frame_refs: tuple[str, ...] = ()
    depth_ref: str | None = None
    annotations: tuple[DefectAnnotation, ...] = ()
    tags: tuple[str, ...] = ()
    locked: bool = False
    revision: int = 0

    def to_dict(self) -> dict:
        data = self.to_bundle_dict()
        data["locked"] = self.locked
        data["revision"] = self.revision
        return data

    def to_bundle_dict(self) -> dict:
        """Content fields only: what the client spools and the server bundles.

        Excludes the server-owned ``locked`` and ``revision`` fields so a
        client-side copy and the server copy of the same inspection are
        byte-identical in canonical JSON.
        """
        return {
            "id": self.id,
            "title": self.title,
            "created_at": format_timestamp(self.created_at),
            "frame_refs": list(self.frame_refs),
            "depth_ref": self.depth_ref,
            "annotations": [a.to_dict() for a in self.annotations],
            "tags": list(self.tags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Inspection":
        return cls(
            id=data["id"],
            title=data["title"],
            created_at=parse_timestamp(data["created_at"]),
            frame_refs=tuple(data["frame_refs"]),
            depth_ref=data.get("depth_ref"),
            annotations=tuple(
                DefectAnnotation.from_dict(a) for a in data["annotations"]
            ),
            tags=tuple(data["tags"]),
            locked=data.get("locked", False),
            revision=data.get("revision", 0),
        )


def validate_box(box: BoundingBox) -> list[str]:
    errors = []
    if box.x_min < 0 or box.y_min < 0:
        errors.append("box coordinates must be non-negative")
    if box.x_min >= box.x_max:
        errors.append("box x_min must be strictly below x_max")
    if box.y_min >= box.y_max:
        errors.append("box y_min must be strictly below y_max")
    return errors


def validate_params(params: PipelineParams) -> list[str]:
    errors = []
    if params.flattener_window < 1 or params.flattener_window % 2 == 0:
        errors.append("flattener_window must be an odd integer >= 1")
    if not 0.0 <= params.rainbow_threshold <= 1.0:
        errors.append("rainbow_threshold out of [0,1]")
    if params.min_region_area < 1:
        errors.append("min_region_area must be >= 1")
    if not 0.0 <= params.nms_iou_threshold <= 1.0:
        errors.append("nms_iou_threshold out of [0,1]")
    return errors


def validate_detection(det: Detection) -> list[str]:
    errors = validate_box(det.box)
    if not det.cls.name:
        errors.append("class name must be non-empty")
    if not 0.0 <= det.score <= 1.0:
        errors.append("score out of [0,1]")
    return errors


def validate_inspection(inspection: Inspection) -> list[str]:
    """Return one entry per violated invariant; empty means well-formed."""
    violations: list[str] = []
    if not inspection.id:
        violations.append("id must be non-empty")
    if inspection.revision < 0:
        violations.append("revision must be non-negative")
    frame_count = len(inspection.frame_refs)
    for i, ann in enumerate(inspection.annotations):
        prefix = f"annotations[{i}]: "
        if ann.frame_index < 0 or ann.frame_index >= frame_count:
            violations.append(prefix + "frame_index out of range")
        if ann.source not in ANNOTATION_SOURCES:
            violations.append(prefix + "source must be manual or automatic")
        violations.extend(prefix + e for e in validate_detection(ann.detection))
        violations.extend(prefix + e for e in validate_params(ann.params))
    return violations
