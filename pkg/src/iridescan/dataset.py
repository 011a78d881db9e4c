"""Dataset wizard backend: VOC XML annotation I/O, augmentation, splitting.

Annotations use the PASCAL VOC convention on disk (1-based inclusive box
coordinates); in memory they are 0-based min-inclusive / max-exclusive, so
``x_min = xmin - 1`` and ``x_max = xmax``.

On-disk dataset layout::

    <dir>/images/img_00000.ppm       one binary PPM per image
    <dir>/annotations/img_00000.xml  matching VOC annotation per image
    <dir>/dataset.json               manifest: id, name, classes, split,
                                     provenance, per-image refs
"""

from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import imaging
from .domain import BoundingBox, DefectClass, Frame, canonical_dumps
from .rng import XorShift64Star


class VocParseError(ValueError):
    """Malformed or out-of-contract VOC annotation XML."""


class SplitError(ValueError):
    """A dataset cannot be split as requested."""


class AugmentError(ValueError):
    """An augmentation spec is invalid for the target image."""


@dataclass(frozen=True)
class AnnotatedImage:
    image_ref: str
    width: int
    height: int
    objects: tuple  # of (DefectClass, BoundingBox)

    def to_dict(self) -> dict:
        return {
            "image_ref": self.image_ref,
            "width": self.width,
            "height": self.height,
            "objects": [
                {"class": cls.name, "box": box.to_dict()} for cls, box in self.objects
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnnotatedImage":
        return cls(
            image_ref=data["image_ref"],
            width=data["width"],
            height=data["height"],
            objects=tuple(
                (DefectClass(o["class"]), BoundingBox.from_dict(o["box"]))
                for o in data["objects"]
            ),
        )


@dataclass(frozen=True)
class Split:
    train: tuple[int, ...]
    test: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"train": list(self.train), "test": list(self.test)}

    @classmethod
    def from_dict(cls, data: dict) -> "Split":
        return cls(train=tuple(data["train"]), test=tuple(data["test"]))


@dataclass(frozen=True)
class AugmentOp:
    """One augmentation: rotate90 / shift / brightness / hflip."""

    kind: str
    turns: int = 0
    dx: int = 0
    dy: int = 0
    factor: float = 1.0

    @classmethod
    def rotate90(cls, turns: int) -> "AugmentOp":
        return cls(kind="rotate90", turns=turns)

    @classmethod
    def shift(cls, dx: int, dy: int) -> "AugmentOp":
        return cls(kind="shift", dx=dx, dy=dy)

    @classmethod
    def brightness(cls, factor: float) -> "AugmentOp":
        return cls(kind="brightness", factor=factor)

    @classmethod
    def hflip(cls) -> "AugmentOp":
        return cls(kind="hflip")

    def tag(self) -> str:
        if self.kind == "rotate90":
            return f"rot90x{self.turns}"
        if self.kind == "shift":
            return f"shift{self.dx}_{self.dy}"
        if self.kind == "brightness":
            return f"bright{self.factor:g}"
        return self.kind

    def to_dict(self) -> dict:
        if self.kind == "rotate90":
            return {"kind": "rotate90", "turns": self.turns}
        if self.kind == "shift":
            return {"kind": "shift", "dx": self.dx, "dy": self.dy}
        if self.kind == "brightness":
            return {"kind": "brightness", "factor": self.factor}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentOp":
        return cls(
            kind=data["kind"],
            turns=data.get("turns", 0),
            dx=data.get("dx", 0),
            dy=data.get("dy", 0),
            factor=data.get("factor", 1.0),
        )


@dataclass(frozen=True)
class AugmentationSpec:
    ops: tuple[AugmentOp, ...]

    def to_dict(self) -> dict:
        return {"ops": [op.to_dict() for op in self.ops]}

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentationSpec":
        return cls(ops=tuple(AugmentOp.from_dict(o) for o in data["ops"]))


@dataclass(frozen=True)
class Dataset:
    id: str
    name: str
    classes: tuple[DefectClass, ...]
    images: tuple[AnnotatedImage, ...] = ()
    split: Split | None = None
    provenance: tuple = ()  # of dicts: {"source_ref", "op", "seed"}

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "classes": [c.name for c in self.classes],
            "images": [img.to_dict() for img in self.images],
            "split": self.split.to_dict() if self.split else None,
            "provenance": list(self.provenance),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Dataset":
        return cls(
            id=data["id"],
            name=data["name"],
            classes=tuple(DefectClass(n) for n in data["classes"]),
            images=tuple(AnnotatedImage.from_dict(i) for i in data["images"]),
            split=Split.from_dict(data["split"]) if data.get("split") else None,
            provenance=tuple(data.get("provenance", ())),
        )


# --- VOC XML ---------------------------------------------------------------


def _required_child(parent: ET.Element, name: str, path: str) -> ET.Element:
    child = parent.find(name)
    if child is None:
        raise VocParseError(f"{path}: missing <{name}>")
    return child


def _int_text(element: ET.Element, path: str) -> int:
    try:
        return int(float(element.text))
    except (TypeError, ValueError):
        raise VocParseError(f"{path}: not an integer: {element.text!r}") from None


def parse_voc(xml_text: str) -> AnnotatedImage:
    """Parse one VOC annotation file; unknown elements are ignored."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise VocParseError(f"malformed XML: {exc}") from None
    filename = _required_child(root, "filename", "annotation")
    size = _required_child(root, "size", "annotation")
    width = _int_text(_required_child(size, "width", "annotation/size"), "annotation/size/width")
    height = _int_text(_required_child(size, "height", "annotation/size"), "annotation/size/height")
    objects = []
    for index, obj in enumerate(root.findall("object")):
        path = f"annotation/object[{index}]"
        name = _required_child(obj, "name", path)
        if not (name.text or "").strip():
            raise VocParseError(f"{path}/name: empty class name")
        bndbox = _required_child(obj, "bndbox", path)
        xmin = _int_text(_required_child(bndbox, "xmin", path + "/bndbox"), path + "/bndbox/xmin")
        ymin = _int_text(_required_child(bndbox, "ymin", path + "/bndbox"), path + "/bndbox/ymin")
        xmax = _int_text(_required_child(bndbox, "xmax", path + "/bndbox"), path + "/bndbox/xmax")
        ymax = _int_text(_required_child(bndbox, "ymax", path + "/bndbox"), path + "/bndbox/ymax")
        box = BoundingBox(x_min=xmin - 1, y_min=ymin - 1, x_max=xmax, y_max=ymax)
        if xmin < 1 or ymin < 1 or xmax > width or ymax > height:
            raise VocParseError(f"{path}/bndbox: box outside image bounds")
        if box.x_min >= box.x_max or box.y_min >= box.y_max:
            raise VocParseError(f"{path}/bndbox: degenerate box")
        objects.append((DefectClass(name.text.strip()), box))
    return AnnotatedImage(
        image_ref=(filename.text or "").strip(),
        width=width,
        height=height,
        objects=tuple(objects),
    )


def write_voc(image: AnnotatedImage, image_filename: str) -> str:
    """Emit VOC XML; inverse of parse_voc under the coordinate convention."""
    root = ET.Element("annotation")
    ET.SubElement(root, "folder").text = "images"
    ET.SubElement(root, "filename").text = image_filename
    size = ET.SubElement(root, "size")
    ET.SubElement(size, "width").text = str(image.width)
    ET.SubElement(size, "height").text = str(image.height)
    ET.SubElement(size, "depth").text = "3"
    for cls, box in image.objects:
        obj = ET.SubElement(root, "object")
        ET.SubElement(obj, "name").text = cls.name
        ET.SubElement(obj, "difficult").text = "0"
        bndbox = ET.SubElement(obj, "bndbox")
        ET.SubElement(bndbox, "xmin").text = str(box.x_min + 1)
        ET.SubElement(bndbox, "ymin").text = str(box.y_min + 1)
        ET.SubElement(bndbox, "xmax").text = str(box.x_max)
        ET.SubElement(bndbox, "ymax").text = str(box.y_max)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")


# --- Augmentation ----------------------------------------------------------


def validate_spec(spec: AugmentationSpec, width: int, height: int) -> list[str]:
    errors = []
    for i, op in enumerate(spec.ops):
        where = f"ops[{i}]"
        if op.kind == "rotate90":
            if op.turns not in (1, 2, 3):
                errors.append(f"{where}: rotate90 turns must be 1..3")
        elif op.kind == "shift":
            if abs(op.dx) >= width or abs(op.dy) >= height:
                errors.append(f"{where}: shift exceeds image dimensions")
        elif op.kind == "brightness":
            if not op.factor > 0:
                errors.append(f"{where}: brightness factor must be > 0")
        elif op.kind != "hflip":
            errors.append(f"{where}: unknown op kind {op.kind!r}")
    return errors


def _rotate_box_ccw(box: BoundingBox, width: int) -> BoundingBox:
    # one quarter turn counterclockwise: (x, y) -> (y, width - 1 - x)
    return BoundingBox(
        x_min=box.y_min,
        y_min=width - box.x_max,
        x_max=box.y_max,
        y_max=width - box.x_min,
    )


def _apply_op(
    image: AnnotatedImage, arr: np.ndarray, op: AugmentOp
) -> tuple[AnnotatedImage, np.ndarray]:
    height, width = arr.shape[:2]
    if op.kind == "rotate90":
        out = np.rot90(arr, op.turns)
        objects = []
        for cls, box in image.objects:
            w, h = width, height
            for _ in range(op.turns):
                box = _rotate_box_ccw(box, w)
                w, h = h, w
            objects.append((cls, box))
        new_h, new_w = out.shape[:2]
        return (
            AnnotatedImage(image.image_ref, new_w, new_h, tuple(objects)),
            out,
        )
    if op.kind == "shift":
        out = np.zeros_like(arr)
        src_x0, src_x1 = max(0, -op.dx), min(width, width - op.dx)
        src_y0, src_y1 = max(0, -op.dy), min(height, height - op.dy)
        out[src_y0 + op.dy : src_y1 + op.dy, src_x0 + op.dx : src_x1 + op.dx] = arr[
            src_y0:src_y1, src_x0:src_x1
        ]
        objects = []
        for cls, box in image.objects:
            moved = BoundingBox(
                x_min=max(0, box.x_min + op.dx),
                y_min=max(0, box.y_min + op.dy),
                x_max=min(width, box.x_max + op.dx),
                y_max=min(height, box.y_max + op.dy),
            )
            if moved.x_min < moved.x_max and moved.y_min < moved.y_max:
                objects.append((cls, moved))
        return AnnotatedImage(image.image_ref, width, height, tuple(objects)), out
    if op.kind == "brightness":
        out = np.clip(np.rint(arr.astype(np.float64) * op.factor), 0, 255).astype(
            np.uint8
        )
        return image, out
    if op.kind == "hflip":
        out = arr[:, ::-1]
        objects = tuple(
            (
                cls,
                BoundingBox(
                    x_min=width - box.x_max,
                    y_min=box.y_min,
                    x_max=width - box.x_min,
                    y_max=box.y_max,
                ),
            )
            for cls, box in image.objects
        )
        return AnnotatedImage(image.image_ref, width, height, objects), out
    raise AugmentError(f"unknown op kind {op.kind!r}")


def augment(
    image: AnnotatedImage, pixels: Frame, spec: AugmentationSpec, seed: int
) -> list[tuple[AnnotatedImage, Frame]]:
    """Apply every op in the spec to the original image, one output per op.

    Boxes are transformed consistently with pixels: quarter-turn rotation
    maps corners exactly, shifting clips partially exited boxes and drops
    fully exited objects, brightness leaves geometry alone.  All ops are
    deterministic; ``seed`` is recorded in provenance for future stochastic
    ops.
    """
    errors = validate_spec(spec, image.width, image.height)
    if errors:
        raise AugmentError("; ".join(errors))
    if pixels.width != image.width or pixels.height != image.height:
        raise AugmentError("frame dimensions disagree with annotation")
    arr = imaging.frame_to_array(pixels)
    results = []
    for op in spec.ops:
        out_image, out_arr = _apply_op(image, arr, op)
        out_image = replace(
            out_image, image_ref=f"{image.image_ref}#{op.tag()}"
        )
        results.append((out_image, imaging.array_to_frame(out_arr)))
    return results


# --- Splitting -------------------------------------------------------------


def dominant_class(image: AnnotatedImage) -> DefectClass:
    """Most frequent object class; ties go to the alphabetically first."""
    if not image.objects:
        raise SplitError(f"image {image.image_ref!r} has no objects")
    tally: dict[str, int] = {}
    for cls, _ in image.objects:
        tally[cls.name] = tally.get(cls.name, 0) + 1
    best = sorted(tally.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    return DefectClass(best)


def _round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def split_dataset(
    dataset: Dataset, train_fraction: float, seed: int, stratified: bool = True
) -> Dataset:
    """Deterministic train/test split; stratified splits are per class.

    For each stratum, ``round(train_fraction * n)`` images go to train and
    the rest to test, after a seeded shuffle (one xorshift64* stream, strata
    in class-name order).  A stratum that would leave either side empty is
    an error naming the class.
    """
    if not 0.0 < train_fraction < 1.0:
        raise SplitError("train_fraction must lie strictly between 0 and 1")
    generator = XorShift64Star(seed)
    if stratified:
        strata: dict[str, list[int]] = {}
        for index, image in enumerate(dataset.images):
            strata.setdefault(dominant_class(image).name, []).append(index)
        groups = [strata[name] for name in sorted(strata)]
        names = sorted(strata)
    else:
        groups = [list(range(len(dataset.images)))]
        names = ["all"]
    train: list[int] = []
    test: list[int] = []
    for name, indices in zip(names, groups):
        shuffled = list(indices)
        generator.shuffle(shuffled)
        take = _round_half_up(train_fraction * len(shuffled))
        if take == 0 or take == len(shuffled):
            raise SplitError(
                f"class {name!r} with {len(shuffled)} images yields an empty side"
            )
        train.extend(shuffled[:take])
        test.extend(shuffled[take:])
    return replace(
        dataset, split=Split(train=tuple(sorted(train)), test=tuple(sorted(test)))
    )


# --- Disk layout -----------------------------------------------------------


def save_dataset(
    dataset: Dataset, directory: Path, load_frame: Callable[[str], Frame]
) -> None:
    directory = Path(directory)
    (directory / "images").mkdir(parents=True, exist_ok=True)
    (directory / "annotations").mkdir(parents=True, exist_ok=True)
    manifest_images = []
    for index, image in enumerate(dataset.images):
        stem = f"img_{index:05d}"
        frame = load_frame(image.image_ref)
        (directory / "images" / f"{stem}.ppm").write_bytes(imaging.write_ppm(frame))
        (directory / "annotations" / f"{stem}.xml").write_text(
            write_voc(image, f"{stem}.ppm")
        )
        manifest_images.append({"file": f"{stem}.ppm", "ref": image.image_ref})
    manifest = dataset.to_dict()
    manifest["images"] = manifest_images
    (directory / "dataset.json").write_text(canonical_dumps(manifest))


def load_dataset(directory: Path) -> tuple[Dataset, dict]:
    """Read a dataset directory; returns (dataset, image_ref -> Frame)."""
    directory = Path(directory)
    manifest = json.loads((directory / "dataset.json").read_text())
    frames: dict[str, Frame] = {}
    images = []
    for entry in manifest["images"]:
        stem = Path(entry["file"]).stem
        parsed = parse_voc((directory / "annotations" / f"{stem}.xml").read_text())
        parsed = replace(parsed, image_ref=entry["ref"])
        frames[entry["ref"]] = imaging.read_ppm(
            (directory / "images" / entry["file"]).read_bytes()
        )
        images.append(parsed)
    dataset = Dataset(
        id=manifest["id"],
        name=manifest["name"],
        classes=tuple(DefectClass(n) for n in manifest["classes"]),
        images=tuple(images),
        split=Split.from_dict(manifest["split"]) if manifest.get("split") else None,
        provenance=tuple(manifest.get("provenance", ())),
    )
    return dataset, frames
