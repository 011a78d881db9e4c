"""Command-driven re-annotation of a downloaded bundle.

Edits accumulate in a draft; ``save`` promotes the draft to the uploadable
local copy, ``restore-original`` throws everything away and goes back to
the bytes that were downloaded.  ``push`` uploads the saved defect list.
"""

from __future__ import annotations

import json
from datetime import datetime
from pathlib import Path

from ..domain import (
    BoundingBox,
    DefectAnnotation,
    DefectClass,
    Detection,
    PipelineParams,
    SOURCE_MANUAL,
    canonical_bytes,
    utc_now,
    validate_inspection,
    Inspection,
)
from .sync import ApiClient


class ReviewError(Exception):
    pass


class ReviewSession:
    def __init__(self, bundle_dir: Path):
        self.dir = Path(bundle_dir)
        if not (self.dir / "bundle.json").exists():
            raise ReviewError(f"{bundle_dir} holds no downloaded bundle")

    # -- state files ---------------------------------------------------------

    def _read(self, name: str) -> dict:
        return json.loads((self.dir / name).read_text())

    def current(self) -> dict:
        """The working copy: the draft when present, else the saved bundle."""
        if (self.dir / "draft.json").exists():
            return self._read("draft.json")
        return self._read("bundle.json")

    def _write_draft(self, bundle: dict) -> None:
        (self.dir / "draft.json").write_bytes(canonical_bytes(bundle))

    def meta(self) -> dict:
        return self._read("meta.json")

    # -- commands ---------------------------------------------------------------

    def add_defect(
        self,
        frame_index: int,
        class_name: str,
        box: BoundingBox,
        params: PipelineParams,
        created_at: datetime | None = None,
    ) -> dict:
        bundle = self.current()
        if not 0 <= frame_index < len(bundle["frame_refs"]):
            raise ReviewError(
                f"frame {frame_index} out of range 0..{len(bundle['frame_refs']) - 1}"
            )
        if not class_name:
            raise ReviewError("class name must be non-empty")
        annotation = DefectAnnotation(
            frame_index=frame_index,
            detection=Detection(box=box, cls=DefectClass(class_name), score=1.0),
            source=SOURCE_MANUAL,
            params=params,
            created_at=created_at or utc_now(),
            screenshot_ref=bundle["frame_refs"][frame_index],
        )
        candidate = dict(bundle, annotations=bundle["annotations"] + [annotation.to_dict()])
        violations = validate_inspection(
            Inspection.from_dict({**candidate, "locked": False, "revision": 0})
        )
        if violations:
            raise ReviewError("; ".join(violations))
        self._write_draft(candidate)
        return annotation.to_dict()

    def delete_defect(self, index: int) -> dict:
        bundle = self.current()
        annotations = bundle["annotations"]
        if not 0 <= index < len(annotations):
            raise ReviewError(f"no defect at index {index}")
        removed = annotations[index]
        self._write_draft(
            dict(bundle, annotations=annotations[:index] + annotations[index + 1 :])
        )
        return removed

    def save(self) -> None:
        """Promote the draft to the uploadable local list."""
        draft = self.dir / "draft.json"
        if draft.exists():
            (self.dir / "bundle.json").write_bytes(draft.read_bytes())
            draft.unlink()

    def restore_original(self) -> None:
        """Discard local edits: back to the downloaded bytes exactly."""
        original = (self.dir / "original" / "bundle.json").read_bytes()
        (self.dir / "bundle.json").write_bytes(original)
        (self.dir / "draft.json").unlink(missing_ok=True)

    def push(self, client: ApiClient) -> int:
        """Upload the saved defect list; refreshes the stored revision."""
        bundle = self._read("bundle.json")
        meta = self.meta()
        revision = client.put_defects(
            meta["inspection_id"], bundle["annotations"], meta["revision"]
        )
        meta["revision"] = revision
        (self.dir / "meta.json").write_text(json.dumps(meta))
        return revision
