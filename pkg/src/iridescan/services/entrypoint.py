"""Inspection management: library, frames, defect lists, tags, statistics.

The defect list is replaced wholesale on upload, which is what makes
"restore the original list" equal to simply re-downloading the server copy.
Bundles contain only content fields (no lock state, no revision) so a
client-side copy and the server copy serialize to identical bytes.
"""

from __future__ import annotations

import hashlib
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timedelta

from .. import imaging
from ..domain import (
    DefectAnnotation,
    Inspection,
    canonical_bytes,
    format_timestamp,
    validate_inspection,
)
from ..store import ConflictError as StoreConflict
from ..store import NotFoundError as StoreNotFound
from .errors import ConflictError, NotFoundError, ValidationError

INSPECTIONS = "inspections"
CONFIG = "config"
DEFAULT_CLASSES = ("Junction", "Misaligned Junction")


@dataclass(frozen=True)
class StatisticsResult:
    """Top defect classes over 90 days and 12 trailing monthly defect rates."""

    top_defects: tuple  # of (class_name, count), count descending
    monthly_defect_rate: tuple  # of (month "YYYY-MM", rate), oldest first

    def to_dict(self) -> dict:
        return {
            "top_defects": [
                {"class": name, "count": count} for name, count in self.top_defects
            ],
            "monthly_defect_rate": [
                {"month": month, "rate": rate}
                for month, rate in self.monthly_defect_rate
            ],
        }


def bundle_hash(bundle: dict) -> str:
    return hashlib.sha256(canonical_bytes(bundle)).hexdigest()


class EntrypointService:
    def __init__(self, ctx):
        self.ctx = ctx

    # -- persistence helpers -------------------------------------------------

    def _load(self, inspection_id: str) -> Inspection:
        try:
            doc, revision = self.ctx.documents.get_document(INSPECTIONS, inspection_id)
        except StoreNotFound:
            raise NotFoundError(f"no inspection {inspection_id!r}") from None
        doc["revision"] = revision
        return Inspection.from_dict(doc)

    def _save(self, inspection: Inspection, expected_revision: int) -> Inspection:
        bumped = replace(inspection, revision=expected_revision + 1)
        try:
            self.ctx.documents.put_document(
                INSPECTIONS,
                inspection.id,
                bumped.to_dict(),
                expected_revision=expected_revision,
            )
        except StoreConflict as exc:
            raise ConflictError(str(exc), current_revision=exc.current_revision) from None
        return bumped

    def _require_unlocked(self, inspection: Inspection) -> None:
        if inspection.locked:
            raise ConflictError(
                f"inspection {inspection.id} is locked by a pending analysis",
                current_revision=inspection.revision,
            )

    # -- inspections ----------------------------------------------------------

    def create_inspection(
        self,
        title: str,
        created_at: datetime | None = None,
        tags: tuple[str, ...] = (),
    ) -> Inspection:
        if not title:
            raise ValidationError("title must be non-empty")
        inspection = Inspection(
            id=f"insp-{uuid.uuid4().hex[:12]}",
            title=title,
            created_at=created_at or self.ctx.clock(),
            tags=tuple(tags),
        )
        return self._save(inspection, expected_revision=0)

    def get_inspection(self, inspection_id: str) -> Inspection:
        return self._load(inspection_id)

    def list_inspections(self, page: int = 1, page_size: int = 20):
        """The inspections library: newest first, paginated."""
        if page < 1 or page_size < 1:
            raise ValidationError("page and page_size must be >= 1")
        rows = self.ctx.documents.list_documents(INSPECTIONS, sort="-created_at")
        total = len(rows)
        start = (page - 1) * page_size
        items = []
        for doc_id, doc, revision in rows[start : start + page_size]:
            doc["revision"] = revision
            items.append(Inspection.from_dict(doc))
        return items, total

    def upload_frames(self, inspection_id: str, frames: list[bytes]) -> Inspection:
        """Append frames (binary PPM payloads) as content-addressed blobs."""
        inspection = self._load(inspection_id)
        self._require_unlocked(inspection)
        refs = []
        for i, payload in enumerate(frames):
            try:
                frame = imaging.read_ppm(payload)
            except ValueError as exc:
                raise ValidationError(f"frame {i}: {exc}") from None
            refs.append(self.ctx.blobs.put_blob(imaging.write_ppm(frame)))
        updated = replace(inspection, frame_refs=inspection.frame_refs + tuple(refs))
        return self._save(updated, inspection.revision)

    def set_depth(self, inspection_id: str, payload: bytes) -> Inspection:
        inspection = self._load(inspection_id)
        self._require_unlocked(inspection)
        ref = self.ctx.blobs.put_blob(payload)
        return self._save(replace(inspection, depth_ref=ref), inspection.revision)

    def get_frame(self, inspection_id: str, index: int) -> bytes:
        inspection = self._load(inspection_id)
        if not 0 <= index < len(inspection.frame_refs):
            raise NotFoundError(f"frame {index} out of range")
        return self.ctx.blobs.get_blob(inspection.frame_refs[index])

    # -- defects ----------------------------------------------------------------

    def put_defects(
        self,
        inspection_id: str,
        annotations: list[DefectAnnotation],
        expected_revision: int,
    ) -> Inspection:
        """Replace the whole defect list atomically (upload semantics)."""
        inspection = self._load(inspection_id)
        self._require_unlocked(inspection)
        if expected_revision != inspection.revision:
            raise ConflictError(
                f"expected revision {expected_revision}, current is {inspection.revision}",
                current_revision=inspection.revision,
            )
        candidate = replace(inspection, annotations=tuple(annotations))
        violations = validate_inspection(candidate)
        if violations:
            raise ValidationError("; ".join(violations))
        return self._save(candidate, inspection.revision)

    def delete_defect(
        self, inspection_id: str, index: int, expected_revision: int
    ) -> Inspection:
        inspection = self._load(inspection_id)
        self._require_unlocked(inspection)
        if expected_revision != inspection.revision:
            raise ConflictError(
                f"expected revision {expected_revision}, current is {inspection.revision}",
                current_revision=inspection.revision,
            )
        if not 0 <= index < len(inspection.annotations):
            raise NotFoundError(f"no defect at index {index}")
        remaining = (
            inspection.annotations[:index] + inspection.annotations[index + 1 :]
        )
        return self._save(replace(inspection, annotations=remaining), inspection.revision)

    def download_bundle(self, inspection_id: str) -> tuple[dict, int, str]:
        """The server copy: content fields, current revision, content hash."""
        inspection = self._load(inspection_id)
        bundle = inspection.to_bundle_dict()
        return bundle, inspection.revision, bundle_hash(bundle)

    def upsert_content(self, inspection_id: str, bundle: dict) -> tuple[int, str]:
        """Create or replace an inspection from client-synced content.

        Blobs must already be uploaded; the server refuses content that
        references missing frames so a bundle can never dangle.
        """
        if bundle.get("id") != inspection_id:
            raise ValidationError("bundle id disagrees with the path")
        incoming = Inspection.from_dict({**bundle, "locked": False, "revision": 0})
        violations = validate_inspection(incoming)
        if violations:
            raise ValidationError("; ".join(violations))
        missing = [
            ref
            for ref in list(incoming.frame_refs)
            + ([incoming.depth_ref] if incoming.depth_ref else [])
            if not self.ctx.blobs.has_blob(ref)
        ]
        if missing:
            raise ValidationError(f"missing blobs: {', '.join(missing)}")
        try:
            current = self._load(inspection_id)
        except NotFoundError:
            current = None
        if current is not None:
            self._require_unlocked(current)
            saved = self._save(
                replace(
                    incoming, locked=current.locked, revision=current.revision
                ),
                current.revision,
            )
        else:
            saved = self._save(incoming, expected_revision=0)
        return saved.revision, bundle_hash(saved.to_bundle_dict())

    # -- tags -------------------------------------------------------------------

    def tag_inspection(
        self, inspection_id: str, tags: tuple[str, ...],
        expected_revision: int | None = None,
    ) -> Inspection:
        inspection = self._load(inspection_id)
        self._require_unlocked(inspection)
        if expected_revision is not None and expected_revision != inspection.revision:
            raise ConflictError(
                f"expected revision {expected_revision}, current is {inspection.revision}",
                current_revision=inspection.revision,
            )
        return self._save(replace(inspection, tags=tuple(tags)), inspection.revision)

    def list_tags(self) -> list[str]:
        tags = set()
        for _, doc, _ in self.ctx.documents.list_documents(INSPECTIONS):
            tags.update(doc.get("tags", ()))
        return sorted(tags)

    # -- defect classes -----------------------------------------------------------

    def get_defect_classes(self) -> list[str]:
        try:
            doc, _ = self.ctx.documents.get_document(CONFIG, "defect_classes")
            return list(doc["classes"])
        except StoreNotFound:
            return list(DEFAULT_CLASSES)

    def set_defect_classes(self, classes: list[str]) -> list[str]:
        cleaned = [c for c in classes if c]
        if not cleaned or len(set(cleaned)) != len(cleaned):
            raise ValidationError("classes must be non-empty and unique")
        try:
            _, revision = self.ctx.documents.get_document(CONFIG, "defect_classes")
        except StoreNotFound:
            revision = 0
        self.ctx.documents.put_document(
            CONFIG, "defect_classes", {"classes": cleaned}, expected_revision=revision
        )
        return cleaned

    # -- statistics -----------------------------------------------------------------

    def statistics(
        self, now: datetime | None = None, source: str | None = None
    ) -> StatisticsResult:
        """Aggregate over the library.

        Top defects: annotations from the trailing 90 days, grouped by
        class.  Monthly rates: for each of the 12 calendar months ending
        with the current one, the fraction of inspections created that
        month carrying at least one annotation (0/0 counts as 0).  The
        optional ``source`` filter restricts to manual or automatic
        annotations; by default both count.
        """
        now = now or self.ctx.clock()
        window_start = now - timedelta(days=90)
        tally: dict[str, int] = {}
        months = _trailing_months(now, 12)
        created_per_month = {m: 0 for m in months}
        defective_per_month = {m: 0 for m in months}
        for _, doc, _ in self.ctx.documents.list_documents(INSPECTIONS):
            inspection = Inspection.from_dict(doc)
            annotations = [
                a for a in inspection.annotations
                if source is None or a.source == source
            ]
            for annotation in annotations:
                if window_start <= annotation.created_at <= now:
                    name = annotation.detection.cls.name
                    tally[name] = tally.get(name, 0) + 1
            month = inspection.created_at.strftime("%Y-%m")
            if month in created_per_month:
                created_per_month[month] += 1
                if annotations:
                    defective_per_month[month] += 1
        top = tuple(
            sorted(tally.items(), key=lambda item: (-item[1], item[0]))
        )
        monthly = tuple(
            (
                month,
                (defective_per_month[month] / created_per_month[month])
                if created_per_month[month]
                else 0.0,
            )
            for month in months
        )
        return StatisticsResult(top_defects=top, monthly_defect_rate=monthly)


def _trailing_months(now: datetime, count: int) -> list[str]:
    year, month = now.year, now.month
    out = []
    for _ in range(count):
        out.append(f"{year:04d}-{month:02d}")
        month -= 1
        if month == 0:
            year, month = year - 1, 12
    return list(reversed(out))
