"""Local spool: inspections staged on disk until a connection is available.

Layout mirrors the server stores so an entry is exactly what the server
will hold after sync::

    <spool>/<inspection_id>/bundle.json     canonical bundle (content fields)
    <spool>/<inspection_id>/blobs/<hh>/<hash>
    <spool>/<inspection_id>/state.json      {"sync_state": ...}

Frames are normalized to canonical PPM bytes before hashing, so the blob
ids here equal the ids the server derives on upload and re-uploads are
no-ops.
"""

from __future__ import annotations

import hashlib
import json
import uuid
from datetime import datetime
from pathlib import Path

from .. import imaging
from ..domain import (
    DefectAnnotation,
    Inspection,
    canonical_bytes,
    utc_now,
)

STATE_LOCAL_ONLY = "local_only"
STATE_UPLOADING = "uploading"
STATE_SYNCED = "synced"


class LocalSpool:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _entry_dir(self, inspection_id: str) -> Path:
        return self.root / inspection_id

    def _blob_path(self, inspection_id: str, blob_id: str) -> Path:
        return self._entry_dir(inspection_id) / "blobs" / blob_id[:2] / blob_id

    def add_inspection(
        self,
        title: str,
        frame_payloads: list[bytes],
        depth_payload: bytes | None = None,
        annotations: tuple[DefectAnnotation, ...] = (),
        tags: tuple[str, ...] = (),
        created_at: datetime | None = None,
        inspection_id: str | None = None,
    ) -> str:
        inspection_id = inspection_id or f"insp-{uuid.uuid4().hex[:12]}"
        entry = self._entry_dir(inspection_id)
        if entry.exists():
            raise ValueError(f"spool already holds {inspection_id}")
        frame_refs = []
        blobs = []
        for i, payload in enumerate(frame_payloads):
            try:
                normalized = imaging.write_ppm(imaging.read_ppm(payload))
            except ValueError as exc:
                raise ValueError(f"frame {i}: {exc}") from None
            blob_id = hashlib.sha256(normalized).hexdigest()
            frame_refs.append(blob_id)
            blobs.append((blob_id, normalized))
        depth_ref = None
        if depth_payload is not None:
            depth_ref = hashlib.sha256(depth_payload).hexdigest()
            blobs.append((depth_ref, depth_payload))
        inspection = Inspection(
            id=inspection_id,
            title=title,
            created_at=created_at or utc_now(),
            frame_refs=tuple(frame_refs),
            depth_ref=depth_ref,
            annotations=tuple(annotations),
            tags=tuple(tags),
        )
        entry.mkdir(parents=True)
        for blob_id, data in blobs:
            path = self._blob_path(inspection_id, blob_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        (entry / "bundle.json").write_bytes(canonical_bytes(inspection.to_bundle_dict()))
        self.set_state(inspection_id, STATE_LOCAL_ONLY)
        return inspection_id

    def list_entries(self) -> list[tuple[str, str]]:
        entries = []
        for path in sorted(self.root.iterdir()):
            if (path / "bundle.json").exists():
                entries.append((path.name, self.state(path.name)))
        return entries

    def bundle(self, inspection_id: str) -> dict:
        return json.loads((self._entry_dir(inspection_id) / "bundle.json").read_text())

    def bundle_bytes(self, inspection_id: str) -> bytes:
        return (self._entry_dir(inspection_id) / "bundle.json").read_bytes()

    def local_bundle_hash(self, inspection_id: str) -> str:
        return hashlib.sha256(self.bundle_bytes(inspection_id)).hexdigest()

    def blob_ids(self, inspection_id: str) -> list[str]:
        bundle = self.bundle(inspection_id)
        ids = list(bundle["frame_refs"])
        if bundle.get("depth_ref"):
            ids.append(bundle["depth_ref"])
        return ids

    def blob_bytes(self, inspection_id: str, blob_id: str) -> bytes:
        return self._blob_path(inspection_id, blob_id).read_bytes()

    def state(self, inspection_id: str) -> str:
        state_path = self._entry_dir(inspection_id) / "state.json"
        if not state_path.exists():
            return STATE_LOCAL_ONLY
        return json.loads(state_path.read_text())["sync_state"]

    def set_state(self, inspection_id: str, state: str) -> None:
        (self._entry_dir(inspection_id) / "state.json").write_text(
            json.dumps({"sync_state": state})
        )
