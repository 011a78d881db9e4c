"""Synchronization with the backend: idempotent upload, resumable, verified.

Upload order is blobs first, metadata second, so the server never holds an
inspection that references a missing frame.  Blobs are content addressed,
which makes an interrupted sync resumable: the client asks the server which
blob ids are missing and uploads only those.  An entry is marked synced
only once the server's bundle hash matches the local one.
"""

from __future__ import annotations

import json
from pathlib import Path

import httpx

from ..domain import canonical_bytes
from .spool import STATE_SYNCED, STATE_UPLOADING, LocalSpool


class SyncError(Exception):
    pass


class AuthFailure(SyncError):
    pass


class ApiClient:
    """Thin typed wrapper over the REST API."""

    def __init__(self, server_url: str, token: str, transport=None, timeout=30.0):
        self.http = httpx.Client(
            base_url=server_url.rstrip("/"),
            headers={"Authorization": f"Bearer {token}"},
            transport=transport,
            timeout=timeout,
        )

    def close(self) -> None:
        self.http.close()

    def _check(self, response: httpx.Response) -> httpx.Response:
        if response.status_code in (401, 403):
            raise AuthFailure(f"{response.status_code}: {response.text}")
        if response.status_code >= 400:
            raise SyncError(f"{response.status_code}: {response.text}")
        return response

    def login_probe(self) -> dict:
        return self._check(self.http.get("/api/auth/me")).json()

    def missing_blobs(self, blob_ids: list[str]) -> list[str]:
        response = self._check(
            self.http.post("/api/inspections/blobs/missing", json={"blob_ids": blob_ids})
        )
        return response.json()["missing"]

    def upload_blob(self, data: bytes) -> str:
        response = self._check(
            self.http.post(
                "/api/inspections/blobs",
                content=data,
                headers={"Content-Type": "application/octet-stream"},
            )
        )
        return response.json()["blob_id"]

    def upsert_inspection(self, inspection_id: str, bundle: dict) -> tuple[int, str]:
        response = self._check(
            self.http.put(f"/api/inspections/{inspection_id}", json={"bundle": bundle})
        )
        payload = response.json()
        return payload["revision"], payload["bundle_hash"]

    def get_bundle(self, inspection_id: str) -> tuple[dict, int, str]:
        response = self._check(self.http.get(f"/api/inspections/{inspection_id}/bundle"))
        payload = response.json()
        return payload["bundle"], payload["revision"], payload["bundle_hash"]

    def get_blob(self, blob_id: str) -> bytes:
        return self._check(self.http.get(f"/api/inspections/blobs/{blob_id}")).content

    def put_defects(self, inspection_id: str, annotations: list[dict], expected_revision: int) -> int:
        response = self._check(
            self.http.put(
                f"/api/inspections/{inspection_id}/defects",
                json={"annotations": annotations, "expected_revision": expected_revision},
            )
        )
        return response.json()["revision"]


def sync_spool(spool: LocalSpool, client: ApiClient) -> dict:
    """Upload all pending spool entries; returns a per-entry report.

    Authentication is probed before any write so a bad token aborts with
    the spool untouched.
    """
    client.login_probe()
    report = {
        "synced": [],
        "already_synced": [],
        "blobs_uploaded": 0,
        "blobs_skipped": 0,
    }
    for inspection_id, state in spool.list_entries():
        if state == STATE_SYNCED:
            report["already_synced"].append(inspection_id)
            continue
        spool.set_state(inspection_id, STATE_UPLOADING)
        blob_ids = spool.blob_ids(inspection_id)
        missing = set(client.missing_blobs(blob_ids)) if blob_ids else set()
        for blob_id in blob_ids:
            if blob_id in missing:
                uploaded = client.upload_blob(spool.blob_bytes(inspection_id, blob_id))
                if uploaded != blob_id:
                    raise SyncError(
                        f"server derived blob id {uploaded}, expected {blob_id}"
                    )
                report["blobs_uploaded"] += 1
                missing.discard(blob_id)
            else:
                report["blobs_skipped"] += 1
        _, server_hash = client.upsert_inspection(
            inspection_id, spool.bundle(inspection_id)
        )
        if server_hash != spool.local_bundle_hash(inspection_id):
            raise SyncError(
                f"bundle hash mismatch after upload of {inspection_id}"
            )
        spool.set_state(inspection_id, STATE_SYNCED)
        report["synced"].append(inspection_id)
    return report


def download_bundle(client: ApiClient, inspection_id: str, dest_dir: Path) -> dict:
    """Fetch an inspection with its blobs into a review directory."""
    dest = Path(dest_dir)
    bundle, revision, digest = client.get_bundle(inspection_id)
    (dest / "original").mkdir(parents=True, exist_ok=True)
    (dest / "blobs").mkdir(parents=True, exist_ok=True)
    payload = canonical_bytes(bundle)
    (dest / "bundle.json").write_bytes(payload)
    (dest / "original" / "bundle.json").write_bytes(payload)
    (dest / "meta.json").write_text(
        json.dumps({"inspection_id": inspection_id, "revision": revision,
                    "bundle_hash": digest})
    )
    blob_ids = list(bundle["frame_refs"])
    if bundle.get("depth_ref"):
        blob_ids.append(bundle["depth_ref"])
    for blob_id in blob_ids:
        blob_dir = dest / "blobs" / blob_id[:2]
        blob_dir.mkdir(parents=True, exist_ok=True)
        (blob_dir / blob_id).write_bytes(client.get_blob(blob_id))
    return {"inspection_id": inspection_id, "revision": revision, "blobs": len(blob_ids)}
