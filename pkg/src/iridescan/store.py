"""File-backed data layer: documents, blobs, and user records.

One transactional store with three concerns behind distinct collections:
inspection/dataset/model documents, immutable content-addressed blobs, and
salted-hash user credentials.

On-disk layout (documented so external tools can inspect state)::

    <root>/data/<collection>/<id>.json   {"revision": n, "doc": {...}}
    <root>/wal.log                       write-ahead log (see below)
    <root>/blobs/<hh>/<hash>             blob payloads, hh = first two hex chars

The write-ahead log is the commit point: each record is a 4-byte big-endian
length, the canonical-JSON payload, then a 4-byte big-endian CRC32 of the
payload.  A put appends and flushes the WAL record before rewriting the
document file (atomic tmp + rename), so recovery after a crash always sees
either the old or the new document, never a torn one.  The WAL is truncated
at every clean checkpoint.
"""

from __future__ import annotations

import copy
import hashlib
import hmac
import json
import os
import secrets
import struct
import threading
import zlib
from pathlib import Path

from .domain import canonical_bytes

PBKDF2_ITERATIONS = 100_000
SALT_BYTES = 16

ROLE_ADMIN = "admin"
ROLE_OPERATOR = "operator"
ROLES = (ROLE_ADMIN, ROLE_OPERATOR)


class StoreError(Exception):
    pass


class ConflictError(StoreError):
    """Optimistic-concurrency failure; carries the current revision."""

    def __init__(self, message: str, current_revision: int):
        super().__init__(message)
        self.current_revision = current_revision


class NotFoundError(StoreError):
    pass


class CorruptionError(StoreError):
    pass


class DocumentStore:
    """Durable JSON documents with per-document monotone revisions."""

    def __init__(self, root: Path, checkpoint_every: int = 256):
        self.root = Path(root)
        self.data_dir = self.root / "data"
        self.wal_path = self.root / "wal.log"
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._cache: dict[str, dict[str, tuple[int, dict]]] = {}
        self._checkpoint_every = checkpoint_every
        self._writes_since_checkpoint = 0
        self._load()

    # -- recovery ------------------------------------------------------

    def _load(self) -> None:
        for collection_dir in sorted(self.data_dir.iterdir()) if self.data_dir.exists() else []:
            if not collection_dir.is_dir():
                continue
            collection = self._cache.setdefault(collection_dir.name, {})
            for doc_path in sorted(collection_dir.glob("*.json")):
                try:
                    payload = json.loads(doc_path.read_text())
                    collection[doc_path.stem] = (payload["revision"], payload["doc"])
                except (ValueError, KeyError):
                    # torn file; the WAL replay below restores it
                    continue
        for record in self._read_wal():
            collection = self._cache.setdefault(record["collection"], {})
            current = collection.get(record["id"])
            if record.get("deleted"):
                if current is not None and record["revision"] >= current[0]:
                    collection.pop(record["id"], None)
                    self._doc_path(record["collection"], record["id"]).unlink(missing_ok=True)
            elif current is None or record["revision"] > current[0]:
                collection[record["id"]] = (record["revision"], record["doc"])
                self._write_doc_file(record["collection"], record["id"],
                                     record["revision"], record["doc"])
        self._checkpoint()

    def _read_wal(self):
        if not self.wal_path.exists():
            return
        data = self.wal_path.read_bytes()
        pos = 0
        while pos + 4 <= len(data):
            (length,) = struct.unpack(">I", data[pos : pos + 4])
            end = pos + 4 + length + 4
            if end > len(data):
                break  # torn tail record: never committed
            payload = data[pos + 4 : pos + 4 + length]
            (crc,) = struct.unpack(">I", data[end - 4 : end])
            if zlib.crc32(payload) != crc:
                break
            try:
                yield json.loads(payload.decode("utf-8"))
            except ValueError:
                break
            pos = end

    # -- write path ----------------------------------------------------

    def _doc_path(self, collection: str, doc_id: str) -> Path:
        return self.data_dir / collection / f"{doc_id}.json"

    def _append_wal(self, record: dict) -> None:
        payload = canonical_bytes(record)
        frame = struct.pack(">I", len(payload)) + payload + struct.pack(
            ">I", zlib.crc32(payload)
        )
        with open(self.wal_path, "ab") as fh:
            fh.write(frame)
            fh.flush()
            os.fsync(fh.fileno())

    def _write_doc_file(self, collection: str, doc_id: str, revision: int, doc: dict) -> None:
        path = self._doc_path(collection, doc_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_bytes(canonical_bytes({"revision": revision, "doc": doc}))
        with open(tmp, "rb") as fh:
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    def _checkpoint(self) -> None:
        with open(self.wal_path, "wb") as fh:
            fh.flush()
            os.fsync(fh.fileno())
        self._writes_since_checkpoint = 0

    def put_document(
        self, collection: str, doc_id: str, doc: dict, expected_revision: int | None = None
    ) -> int:
        """Commit a document durably; conflict when the revision is stale."""
        with self._lock:
            current = self._cache.setdefault(collection, {}).get(doc_id)
            current_revision = current[0] if current else 0
            if expected_revision is not None and expected_revision != current_revision:
                raise ConflictError(
                    f"{collection}/{doc_id}: expected revision {expected_revision},"
                    f" current is {current_revision}",
                    current_revision=current_revision,
                )
            revision = current_revision + 1
            doc = copy.deepcopy(doc)
            self._append_wal(
                {"collection": collection, "id": doc_id, "revision": revision, "doc": doc}
            )
            self._write_doc_file(collection, doc_id, revision, doc)
            self._cache[collection][doc_id] = (revision, doc)
            self._writes_since_checkpoint += 1
            if self._writes_since_checkpoint >= self._checkpoint_every:
                self._checkpoint()
            return revision

    def delete_document(
        self, collection: str, doc_id: str, expected_revision: int | None = None
    ) -> None:
        with self._lock:
            current = self._cache.get(collection, {}).get(doc_id)
            if current is None:
                raise NotFoundError(f"{collection}/{doc_id} does not exist")
            if expected_revision is not None and expected_revision != current[0]:
                raise ConflictError(
                    f"{collection}/{doc_id}: stale revision", current_revision=current[0]
                )
            self._append_wal(
                {
                    "collection": collection,
                    "id": doc_id,
                    "revision": current[0] + 1,
                    "deleted": True,
                }
            )
            self._doc_path(collection, doc_id).unlink(missing_ok=True)
            del self._cache[collection][doc_id]

    def get_document(self, collection: str, doc_id: str) -> tuple[dict, int]:
        with self._lock:
            entry = self._cache.get(collection, {}).get(doc_id)
            if entry is None:
                raise NotFoundError(f"{collection}/{doc_id} does not exist")
            revision, doc = entry
        return copy.deepcopy(doc), revision

    def list_documents(
        self,
        collection: str,
        filter_equals: dict | None = None,
        sort: str | None = None,
        limit: int | None = None,
    ) -> list[tuple[str, dict, int]]:
        """Committed snapshot listing; unknown collections are empty.

        ``filter_equals`` keeps documents whose fields equal every given
        value; ``sort`` is a field name, ``-field`` for descending.  The
        sort is stable over the id-ordered snapshot.
        """
        with self._lock:
            snapshot = [
                (doc_id, copy.deepcopy(doc), revision)
                for doc_id, (revision, doc) in sorted(
                    self._cache.get(collection, {}).items()
                )
            ]
        if filter_equals:
            snapshot = [
                row
                for row in snapshot
                if all(row[1].get(k) == v for k, v in filter_equals.items())
            ]
        if sort:
            descending = sort.startswith("-")
            field = sort.lstrip("-")
            snapshot.sort(key=lambda row: row[1].get(field), reverse=descending)
        if limit is not None:
            snapshot = snapshot[: max(limit, 0)]
        return snapshot

    def collections(self) -> list[str]:
        with self._lock:
            return sorted(self._cache)


class BlobStore:
    """Immutable content-addressed blobs; the id is the SHA-256 hex digest."""

    def __init__(self, root: Path):
        self.blob_dir = Path(root) / "blobs"
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, blob_id: str) -> Path:
        return self.blob_dir / blob_id[:2] / blob_id

    def put_blob(self, data: bytes) -> str:
        blob_id = hashlib.sha256(data).hexdigest()
        path = self._path(blob_id)
        if path.exists():
            return blob_id
        with self._lock:
            if path.exists():
                return blob_id
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_bytes(data)
            with open(tmp, "rb") as fh:
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        return blob_id

    def get_blob(self, blob_id: str) -> bytes:
        path = self._path(blob_id)
        if not path.exists():
            raise NotFoundError(f"blob {blob_id} does not exist")
        data = path.read_bytes()
        if hashlib.sha256(data).hexdigest() != blob_id:
            raise CorruptionError(f"blob {blob_id} failed its content hash check")
        return data

    def has_blob(self, blob_id: str) -> bool:
        return self._path(blob_id).exists()


def _referenced_blob_ids(value, out: set) -> None:
    if isinstance(value, dict):
        for key, item in value.items():
            if key.endswith("_ref") and isinstance(item, str) and item:
                out.add(item)
            elif key.endswith("_refs") and isinstance(item, list):
                out.update(ref for ref in item if isinstance(ref, str) and ref)
            else:
                _referenced_blob_ids(item, out)
    elif isinstance(value, list):
        for item in value:
            _referenced_blob_ids(item, out)


def verify_references(documents: DocumentStore, blobs: BlobStore) -> list[str]:
    """Consistency scan: blob ids referenced by any document but missing."""
    referenced: set[str] = set()
    for collection in documents.collections():
        for _, doc, _ in documents.list_documents(collection):
            _referenced_blob_ids(doc, referenced)
    return sorted(ref for ref in referenced if not blobs.has_blob(ref))


# --- Users ------------------------------------------------------------------


def hash_password(password: str, *, iterations: int = PBKDF2_ITERATIONS) -> str:
    salt = secrets.token_bytes(SALT_BYTES)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, iterations)
    return f"{salt.hex()}:{iterations}:{digest.hex()}"


def check_password(password: str, stored: str) -> bool:
    try:
        salt_hex, iterations_text, digest_hex = stored.split(":")
        salt = bytes.fromhex(salt_hex)
        iterations = int(iterations_text)
        expected = bytes.fromhex(digest_hex)
    except ValueError:
        return False
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, iterations)
    return hmac.compare_digest(digest, expected)


class UserStore:
    """Usernames, salted iterated password hashes, and roles."""

    COLLECTION = "users"

    def __init__(self, documents: DocumentStore):
        self.documents = documents

    def upsert_user(self, username: str, password: str, role: str) -> None:
        if not username:
            raise ValueError("username must be non-empty")
        if not password:
            raise ValueError("password must be non-empty")
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        self.documents.put_document(
            self.COLLECTION,
            username,
            {"username": username, "password_hash": hash_password(password), "role": role},
        )

    def verify_password(self, username: str, password: str) -> bool:
        """False for wrong passwords and unknown users alike."""
        try:
            doc, _ = self.documents.get_document(self.COLLECTION, username)
        except NotFoundError:
            # burn comparable time so unknown users are indistinguishable
            check_password(password, hash_password("timing-equalizer"))
            return False
        return check_password(password, doc["password_hash"])

    def set_role(self, username: str, role: str) -> None:
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        doc, revision = self.documents.get_document(self.COLLECTION, username)
        doc["role"] = role
        self.documents.put_document(self.COLLECTION, username, doc, expected_revision=revision)

    def set_password(self, username: str, password: str) -> None:
        if not password:
            raise ValueError("password must be non-empty")
        doc, revision = self.documents.get_document(self.COLLECTION, username)
        doc["password_hash"] = hash_password(password)
        self.documents.put_document(self.COLLECTION, username, doc, expected_revision=revision)

    def get_user(self, username: str) -> dict:
        doc, _ = self.documents.get_document(self.COLLECTION, username)
        return doc

    def list_users(self) -> list[dict]:
        return [doc for _, doc, _ in self.documents.list_documents(self.COLLECTION)]
