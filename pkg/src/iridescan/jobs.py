"""Persistent FIFO job queue with one background worker per queue.

Analysis and retraining tasks run here so the web layer never blocks.  The
queue is an append-only log of length-prefixed canonical-JSON records
``{"event": "enqueued"|"started"|"finished"|"cancelled", "job": {...}}``
(4-byte big-endian length, then the UTF-8 payload).  Every record is
flushed before the operation returns, so an enqueued job survives a crash.

Execution is at-most-once: a job that was running when the process died is
recovered as failed with error "interrupted" and must be re-enqueued by
hand.  Cancellation is cooperative; handlers observe it at frame
boundaries through their :class:`JobContext`.
"""

from __future__ import annotations

import copy
import json
import os
import struct
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional

from .domain import canonical_bytes, format_timestamp, parse_timestamp, utc_now

JOB_QUEUED = "queued"
JOB_RUNNING = "running"
JOB_SUCCEEDED = "succeeded"
JOB_FAILED = "failed"
JOB_CANCELLED = "cancelled"
JOB_STATES = (JOB_QUEUED, JOB_RUNNING, JOB_SUCCEEDED, JOB_FAILED, JOB_CANCELLED)
TERMINAL_STATES = (JOB_SUCCEEDED, JOB_FAILED, JOB_CANCELLED)


class JobError(Exception):
    pass


class PayloadError(JobError):
    """The payload does not fit the schema expected for the job kind."""


class UnknownJobError(JobError):
    pass


class JobStateError(JobError):
    """The requested transition is not allowed from the job's state."""


class JobCancelled(Exception):
    """Raised inside a handler when cooperative cancellation is observed."""


@dataclass
class Job:
    id: str
    kind: str
    payload: dict
    state: str = JOB_QUEUED
    enqueued_at: Optional[datetime] = None
    started_at: Optional[datetime] = None
    finished_at: Optional[datetime] = None
    result_ref: Optional[str] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        def stamp(ts):
            return format_timestamp(ts) if ts else None

        return {
            "id": self.id,
            "kind": self.kind,
            "payload": self.payload,
            "state": self.state,
            "enqueued_at": stamp(self.enqueued_at),
            "started_at": stamp(self.started_at),
            "finished_at": stamp(self.finished_at),
            "result_ref": self.result_ref,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Job":
        def unstamp(text):
            return parse_timestamp(text) if text else None

        return cls(
            id=data["id"],
            kind=data["kind"],
            payload=data["payload"],
            state=data["state"],
            enqueued_at=unstamp(data.get("enqueued_at")),
            started_at=unstamp(data.get("started_at")),
            finished_at=unstamp(data.get("finished_at")),
            result_ref=data.get("result_ref"),
            error=data.get("error"),
        )


class JobContext:
    """Handed to handlers; exposes the cooperative cancellation flag."""

    def __init__(self, cancel_event: threading.Event):
        self._cancel_event = cancel_event

    @property
    def cancelled(self) -> bool:
        return self._cancel_event.is_set()

    def check_cancelled(self) -> None:
        if self.cancelled:
            raise JobCancelled()


Handler = Callable[[dict, JobContext], Optional[str]]


class JobQueue:
    """Durable FIFO of jobs with at most one running at any instant."""

    def __init__(
        self,
        name: str,
        log_path: Path,
        clock: Callable[[], datetime] = utc_now,
        on_terminal: Callable[[Job], None] | None = None,
    ):
        self.name = name
        self.log_path = Path(log_path)
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        self._clock = clock
        self._on_terminal = on_terminal
        self._handlers: dict[str, Handler] = {}
        self._validators: dict[str, Callable[[dict], None]] = {}
        self._lock = threading.RLock()
        self._jobs: dict[str, Job] = {}
        self._order: list[str] = []
        self._cancel_events: dict[str, threading.Event] = {}
        self._running_id: str | None = None
        self._worker_thread: threading.Thread | None = None
        self._worker_stop = threading.Event()
        self._wake = threading.Event()
        self._recover()

    # -- log -------------------------------------------------------------

    def _append_record(self, event: str, job: Job) -> None:
        payload = canonical_bytes({"event": event, "job": job.to_dict()})
        with open(self.log_path, "ab") as fh:
            fh.write(struct.pack(">I", len(payload)) + payload)
            fh.flush()
            os.fsync(fh.fileno())

    def _read_records(self):
        if not self.log_path.exists():
            return
        data = self.log_path.read_bytes()
        pos = 0
        while pos + 4 <= len(data):
            (length,) = struct.unpack(">I", data[pos : pos + 4])
            end = pos + 4 + length
            if end > len(data):
                break  # torn tail from a crash mid-append
            try:
                yield json.loads(data[pos + 4 : end].decode("utf-8"))
            except ValueError:
                break
            pos = end

    def _recover(self) -> None:
        interrupted: list[Job] = []
        for record in self._read_records():
            job = Job.from_dict(record["job"])
            if record["event"] == "enqueued":
                if job.id not in self._jobs:
                    self._order.append(job.id)
                self._jobs[job.id] = job
            elif job.id in self._jobs:
                self._jobs[job.id] = job
        for job_id in self._order:
            job = self._jobs[job_id]
            if job.state == JOB_RUNNING:
                job.state = JOB_FAILED
                job.error = "interrupted"
                job.finished_at = self._clock()
                self._append_record("finished", job)
                interrupted.append(copy.deepcopy(job))
        for job in interrupted:
            self._notify_terminal(job)

    def compact(self) -> None:
        """Rewrite the log with one record per job, preserving state."""
        with self._lock:
            tmp = self.log_path.with_suffix(".log.tmp")
            with open(tmp, "wb") as fh:
                for job_id in self._order:
                    payload = canonical_bytes(
                        {"event": "enqueued", "job": self._jobs[job_id].to_dict()}
                    )
                    fh.write(struct.pack(">I", len(payload)) + payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.log_path)

    # -- registration ------------------------------------------------------

    def register_handler(
        self,
        kind: str,
        handler: Handler,
        validator: Callable[[dict], None] | None = None,
    ) -> None:
        self._handlers[kind] = handler
        if validator:
            self._validators[kind] = validator

    # -- operations ---------------------------------------------------------

    def enqueue(self, kind: str, payload: dict) -> Job:
        """Append a job at the tail; the log record is durable on return."""
        if kind not in self._handlers:
            raise PayloadError(f"unknown job kind {kind!r}")
        if not isinstance(payload, dict):
            raise PayloadError("payload must be a JSON object")
        validator = self._validators.get(kind)
        if validator:
            try:
                validator(payload)
            except ValueError as exc:
                raise PayloadError(str(exc)) from None
        job = Job(
            id=f"job-{uuid.uuid4().hex[:12]}",
            kind=kind,
            payload=copy.deepcopy(payload),
            state=JOB_QUEUED,
            enqueued_at=self._clock(),
        )
        with self._lock:
            self._append_record("enqueued", job)
            self._jobs[job.id] = job
            self._order.append(job.id)
        self._wake.set()
        return copy.deepcopy(job)

    def _next_queued(self) -> Job | None:
        for job_id in self._order:
            if self._jobs[job_id].state == JOB_QUEUED:
                return self._jobs[job_id]
        return None

    def worker_step(self) -> Job | None:
        """Run the head job to completion, if idle; returns the final job."""
        with self._lock:
            if self._running_id is not None:
                return None
            job = self._next_queued()
            if job is None:
                return None
            # a recovered log can hold kinds nobody registered this run
            handler = self._handlers.get(job.kind)
            if handler is None:
                job.state = JOB_FAILED
                job.finished_at = self._clock()
                job.error = f"no handler for kind {job.kind!r}"
                self._append_record("finished", job)
                snapshot = copy.deepcopy(job)
            else:
                job.state = JOB_RUNNING
                job.started_at = self._clock()
                self._append_record("started", job)
                self._running_id = job.id
                cancel_event = self._cancel_events.setdefault(job.id, threading.Event())
                payload = copy.deepcopy(job.payload)
                snapshot = None
        if snapshot is not None:
            self._notify_terminal(snapshot)
            return snapshot
        context = JobContext(cancel_event)
        try:
            result_ref = handler(payload, context)
            final_state, result, error = JOB_SUCCEEDED, result_ref, None
        except JobCancelled:
            final_state, result, error = JOB_FAILED, None, "cancelled"
        except Exception as exc:  # noqa: BLE001 - failures become job state
            final_state, result, error = JOB_FAILED, None, str(exc) or repr(exc)
        with self._lock:
            job.state = final_state
            job.finished_at = self._clock()
            job.result_ref = result if final_state == JOB_SUCCEEDED else None
            job.error = error
            self._append_record("finished", job)
            self._running_id = None
            self._cancel_events.pop(job.id, None)
            snapshot = copy.deepcopy(job)
        self._notify_terminal(snapshot)
        return snapshot

    def cancel(self, job_id: str) -> Job:
        """Cancel a queued job outright or flag a running one to stop."""
        terminal_snapshot = None
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJobError(f"no job {job_id!r}")
            if job.state == JOB_QUEUED:
                job.state = JOB_CANCELLED
                job.finished_at = self._clock()
                self._append_record("cancelled", job)
                terminal_snapshot = copy.deepcopy(job)
            elif job.state == JOB_RUNNING:
                self._cancel_events.setdefault(job_id, threading.Event()).set()
            else:
                raise JobStateError(f"job {job_id} already {job.state}")
            snapshot = copy.deepcopy(job)
        if terminal_snapshot is not None:
            self._notify_terminal(terminal_snapshot)
        return snapshot

    def list_jobs(self, state: str | None = None) -> list[Job]:
        if state is not None and state not in JOB_STATES:
            raise ValueError(f"unknown state {state!r}")
        with self._lock:
            jobs = [copy.deepcopy(self._jobs[j]) for j in self._order]
        if state is not None:
            jobs = [j for j in jobs if j.state == state]
        return jobs

    def get_job(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJobError(f"no job {job_id!r}")
            return copy.deepcopy(job)

    def running_id(self) -> str | None:
        with self._lock:
            return self._running_id

    def _notify_terminal(self, job: Job) -> None:
        if self._on_terminal is not None:
            self._on_terminal(job)

    # -- background worker ---------------------------------------------------

    def start_worker(self, poll_interval: float = 0.05) -> None:
        if self._worker_thread and self._worker_thread.is_alive():
            return
        self._worker_stop.clear()

        def loop():
            while not self._worker_stop.is_set():
                if self.worker_step() is None:
                    self._wake.wait(poll_interval)
                    self._wake.clear()

        self._worker_thread = threading.Thread(
            target=loop, name=f"{self.name}-worker", daemon=True
        )
        self._worker_thread.start()

    def stop_worker(self, timeout: float = 5.0) -> None:
        self._worker_stop.set()
        self._wake.set()
        if self._worker_thread:
            self._worker_thread.join(timeout)
            self._worker_thread = None
