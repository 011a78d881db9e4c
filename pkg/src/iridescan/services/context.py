"""Application context: wires stores, queue, and services into one process.

The services are kept behind module boundaries (auth / entrypoint / ml) so
they could be split into separate processes without API changes; in this
deployment they share one context and one in-process router.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Callable

from ..domain import PipelineParams, utc_now
from ..jobs import JobQueue
from ..store import BlobStore, DocumentStore, NotFoundError, ROLE_ADMIN, UserStore
from .auth import AuthService
from .entrypoint import DEFAULT_CLASSES, EntrypointService
from .ml import (
    KIND_ANALYZE,
    KIND_RETRAIN,
    MlService,
    validate_analysis_payload,
    validate_retrain_payload,
)

DEFAULT_TOKEN_LIFETIME = 8 * 3600  # seconds


class AppContext:
    def __init__(
        self,
        data_dir: Path,
        clock: Callable = utc_now,
        token_lifetime_seconds: int = DEFAULT_TOKEN_LIFETIME,
        default_params: PipelineParams = PipelineParams(),
        bootstrap_admin_password: str | None = None,
    ):
        self.data_dir = Path(data_dir)
        self.clock = clock
        self.token_lifetime_seconds = token_lifetime_seconds
        self.default_params = default_params
        self.documents = DocumentStore(self.data_dir)
        self.blobs = BlobStore(self.data_dir)
        self.users = UserStore(self.documents)
        self.auth = AuthService(self)
        self.entrypoint = EntrypointService(self)
        self.ml = MlService(self)
        self.queue = JobQueue(
            "ml",
            self.data_dir / "queue.log",
            clock=self.clock,
            on_terminal=self.ml.unlock_on_terminal,
        )
        self.queue.register_handler(
            KIND_ANALYZE, self.ml.handle_analysis, validate_analysis_payload
        )
        self.queue.register_handler(
            KIND_RETRAIN, self.ml.handle_retrain, validate_retrain_payload
        )
        self._daily_hooks: list[Callable[[], None]] = [self._refresh_statistics]
        self._bootstrap(bootstrap_admin_password)

    def _bootstrap(self, admin_password: str | None) -> None:
        if not self.users.list_users():
            password = admin_password or os.environ.get(
                "IRIDESCAN_ADMIN_PASSWORD", "admin"
            )
            self.users.upsert_user("admin", password, ROLE_ADMIN)

    # -- scheduled hook -----------------------------------------------------
    # One fixed daily hook; its default body refreshes the statistics cache
    # document so dashboards can read a precomputed copy.

    def register_daily_hook(self, hook: Callable[[], None]) -> None:
        self._daily_hooks.append(hook)

    def run_daily_hooks(self) -> int:
        for hook in self._daily_hooks:
            hook()
        return len(self._daily_hooks)

    def _refresh_statistics(self) -> None:
        stats = self.entrypoint.statistics()
        try:
            _, revision = self.documents.get_document("config", "statistics_cache")
        except NotFoundError:
            revision = 0
        self.documents.put_document(
            "config", "statistics_cache", stats.to_dict(), expected_revision=revision
        )

    def start(self) -> None:
        self.queue.start_worker()

    def stop(self) -> None:
        self.queue.stop_worker()
