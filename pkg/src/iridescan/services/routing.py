"""Single-entry routing table: longest-prefix dispatch to the services.

Mirrors a reverse proxy mapping every microservice to one point of access,
kept in-process so the services can later be split across processes without
any API change.
"""

from __future__ import annotations

from .errors import NotFoundError

SERVICE_AUTH = "auth"
SERVICE_ENTRYPOINT = "entrypoint"
SERVICE_ML = "ml"
SERVICE_WEBUI = "webui"

ROUTE_TABLE = (
    ("/api/auth", SERVICE_AUTH),
    ("/api/inspections", SERVICE_ENTRYPOINT),
    ("/api/defects", SERVICE_ENTRYPOINT),
    ("/api/statistics", SERVICE_ENTRYPOINT),
    ("/api/tags", SERVICE_ENTRYPOINT),
    ("/api/ml", SERVICE_ML),
)


def route(request_path: str) -> str:
    """Longest-prefix match; unmatched API paths are 404, the rest is UI."""
    path = request_path.split("?", 1)[0]
    best = None
    for prefix, service in ROUTE_TABLE:
        if path == prefix or path.startswith(prefix + "/"):
            if best is None or len(prefix) > len(best[0]):
                best = (prefix, service)
    if best:
        return best[1]
    if path == "/api" or path.startswith("/api/"):
        raise NotFoundError(f"no service handles {path}")
    return SERVICE_WEBUI
