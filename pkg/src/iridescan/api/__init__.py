"""FastAPI application: the single entry point in front of all services.

Routing mirrors the in-process route table: /api/auth goes to the auth
service, /api/inspections|defects|statistics|tags to the entrypoint
service, /api/ml to the ML service, and everything else serves the web UI
static assets.  Errors use one JSON shape: {"code", "message"} plus
"current_revision" on conflicts.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from ..services import AppContext, ServiceError
from ..store import ConflictError as StoreConflict
from ..store import CorruptionError, NotFoundError as StoreNotFound
from . import routes_auth, routes_entrypoint, routes_ml

PLACEHOLDER_INDEX = """<!doctype html>
<html><head><title>iridescan</title></head>
<body><h1>iridescan</h1>
<p>The operator UI is not built. See the API reference for the REST surface.</p>
</body></html>"""


def create_app(
    ctx: AppContext,
    webui_dir: Path | None = None,
    run_worker: bool = True,
) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if run_worker:
            ctx.start()
        yield
        if run_worker:
            ctx.stop()

    app = FastAPI(title="iridescan", version="0.1.0", lifespan=lifespan)
    app.state.ctx = ctx

    app.include_router(routes_auth.router)
    app.include_router(routes_entrypoint.router)
    app.include_router(routes_ml.router)

    @app.exception_handler(ServiceError)
    async def service_error(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.http_status, content=exc.body())

    @app.exception_handler(StoreNotFound)
    async def store_not_found(request: Request, exc: StoreNotFound):
        return JSONResponse(status_code=404, content={"code": "not_found", "message": str(exc)})

    @app.exception_handler(StoreConflict)
    async def store_conflict(request: Request, exc: StoreConflict):
        return JSONResponse(
            status_code=409,
            content={
                "code": "conflict",
                "message": str(exc),
                "current_revision": exc.current_revision,
            },
        )

    @app.exception_handler(CorruptionError)
    async def corruption(request: Request, exc: CorruptionError):
        return JSONResponse(
            status_code=500, content={"code": "corruption", "message": str(exc)}
        )

    @app.exception_handler(RequestValidationError)
    async def request_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"code": "validation", "message": str(exc)}
        )

    # any /api path no router claimed: JSON 404 instead of the static fallback
    @app.api_route(
        "/api/{rest:path}",
        methods=["GET", "POST", "PUT", "DELETE", "PATCH"],
        include_in_schema=False,
    )
    async def unmatched_api(rest: str):
        return JSONResponse(
            status_code=404,
            content={"code": "not_found", "message": f"no service handles /api/{rest}"},
        )

    if webui_dir and Path(webui_dir).is_dir():
        app.mount("/", StaticFiles(directory=webui_dir, html=True), name="webui")
    else:

        @app.get("/", include_in_schema=False)
        async def placeholder_index():
            return HTMLResponse(PLACEHOLDER_INDEX)

    return app
