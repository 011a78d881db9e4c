"""Request dependencies: context access and bearer-token authorization."""

from __future__ import annotations

from fastapi import Depends, Request

from ..services import AppContext, AuthenticationError
from ..services.auth import Principal
from ..store import ROLE_ADMIN, ROLE_OPERATOR


def get_ctx(request: Request) -> AppContext:
    return request.app.state.ctx


def _bearer_token(request: Request) -> str:
    header = request.headers.get("Authorization", "")
    scheme, _, token = header.partition(" ")
    if scheme.lower() != "bearer" or not token:
        raise AuthenticationError("missing bearer token")
    return token.strip()


def require_operator(
    request: Request, ctx: AppContext = Depends(get_ctx)
) -> Principal:
    return ctx.auth.authorize(_bearer_token(request), ROLE_OPERATOR)


def require_admin(request: Request, ctx: AppContext = Depends(get_ctx)) -> Principal:
    return ctx.auth.authorize(_bearer_token(request), ROLE_ADMIN)
