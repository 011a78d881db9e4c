"""Auth service routes: login/logout, identity, user administration."""

from __future__ import annotations

from fastapi import APIRouter, Depends, Request, Response

from ..services import AppContext
from .deps import get_ctx, require_admin, require_operator, _bearer_token
from .schemas import (
    LoginRequest,
    PasswordRequest,
    RoleRequest,
    TokenResponse,
    UserCreateRequest,
    UserResponse,
)

router = APIRouter(prefix="/api/auth", tags=["auth"])


@router.post("/login", response_model=TokenResponse)
def login(body: LoginRequest, ctx: AppContext = Depends(get_ctx)):
    return ctx.auth.login(body.username, body.password)


@router.post("/logout", status_code=204)
def logout(
    request: Request,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    ctx.auth.logout(_bearer_token(request))
    return Response(status_code=204)


@router.get("/me", response_model=UserResponse)
def me(principal=Depends(require_operator)):
    return {"username": principal.username, "role": principal.role}


@router.get("/users", response_model=list[UserResponse])
def list_users(ctx: AppContext = Depends(get_ctx), _=Depends(require_admin)):
    return ctx.auth.list_users()


@router.post("/users", response_model=UserResponse, status_code=201)
def create_user(
    body: UserCreateRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_admin),
):
    return ctx.auth.create_user(body.username, body.password, body.role)


@router.put("/users/{username}/password", status_code=204)
def set_password(
    username: str,
    body: PasswordRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_admin),
):
    ctx.auth.set_password(username, body.password)
    return Response(status_code=204)


@router.put("/users/{username}/role", response_model=UserResponse)
def set_role(
    username: str,
    body: RoleRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_admin),
):
    return ctx.auth.set_role(username, body.role)
