"""Authentication and authorization: tokens, roles, user administration.

Tokens are opaque random 32-byte values stored server-side, so logout is a
real revocation.  Roles are ordered: admin can do anything an operator can.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from datetime import timedelta

from ..domain import format_timestamp, parse_timestamp
from ..store import NotFoundError as StoreNotFound
from ..store import ROLE_ADMIN, ROLE_OPERATOR, ROLES
from .errors import AuthenticationError, ForbiddenError, NotFoundError, ValidationError

ROLE_RANK = {ROLE_OPERATOR: 0, ROLE_ADMIN: 1}
TOKENS = "tokens"


@dataclass(frozen=True)
class Principal:
    username: str
    role: str


class AuthService:
    def __init__(self, ctx):
        self.ctx = ctx

    def login(self, username: str, password: str) -> dict:
        if not self.ctx.users.verify_password(username, password):
            raise AuthenticationError("bad credentials")
        user = self.ctx.users.get_user(username)
        issued = self.ctx.clock()
        record = {
            "token": secrets.token_bytes(32).hex(),
            "username": username,
            "role": user["role"],
            "issued_at": format_timestamp(issued),
            "expires_at": format_timestamp(
                issued + timedelta(seconds=self.ctx.token_lifetime_seconds)
            ),
        }
        self.ctx.documents.put_document(TOKENS, record["token"], record)
        return record

    def logout(self, token: str) -> None:
        try:
            self.ctx.documents.delete_document(TOKENS, token)
        except StoreNotFound:
            raise AuthenticationError("unknown token") from None

    def authorize(self, token: str, required_role: str = ROLE_OPERATOR) -> Principal:
        """Reject expired or revoked tokens and insufficient roles."""
        if required_role not in ROLE_RANK:
            raise ValidationError(f"unknown role {required_role!r}")
        try:
            record, _ = self.ctx.documents.get_document(TOKENS, token or "")
        except StoreNotFound:
            raise AuthenticationError("invalid or revoked token") from None
        if self.ctx.clock() >= parse_timestamp(record["expires_at"]):
            raise AuthenticationError("token expired")
        if ROLE_RANK[record["role"]] < ROLE_RANK[required_role]:
            raise ForbiddenError(f"requires role {required_role}")
        return Principal(username=record["username"], role=record["role"])

    # -- user administration ------------------------------------------------

    def create_user(self, username: str, password: str, role: str) -> dict:
        if role not in ROLES:
            raise ValidationError(f"unknown role {role!r}")
        try:
            self.ctx.users.upsert_user(username, password, role)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        return {"username": username, "role": role}

    def set_password(self, username: str, password: str) -> None:
        try:
            self.ctx.users.set_password(username, password)
        except StoreNotFound:
            raise NotFoundError(f"no user {username!r}") from None
        except ValueError as exc:
            raise ValidationError(str(exc)) from None

    def set_role(self, username: str, role: str) -> dict:
        try:
            self.ctx.users.set_role(username, role)
        except StoreNotFound:
            raise NotFoundError(f"no user {username!r}") from None
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        return {"username": username, "role": role}

    def list_users(self) -> list[dict]:
        return [
            {"username": u["username"], "role": u["role"]}
            for u in self.ctx.users.list_users()
        ]
