"""Service-level errors with stable codes, mapped to HTTP statuses."""

from __future__ import annotations


class ServiceError(Exception):
    code = "error"
    http_status = 500

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def body(self) -> dict:
        return {"code": self.code, "message": self.message}


class AuthenticationError(ServiceError):
    code = "unauthorized"
    http_status = 401


class ForbiddenError(ServiceError):
    code = "forbidden"
    http_status = 403


class NotFoundError(ServiceError):
    code = "not_found"
    http_status = 404


class ConflictError(ServiceError):
    code = "conflict"
    http_status = 409

    def __init__(self, message: str, current_revision: int | None = None):
        super().__init__(message)
        self.current_revision = current_revision

    def body(self) -> dict:
        body = super().body()
        if self.current_revision is not None:
            body["current_revision"] = self.current_revision
        return body


class ValidationError(ServiceError):
    code = "validation"
    http_status = 400
