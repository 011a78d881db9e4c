from .auth import AuthService, Principal
from .context import AppContext
from .entrypoint import EntrypointService, StatisticsResult, bundle_hash
from .errors import (
    AuthenticationError,
    ConflictError,
    ForbiddenError,
    NotFoundError,
    ServiceError,
    ValidationError,
)
from .ml import MlService, ModelVersion
from .routing import route, ROUTE_TABLE

__all__ = [
    "AppContext",
    "AuthService",
    "AuthenticationError",
    "ConflictError",
    "EntrypointService",
    "ForbiddenError",
    "MlService",
    "ModelVersion",
    "NotFoundError",
    "Principal",
    "ROUTE_TABLE",
    "ServiceError",
    "StatisticsResult",
    "ValidationError",
    "bundle_hash",
    "route",
]
