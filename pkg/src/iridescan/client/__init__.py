from .analyze import AnalyzeInputError, load_model, load_params, run_analyze, write_outputs
from .review import ReviewError, ReviewSession
from .spool import STATE_LOCAL_ONLY, STATE_SYNCED, STATE_UPLOADING, LocalSpool
from .sync import ApiClient, AuthFailure, SyncError, download_bundle, sync_spool

__all__ = [
    "AnalyzeInputError",
    "ApiClient",
    "AuthFailure",
    "LocalSpool",
    "ReviewError",
    "ReviewSession",
    "STATE_LOCAL_ONLY",
    "STATE_SYNCED",
    "STATE_UPLOADING",
    "SyncError",
    "download_bundle",
    "load_model",
    "load_params",
    "run_analyze",
    "sync_spool",
    "write_outputs",
]
