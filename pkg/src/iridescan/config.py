"""Server configuration: JSON file with environment overrides.

Environment variables win over the file: IRIDESCAN_HOST, IRIDESCAN_PORT,
IRIDESCAN_DATA_DIR, IRIDESCAN_TOKEN_LIFETIME (seconds), IRIDESCAN_WEBUI_DIR.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    data_dir: Path = Path("iridescan-data")
    token_lifetime_seconds: int = 8 * 3600
    webui_dir: Path | None = None


def load_config(path: str | None = None, env: dict | None = None) -> ServerConfig:
    env = os.environ if env is None else env
    values: dict = {}
    if path:
        values.update(json.loads(Path(path).read_text()))
    if "IRIDESCAN_HOST" in env:
        values["host"] = env["IRIDESCAN_HOST"]
    if "IRIDESCAN_PORT" in env:
        values["port"] = int(env["IRIDESCAN_PORT"])
    if "IRIDESCAN_DATA_DIR" in env:
        values["data_dir"] = env["IRIDESCAN_DATA_DIR"]
    if "IRIDESCAN_TOKEN_LIFETIME" in env:
        values["token_lifetime_seconds"] = int(env["IRIDESCAN_TOKEN_LIFETIME"])
    if "IRIDESCAN_WEBUI_DIR" in env:
        values["webui_dir"] = env["IRIDESCAN_WEBUI_DIR"]
    known = {"host", "port", "data_dir", "token_lifetime_seconds", "webui_dir"}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "data_dir" in values:
        values["data_dir"] = Path(values["data_dir"])
    if values.get("webui_dir"):
        values["webui_dir"] = Path(values["webui_dir"])
    return ServerConfig(**values)
