"""Service configuration: one JSON file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

ENV_BIND = "AHPDELPHI_BIND"
ENV_DATA_DIR = "AHPDELPHI_DATA_DIR"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    data_dir: str = "./ahpdelphi-data"
    # optional directory of built frontend assets, served at /app
    static_dir: str | None = None


def load_config(path: str | None = None) -> ServiceConfig:
    """Read the config file (if any), then apply environment overrides
    for the bind address and data directory."""
    config = ServiceConfig()
    if path:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
        config.host = data.get("host", config.host)
        config.port = int(data.get("port", config.port))
        config.data_dir = data.get("data_dir", config.data_dir)
        config.static_dir = data.get("static_dir", config.static_dir)
    bind = os.environ.get(ENV_BIND)
    if bind:
        host, _, port = bind.rpartition(":")
        config.host = host or config.host
        config.port = int(port)
    data_dir = os.environ.get(ENV_DATA_DIR)
    if data_dir:
        config.data_dir = data_dir
    return config
