"""Runtime configuration: JSON config file plus environment overrides.

Precedence: explicit arguments > PROMPTGRID_* environment variables >
config file values > defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .gateway import EndpointConfig, FixtureStore, GatewayMode, LiveHttpBackend, ModelGateway

DEFAULT_UPLOAD_CAP_BYTES = 20 * 1024 * 1024

_ENV_PREFIX = "PROMPTGRID_"


@dataclass
class AppConfig:
    backend_mode: str = "replay"
    fixtures_dir: str | None = None
    storage_dir: str = "promptgrid-data"
    vocab_dir: str | None = None
    guideline_catalog_path: str | None = None
    parallelism: int = 8
    detection_threshold: float = 0.3
    model_space: str = "default"
    upload_cap_bytes: int = DEFAULT_UPLOAD_CAP_BYTES
    retries: int = 3
    backoff_seconds: float = 0.5
    timeout_seconds: float = 30.0
    default_host_table: str = "content"
    endpoints: dict[str, dict[str, Any]] = field(default_factory=dict)

    @classmethod
    def load(cls, config_path: str | Path | None = None, **overrides: Any) -> "AppConfig":
        values: dict[str, Any] = {}
        if config_path is not None:
            values.update(json.loads(Path(config_path).read_text("utf-8")))

        for spec in fields(cls):
            env_name = _ENV_PREFIX + spec.name.upper()
            if env_name in os.environ:
                raw = os.environ[env_name]
                if spec.name == "endpoints":
                    values[spec.name] = json.loads(raw)
                elif spec.type in ("int",):
                    values[spec.name] = int(raw)
                elif spec.type in ("float",):
                    values[spec.name] = float(raw)
                else:
                    values[spec.name] = raw

        values.update({k: v for k, v in overrides.items() if v is not None})
        known = {spec.name for spec in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)

    def build_gateway(self) -> ModelGateway:
        mode = GatewayMode(self.backend_mode)
        store = FixtureStore(self.fixtures_dir) if self.fixtures_dir else None
        backend = None
        if mode in (GatewayMode.LIVE, GatewayMode.RECORD):
            backend = LiveHttpBackend(
                endpoints={
                    name: EndpointConfig(url=cfg["url"], credential=cfg.get("credential"))
                    for name, cfg in self.endpoints.items()
                },
                retries=self.retries,
                backoff_seconds=self.backoff_seconds,
                timeout_seconds=self.timeout_seconds,
            )
        return ModelGateway(mode, backend=backend, store=store, model_space=self.model_space)
