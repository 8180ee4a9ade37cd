"""Run configuration assembled from a config file, environment, and flags."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .engine import DEFAULT_NULL_MARKERS, EngineConfig
from .evaluation import DEFAULT_OVERLAP, DEFAULT_WINDOW
from .gateway import DEFAULT_MODEL, ENDPOINT_ENV, KEY_ENV

FORMATS = ("yaml", "json", "ofn")
BACKENDS = ("replay", "http")


class ConfigError(ValueError):
    pass


def data_path(*parts: str) -> Path:
    """Path to a file shipped in the package's ``data`` directory."""
    return Path(str(resources.files("spires").joinpath("data", *parts)))


def resolve_schema_path(name: str) -> Path:
    """Accept a filesystem path or the name of a bundled schema (``recipe``, ``ctd``)."""
    path = Path(name)
    if path.exists() or path.suffix:
        return path
    bundled = data_path("schemas", f"{name}.yaml")
    return bundled if bundled.exists() else path


@dataclass
class RunConfig:
    schema: str | None = None
    class_name: str | None = None
    backend: str = "replay"
    cassette: str | None = None
    lexicons: list[str] = field(default_factory=list)
    normmap: str | None = None
    partial_match: bool = False
    format: str = "yaml"
    chunking: bool = False
    window: int = DEFAULT_WINDOW
    overlap: int = DEFAULT_OVERLAP
    workers: int = 1
    endpoint: str | None = None
    api_key: str | None = None
    model: str = DEFAULT_MODEL
    temperature: float = 0.0
    recursion_limit: int = 10
    delimiter: str = ";"
    null_markers: list[str] = field(default_factory=lambda: list(DEFAULT_NULL_MARKERS))
    warnings_as_errors: bool = False
    deterministic: bool = False

    @classmethod
    def from_sources(
        cls,
        flags: Mapping[str, Any],
        env: Mapping[str, str] | None = None,
        config_file: str | Path | None = None,
        needs_backend: bool = True,
    ) -> "RunConfig":
        """Merge with precedence flags > environment > config file > defaults.

        ``flags`` entries that are ``None`` count as unset.
        """
        env = os.environ if env is None else env
        names = {f.name for f in fields(cls)}
        merged: dict[str, Any] = {}
        if config_file:
            data = yaml.safe_load(Path(config_file).read_text(encoding="utf-8")) or {}
            if not isinstance(data, dict):
                raise ConfigError(f"{config_file}: config file must be a mapping")
            unknown = set(data) - names
            if unknown:
                raise ConfigError(f"{config_file}: unknown config keys {sorted(unknown)}")
            merged.update(data)
        if env.get(ENDPOINT_ENV):
            merged["endpoint"] = env[ENDPOINT_ENV]
        if env.get(KEY_ENV):
            merged["api_key"] = env[KEY_ENV]
        merged.update({k: v for k, v in flags.items() if k in names and v is not None and v != []})
        cfg = cls(**merged)
        cfg.check(needs_backend)
        return cfg

    def check(self, needs_backend: bool = True) -> None:
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if needs_backend and self.backend == "replay" and not self.cassette:
            raise ConfigError("the replay backend requires --cassette")
        if needs_backend and self.backend == "http" and not self.endpoint:
            raise ConfigError(f"the http backend requires an endpoint ({ENDPOINT_ENV} or config 'endpoint')")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.window <= 0 or not 0 <= self.overlap < self.window:
            raise ConfigError("need window > overlap >= 0")

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            recursion_limit=self.recursion_limit,
            delimiter=self.delimiter,
            null_markers=tuple(self.null_markers),
            warnings_as_errors=self.warnings_as_errors,
            model_id=self.model,
            temperature=self.temperature,
        )
