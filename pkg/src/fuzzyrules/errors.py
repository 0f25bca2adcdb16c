"""Error types that map onto CLI exit codes (config -> 2, data/runtime -> 1)."""
from __future__ import annotations

__all__ = ["ConfigError", "DataError"]


class ConfigError(Exception):
    """Invalid configuration, schema or command usage."""


class DataError(Exception):
    """Input data unusable (too many malformed rows, missing tables, ...)."""
