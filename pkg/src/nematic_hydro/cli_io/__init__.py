"""Configuration parsing, run orchestration, and deterministic output."""
from .config import ConfigError, RunConfig, parse_config, serialize_config
from .output import (
    emit_coefficient_table,
    load_coefficient_row,
    read_field_snapshot,
    read_observation_binary,
    write_field_snapshot,
    write_observation_binary,
)

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "serialize_config",
    "emit_coefficient_table",
    "load_coefficient_row",
    "read_field_snapshot",
    "read_observation_binary",
    "write_field_snapshot",
    "write_observation_binary",
]
