# ============================================================================
# utils/__init__.py
# ============================================================================
"""Utility modules for configuration validation."""

from .validators import (
    CONFIG_SCHEMA,
    assign_faults,
    fault_entries,
    parse_n_values,
    validate_config_data,
)

__all__ = [
    "CONFIG_SCHEMA",
    "assign_faults",
    "fault_entries",
    "parse_n_values",
    "validate_config_data",
]
