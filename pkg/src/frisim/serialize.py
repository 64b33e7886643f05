"""Helpers shared by the plain-text artifact formats."""

from __future__ import annotations


def format_float(value: float) -> str:
    """Render a float with enough digits to round-trip float64 exactly."""
    return format(float(value), ".17g")


def parse_key_value(line: str) -> tuple[str, str]:
    """Split a ``key=value`` line, stripping surrounding whitespace."""
    if "=" not in line:
        raise ValueError(f"expected key=value, got {line!r}")
    key, _, value = line.partition("=")
    return key.strip(), value.strip()
