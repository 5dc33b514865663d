"""Shared exception types and the memory-budget resolver."""

from __future__ import annotations

import os

DEFAULT_MAX_BYTES = 2 * 1024**3
ENV_MAX_BYTES = "FRACUBE_MAX_BYTES"


class FracubeError(Exception):
    """Base class for errors raised by this package."""


class ParseError(FracubeError):
    """Malformed input file (digit-set text or graph JSON)."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)


class BudgetError(FracubeError):
    """An operation would exceed the configured memory budget."""

    def __init__(self, required_bytes: int, allowed_bytes: int, detail: str | None = None):
        self.required_bytes = required_bytes
        self.allowed_bytes = allowed_bytes
        self.detail = detail
        msg = f"memory budget exceeded: required {required_bytes} bytes, allowed {allowed_bytes}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


def memory_budget(override: int | None = None) -> int:
    """Budget in bytes: explicit override, else FRACUBE_MAX_BYTES, else 2 GiB."""
    if override is not None:
        return int(override)
    env = os.environ.get(ENV_MAX_BYTES)
    if env:
        return int(env)
    return DEFAULT_MAX_BYTES
