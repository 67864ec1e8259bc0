"""Strict helpers for walking JSON definition documents.

Every reader takes the JSON path of the element it inspects so schema
errors can point at the offending field. Unknown keys are rejected.
"""

from __future__ import annotations

import json
from typing import Any


class DocumentError(ValueError):
    """A definition document violates its file schema."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


def load_document(document: str | bytes | dict, path: str = "$") -> dict:
    """Accept raw JSON text or an already-decoded object; must be an object."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise DocumentError(path, f"not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise DocumentError(path, "document root must be a JSON object")
    return document


def expect_object(value: Any, path: str, required: tuple[str, ...],
                  optional: tuple[str, ...] = ()) -> dict:
    if not isinstance(value, dict):
        raise DocumentError(path, "expected a JSON object")
    for key in value:
        if key not in required and key not in optional:
            raise DocumentError(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in value:
            raise DocumentError(path, f"missing required key {key!r}")
    return value


def expect_string(value: Any, path: str, nonempty: bool = True) -> str:
    if not isinstance(value, str):
        raise DocumentError(path, "expected a string")
    if nonempty and not value:
        raise DocumentError(path, "must not be empty")
    return value


def expect_int(value: Any, path: str) -> int:
    # bool is an int subclass; reject it explicitly
    if not isinstance(value, int) or isinstance(value, bool):
        raise DocumentError(path, "expected an integer")
    return value


def expect_bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise DocumentError(path, "expected a boolean")
    return value


def expect_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise DocumentError(path, "expected an array")
    return value
