"""Durable registries backing the customization framework.

One directory per collection, one JSON document plus one version file per
key. Writes go through a temp file and an atomic rename, so an interrupted
put leaves either the old or the new complete document, never a torn one.
Optimistic concurrency via expected versions; writes are serialized.
"""

from __future__ import annotations

import json
import os
import re
import threading
from pathlib import Path

from . import ovm, workflow
from .jsondoc import DocumentError, expect_bool, expect_list, expect_object, expect_string
from .validation import VALID, report_from_dict

COLLECTIONS = ("models", "tenants", "processes", "aspects", "services")

_KEY_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]*\Z")


class StoreError(Exception):
    pass


class BadKeyError(StoreError):
    pass


class NotFoundError(StoreError, KeyError):
    pass


class VersionConflictError(StoreError):
    def __init__(self, key: str, expected: int, current: int) -> None:
        super().__init__(f"version conflict on {key!r}: expected {expected}, current {current}")
        self.expected = expected
        self.current = current


class StoreValidationError(StoreError):
    """The value fails its collection's invariant checks."""


def validate_model_document(document: dict) -> None:
    model = ovm.parse_model(document)
    errors = [d for d in ovm.check_model(model) if d.severity == "error"]
    if errors:
        raise StoreValidationError("; ".join(f"{d.location}: {d.message}" for d in errors))


def validate_tenant_record(document: dict) -> None:
    record = expect_object(document, "$", required=("tenant_id", "model_id", "active", "report", "history"))
    expect_string(record["tenant_id"], "$.tenant_id")
    expect_string(record["model_id"], "$.model_id")
    active = expect_bool(record["active"], "$.active")
    report = report_from_dict(record["report"])
    for i, submission in enumerate(expect_list(record["history"], "$.history")):
        expect_object(submission, f"$.history[{i}]", required=("at", "mode", "instances"),
                      optional=("incremental",))
    if active and report.vf != VALID:
        raise StoreValidationError("active tenant record requires a valid report")


def validate_process_document(document: dict) -> None:
    workflow.parse_process(document)


def validate_aspect_document(document: dict) -> None:
    workflow.parse_aspect(document)


def validate_service_document(document: dict) -> None:
    workflow.parse_service_stub(document)


_VALIDATORS = {
    "models": validate_model_document,
    "tenants": validate_tenant_record,
    "processes": validate_process_document,
    "aspects": validate_aspect_document,
    "services": validate_service_document,
}


class Collection:
    """Keyed JSON documents under ``root/name`` with per-key version counters."""

    def __init__(self, root: Path, name: str, lock: threading.RLock) -> None:
        self.name = name
        self.path = root / name
        self.path.mkdir(parents=True, exist_ok=True)
        self._lock = lock
        self._validator = _VALIDATORS.get(name)

    def _check_key(self, key: str) -> str:
        if not _KEY_RE.match(key):
            raise BadKeyError(f"illegal key {key!r}")
        return key

    def _version_path(self, key: str) -> Path:
        return self.path / f"{key}.version"

    def _value_path(self, key: str) -> Path:
        return self.path / f"{key}.json"

    def _current_version(self, key: str) -> int:
        try:
            return int(self._version_path(key).read_text(encoding="utf-8"))
        except FileNotFoundError:
            return 0

    def _write_atomic(self, target: Path, payload: str) -> None:
        tmp = target.with_name(target.name + ".tmp")
        with open(tmp, "w", encoding="utf-8") as handle:
            handle.write(payload)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, target)

    def put(self, key: str, value: dict, expected_version: int | None = None) -> int:
        self._check_key(key)
        if self._validator is not None:
            try:
                self._validator(value)
            except DocumentError as exc:
                raise StoreValidationError(str(exc)) from None
        with self._lock:
            current = self._current_version(key)
            if expected_version is not None and expected_version != current:
                raise VersionConflictError(key, expected_version, current)
            version = current + 1
            self._write_atomic(self._value_path(key), json.dumps(value, indent=2) + "\n")
            self._write_atomic(self._version_path(key), str(version))
            return version

    def get(self, key: str) -> tuple[dict, int]:
        self._check_key(key)
        try:
            raw = self._value_path(key).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise NotFoundError(f"{self.name}/{key} not found") from None
        return json.loads(raw), self._current_version(key)

    def list(self) -> list[tuple[str, int]]:
        keys = sorted(p.stem for p in self.path.glob("*.json"))
        return [(key, self._current_version(key)) for key in keys]

    def delete(self, key: str) -> None:
        self._check_key(key)
        with self._lock:
            try:
                self._value_path(key).unlink()
            except FileNotFoundError:
                raise NotFoundError(f"{self.name}/{key} not found") from None
            self._version_path(key).unlink(missing_ok=True)

    def exists(self, key: str) -> bool:
        self._check_key(key)
        return self._value_path(key).exists()


class StoreCatalog:
    """The five registries: models, tenants, processes, aspects, services."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        lock = threading.RLock()
        self.models = Collection(self.root, "models", lock)
        self.tenants = Collection(self.root, "tenants", lock)
        self.processes = Collection(self.root, "processes", lock)
        self.aspects = Collection(self.root, "aspects", lock)
        self.services = Collection(self.root, "services", lock)

    def collection(self, name: str) -> Collection:
        if name not in COLLECTIONS:
            raise BadKeyError(f"unknown collection {name!r}")
        return getattr(self, name)

    def check_references(self) -> list[str]:
        """Report dangling references instead of hiding them."""
        problems = []
        model_keys = {key for key, _ in self.models.list()}
        for key, _ in self.tenants.list():
            record, _ = self.tenants.get(key)
            if record.get("model_id") not in model_keys:
                problems.append(f"tenants/{key}: unknown model {record.get('model_id')!r}")
        service_keys = {key for key, _ in self.services.list()}
        for key, _ in self.processes.list():
            process = workflow.parse_process(self.processes.get(key)[0])
            for activity in process.activities:
                if activity.kind == "invoke" and activity.service not in service_keys:
                    problems.append(f"processes/{key}: unknown service {activity.service!r}")
        for key, _ in self.aspects.list():
            aspect = workflow.parse_aspect(self.aspects.get(key)[0])
            for activity in aspect.advice.body:
                if activity.kind == "invoke" and activity.service not in service_keys:
                    problems.append(f"aspects/{key}: unknown service {activity.service!r}")
        return problems
