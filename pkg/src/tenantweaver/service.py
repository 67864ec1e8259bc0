"""HTTP API: model management, tenant customization validation, weave-and-execute.

Stateless over the store: every request reads current store contents, so a
re-validated customization changes the very next execution without any
restart. Validation responses always carry the full report; invalid or
incomplete customizations come back as 422 so the tenant administrator can
act on IC/CF/VF.
"""

from __future__ import annotations

import os
import time
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from . import workflow
from .jsondoc import DocumentError
from .metagraph import map_ovm, metagraph_export, to_dot
from .ovm import check_model, parse_model
from .store import NotFoundError, StoreCatalog, StoreValidationError, VersionConflictError
from .validation import (
    COMPLETE,
    VALID,
    CustomizationSet,
    parse_customization,
    report_from_dict,
    report_to_dict,
    validate,
    validate_incremental,
)

DEFAULT_ADDR = "127.0.0.1:8080"


def api_error(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message, **extra})


def create_app(data_root: str | Path | None = None) -> FastAPI:
    if data_root is None:
        data_root = os.environ.get("TENANTWEAVER_DATA", "./tenantweaver-data")
    stores = StoreCatalog(data_root)
    app = FastAPI(title="tenantweaver", version="0.1.0")
    app.state.stores = stores
    app.state.started_at = time.time()

    def tenant_guard(request: Request, tenant: str) -> JSONResponse | None:
        header = request.headers.get("X-Tenant-Id")
        if header is not None and header != tenant:
            return api_error(403, "tenant_mismatch",
                             f"X-Tenant-Id {header!r} does not match path tenant {tenant!r}")
        return None

    # ------------------------------------------------------------------ models

    @app.put("/models/{model_id}")
    async def put_model(model_id: str, request: Request, expected_version: int | None = None):
        body = await request.json()
        try:
            model = parse_model(body)
        except DocumentError as exc:
            return api_error(400, "schema_violation", str(exc))
        if model.id != model_id:
            return api_error(400, "id_mismatch",
                             f"document id {model.id!r} does not match path {model_id!r}")
        errors = [d for d in check_model(model) if d.severity == "error"]
        if errors:
            return api_error(400, "invalid_model", "model fails well-formedness checks",
                             diagnostics=[{"severity": d.severity, "location": d.location,
                                           "message": d.message} for d in errors])
        created = not stores.models.exists(model_id)
        try:
            version = stores.models.put(model_id, body, expected_version)
        except VersionConflictError as exc:
            return api_error(409, "version_conflict", str(exc))
        return JSONResponse(status_code=201 if created else 200,
                            content={"id": model_id, "version": version})

    @app.get("/models/{model_id}")
    def get_model(model_id: str):
        try:
            document, version = stores.models.get(model_id)
        except NotFoundError:
            return api_error(404, "not_found", f"model {model_id!r} not found")
        return JSONResponse(content=document, headers={"X-Version": str(version)})

    @app.get("/models/{model_id}/metagraph")
    def get_metagraph(model_id: str, format: str = "json"):
        try:
            document, _ = stores.models.get(model_id)
        except NotFoundError:
            return api_error(404, "not_found", f"model {model_id!r} not found")
        mg, cardinality = map_ovm(parse_model(document))
        if format == "dot":
            return PlainTextResponse(to_dot(mg), media_type="text/vnd.graphviz")
        return metagraph_export(mg, cardinality)

    # ------------------------------------------------------------- validation

    @app.post("/tenants/{tenant}/customization:validate")
    async def validate_customization(tenant: str, request: Request, mode: str = "unordered"):
        guard = tenant_guard(request, tenant)
        if guard:
            return guard
        if mode not in ("sequential", "unordered"):
            return api_error(400, "bad_mode", f"unknown validation mode {mode!r}")
        body = await request.json()
        if not isinstance(body, dict) or "model_id" not in body or "instances" not in body:
            return api_error(400, "schema_violation", "body requires model_id and instances")
        model_id = body["model_id"]
        try:
            document, _ = stores.models.get(model_id)
        except NotFoundError:
            return api_error(404, "not_found", f"model {model_id!r} not found")
        model = parse_model(document)
        try:
            customization = parse_customization({"instances": body["instances"]})
        except DocumentError as exc:
            return api_error(400, "schema_violation", str(exc))
        icp = frozenset(body["icp"]) if body.get("icp") else None

        incremental = bool(body.get("incremental"))
        if incremental:
            try:
                record, _ = stores.tenants.get(tenant)
            except NotFoundError:
                return api_error(404, "not_found", f"tenant {tenant!r} has no prior customization")
            if record["model_id"] != model_id:
                return api_error(409, "model_mismatch",
                                 f"prior customization targets model {record['model_id']!r}")
            prior = report_from_dict(record["report"])
            report = validate_incremental(model, prior, customization, mode)
            history = record["history"]
        else:
            report = validate(model, icp, customization, mode)
            history = []

        if report.vf == VALID:
            history = [*history, {"at": time.time(), "mode": mode,
                                  "incremental": incremental,
                                  "instances": [{"cp": c.cp, "v": c.v} for c in customization.instances]}]
            record = {"tenant_id": tenant, "model_id": model_id, "active": True,
                      "report": report_to_dict(report), "history": history}
            stores.tenants.put(tenant, record)

        status = 200 if report.vf == VALID and report.cf == COMPLETE else 422
        return JSONResponse(status_code=status, content=report_to_dict(report))

    # --------------------------------------------------------------- registry

    registry_parsers = {
        "processes": workflow.parse_process,
        "aspects": workflow.parse_aspect,
        "services": workflow.parse_service_stub,
    }

    def registry_put(collection: str, key: str, body: dict, expected_version: int | None):
        try:
            registry_parsers[collection](body)
        except DocumentError as exc:
            return api_error(400, "schema_violation", str(exc))
        store = stores.collection(collection)
        created = not store.exists(key)
        try:
            version = store.put(key, body, expected_version)
        except VersionConflictError as exc:
            return api_error(409, "version_conflict", str(exc))
        except StoreValidationError as exc:
            return api_error(400, "invalid_definition", str(exc))
        return JSONResponse(status_code=201 if created else 200,
                            content={"id": key, "version": version})

    def registry_get(collection: str, key: str):
        try:
            document, version = stores.collection(collection).get(key)
        except NotFoundError:
            return api_error(404, "not_found", f"{collection}/{key} not found")
        return JSONResponse(content=document, headers={"X-Version": str(version)})

    def registry_delete(collection: str, key: str):
        try:
            stores.collection(collection).delete(key)
        except NotFoundError:
            return api_error(404, "not_found", f"{collection}/{key} not found")
        return Response(status_code=204)

    for name in ("processes", "aspects", "services"):
        def make_routes(collection: str) -> None:
            @app.put(f"/{collection}/{{key}}")
            async def put_item(key: str, request: Request, expected_version: int | None = None,
                               collection: str = collection):
                return registry_put(collection, key, await request.json(), expected_version)

            @app.get(f"/{collection}/{{key}}")
            def get_item(key: str, collection: str = collection):
                return registry_get(collection, key)

            @app.delete(f"/{collection}/{{key}}")
            def delete_item(key: str, collection: str = collection):
                return registry_delete(collection, key)

        make_routes(name)

    # -------------------------------------------------------------- execution

    @app.post("/tenants/{tenant}/execute/{process_id}")
    async def execute_process(tenant: str, process_id: str, request: Request):
        guard = tenant_guard(request, tenant)
        if guard:
            return guard
        raw = await request.body()
        input_document = await request.json() if raw else {}
        if not isinstance(input_document, dict):
            return api_error(400, "schema_violation", "input must be a JSON object")
        try:
            woven = workflow.reweave_on_change(tenant, process_id, stores)
        except workflow.TenantNotCustomizedError as exc:
            return api_error(409, "tenant_not_customized", str(exc))
        except workflow.UnimplementedVariantError as exc:
            return api_error(422, "unimplemented_variant", str(exc))
        except NotFoundError as exc:
            return api_error(404, "not_found", str(exc))

        registry = {}
        for key, _ in stores.services.list():
            registry[key] = workflow.parse_service_stub(stores.services.get(key)[0])
        trace = workflow.execute(woven, registry, input_document)
        payload = {"woven": workflow.woven_to_dict(woven),
                   "trace": {"status": trace.status,
                             "entries": workflow.trace_to_lines(trace)}}
        if trace.status == "failed":
            return JSONResponse(status_code=500, content={"code": "execution_failed",
                                                          "message": "execution failed; partial trace attached",
                                                          **payload})
        return payload

    return app


def run(addr: str | None = None, data_root: str | Path | None = None) -> None:
    """Launch the API server (blocking)."""
    import uvicorn

    addr = addr or os.environ.get("TENANTWEAVER_ADDR", DEFAULT_ADDR)
    host, _, port = addr.rpartition(":")
    uvicorn.run(create_app(data_root), host=host or "127.0.0.1", port=int(port))
