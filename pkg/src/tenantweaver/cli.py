"""Offline driver for the customization pipeline and server launcher.

Exit codes: 0 on success/valid, 1 on an invalid or incomplete
customization (the report is still printed), 2 on usage or schema errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import service
from .enumeration import SearchSpaceExceeded, enumerate_configurations
from .jsondoc import DocumentError
from .metagraph import map_ovm, metagraph_export, to_dot
from .ovm import InvalidModelError, check_model, parse_model
from .validation import COMPLETE, VALID, parse_customization, report_to_dict, validate
from .workflow import (
    UnimplementedVariantError,
    execute,
    parse_aspect,
    parse_process,
    parse_service_stub,
    trace_to_lines,
    weave,
    woven_to_dict,
)

USAGE_ERROR = 2
INVALID_CUSTOMIZATION = 1


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(path, f"cannot read file: {exc}") from None


def _load_model(path: str):
    return parse_model(_read(path))


def _load_selection(path: str) -> dict[str, set[str]]:
    document = json.loads(_read(path))
    if not isinstance(document, dict) or "selection" not in document or not isinstance(document["selection"], dict):
        raise DocumentError(path, 'selection file must look like {"selection": {"VP": ["variant", ...]}}')
    return {vp: set(variants) for vp, variants in document["selection"].items()}


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2))


def cmd_model_check(args) -> int:
    model = _load_model(args.file)
    diagnostics = check_model(model)
    for d in diagnostics:
        print(f"{d.severity}: {d.location}: {d.message}")
    if not diagnostics:
        print(f"ok: model {model.id!r} is well-formed")
    return 1 if any(d.severity == "error" for d in diagnostics) else 0


def cmd_map(args) -> int:
    model = _load_model(args.file)
    mg, cardinality = map_ovm(model)
    if args.format == "dot":
        sys.stdout.write(to_dot(mg))
    else:
        _print_json(metagraph_export(mg, cardinality))
    return 0


def cmd_validate(args) -> int:
    model = _load_model(args.model)
    customization = parse_customization(_read(args.customization))
    icp = frozenset(args.icp.split(",")) if args.icp else None
    report = validate(model, icp, customization, args.mode)
    _print_json(report_to_dict(report))
    return 0 if report.vf == VALID and report.cf == COMPLETE else INVALID_CUSTOMIZATION


def cmd_enumerate(args) -> int:
    model = _load_model(args.model)
    icp = frozenset(args.icp.split(",")) if args.icp else None
    result = enumerate_configurations(model, icp, args.limit)
    declaration = {v: i for i, v in enumerate(model.variant_ids())}
    if args.format == "json":
        _print_json({"configurations": [sorted(c, key=declaration.get) for c in result.configurations],
                     "truncated": result.truncated})
    else:
        for configuration in result.configurations:
            print(" ".join(sorted(configuration, key=declaration.get)))
        if result.truncated:
            print("... truncated", file=sys.stderr)
    return 0


def _weave_from_args(args):
    model = _load_model(args.model)
    process = parse_process(_read(args.process))
    aspects = [parse_aspect(_read(path)) for path in args.aspects]
    selection = _load_selection(args.selection)
    instances = [{"cp": vp, "v": v} for vp in sorted(selection) for v in sorted(selection[vp])]
    report = validate(model, None, parse_customization({"instances": instances}), "unordered")
    if report.vf != VALID or report.cf != COMPLETE:
        _print_json(report_to_dict(report))
        return None, report
    woven = weave(process, aspects, selection, tenant=args.tenant)
    return woven, report


def cmd_weave(args) -> int:
    woven, _ = _weave_from_args(args)
    if woven is None:
        return INVALID_CUSTOMIZATION
    _print_json(woven_to_dict(woven))
    return 0


def cmd_run(args) -> int:
    woven, _ = _weave_from_args(args)
    if woven is None:
        return INVALID_CUSTOMIZATION
    registry = {}
    for path in args.services:
        stub = parse_service_stub(_read(path))
        registry[stub.id] = stub
    input_document = json.loads(_read(args.input)) if args.input else {}
    trace = execute(woven, registry, input_document)
    for line in trace_to_lines(trace):
        print(json.dumps(line))
    return 0 if trace.status == "success" else INVALID_CUSTOMIZATION


def cmd_serve(args) -> int:
    service.run(addr=args.addr, data_root=args.data)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tenantweaver",
                                     description="Variability-model customization engine")
    sub = parser.add_subparsers(dest="command", required=True)

    model = sub.add_parser("model", help="model utilities")
    model_sub = model.add_subparsers(dest="model_command", required=True)
    check = model_sub.add_parser("check", help="well-formedness-check a model file")
    check.add_argument("file")
    check.set_defaults(func=cmd_model_check)

    map_cmd = sub.add_parser("map", help="emit metagraph, adjacency and cardinality matrices")
    map_cmd.add_argument("file")
    map_cmd.add_argument("--format", choices=("json", "dot"), default="json")
    map_cmd.set_defaults(func=cmd_map)

    val = sub.add_parser("validate", help="validate a customization set against a model")
    val.add_argument("model")
    val.add_argument("customization")
    val.add_argument("--mode", choices=("sequential", "unordered"), default="unordered")
    val.add_argument("--icp", help="comma-separated variation points to bind (default: all)")
    val.set_defaults(func=cmd_validate)

    enum = sub.add_parser("enumerate", help="brute-force all valid configurations")
    enum.add_argument("model")
    enum.add_argument("--icp")
    enum.add_argument("--limit", type=int)
    enum.add_argument("--format", choices=("text", "json"), default="text")
    enum.set_defaults(func=cmd_enumerate)

    weave_cmd = sub.add_parser("weave", help="weave a process for a selection")
    run_cmd = sub.add_parser("run", help="weave and execute a process")
    for cmd in (weave_cmd, run_cmd):
        cmd.add_argument("model")
        cmd.add_argument("process")
        cmd.add_argument("aspects", nargs="+", help="aspect definition files")
        cmd.add_argument("--selection", required=True, help='{"selection": {"VP": ["variant"]}} file')
        cmd.add_argument("--tenant", default="cli")
    weave_cmd.set_defaults(func=cmd_weave)
    run_cmd.add_argument("--services", nargs="*", default=[], help="service stub files")
    run_cmd.add_argument("--input", help="request input document")
    run_cmd.set_defaults(func=cmd_run)

    serve = sub.add_parser("serve", help="launch the HTTP API")
    serve.add_argument("--addr", help="listen address, host:port (default env TENANTWEAVER_ADDR)")
    serve.add_argument("--data", help="store root (default env TENANTWEAVER_DATA)")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DocumentError, InvalidModelError, SearchSpaceExceeded,
            UnimplementedVariantError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
