"""Customization-point processes, variant/crosscutting aspects, weaving, execution.

A process is an ordered list of activities: service invocations, message
emissions, and customization points. Variants are packaged as aspects that
provide a sub-workflow body; crosscutting aspects attach advice
(before/after/around) at join points matched by a glob pointcut. Weaving
happens per request against the tenant's validated selection, so variants
(dis)associate at runtime without restarting anything; the woven tree is
then interpreted against a registry of declarative service stubs, producing
an execution trace.

Around-advice bodies carry exactly one proceed marker (an emit activity
named "proceed"); it expands to the advised join point, or to nothing when
the body substitutes a customization point. Activities executed as the
pre-proceed (post-proceed) part of an advice body are traced as
advice_before (advice_after) entries.
"""

from __future__ import annotations

import fnmatch
import logging
import re
from dataclasses import dataclass, field
from typing import Union

from .jsondoc import (
    DocumentError,
    expect_int,
    expect_list,
    expect_object,
    expect_string,
    load_document,
)

log = logging.getLogger(__name__)

ACTIVITY_KINDS = ("invoke", "customization_point", "emit")
ADVICE_POSITIONS = ("before", "after", "around")
PROCEED_NAME = "proceed"


class DefinitionFormatError(DocumentError):
    """A process/aspect/service document violates its schema or invariants."""


class UnimplementedVariantError(ValueError):
    """A selected variant has no providing aspect registered."""

    def __init__(self, vp: str, variant: str) -> None:
        super().__init__(f"unimplemented variant: {variant} at {vp}")
        self.vp = vp
        self.variant = variant


class TenantNotCustomizedError(ValueError):
    """The tenant has no valid and complete customization on record."""


@dataclass(frozen=True)
class Activity:
    name: str
    kind: str
    service: str = ""
    operation: str = ""
    input: dict = field(default_factory=dict)
    vp: str = ""
    message: str = ""

    def is_proceed(self) -> bool:
        return self.kind == "emit" and self.name == PROCEED_NAME


@dataclass(frozen=True)
class ProcessDefinition:
    id: str
    activities: tuple[Activity, ...]


@dataclass(frozen=True)
class Pointcut:
    process: str = "*"
    activity: str = "*"
    kinds: tuple[str, ...] = ()

    def matches_activity(self, activity: Activity) -> bool:
        if not fnmatch.fnmatchcase(activity.name, self.activity):
            return False
        return not self.kinds or activity.kind in self.kinds

    def matches(self, process_id: str, activity: Activity) -> bool:
        return fnmatch.fnmatchcase(process_id, self.process) and self.matches_activity(activity)


@dataclass(frozen=True)
class Advice:
    position: str
    body: tuple[Activity, ...]


@dataclass(frozen=True)
class AspectDefinition:
    id: str
    pointcut: Pointcut = Pointcut()
    advice: Advice = Advice("before", ())
    provides_variant: str | None = None
    priority: int = 0


@dataclass(frozen=True)
class ServiceStub:
    id: str
    operations: dict  # operation name -> canned response template


def check_aspect(aspect: AspectDefinition) -> None:
    """Enforce aspect invariants; raises DefinitionFormatError."""
    if aspect.advice.position not in ADVICE_POSITIONS:
        raise DefinitionFormatError(
            f"aspect {aspect.id!r}", f"unknown advice position {aspect.advice.position!r}")
    proceeds = sum(1 for a in aspect.advice.body if a.is_proceed())
    if aspect.advice.position == "around" and proceeds != 1:
        raise DefinitionFormatError(
            f"aspect {aspect.id!r}", "around advice must contain exactly one proceed marker")
    if aspect.provides_variant and aspect.advice.position != "around":
        raise DefinitionFormatError(
            f"aspect {aspect.id!r}", "variant-providing aspects must use around advice")


def check_process(process: ProcessDefinition) -> None:
    if not process.id:
        raise DefinitionFormatError("process", "identifier is empty")
    names = [a.name for a in process.activities]
    for name in names:
        if names.count(name) > 1:
            raise DefinitionFormatError(f"process {process.id!r}", f"duplicate activity name {name!r}")


# ---------------------------------------------------------------------------
# Definition documents

def _parse_activity(raw: object, path: str) -> Activity:
    obj = expect_object(raw, path, required=("name", "kind"),
                        optional=("service", "operation", "input", "vp", "message"))
    name = expect_string(obj["name"], f"{path}.name")
    kind = expect_string(obj["kind"], f"{path}.kind")
    if kind not in ACTIVITY_KINDS:
        raise DefinitionFormatError(f"{path}.kind", f"kind must be one of {ACTIVITY_KINDS}")
    if kind == "invoke":
        template = obj.get("input", {})
        if not isinstance(template, dict):
            raise DefinitionFormatError(f"{path}.input", "expected an object")
        activity = Activity(name, kind,
                            service=expect_string(obj.get("service"), f"{path}.service"),
                            operation=expect_string(obj.get("operation"), f"{path}.operation"),
                            input=dict(template))
    elif kind == "customization_point":
        activity = Activity(name, kind, vp=expect_string(obj.get("vp"), f"{path}.vp"))
    else:
        activity = Activity(name, kind,
                            message=expect_string(obj.get("message", ""), f"{path}.message", nonempty=False))
    return activity


def _wrap_schema_errors(parser):
    def parse(document):
        try:
            return parser(document)
        except DefinitionFormatError:
            raise
        except DocumentError as exc:
            raise DefinitionFormatError(exc.path, exc.message) from None

    parse.__name__ = parser.__name__.lstrip("_")
    return parse


def _parse_process(document: str | bytes | dict) -> ProcessDefinition:
    root = load_document(document)
    expect_object(root, "$", required=("process",))
    body = expect_object(root["process"], "$.process", required=("id", "activities"))
    activities = tuple(_parse_activity(raw, f"$.process.activities[{i}]")
                       for i, raw in enumerate(expect_list(body["activities"], "$.process.activities")))
    process = ProcessDefinition(expect_string(body["id"], "$.process.id"), activities)
    check_process(process)
    return process


def _parse_aspect(document: str | bytes | dict) -> AspectDefinition:
    root = load_document(document)
    expect_object(root, "$", required=("aspect",))
    body = expect_object(root["aspect"], "$.aspect", required=("id", "advice"),
                         optional=("pointcut", "provides_variant", "priority"))
    pointcut = Pointcut()
    if "pointcut" in body:
        raw = expect_object(body["pointcut"], "$.aspect.pointcut", required=(),
                            optional=("process", "activity", "kinds"))
        kinds = tuple(expect_string(k, f"$.aspect.pointcut.kinds[{i}]")
                      for i, k in enumerate(expect_list(raw.get("kinds", []), "$.aspect.pointcut.kinds")))
        for kind in kinds:
            if kind not in ACTIVITY_KINDS:
                raise DefinitionFormatError("$.aspect.pointcut.kinds", f"unknown activity kind {kind!r}")
        pointcut = Pointcut(expect_string(raw.get("process", "*"), "$.aspect.pointcut.process"),
                            expect_string(raw.get("activity", "*"), "$.aspect.pointcut.activity"),
                            kinds)
    advice_raw = expect_object(body["advice"], "$.aspect.advice", required=("position", "body"))
    position = expect_string(advice_raw["position"], "$.aspect.advice.position")
    advice = Advice(position, tuple(_parse_activity(raw, f"$.aspect.advice.body[{i}]")
                                    for i, raw in enumerate(expect_list(advice_raw["body"], "$.aspect.advice.body"))))
    provides = body.get("provides_variant")
    if provides is not None:
        provides = expect_string(provides, "$.aspect.provides_variant")
    priority = expect_int(body.get("priority", 0), "$.aspect.priority")
    aspect = AspectDefinition(expect_string(body["id"], "$.aspect.id"),
                              pointcut, advice, provides, priority)
    check_aspect(aspect)
    return aspect


def _parse_service_stub(document: str | bytes | dict) -> ServiceStub:
    root = load_document(document)
    expect_object(root, "$", required=("service",))
    body = expect_object(root["service"], "$.service", required=("id", "operations"))
    operations = body["operations"]
    if not isinstance(operations, dict):
        raise DefinitionFormatError("$.service.operations", "expected an object")
    return ServiceStub(expect_string(body["id"], "$.service.id"), dict(operations))


parse_process = _wrap_schema_errors(_parse_process)
parse_aspect = _wrap_schema_errors(_parse_aspect)
parse_service_stub = _wrap_schema_errors(_parse_service_stub)


def process_to_dict(process: ProcessDefinition) -> dict:
    return {"process": {"id": process.id,
                        "activities": [_activity_to_dict(a) for a in process.activities]}}


def _activity_to_dict(activity: Activity) -> dict:
    out: dict = {"name": activity.name, "kind": activity.kind}
    if activity.kind == "invoke":
        out.update(service=activity.service, operation=activity.operation, input=dict(activity.input))
    elif activity.kind == "customization_point":
        out["vp"] = activity.vp
    else:
        out["message"] = activity.message
    return out


def aspect_to_dict(aspect: AspectDefinition) -> dict:
    return {"aspect": {
        "id": aspect.id,
        "pointcut": {"process": aspect.pointcut.process, "activity": aspect.pointcut.activity,
                     "kinds": list(aspect.pointcut.kinds)},
        "advice": {"position": aspect.advice.position,
                   "body": [_activity_to_dict(a) for a in aspect.advice.body]},
        "provides_variant": aspect.provides_variant,
        "priority": aspect.priority,
    }}


def service_stub_to_dict(stub: ServiceStub) -> dict:
    return {"service": {"id": stub.id, "operations": dict(stub.operations)}}


# ---------------------------------------------------------------------------
# Weaving

@dataclass(frozen=True)
class WovenActivity:
    activity: Activity
    role: str = "plain"  # plain | before | after
    aspect: str | None = None


@dataclass(frozen=True)
class WovenBlock:
    kind: str  # "cp" | "seq"
    name: str = ""
    vp: str = ""
    children: tuple["WovenNode", ...] = ()


WovenNode = Union[WovenActivity, WovenBlock]


@dataclass(frozen=True)
class WovenProcess:
    base: str
    tenant: str
    nodes: tuple[WovenNode, ...]
    applied_aspects: tuple[str, ...]


def _aspect_order(aspect: AspectDefinition) -> tuple:
    return (aspect.priority, aspect.id)


def _advice_nodes(body: tuple[Activity, ...], role: str, aspect_id: str) -> list[WovenNode]:
    return [WovenActivity(a, role, aspect_id) for a in body if not a.is_proceed()]


def _substitute_points(activities: tuple[Activity, ...],
                       aspects: list[AspectDefinition],
                       selection: dict[str, frozenset[str]],
                       applied: list[str]) -> list[WovenNode]:
    providers: dict[str, list[AspectDefinition]] = {}
    for aspect in sorted(aspects, key=_aspect_order):
        if aspect.provides_variant:
            providers.setdefault(aspect.provides_variant, []).append(aspect)

    nodes: list[WovenNode] = []
    for activity in activities:
        if activity.kind != "customization_point":
            nodes.append(WovenActivity(activity))
            continue
        if activity.vp not in selection:
            log.warning("customization point %s (%s) has no binding; left unresolved",
                        activity.name, activity.vp)
            nodes.append(WovenActivity(activity))
            continue
        children: list[WovenNode] = []
        chosen = []
        for variant in selection[activity.vp]:
            if variant not in providers:
                raise UnimplementedVariantError(activity.vp, variant)
            chosen.extend((aspect, variant) for aspect in providers[variant])
        for aspect, variant in sorted(chosen, key=lambda pair: _aspect_order(pair[0])):
            children.extend(WovenActivity(a, "plain", aspect.id)
                            for a in aspect.advice.body if not a.is_proceed())
            if aspect.id not in applied:
                applied.append(aspect.id)
        nodes.append(WovenBlock("cp", activity.name, activity.vp, tuple(children)))
    return nodes


def _attach(node: WovenNode, aspect: AspectDefinition, hits: list[int]) -> WovenNode:
    if isinstance(node, WovenBlock):
        return WovenBlock(node.kind, node.name, node.vp,
                          tuple(_attach(child, aspect, hits) for child in node.children))
    if node.role != "plain" or not aspect.pointcut.matches_activity(node.activity):
        return node
    hits[0] += 1
    advice = aspect.advice
    if advice.position == "before":
        wrapped = (*_advice_nodes(advice.body, "before", aspect.id), node)
    elif advice.position == "after":
        wrapped = (node, *_advice_nodes(advice.body, "after", aspect.id))
    else:
        split = next(i for i, a in enumerate(advice.body) if a.is_proceed())
        wrapped = (*_advice_nodes(advice.body[:split], "before", aspect.id),
                   node,
                   *_advice_nodes(advice.body[split + 1:], "after", aspect.id))
    return WovenBlock("seq", "", "", wrapped)


def weave(process: ProcessDefinition, aspects: list[AspectDefinition],
          selection: dict[str, frozenset[str]] | dict[str, set[str]],
          tenant: str = "") -> WovenProcess:
    """Compose a per-tenant process: variant substitution, then crosscutting advice.

    Customization points are replaced by the bodies of the providing aspects
    of the selected variants, in (priority, id) order. Crosscutting aspects
    are then attached in (priority, id) order at every plain activity their
    pointcut matches, so they see (and may advise) variant-introduced
    activities. A pointcut that matches nothing logs a warning.
    """
    for aspect in aspects:
        check_aspect(aspect)
    normalized = {vp: frozenset(chosen) for vp, chosen in selection.items()}
    applied: list[str] = []
    nodes = _substitute_points(process.activities, list(aspects), normalized, applied)

    for aspect in sorted(aspects, key=_aspect_order):
        if aspect.provides_variant:
            continue
        if not fnmatch.fnmatchcase(process.id, aspect.pointcut.process):
            continue
        hits = [0]
        nodes = [_attach(node, aspect, hits) for node in nodes]
        if hits[0]:
            applied.append(aspect.id)
        else:
            log.warning("aspect %s matched no join point in process %s", aspect.id, process.id)
    return WovenProcess(process.id, tenant, tuple(nodes), tuple(applied))


def woven_to_dict(woven: WovenProcess) -> dict:
    def node_to_dict(node: WovenNode) -> dict:
        if isinstance(node, WovenActivity):
            out = {"node": "activity", "role": node.role, "activity": _activity_to_dict(node.activity)}
            if node.aspect:
                out["aspect"] = node.aspect
            return out
        return {"node": node.kind, "name": node.name, "vp": node.vp,
                "children": [node_to_dict(child) for child in node.children]}

    return {"base": woven.base, "tenant": woven.tenant,
            "applied_aspects": list(woven.applied_aspects),
            "activities": [node_to_dict(node) for node in woven.nodes]}


# ---------------------------------------------------------------------------
# Execution

@dataclass(frozen=True)
class TraceEntry:
    seq: int
    kind: str
    activity: str
    detail: dict


@dataclass(frozen=True)
class ExecutionTrace:
    entries: tuple[TraceEntry, ...]
    status: str  # "success" | "failed"


class _ExecutionFailure(Exception):
    pass


_PLACEHOLDER = re.compile(r"\{([A-Za-z0-9_.-]+)\}")


def _render(template: str, context: dict) -> str:
    def lookup(match: re.Match) -> str:
        value: object = context
        for part in match.group(1).split("."):
            if isinstance(value, dict) and part in value:
                value = value[part]
            else:
                return match.group(0)  # unresolved placeholders stay visible
        return str(value)

    return _PLACEHOLDER.sub(lookup, template)


def _render_value(value: object, context: dict) -> object:
    if isinstance(value, str):
        return _render(value, context)
    if isinstance(value, dict):
        return {k: _render_value(v, context) for k, v in value.items()}
    if isinstance(value, list):
        return [_render_value(v, context) for v in value]
    return value


def execute(woven: WovenProcess, registry: dict[str, ServiceStub],
            input: dict | None = None) -> ExecutionTrace:
    """Interpret a woven process depth-first against service stubs.

    Each activity appends exactly one trace entry (customization points add
    an enter/exit pair around their substituted children). Invoke responses
    are recorded under the activity name and are available to later
    templates; an unresolvable service or operation truncates the trace with
    an error entry and a failed status.
    """
    entries: list[TraceEntry] = []
    context: dict = {"input": dict(input or {})}
    seq = 0

    def emit(kind: str, activity: str, detail: dict) -> None:
        nonlocal seq
        seq += 1
        entries.append(TraceEntry(seq, kind, activity, detail))

    def run_activity(node: WovenActivity) -> None:
        activity = node.activity
        kind = {"before": "advice_before", "after": "advice_after"}.get(node.role)
        detail: dict = {"aspect": node.aspect} if node.aspect else {}
        if activity.kind == "invoke":
            stub = registry.get(activity.service)
            if stub is None:
                emit("error", activity.name, {"reason": f"unknown service {activity.service!r}"})
                raise _ExecutionFailure
            if activity.operation not in stub.operations:
                emit("error", activity.name,
                     {"reason": f"unknown operation {activity.operation!r} on service {activity.service!r}"})
                raise _ExecutionFailure
            rendered_input = _render_value(dict(activity.input), context)
            response = _render_value(stub.operations[activity.operation],
                                     {**context, "request": rendered_input})
            context[activity.name] = response
            detail.update(service=activity.service, operation=activity.operation,
                          input=rendered_input, response=response)
            emit(kind or "invoke", activity.name, detail)
        elif activity.kind == "emit":
            detail["message"] = _render(activity.message, context)
            emit(kind or "emit", activity.name, detail)
        else:  # an unresolved customization point
            emit("enter_cp", activity.name, {"vp": activity.vp, "unbound": True})
            emit("exit_cp", activity.name, {"vp": activity.vp, "unbound": True})

    def run(node: WovenNode) -> None:
        if isinstance(node, WovenActivity):
            run_activity(node)
            return
        if node.kind == "cp":
            emit("enter_cp", node.name, {"vp": node.vp})
            for child in node.children:
                run(child)
            emit("exit_cp", node.name, {"vp": node.vp})
        else:
            for child in node.children:
                run(child)

    status = "success"
    try:
        for node in woven.nodes:
            run(node)
    except _ExecutionFailure:
        status = "failed"
    return ExecutionTrace(tuple(entries), status)


def trace_to_lines(trace: ExecutionTrace) -> list[dict]:
    return [{"seq": e.seq, "kind": e.kind, "activity": e.activity, "detail": e.detail}
            for e in trace.entries]


def selection_from_report(model_groups, e_t_entries) -> dict[str, set[str]]:
    """Selection map (vp -> variants) from a stored report's restricted edges."""
    vp_of_edge = {g.edge_id: g.vp for g in model_groups}
    selection: dict[str, set[str]] = {}
    for entry in e_t_entries:
        vp = vp_of_edge.get(entry.edge_id)
        if vp is None:
            continue  # constraint edges never appear in e_t
        selection.setdefault(vp, set()).update(entry.selected)
    return selection


def reweave_on_change(tenant: str, process_id: str, stores) -> WovenProcess:
    """Weave a fresh process for the tenant from current store contents.

    Requires a stored valid and complete customization; nothing woven is
    cached, so a customization change is visible on the next request.
    """
    from .validation import COMPLETE, VALID, report_from_dict
    from .ovm import parse_model

    try:
        record, _ = stores.tenants.get(tenant)
    except KeyError:
        raise TenantNotCustomizedError(f"tenant not customized: {tenant!r}") from None
    report = report_from_dict(record["report"])
    if not record.get("active") or report.vf != VALID or report.cf != COMPLETE:
        raise TenantNotCustomizedError(f"tenant not customized: {tenant!r}")
    model = parse_model(stores.models.get(record["model_id"])[0])
    process = parse_process(stores.processes.get(process_id)[0])
    aspects = [parse_aspect(stores.aspects.get(key)[0]) for key, _ in stores.aspects.list()]
    selection = selection_from_report(model.groups, report.e_t)
    # every bound VP appears in the selection map, even when nothing is chosen
    for vp in report.x_t:
        if vp in set(model.vp_ids()):
            selection.setdefault(vp, set())
    return weave(process, aspects, selection, tenant)
