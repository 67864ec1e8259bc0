"""Tenant customization validation over metagraph adjacency matrices.

A tenant submits a customization set C, an ordered list of instances
<cp, v> assigning variant v to customization point cp. Validation walks the
adjacency matrix of the application metagraph and threads a tenant
metagraph M_T = <X_T, E_T> through the instances, then checks completeness
(mandatory variants associated, minimum cardinalities reached).

Two modes are exposed:

* ``sequential`` replays the published algorithm literally: requires and
  excludes are checked per instance against the selections made so far, so
  validity depends on the order of C. Known quirk, reproduced on purpose:
  selecting an excluding variant after its victim escapes the per-instance
  excludes scan.
* ``unordered`` (the service default) canonicalizes the instance order,
  defers requires/excludes to finalization, and evaluates excludes
  symmetrically, making the verdict a function of the instance set alone.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .metagraph import (
    ATTR_EXCLUDES,
    ATTR_MANDATORY,
    ATTR_OPTIONAL,
    ATTR_REQUIRES,
    ATTRIBUTE_ELEMENTS,
    AdjacencyMatrix,
    CardinalityMatrix,
    MetaEdge,
    Metagraph,
    adjacency,
    map_ovm,
    sorted_edges,
)
from .jsondoc import expect_list, expect_object, expect_string, load_document
from .ovm import VariabilityModel, natural_key

MODES = ("sequential", "unordered")

VALID = "valid"
INVALID = "invalid"
COMPLETE = "complete"
INCOMPLETE = "incomplete"


class ValidationInputError(ValueError):
    """Validation was invoked with inputs outside its contract."""


@dataclass(frozen=True)
class CustomizationInstance:
    cp: str
    v: str

    def __post_init__(self) -> None:
        if not self.cp or not self.v:
            raise ValueError("customization instance ids must be nonempty")


@dataclass(frozen=True)
class CustomizationSet:
    instances: tuple[CustomizationInstance, ...]


def parse_customization(document: str | bytes | dict) -> CustomizationSet:
    root = load_document(document)
    expect_object(root, "$", required=("instances",))
    instances = []
    for i, raw in enumerate(expect_list(root["instances"], "$.instances")):
        path = f"$.instances[{i}]"
        obj = expect_object(raw, path, required=("cp", "v"))
        instances.append(CustomizationInstance(expect_string(obj["cp"], f"{path}.cp"),
                                               expect_string(obj["v"], f"{path}.v")))
    return CustomizationSet(tuple(instances))


@dataclass(frozen=True)
class SelectedEdge:
    """Restricted copy of a source edge: full in-vertex, selected out-vertex."""

    edge_id: str
    in_vertex: frozenset[str]
    selected: tuple[str, ...]


@dataclass(frozen=True)
class ValidationState:
    """Value threaded through the validation loop; never mutated in place."""

    mg: Metagraph
    r: CardinalityMatrix
    icp: frozenset[str]
    x_t: frozenset[str]
    e_t: dict[str, SelectedEdge]
    a: AdjacencyMatrix
    a_t: AdjacencyMatrix


@dataclass(frozen=True)
class ValidationReport:
    vf: str
    cf: str
    ic: CustomizationInstance | None
    mode: str
    reason: str
    x_t: tuple[str, ...]
    e_t: tuple[SelectedEdge, ...]


@dataclass(frozen=True)
class FinalizeDiagnostic:
    message: str
    edge: str
    endpoints: tuple[str, ...]
    constraint: bool  # True for deferred requires/excludes violations


def vp_elements(mg: Metagraph) -> frozenset[str]:
    """Variation-point elements: plain in-vertex members of group edges."""
    vps: set[str] = set()
    for edge in mg.edges:
        if edge.attributes() & {ATTR_OPTIONAL, ATTR_MANDATORY}:
            vps |= edge.plain_in_vertex()
    return frozenset(vps)


def _tenant_metagraph(mg: Metagraph, x_t: frozenset[str], e_t: dict[str, SelectedEdge]) -> Metagraph:
    edges = tuple(MetaEdge(entry.edge_id, entry.in_vertex, frozenset(entry.selected))
                  for entry in (e_t[k] for k in sorted(e_t, key=natural_key)))
    attrs = set()
    for edge in edges:
        attrs |= edge.in_vertex & ATTRIBUTE_ELEMENTS
    order = {element: i for i, element in enumerate(mg.generating_set)}
    elements = sorted((x_t | attrs), key=lambda x: order.get(x, len(order)))
    return Metagraph(tuple(elements), edges)


def tenant_metagraph(report: ValidationReport, mg: Metagraph) -> Metagraph:
    """Materialize M_T from a report against the application metagraph."""
    e_t = {entry.edge_id: entry for entry in report.e_t}
    return _tenant_metagraph(mg, frozenset(report.x_t), e_t)


def _closure(mg: Metagraph, x_t: frozenset[str], e_t: dict[str, SelectedEdge]) -> tuple[frozenset[str], dict[str, SelectedEdge]]:
    """Auto-include the out-vertices of triggered mandatory edges, to a fixpoint.

    Tenants never select mandatory variants themselves; any mandatory edge
    whose plain in-vertex is fully bound contributes its whole out-vertex.
    """
    order = {element: i for i, element in enumerate(mg.generating_set)}
    x_t = set(x_t)
    e_t = dict(e_t)
    changed = True
    while changed:
        changed = False
        for edge in sorted_edges(mg.edges):
            if ATTR_MANDATORY not in edge.in_vertex:
                continue
            if edge.plain_in_vertex() <= x_t and (edge.id not in e_t or not edge.out_vertex <= x_t):
                x_t |= edge.out_vertex
                e_t[edge.id] = SelectedEdge(edge.id, edge.in_vertex,
                                            tuple(sorted(edge.out_vertex, key=order.__getitem__)))
                changed = True
    return frozenset(x_t), e_t


def initialize(mg: Metagraph, r: CardinalityMatrix, icp: frozenset[str]) -> ValidationState:
    """Seed the tenant metagraph with ICP and triggered mandatory edges."""
    unknown = icp - vp_elements(mg)
    if unknown:
        raise ValidationInputError(f"unknown variation points in icp: {sorted(unknown)}")
    x_t, e_t = _closure(mg, frozenset(icp), {})
    a = adjacency(mg)
    a_t = adjacency(_tenant_metagraph(mg, x_t, e_t))
    return ValidationState(mg, r, frozenset(icp), x_t, e_t, a, a_t)


def _optional_edge_for(state: ValidationState, c: CustomizationInstance) -> str | None:
    """The optional group edge backing a[cp][v]; None if the cell offers none."""
    candidates = [t.edge for t in state.a.get(c.cp, c.v) if ATTR_OPTIONAL in t.co_input]
    if not candidates:
        return None
    return min(candidates, key=natural_key)


def check_instance(state: ValidationState, c: CustomizationInstance, mode: str = "sequential") -> str | None:
    """Check one customization instance; None means accept, else the reject reason.

    Sequential mode applies, in order: the requires scan over the row of v,
    the excludes scan over the column of v, the cp-bound check, the
    membership check, and the duplicate/maximum-cardinality check. Unordered
    mode runs only the last three; requires/excludes wait for finalize.
    """
    if mode not in MODES:
        raise ValidationInputError(f"unknown mode {mode!r}")

    if mode == "sequential":
        for col, triples in state.a.row(c.v):
            for t in triples:
                if ATTR_REQUIRES in t.co_input and col not in state.x_t:
                    return f"unsatisfied requires: {c.v} requires {col}"
        for row, triples in state.a.column(c.v):
            for t in triples:
                if ATTR_EXCLUDES in t.co_input and row in state.x_t:
                    return f"excluded by selected element: {row} excludes {c.v}"

    if c.cp not in state.x_t:
        return f"customization point not selected: {c.cp}"
    cell = state.a.get(c.cp, c.v)
    if not cell:
        return f"variant not offered at this point: {c.v} at {c.cp}"

    edge_id = _optional_edge_for(state, c)
    if edge_id is None:
        if any(ATTR_MANDATORY in t.co_input for t in cell):
            return f"variant is mandatory and selected automatically: {c.v}"
        return f"variant not offered at this point: {c.v} at {c.cp}"
    selected = state.e_t[edge_id].selected if edge_id in state.e_t else ()
    if c.v in selected:
        return f"duplicate selection: {c.v} already selected for {edge_id}"
    if len(selected) >= state.r.max[edge_id]:
        return f"maximum cardinality reached: {edge_id} allows at most {state.r.max[edge_id]}"
    return None


def apply_instance(state: ValidationState, c: CustomizationInstance) -> ValidationState:
    """Add an accepted instance to M_T and refresh the derived structures."""
    edge_id = _optional_edge_for(state, c)
    if edge_id is None:
        raise ValidationInputError(f"apply_instance without a prior accept: {c}")
    source = state.mg.edge(edge_id)
    previous = state.e_t.get(edge_id)
    entry = SelectedEdge(edge_id, source.in_vertex,
                         (*(previous.selected if previous else ()), c.v))
    e_t = dict(state.e_t)
    e_t[edge_id] = entry
    x_t, e_t = _closure(state.mg, state.x_t | {c.v}, e_t)
    a_t = adjacency(_tenant_metagraph(state.mg, x_t, e_t))
    return replace(state, x_t=x_t, e_t=e_t, a_t=a_t)


def finalize(state: ValidationState, mode: str = "sequential") -> tuple[str, str, list[FinalizeDiagnostic]]:
    """Completeness checks; returns (cf, vf, diagnostics).

    Mandatory edges triggered by X_T must be fully associated, and every
    optional edge whose variation point is bound must reach its minimum
    cardinality. Unordered mode additionally settles the deferred requires
    and (symmetric) excludes constraints; those make the verdict invalid,
    while bare incompleteness leaves it valid.
    """
    if mode not in MODES:
        raise ValidationInputError(f"unknown mode {mode!r}")
    diagnostics: list[FinalizeDiagnostic] = []

    for edge in sorted_edges(state.mg.edges):
        if ATTR_MANDATORY in edge.in_vertex and edge.plain_in_vertex() <= state.x_t:
            missing = edge.out_vertex - state.x_t
            if missing:
                diagnostics.append(FinalizeDiagnostic(
                    f"{edge.id} missing mandatory variants: {', '.join(sorted(missing))}",
                    edge.id, tuple(sorted(missing)), constraint=False))

    for edge in sorted_edges(state.mg.edges):
        if ATTR_OPTIONAL not in edge.in_vertex:
            continue
        vp = next(iter(edge.plain_in_vertex()), None)
        if vp not in state.x_t:
            continue
        count = len(state.e_t[edge.id].selected) if edge.id in state.e_t else 0
        if count < state.r.min[edge.id]:
            diagnostics.append(FinalizeDiagnostic(
                f"{edge.id} below minimum cardinality {state.r.min[edge.id]}",
                edge.id, (vp,), constraint=False))

    if mode == "unordered":
        for edge in sorted_edges(state.mg.edges):
            attrs = edge.attributes()
            if ATTR_REQUIRES in attrs:
                source = next(iter(edge.plain_in_vertex()))
                if source in state.x_t:
                    for target in sorted(edge.out_vertex):
                        if target not in state.x_t:
                            diagnostics.append(FinalizeDiagnostic(
                                f"requires violated: {source} requires {target}",
                                edge.id, (source, target), constraint=True))
            elif ATTR_EXCLUDES in attrs:
                source = next(iter(edge.plain_in_vertex()))
                if source in state.x_t:
                    for target in sorted(edge.out_vertex & state.x_t):
                        diagnostics.append(FinalizeDiagnostic(
                            f"excludes violated: {source}/{target}",
                            edge.id, (source, target), constraint=True))

    if not diagnostics:
        return COMPLETE, VALID, []
    vf = INVALID if any(d.constraint for d in diagnostics) else VALID
    return INCOMPLETE, vf, diagnostics


def _report(state: ValidationState, mode: str, vf: str, cf: str,
            ic: CustomizationInstance | None, reason: str) -> ValidationReport:
    order = {element: i for i, element in enumerate(state.mg.generating_set)}
    x_t = tuple(sorted(state.x_t, key=lambda x: order.get(x, len(order))))
    e_t = tuple(state.e_t[k] for k in sorted(state.e_t, key=natural_key))
    return ValidationReport(vf, cf, ic, mode, reason, x_t, e_t)


def _blame(diagnostics: list[FinalizeDiagnostic],
           instances: tuple[CustomizationInstance, ...]) -> CustomizationInstance | None:
    """Pick the invalid customization for deferred constraint violations."""
    for diag in diagnostics:
        if not diag.constraint:
            continue
        for instance in instances:
            if instance.v in diag.endpoints:
                return instance
    return instances[0] if instances else None


def _run(state: ValidationState, instances: tuple[CustomizationInstance, ...],
         mode: str) -> ValidationReport:
    ordered = instances if mode == "sequential" else tuple(sorted(instances, key=lambda c: (c.cp, c.v)))
    for c in ordered:
        reason = check_instance(state, c, mode)
        if reason is not None:
            return _report(state, mode, INVALID, INCOMPLETE, c, reason)
        state = apply_instance(state, c)
    cf, vf, diagnostics = finalize(state, mode)
    reason = "; ".join(d.message for d in diagnostics)
    ic = None
    if vf == INVALID:
        ic = _blame(diagnostics, instances)
        if ic is None:
            # Nothing to blame (empty C); report the gap as incompleteness.
            vf, cf = VALID, INCOMPLETE
    return _report(state, mode, vf, cf, ic, reason)


def validate(model: VariabilityModel, icp: frozenset[str] | None = None,
             customization: CustomizationSet = CustomizationSet(()),
             mode: str = "unordered") -> ValidationReport:
    """Validate a tenant customization set against a variability model.

    icp defaults to every variation point of the model. Sequential mode
    aborts at the first rejected instance, reporting it as IC.
    """
    if mode not in MODES:
        raise ValidationInputError(f"unknown mode {mode!r}")
    mg, r = map_ovm(model)
    if icp is None:
        icp = frozenset(model.vp_ids())
    state = initialize(mg, r, frozenset(icp))
    return _run(state, customization.instances, mode)


def rebuild_state(model: VariabilityModel, report: ValidationReport) -> ValidationState:
    """Rebuild a validation state from a stored report (no replay)."""
    mg, r = map_ovm(model)
    x_t = frozenset(report.x_t)
    icp = x_t & vp_elements(mg)
    e_t = {}
    for entry in report.e_t:
        source = mg.edge(entry.edge_id)
        stray = frozenset(entry.selected) - source.out_vertex
        if stray:
            raise ValidationInputError(
                f"stored selection for {entry.edge_id!r} is not offered by the model: {sorted(stray)}")
        e_t[entry.edge_id] = SelectedEdge(entry.edge_id, source.in_vertex, entry.selected)
    a = adjacency(mg)
    a_t = adjacency(_tenant_metagraph(mg, x_t, e_t))
    return ValidationState(mg, r, icp, x_t, e_t, a, a_t)


def validate_incremental(model: VariabilityModel, prior: ValidationReport,
                         extra: CustomizationSet = CustomizationSet(()),
                         mode: str = "unordered") -> ValidationReport:
    """Extend a previously validated customization with further instances.

    Equivalent to validating the full history at once, but the state is
    rebuilt from the stored tenant metagraph instead of replayed.
    """
    if prior.vf != VALID:
        raise ValidationInputError("prior report is invalid; incremental validation requires a valid prior")
    state = rebuild_state(model, prior)
    return _run(state, extra.instances, mode)


def instance_to_dict(instance: CustomizationInstance) -> dict:
    return {"cp": instance.cp, "v": instance.v}


def report_to_dict(report: ValidationReport) -> dict:
    return {
        "vf": report.vf,
        "cf": report.cf,
        "ic": instance_to_dict(report.ic) if report.ic else None,
        "mode": report.mode,
        "reason": report.reason,
        "m_t": {
            "x_t": list(report.x_t),
            "e_t": [{"edge": entry.edge_id, "selected": list(entry.selected)}
                    for entry in report.e_t],
        },
    }


def report_from_dict(document: dict) -> ValidationReport:
    root = expect_object(document, "$", required=("vf", "cf", "ic", "mode", "reason", "m_t"))
    m_t = expect_object(root["m_t"], "$.m_t", required=("x_t", "e_t"))
    ic = None
    if root["ic"] is not None:
        raw = expect_object(root["ic"], "$.ic", required=("cp", "v"))
        ic = CustomizationInstance(raw["cp"], raw["v"])
    entries = []
    for i, raw in enumerate(expect_list(m_t["e_t"], "$.m_t.e_t")):
        obj = expect_object(raw, f"$.m_t.e_t[{i}]", required=("edge", "selected"))
        # in-vertex is reattached from the model when the state is rebuilt
        entries.append(SelectedEdge(obj["edge"], frozenset(), tuple(obj["selected"])))
    return ValidationReport(
        expect_string(root["vf"], "$.vf"),
        expect_string(root["cf"], "$.cf"),
        ic,
        expect_string(root["mode"], "$.mode"),
        expect_string(root["reason"], "$.reason", nonempty=False),
        tuple(expect_list(m_t["x_t"], "$.m_t.x_t")),
        tuple(entries),
    )
