"""Orthogonal variability models: domain types, parsing, checking, serialization.

A model documents the customizable surface of a SaaS application: variation
points (the customizable places), variants (the selectable customizations),
variability groups binding variants to a variation point under a
[min..max] selection cardinality, and requires/excludes constraints between
nodes. The identifiers "O", "M", "R" and "E" are reserved for the attribute
elements of the metagraph mapping and may not name any model element.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .jsondoc import (
    DocumentError,
    expect_int,
    expect_list,
    expect_object,
    expect_string,
    load_document,
)

RESERVED_IDS = frozenset({"O", "M", "R", "E"})
GROUP_KINDS = frozenset({"mandatory", "optional"})
CONSTRAINT_KINDS = frozenset({"requires", "excludes"})


def natural_key(identifier: str) -> tuple:
    """Sort key ordering embedded integers numerically (e_2 before e_10)."""
    return tuple(int(part) if part.isdigit() else part
                 for part in re.split(r"(\d+)", identifier))


class ModelFormatError(DocumentError):
    """A model document violates the model file schema."""


class InvalidModelError(ValueError):
    """An operation requiring a well-formed model received a broken one."""

    def __init__(self, diagnostics: list["Diagnostic"]) -> None:
        lines = "; ".join(f"{d.location}: {d.message}" for d in diagnostics)
        super().__init__(f"model fails well-formedness checks: {lines}")
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class VariationPoint:
    id: str
    name: str = ""


@dataclass(frozen=True)
class Variant:
    id: str
    name: str = ""


@dataclass(frozen=True)
class VariabilityGroup:
    """A variability dependency: how many of ``variants`` may customize ``vp``.

    Mandatory groups are always fully bound (min = max = len(variants));
    optional groups carry an alternative-choice cardinality [min..max].
    """

    edge_id: str
    vp: str
    kind: str
    variants: tuple[str, ...]
    min: int
    max: int


@dataclass(frozen=True)
class Constraint:
    edge_id: str
    kind: str
    source: str
    target: str


@dataclass(frozen=True)
class VariabilityModel:
    id: str
    variation_points: tuple[VariationPoint, ...]
    variants: tuple[Variant, ...]
    groups: tuple[VariabilityGroup, ...]
    constraints: tuple[Constraint, ...]

    def vp_ids(self) -> tuple[str, ...]:
        return tuple(vp.id for vp in self.variation_points)

    def variant_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.variants)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "info"
    location: str
    message: str


def _check_id(value: str, path: str, seen: dict[str, str]) -> str:
    if value in RESERVED_IDS:
        raise ModelFormatError(path, f"{value!r} is a reserved attribute identifier")
    if value in seen:
        raise ModelFormatError(path, f"duplicate identifier {value!r} (also declared at {seen[value]})")
    seen[value] = path
    return value


def _default_cardinality(kind: str, count: int) -> tuple[int, int]:
    """Defaults when a group declares no explicit [min..max].

    Mandatory groups are fully bound. An optional group defaults to an
    alternative choice [1..1]; a single standalone optional variant defaults
    to [0..1].
    """
    if kind == "mandatory":
        return count, count
    if count == 1:
        return 0, 1
    return 1, 1


def parse_model(document: str | bytes | dict) -> VariabilityModel:
    """Parse a model document into a VariabilityModel.

    Structural problems (wrong types, unknown keys, duplicate or reserved
    identifiers, references to undeclared nodes) raise ModelFormatError with
    the path of the offending element. Semantic invariants are the business
    of check_model.
    """
    try:
        return _parse_model(document)
    except ModelFormatError:
        raise
    except DocumentError as exc:
        raise ModelFormatError(exc.path, exc.message) from None


def _parse_model(document: str | bytes | dict) -> VariabilityModel:
    root = load_document(document)
    expect_object(root, "$", required=("model",))
    body = expect_object(root["model"], "$.model",
                         required=("id",),
                         optional=("variation_points", "variants", "groups", "constraints"))

    model_id = expect_string(body["id"], "$.model.id")
    node_paths: dict[str, str] = {}
    edge_paths: dict[str, str] = {}

    vps = []
    for i, raw in enumerate(expect_list(body.get("variation_points", []), "$.model.variation_points")):
        path = f"$.model.variation_points[{i}]"
        obj = expect_object(raw, path, required=("id",), optional=("name",))
        vp_id = _check_id(expect_string(obj["id"], f"{path}.id"), f"{path}.id", node_paths)
        vps.append(VariationPoint(vp_id, expect_string(obj.get("name", ""), f"{path}.name", nonempty=False)))

    variants = []
    for i, raw in enumerate(expect_list(body.get("variants", []), "$.model.variants")):
        path = f"$.model.variants[{i}]"
        obj = expect_object(raw, path, required=("id",), optional=("name",))
        v_id = _check_id(expect_string(obj["id"], f"{path}.id"), f"{path}.id", node_paths)
        variants.append(Variant(v_id, expect_string(obj.get("name", ""), f"{path}.name", nonempty=False)))

    vp_ids = {vp.id for vp in vps}
    variant_ids = {v.id for v in variants}

    groups = []
    for i, raw in enumerate(expect_list(body.get("groups", []), "$.model.groups")):
        path = f"$.model.groups[{i}]"
        obj = expect_object(raw, path, required=("edge_id", "vp", "kind", "variants"),
                            optional=("min", "max"))
        edge_id = _check_id(expect_string(obj["edge_id"], f"{path}.edge_id"), f"{path}.edge_id", edge_paths)
        vp = expect_string(obj["vp"], f"{path}.vp")
        if vp not in vp_ids:
            raise ModelFormatError(f"{path}.vp", f"unknown variation point {vp!r}")
        kind = expect_string(obj["kind"], f"{path}.kind")
        if kind not in GROUP_KINDS:
            raise ModelFormatError(f"{path}.kind", f"kind must be one of {sorted(GROUP_KINDS)}")
        members = []
        for j, member in enumerate(expect_list(obj["variants"], f"{path}.variants")):
            member = expect_string(member, f"{path}.variants[{j}]")
            if member not in variant_ids:
                raise ModelFormatError(f"{path}.variants[{j}]", f"unknown variant {member!r}")
            members.append(member)
        default_min, default_max = _default_cardinality(kind, len(members))
        lo = expect_int(obj["min"], f"{path}.min") if "min" in obj else default_min
        hi = expect_int(obj["max"], f"{path}.max") if "max" in obj else default_max
        groups.append(VariabilityGroup(edge_id, vp, kind, tuple(members), lo, hi))

    constraints = []
    for i, raw in enumerate(expect_list(body.get("constraints", []), "$.model.constraints")):
        path = f"$.model.constraints[{i}]"
        obj = expect_object(raw, path, required=("edge_id", "kind", "from", "to"))
        edge_id = _check_id(expect_string(obj["edge_id"], f"{path}.edge_id"), f"{path}.edge_id", edge_paths)
        kind = expect_string(obj["kind"], f"{path}.kind")
        if kind not in CONSTRAINT_KINDS:
            raise ModelFormatError(f"{path}.kind", f"kind must be one of {sorted(CONSTRAINT_KINDS)}")
        source = expect_string(obj["from"], f"{path}.from")
        target = expect_string(obj["to"], f"{path}.to")
        for endpoint, key in ((source, "from"), (target, "to")):
            if endpoint not in vp_ids and endpoint not in variant_ids:
                raise ModelFormatError(f"{path}.{key}", f"unknown node {endpoint!r}")
        constraints.append(Constraint(edge_id, kind, source, target))

    return VariabilityModel(model_id, tuple(vps), tuple(variants), tuple(groups), tuple(constraints))


def check_model(model: VariabilityModel) -> list[Diagnostic]:
    """Return one diagnostic per invariant violation; empty means well-formed.

    Pure: the model is never mutated and equal models yield equal diagnostics.
    """
    out: list[Diagnostic] = []
    err = lambda loc, msg: out.append(Diagnostic("error", loc, msg))

    node_ids: dict[str, str] = {}
    for vp in model.variation_points:
        loc = f"variation_point {vp.id!r}"
        if not vp.id:
            err(loc, "identifier is empty")
        elif vp.id in RESERVED_IDS:
            err(loc, "identifier is reserved")
        elif vp.id in node_ids:
            err(loc, f"duplicate identifier (also {node_ids[vp.id]})")
        node_ids.setdefault(vp.id, loc)
    for v in model.variants:
        loc = f"variant {v.id!r}"
        if not v.id:
            err(loc, "identifier is empty")
        elif v.id in RESERVED_IDS:
            err(loc, "identifier is reserved")
        elif v.id in node_ids:
            err(loc, f"duplicate identifier (also {node_ids[v.id]})")
        node_ids.setdefault(v.id, loc)

    vp_ids = {vp.id for vp in model.variation_points}
    variant_ids = {v.id for v in model.variants}

    edge_ids: dict[str, str] = {}
    grouped_vps: set[str] = set()
    grouped_variants: set[str] = set()
    vps_of_variant: dict[str, set[str]] = {}
    for g in model.groups:
        loc = f"group {g.edge_id!r}"
        if not g.edge_id:
            err(loc, "edge identifier is empty")
        elif g.edge_id in RESERVED_IDS:
            err(loc, "edge identifier is reserved")
        elif g.edge_id in edge_ids:
            err(loc, f"duplicate edge identifier (also {edge_ids[g.edge_id]})")
        edge_ids.setdefault(g.edge_id, loc)
        if g.kind not in GROUP_KINDS:
            err(loc, f"unknown group kind {g.kind!r}")
        if g.vp not in vp_ids:
            err(loc, f"unknown variation point {g.vp!r}")
        else:
            grouped_vps.add(g.vp)
        if not g.variants:
            err(loc, "group has no variants")
        if len(set(g.variants)) != len(g.variants):
            err(loc, "group lists a variant twice")
        for member in g.variants:
            if member not in variant_ids:
                err(loc, f"unknown variant {member!r}")
            else:
                grouped_variants.add(member)
                vps_of_variant.setdefault(member, set()).add(g.vp)
        if g.kind == "mandatory":
            if g.min != len(g.variants) or g.max != len(g.variants):
                err(loc, f"mandatory group must have min = max = {len(g.variants)}")
        else:
            if g.min < 0:
                err(loc, "cardinality min is negative")
            if g.min > g.max:
                err(loc, "cardinality min exceeds max")
            if g.max > len(g.variants):
                err(loc, f"cardinality max {g.max} exceeds group size {len(g.variants)}")

    for c in model.constraints:
        loc = f"constraint {c.edge_id!r}"
        if not c.edge_id:
            err(loc, "edge identifier is empty")
        elif c.edge_id in RESERVED_IDS:
            err(loc, "edge identifier is reserved")
        elif c.edge_id in edge_ids:
            err(loc, f"duplicate edge identifier (also {edge_ids[c.edge_id]})")
        edge_ids.setdefault(c.edge_id, loc)
        if c.kind not in CONSTRAINT_KINDS:
            err(loc, f"unknown constraint kind {c.kind!r}")
        for endpoint in (c.source, c.target):
            if endpoint not in vp_ids and endpoint not in variant_ids:
                err(loc, f"unknown node {endpoint!r}")
        if c.source == c.target:
            err(loc, "constraint endpoints are identical")

    for vp in model.variation_points:
        if vp.id not in grouped_vps:
            err(f"variation_point {vp.id!r}", "unbound variation point: belongs to no group")
    for v in model.variants:
        if v.id not in grouped_variants:
            err(f"variant {v.id!r}", "unbound variant: belongs to no group")

    for member, owners in sorted(vps_of_variant.items()):
        if len(owners) > 1:
            out.append(Diagnostic("info", f"variant {member!r}",
                                  f"shared by groups under several variation points: {', '.join(sorted(owners))}"))

    return out


def require_valid(model: VariabilityModel) -> None:
    """Raise InvalidModelError if the model has any error-severity diagnostic."""
    errors = [d for d in check_model(model) if d.severity == "error"]
    if errors:
        raise InvalidModelError(errors)


def model_to_dict(model: VariabilityModel) -> dict:
    return {
        "model": {
            "id": model.id,
            "variation_points": [{"id": vp.id, "name": vp.name} for vp in model.variation_points],
            "variants": [{"id": v.id, "name": v.name} for v in model.variants],
            "groups": [
                {"edge_id": g.edge_id, "vp": g.vp, "kind": g.kind,
                 "variants": list(g.variants), "min": g.min, "max": g.max}
                for g in model.groups
            ],
            "constraints": [
                {"edge_id": c.edge_id, "kind": c.kind, "from": c.source, "to": c.target}
                for c in model.constraints
            ],
        }
    }


def serialize_model(model: VariabilityModel) -> str:
    """Serialize a well-formed model; parse_model inverts this exactly."""
    require_valid(model)
    return json.dumps(model_to_dict(model), indent=2) + "\n"
