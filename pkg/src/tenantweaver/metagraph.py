"""Metagraphs over variability models.

A metagraph is a generating set X plus edges e = <V_e, W_e> whose in- and
out-vertices are nonempty subsets of X. Variability models map onto
metagraphs by turning every node into an element and every group or
constraint into an edge whose in-vertex carries one of the reserved
attribute elements:

    optional group   e = <{vp, "O"}, variants>
    mandatory group  e = <{vp, "M"}, variants>
    requires         e = <{from, "R"}, {to}>
    excludes         e = <{from, "E"}, {to}>

The adjacency matrix A is indexed by the generating set; cell a[i][j] holds
one triple <CI, CO, e> per edge e connecting x_i to x_j, where CI = V_e
minus x_i (the co-input) and CO = W_e minus x_j (the co-output). Optional
groups additionally contribute a [min..max] column to the cardinality
matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ovm import VariabilityModel, natural_key, require_valid

ATTR_OPTIONAL = "O"
ATTR_MANDATORY = "M"
ATTR_REQUIRES = "R"
ATTR_EXCLUDES = "E"
ATTRIBUTE_ELEMENTS = frozenset({ATTR_OPTIONAL, ATTR_MANDATORY, ATTR_REQUIRES, ATTR_EXCLUDES})

# Fixed presentation order for attribute elements at the tail of the
# generating set; only attributes that occur in some edge are included.
_ATTRIBUTE_ORDER = (ATTR_REQUIRES, ATTR_EXCLUDES, ATTR_OPTIONAL, ATTR_MANDATORY)


@dataclass(frozen=True)
class MetaEdge:
    id: str
    in_vertex: frozenset[str]
    out_vertex: frozenset[str]

    def __post_init__(self) -> None:
        if not self.in_vertex or not self.out_vertex:
            raise ValueError(f"edge {self.id!r}: in-vertex and out-vertex must be nonempty")

    def attributes(self) -> frozenset[str]:
        return self.in_vertex & ATTRIBUTE_ELEMENTS

    def plain_in_vertex(self) -> frozenset[str]:
        return self.in_vertex - ATTRIBUTE_ELEMENTS


@dataclass(frozen=True)
class Metagraph:
    generating_set: tuple[str, ...]
    edges: tuple[MetaEdge, ...]

    def __post_init__(self) -> None:
        if len(set(self.generating_set)) != len(self.generating_set):
            raise ValueError("generating set contains duplicates")
        elements = set(self.generating_set)
        seen: set[str] = set()
        for edge in self.edges:
            if edge.id in seen:
                raise ValueError(f"duplicate edge id {edge.id!r}")
            seen.add(edge.id)
            stray = (edge.in_vertex | edge.out_vertex) - elements
            if stray:
                raise ValueError(f"edge {edge.id!r} uses elements outside the generating set: {sorted(stray)}")

    def edge(self, edge_id: str) -> MetaEdge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)


@dataclass(frozen=True)
class CardinalityMatrix:
    """Min/Max selection bounds, one column per optional group edge."""

    columns: tuple[str, ...]
    min: dict[str, int]
    max: dict[str, int]

    def __post_init__(self) -> None:
        for edge_id in self.columns:
            if self.min[edge_id] > self.max[edge_id]:
                raise ValueError(f"column {edge_id!r}: min exceeds max")


@dataclass(frozen=True)
class Triple:
    co_input: frozenset[str]
    co_output: frozenset[str]
    edge: str


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Sparse square matrix over ``index``; empty cells are omitted."""

    index: tuple[str, ...]
    cells: dict[tuple[str, str], tuple[Triple, ...]] = field(default_factory=dict)

    def get(self, row: str, col: str) -> tuple[Triple, ...]:
        return self.cells.get((row, col), ())

    def row(self, row: str) -> list[tuple[str, tuple[Triple, ...]]]:
        return [(col, triples) for (r, col), triples in self.cells.items() if r == row]

    def column(self, col: str) -> list[tuple[str, tuple[Triple, ...]]]:
        return [(row, triples) for (row, c), triples in self.cells.items() if c == col]

    def triple_count(self) -> int:
        return sum(len(triples) for triples in self.cells.values())


def sorted_edges(edges) -> list:
    return sorted(edges, key=lambda e: natural_key(e.id))


def map_ovm(model: VariabilityModel) -> tuple[Metagraph, CardinalityMatrix]:
    """Map a well-formed variability model to its metagraph and cardinality matrix.

    The generating set lists model nodes by first occurrence over the edges
    in natural edge-id order (each group contributes its variation point
    then its variants, each constraint its endpoints), followed by exactly
    the attribute elements occurring in at least one edge. This ordering is
    independent of the declaration order of groups and constraints.
    """
    require_valid(model)

    raw_edges: list[tuple[str, list[str], frozenset[str], frozenset[str]]] = []
    optional_edges: list[tuple[str, int, int]] = []
    for g in model.groups:
        attr = ATTR_OPTIONAL if g.kind == "optional" else ATTR_MANDATORY
        raw_edges.append((g.edge_id, [g.vp, *g.variants],
                          frozenset({g.vp, attr}), frozenset(g.variants)))
        if g.kind == "optional":
            optional_edges.append((g.edge_id, g.min, g.max))
    for c in model.constraints:
        attr = ATTR_REQUIRES if c.kind == "requires" else ATTR_EXCLUDES
        raw_edges.append((c.edge_id, [c.source, c.target],
                          frozenset({c.source, attr}), frozenset({c.target})))

    raw_edges.sort(key=lambda item: natural_key(item[0]))

    ordered: list[str] = []
    seen: set[str] = set()
    occurring_attrs: set[str] = set()
    for _, mentions, in_vertex, _ in raw_edges:
        for node in mentions:
            if node not in seen:
                seen.add(node)
                ordered.append(node)
        occurring_attrs |= in_vertex & ATTRIBUTE_ELEMENTS
    # Nodes outside every edge cannot occur in a checked model; kept for safety.
    for node in (*model.vp_ids(), *model.variant_ids()):
        if node not in seen:
            seen.add(node)
            ordered.append(node)
    ordered.extend(attr for attr in _ATTRIBUTE_ORDER if attr in occurring_attrs)

    edges = tuple(MetaEdge(edge_id, in_vertex, out_vertex)
                  for edge_id, _, in_vertex, out_vertex in raw_edges)
    mg = Metagraph(tuple(ordered), edges)

    optional_edges.sort(key=lambda item: natural_key(item[0]))
    cardinality = CardinalityMatrix(
        columns=tuple(edge_id for edge_id, _, _ in optional_edges),
        min={edge_id: lo for edge_id, lo, _ in optional_edges},
        max={edge_id: hi for edge_id, _, hi in optional_edges},
    )
    return mg, cardinality


def adjacency(mg: Metagraph) -> AdjacencyMatrix:
    """Build the adjacency matrix of a metagraph.

    Cell (i, j) receives one triple per edge with x_i in V_e and x_j in W_e;
    triples within a cell are ordered by edge id.
    """
    order = {element: i for i, element in enumerate(mg.generating_set)}
    cells: dict[tuple[str, str], list[Triple]] = {}
    for edge in sorted_edges(mg.edges):
        for x_i in sorted(edge.in_vertex, key=order.__getitem__):
            for x_j in sorted(edge.out_vertex, key=order.__getitem__):
                triple = Triple(edge.in_vertex - {x_i}, edge.out_vertex - {x_j}, edge.id)
                cells.setdefault((x_i, x_j), []).append(triple)
    packed = {key: tuple(sorted(triples, key=lambda t: natural_key(t.edge)))
              for key, triples in sorted(cells.items(),
                                         key=lambda kv: (order[kv[0][0]], order[kv[0][1]]))}
    return AdjacencyMatrix(mg.generating_set, packed)


def reconstruct_edges(matrix: AdjacencyMatrix) -> tuple[MetaEdge, ...]:
    """Recover the edge set from an adjacency matrix (inverse of adjacency)."""
    found: dict[str, tuple[frozenset[str], frozenset[str]]] = {}
    for (row, col), triples in matrix.cells.items():
        for t in triples:
            in_vertex = t.co_input | {row}
            out_vertex = t.co_output | {col}
            previous = found.get(t.edge)
            if previous is not None and previous != (in_vertex, out_vertex):
                raise ValueError(f"inconsistent triples for edge {t.edge!r}")
            found[t.edge] = (in_vertex, out_vertex)
    return tuple(MetaEdge(edge_id, vin, vout)
                 for edge_id, (vin, vout) in sorted(found.items(), key=lambda kv: natural_key(kv[0])))


def to_dot(mg: Metagraph) -> str:
    """Render the metagraph as a deterministic Graphviz digraph.

    Elements become ellipse nodes; every edge gets one box node fanning in
    from its in-vertex members and out to its out-vertex members.
    """
    order = {element: i for i, element in enumerate(mg.generating_set)}
    lines = ["digraph metagraph {", "  rankdir=LR;"]
    for element in mg.generating_set:
        lines.append(f'  "{element}" [shape=ellipse];')
    for edge in sorted_edges(mg.edges):
        node = f"edge_{edge.id}"
        lines.append(f'  "{node}" [shape=box, label="{edge.id}"];')
        for member in sorted(edge.in_vertex, key=order.__getitem__):
            lines.append(f'  "{member}" -> "{node}";')
        for member in sorted(edge.out_vertex, key=order.__getitem__):
            lines.append(f'  "{node}" -> "{member}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def adjacency_to_dict(matrix: AdjacencyMatrix) -> dict:
    """Adjacency export: nonempty cells only, deterministically ordered."""
    order = {element: i for i, element in enumerate(matrix.index)}
    by_order = lambda ids: sorted(ids, key=lambda x: order.get(x, len(order)))
    return {
        "elements": list(matrix.index),
        "cells": [
            {"row": row, "col": col,
             "triples": [{"ci": by_order(t.co_input), "co": by_order(t.co_output), "edge": t.edge}
                         for t in triples]}
            for (row, col), triples in matrix.cells.items()
        ],
    }


def metagraph_export(mg: Metagraph, cardinality: CardinalityMatrix) -> dict:
    """Combined metagraph + adjacency + cardinality document (stable order)."""
    order = {element: i for i, element in enumerate(mg.generating_set)}
    doc = adjacency_to_dict(adjacency(mg))
    doc["edges"] = [
        {"id": e.id,
         "in": sorted(e.in_vertex, key=order.__getitem__),
         "out": sorted(e.out_vertex, key=order.__getitem__)}
        for e in sorted_edges(mg.edges)
    ]
    doc["cardinality"] = {
        "columns": list(cardinality.columns),
        "min": [cardinality.min[c] for c in cardinality.columns],
        "max": [cardinality.max[c] for c in cardinality.columns],
    }
    return doc
