"""Brute-force configuration enumeration over variability models.

Independent oracle for the metagraph validator: enumerates every per-group
variant subset within its [min..max] bounds straight off the model (no
metagraph, no adjacency matrix), auto-includes mandatory variants, and
keeps exactly the combinations satisfying all requires/excludes
constraints, with excludes read as mutual exclusion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

from .ovm import VariabilityModel, natural_key, require_valid

SEARCH_SPACE_GUARD = 10**6


class SearchSpaceExceeded(ValueError):
    """The group combination space is too large to enumerate exhaustively."""


@dataclass(frozen=True)
class EnumerationResult:
    configurations: tuple[frozenset[str], ...]
    truncated: bool


def _group_choices(variants: tuple[str, ...], lo: int, hi: int) -> list[tuple[str, ...]]:
    choices = []
    for size in range(lo, min(hi, len(variants)) + 1):
        choices.extend(itertools.combinations(variants, size))
    return choices


def enumerate_configurations(model: VariabilityModel,
                             icp: frozenset[str] | None = None,
                             limit: int | None = None) -> EnumerationResult:
    """Enumerate the constraint-satisfying variant sets of a model.

    Variation points outside icp are unbound: their groups contribute
    nothing. The search space (product over bound optional groups of
    sum-of-binomials) is guarded at 10^6 combinations. Results are
    duplicate-free, deterministically ordered, and truncated at ``limit``
    with the truncation flag raised when more remain.
    """
    require_valid(model)
    if icp is None:
        icp = frozenset(model.vp_ids())

    forced: set[str] = set()
    optional_groups = []
    for group in sorted(model.groups, key=lambda g: natural_key(g.edge_id)):
        if group.vp not in icp:
            continue
        if group.kind == "mandatory":
            forced |= set(group.variants)
        else:
            optional_groups.append(group)

    space = 1
    for group in optional_groups:
        space *= sum(comb(len(group.variants), size)
                     for size in range(group.min, min(group.max, len(group.variants)) + 1))
        if space > SEARCH_SPACE_GUARD:
            raise SearchSpaceExceeded(
                f"search-space guard exceeded: more than {SEARCH_SPACE_GUARD} combinations")

    per_group = [_group_choices(g.variants, g.min, g.max) for g in optional_groups]

    def satisfied(selection: frozenset[str]) -> bool:
        bound = selection | icp
        for c in model.constraints:
            if c.kind == "requires":
                if c.source in bound and c.target not in bound:
                    return False
            else:  # excludes: mutual exclusion
                if c.source in bound and c.target in bound:
                    return False
        return True

    configurations: list[frozenset[str]] = []
    seen: set[frozenset[str]] = set()
    truncated = False
    for combo in itertools.product(*per_group):
        candidate = frozenset(forced.union(*combo)) if combo else frozenset(forced)
        if candidate in seen or not satisfied(candidate):
            continue
        seen.add(candidate)
        if limit is not None and len(configurations) >= limit:
            truncated = True
            break
        configurations.append(candidate)
    return EnumerationResult(tuple(configurations), truncated)
