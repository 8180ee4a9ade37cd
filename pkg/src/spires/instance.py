"""Extraction output tree."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterator, Union

from .grounding import GroundedEntity


@dataclass(frozen=True)
class BlankNode:
    """An entity leaf that could not be grounded; ``id`` is ``_:Name`` once assigned."""

    surface: str
    id: str | None = None


@dataclass
class Instance:
    class_name: str
    values: dict[str, Any] = field(default_factory=dict)
    provenance: str | None = field(default=None, compare=False)
    warnings: list[str] = field(default_factory=list, compare=False)

    def walk(self) -> Iterator["Instance"]:
        yield self
        for value in self.values.values():
            for v in value if isinstance(value, list) else [value]:
                if isinstance(v, Instance):
                    yield from v.walk()


Scalar = Union[str, int, float, bool]
AttributeValue = Union[Scalar, GroundedEntity, BlankNode, Instance, list]


def leaves(value: Any) -> Iterator[Any]:
    """Every non-instance leaf reachable from ``value``, depth-first in attribute order."""
    if isinstance(value, Instance):
        for v in value.values.values():
            yield from leaves(v)
    elif isinstance(value, list):
        for v in value:
            yield from leaves(v)
    else:
        yield value


def camel_case(text: str) -> str:
    words = re.findall(r"[^\W_]+", text)
    return "".join(w[:1].upper() + w[1:] for w in words) or "Node"


def assign_blank_nodes(i: Instance) -> Instance:
    """Give every unlabelled :class:`BlankNode` a deterministic ``_:CamelCase`` id."""
    used = {leaf.id for leaf in leaves(i) if isinstance(leaf, BlankNode) and leaf.id}

    def label(surface: str) -> str:
        base = "_:" + camel_case(surface)
        candidate, n = base, 1
        while candidate in used:
            n += 1
            candidate = f"{base}{n}"
        used.add(candidate)
        return candidate

    def visit(value: Any) -> Any:
        if isinstance(value, Instance):
            return replace(value, values={k: visit(v) for k, v in value.values.items()}, warnings=list(value.warnings))
        if isinstance(value, list):
            return [visit(v) for v in value]
        if isinstance(value, BlankNode) and value.id is None:
            return BlankNode(value.surface, label(value.surface))
        return value

    return visit(i)


def strip_grounding(value: Any) -> Any:
    """Replace entity leaves by their surface text (for comparisons up to grounding)."""
    if isinstance(value, Instance):
        return Instance(value.class_name, {k: strip_grounding(v) for k, v in value.values.items()})
    if isinstance(value, list):
        return [strip_grounding(v) for v in value]
    if isinstance(value, (GroundedEntity, BlankNode)):
        return value.surface
    return value
