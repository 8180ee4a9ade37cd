"""Parent/child hierarchy tables used for descendant closures."""

from __future__ import annotations

from collections import defaultdict, deque
from pathlib import Path
from typing import Iterable

from .curie import is_curie


class HierarchyError(ValueError):
    pass


class Hierarchy:
    """Immutable child -> parents table with descendant closure queries."""

    def __init__(self, edges: Iterable[tuple[str, str]] = ()):
        parents: dict[str, set[str]] = defaultdict(set)
        children: dict[str, set[str]] = defaultdict(set)
        for child, parent in edges:
            parents[child].add(parent)
            children[parent].add(child)
        self._parents = {k: frozenset(v) for k, v in parents.items()}
        self._children = {k: frozenset(v) for k, v in children.items()}
        self._nodes = frozenset(self._parents) | frozenset(self._children)

    def __contains__(self, curie: object) -> bool:
        return curie in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def nodes(self) -> frozenset[str]:
        return self._nodes

    def parents(self, curie: str) -> frozenset[str]:
        return self._parents.get(curie, frozenset())

    def children(self, curie: str) -> frozenset[str]:
        return self._children.get(curie, frozenset())

    def descendants(self, curie: str, *, reflexive: bool = True) -> set[str]:
        if curie not in self._nodes:
            raise HierarchyError(f"unknown CURIE in hierarchy table: {curie}")
        seen = {curie}
        queue = deque([curie])
        while queue:
            for child in self._children.get(queue.popleft(), ()):
                if child not in seen:
                    seen.add(child)
                    queue.append(child)
        if not reflexive:
            seen.discard(curie)
        return seen

    def edges(self) -> list[tuple[str, str]]:
        return sorted((c, p) for c, ps in self._parents.items() for p in ps)


def parse_hierarchy(text: str, source: str = "<hierarchy>") -> Hierarchy:
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        cols = line.rstrip("\r").split("\t")
        if len(cols) != 2 or not all(is_curie(c.strip()) for c in cols):
            raise HierarchyError(f"{source}:{lineno}: expected 'child_curie<TAB>parent_curie', got {line!r}")
        edges.append((cols[0].strip(), cols[1].strip()))
    return Hierarchy(edges)


def load_hierarchy(path: str | Path) -> Hierarchy:
    path = Path(path)
    return parse_hierarchy(path.read_text(encoding="utf-8"), str(path))
