"""Compact identifier (CURIE) helpers."""

from __future__ import annotations

import re

CURIE_RE = re.compile(r"^([A-Z][A-Z0-9_.-]*):(\S+)$")


class CurieError(ValueError):
    pass


def is_curie(value: str) -> bool:
    return bool(CURIE_RE.match(value))


def prefix_of(curie: str) -> str:
    """Return the prefix of ``curie``, raising :class:`CurieError` when malformed."""
    m = CURIE_RE.match(curie)
    if not m:
        raise CurieError(f"not a valid CURIE (PREFIX:LocalId, upper-case prefix): {curie!r}")
    return m.group(1)


def split_curie(curie: str) -> tuple[str, str]:
    m = CURIE_RE.match(curie)
    if not m:
        raise CurieError(f"not a valid CURIE (PREFIX:LocalId, upper-case prefix): {curie!r}")
    return m.group(1), m.group(2)
