"""Lenient line parser for pseudo-YAML completions."""

from __future__ import annotations

from dataclasses import dataclass, field

from .schema import Schema, normalize_name


@dataclass
class ParsedCompletion:
    pairs: list[tuple[str, str]] = field(default_factory=list)
    unmatched_lines: list[str] = field(default_factory=list)


def parse_completion(r: str, s: Schema, c: str) -> ParsedCompletion:
    """Split each line on its first ``:`` and keep lines whose name is an attribute of ``c``.

    Names match case-insensitively with whitespace normalized to underscores.
    Everything else (blank lines, lines without a colon, unknown names) ends
    up in ``unmatched_lines``.
    """
    keys = {a.key for a in s.get_class(c).attributes}
    out = ParsedCompletion()
    # Only "\n" separates lines; splitlines() would also cut values at \x0b, \x85, U+2028 ...
    for line in r.split("\n"):
        line = line[:-1] if line.endswith("\r") else line
        name, sep, value = line.partition(":")
        if sep and normalize_name(name) in keys:
            out.pairs.append((name.strip(), value))
        else:
            out.unmatched_lines.append(line)
    return out
