"""Knowledge schema model: classes, attribute constraints, value sets, ID spaces.

Schemas are written in a small line-oriented YAML subset (see
``docs/schema-format.md``). Loading goes through ``yaml.compose`` so that
duplicate keys and structural mistakes can be reported with line numbers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import yaml

from ._yamlfmt import scalar
from .curie import is_curie
from .hierarchy import Hierarchy

PRIMITIVES = ("string", "number", "boolean")


class SchemaError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SchemaSyntaxError(SchemaError):
    pass


class SchemaValidationError(SchemaError):
    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


class ValueSetError(ValueError):
    pass


def normalize_name(name: str) -> str:
    """Lower-case and turn whitespace runs into underscores."""
    return re.sub(r"\s+", "_", name.strip().lower())


@dataclass(frozen=True)
class RangeSpec:
    kind: str  # "primitive" | "class" | "value_set"
    name: str

    @property
    def is_primitive(self) -> bool:
        return self.kind == "primitive"

    @property
    def is_class(self) -> bool:
        return self.kind == "class"

    @property
    def is_value_set(self) -> bool:
        return self.kind == "value_set"


@dataclass(frozen=True)
class ValueSetSpec:
    name: str
    kind: str  # "extensional" | "intensional"
    members: tuple[tuple[str, str], ...] = ()
    vocabulary: str | None = None
    include: tuple[str, ...] = ()
    exclude: tuple[str, ...] = ()


@dataclass(frozen=True)
class AttributeDef:
    name: str
    range: RangeSpec = RangeSpec("primitive", "string")
    multivalued: bool = False
    identifier: bool = False
    inlined: bool = False
    prompt: str | None = None

    @property
    def key(self) -> str:
        return normalize_name(self.name)


@dataclass(frozen=True)
class ClassDef:
    name: str
    attributes: tuple[AttributeDef, ...] = ()
    id_spaces: tuple[str, ...] = ()
    value_set: ValueSetSpec | None = None
    is_entity: bool = False

    def attribute(self, name: str) -> AttributeDef | None:
        key = normalize_name(name)
        for a in self.attributes:
            if a.key == key:
                return a
        return None


@dataclass(frozen=True)
class Schema:
    name: str
    classes: Mapping[str, ClassDef] = field(default_factory=dict)
    prefixes: Mapping[str, str] = field(default_factory=dict)
    value_sets: Mapping[str, ValueSetSpec] = field(default_factory=dict)

    def get_class(self, name: str) -> ClassDef:
        try:
            return self.classes[name]
        except KeyError:
            raise KeyError(f"unknown class {name!r} in schema {self.name!r}") from None


@dataclass(frozen=True)
class Violation:
    rule: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.where}: [{self.rule}] {self.message}"


# --- loading -----------------------------------------------------------------

_CLASS_KEYS = {"entity", "id_spaces", "value_set", "attributes"}
_ATTR_KEYS = {"range", "multivalued", "identifier", "inlined", "prompt"}
_VS_KEYS = {"members", "vocabulary", "include", "exclude"}
_TOP_KEYS = {"schema", "prefixes", "value_sets", "classes"}

_constructor = yaml.constructor.SafeConstructor()


def _line(node: yaml.Node) -> int:
    return node.start_mark.line + 1


def _scalar(node: yaml.Node, what: str) -> Any:
    if not isinstance(node, yaml.ScalarNode):
        raise SchemaSyntaxError(f"{what}: expected a scalar", _line(node))
    return _constructor.construct_object(node, deep=True)


def _string(node: yaml.Node, what: str) -> str:
    value = _scalar(node, what)
    if value is None or isinstance(value, (dict, list)):
        raise SchemaSyntaxError(f"{what}: expected a string", _line(node))
    return str(value)


def _bool(node: yaml.Node, what: str) -> bool:
    value = _scalar(node, what)
    if not isinstance(value, bool):
        raise SchemaSyntaxError(f"{what}: expected true or false", _line(node))
    return value


def _pairs(node: yaml.Node | None, what: str, allowed: set[str] | None = None) -> list[tuple[str, yaml.Node, int]]:
    """Items of a mapping node as (key, value-node, line); null means empty."""
    if node is None or (isinstance(node, yaml.ScalarNode) and node.tag.endswith(":null")):
        return []
    if not isinstance(node, yaml.MappingNode):
        raise SchemaSyntaxError(f"{what}: expected a mapping", _line(node))
    out = []
    seen: dict[str, int] = {}
    for knode, vnode in node.value:
        key = _string(knode, what)
        if key in seen:
            raise SchemaSyntaxError(f"{what}: duplicate name {key!r} (first defined on line {seen[key]})", _line(knode))
        if allowed is not None and key not in allowed:
            raise SchemaSyntaxError(f"{what}: unknown key {key!r}", _line(knode))
        seen[key] = _line(knode)
        out.append((key, vnode, _line(knode)))
    return out


def _string_list(node: yaml.Node, what: str) -> tuple[str, ...]:
    if isinstance(node, yaml.ScalarNode) and node.tag.endswith(":null"):
        return ()
    if not isinstance(node, yaml.SequenceNode):
        raise SchemaSyntaxError(f"{what}: expected a list", _line(node))
    return tuple(_string(n, what) for n in node.value)


def _load_value_set(name: str, node: yaml.Node, line: int) -> ValueSetSpec:
    items = dict((k, v) for k, v, _ in _pairs(node, f"value set {name}", _VS_KEYS))
    if "members" in items:
        if set(items) != {"members"}:
            raise SchemaSyntaxError(f"value set {name}: 'members' cannot be combined with query keys", line)
        members = tuple((k, _string(v, f"value set {name} member {k}")) for k, v, _ in _pairs(items["members"], f"value set {name} members"))
        return ValueSetSpec(name=name, kind="extensional", members=members)
    if "vocabulary" not in items:
        raise SchemaSyntaxError(f"value set {name}: needs either 'members' or 'vocabulary'", line)
    return ValueSetSpec(
        name=name,
        kind="intensional",
        vocabulary=_string(items["vocabulary"], f"value set {name} vocabulary"),
        include=_string_list(items["include"], f"value set {name} include") if "include" in items else (),
        exclude=_string_list(items["exclude"], f"value set {name} exclude") if "exclude" in items else (),
    )


def _range(name: str, classes: Iterable[str], value_sets: Mapping[str, ValueSetSpec]) -> RangeSpec:
    if name in PRIMITIVES:
        return RangeSpec("primitive", name)
    if name in value_sets:
        return RangeSpec("value_set", name)
    # Unknown names are kept as class references; validation flags them as dangling.
    return RangeSpec("class", name)


def parse_schema(source: str) -> Schema:
    """Parse schema text without checking the semantic invariants."""
    try:
        root = yaml.compose(source, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark else None
        raise SchemaSyntaxError(str(e.problem or e), line) from None
    if root is None:
        raise SchemaSyntaxError("empty schema document", 1)
    top = {k: (v, ln) for k, v, ln in _pairs(root, "document", _TOP_KEYS)}
    if "schema" not in top:
        raise SchemaSyntaxError("missing 'schema: <name>' line", 1)
    name = _string(top["schema"][0], "schema")
    prefixes = {k: _string(v, f"prefix {k}") for k, v, _ in _pairs(top.get("prefixes", (None,))[0], "prefixes")}
    value_sets = {k: _load_value_set(k, v, ln) for k, v, ln in _pairs(top.get("value_sets", (None,))[0], "value_sets")}

    class_items = _pairs(top.get("classes", (None,))[0], "classes")
    class_names = [k for k, _, _ in class_items]
    classes: dict[str, ClassDef] = {}
    for cname, cnode, cline in class_items:
        props = {k: v for k, v, _ in _pairs(cnode, f"class {cname}", _CLASS_KEYS)}
        vs = None
        if "value_set" in props:
            vs_name = _string(props["value_set"], f"class {cname} value_set")
            if vs_name not in value_sets:
                raise SchemaSyntaxError(f"class {cname}: value_set {vs_name!r} is not defined", _line(props["value_set"]))
            vs = value_sets[vs_name]
        attrs = []
        for aname, anode, aline in _pairs(props.get("attributes"), f"class {cname} attributes"):
            where = f"class {cname} attribute {aname}"
            ap = {k: v for k, v, _ in _pairs(anode, where, _ATTR_KEYS)}
            attrs.append(
                AttributeDef(
                    name=aname,
                    range=_range(_string(ap["range"], where) if "range" in ap else "string", class_names, value_sets),
                    multivalued=_bool(ap["multivalued"], where) if "multivalued" in ap else False,
                    identifier=_bool(ap["identifier"], where) if "identifier" in ap else False,
                    inlined=_bool(ap["inlined"], where) if "inlined" in ap else False,
                    prompt=_string(ap["prompt"], where) if "prompt" in ap else None,
                )
            )
        classes[cname] = ClassDef(
            name=cname,
            attributes=tuple(attrs),
            id_spaces=_string_list(props["id_spaces"], f"class {cname} id_spaces") if "id_spaces" in props else (),
            value_set=vs,
            is_entity=_bool(props["entity"], f"class {cname} entity") if "entity" in props else False,
        )
    return Schema(name=name, classes=classes, prefixes=prefixes, value_sets=value_sets)


def load_schema(source: str) -> Schema:
    """Parse schema text and reject it unless every invariant holds."""
    schema = parse_schema(source)
    violations = validate_schema(schema)
    if violations:
        raise SchemaValidationError(violations)
    return schema


def load_schema_file(path: str | Path) -> Schema:
    return load_schema(Path(path).read_text(encoding="utf-8"))


# --- validation --------------------------------------------------------------


def _inlined_cycles(schema: Schema) -> list[list[str]]:
    graph = {
        c.name: sorted({a.range.name for a in c.attributes if a.inlined and a.range.is_class and a.range.name in schema.classes})
        for c in schema.classes.values()
    }
    cycles = []
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(node: str) -> None:
        state[node] = 1
        stack.append(node)
        for nxt in graph[node]:
            if state.get(nxt) == 1:
                cycles.append(stack[stack.index(nxt):] + [nxt])
            elif nxt not in state:
                visit(nxt)
        stack.pop()
        state[node] = 2

    for name in graph:
        if name not in state:
            visit(name)
    return cycles


def validate_schema(s: Schema) -> list[Violation]:
    out: list[Violation] = []
    for cname, cls in s.classes.items():
        where = f"class {cname!r}"
        if not cname or not cname.strip():
            out.append(Violation("empty-class-name", where, "class names must be non-empty"))
        for prefix in cls.id_spaces:
            if prefix != prefix.upper():
                out.append(Violation("lowercase-prefix", where, f"id_spaces prefix {prefix!r} must be upper-case"))
            if prefix not in s.prefixes:
                out.append(Violation("unknown-prefix", where, f"id_spaces prefix {prefix!r} is not declared under prefixes"))
        seen: dict[str, str] = {}
        for a in cls.attributes:
            awhere = f"class {cname!r} attribute {a.name!r}"
            if a.key in seen:
                out.append(Violation("duplicate-attribute", awhere, f"collides with {seen[a.key]!r} after normalization to {a.key!r}"))
            else:
                seen[a.key] = a.name
            if a.range.is_class and a.range.name not in s.classes:
                out.append(Violation("dangling-reference", awhere, f"range {a.range.name!r} is not a defined class, value set, or primitive"))
            if a.inlined and not a.range.is_class:
                out.append(Violation("inlined-non-class", awhere, "inlined is only valid when the range is a class"))
        identifiers = [a.name for a in cls.attributes if a.identifier]
        if len(identifiers) > 1:
            out.append(Violation("multiple-identifiers", where, f"at most one identifier attribute allowed, found {identifiers}"))
    for vs in s.value_sets.values():
        where = f"value set {vs.name!r}"
        for curie, _ in vs.members:
            if not is_curie(curie):
                out.append(Violation("invalid-curie", where, f"member {curie!r} is not PREFIX:LocalId with an upper-case prefix"))
        for curie in vs.include + vs.exclude:
            if not is_curie(curie):
                out.append(Violation("invalid-curie", where, f"root {curie!r} is not PREFIX:LocalId with an upper-case prefix"))
        overlap = sorted(set(vs.include) & set(vs.exclude))
        if overlap:
            out.append(Violation("value-set-overlap", where, f"include and exclude roots overlap: {overlap}"))
    for cycle in _inlined_cycles(s):
        out.append(Violation("inlined-cycle", f"class {cycle[0]!r}", "inlined references form a cycle: " + " -> ".join(cycle)))
    return out


# --- value sets --------------------------------------------------------------


def resolve_value_set(v: ValueSetSpec, lex: Any = None) -> frozenset[str]:
    """Member CURIEs of a value set.

    ``lex`` is a lexicon carrying a ``hierarchy`` (or a bare :class:`Hierarchy`);
    it is only consulted for intensional sets.
    """
    if v.kind == "extensional":
        return frozenset(c for c, _ in v.members)
    hierarchy = lex if isinstance(lex, Hierarchy) else getattr(lex, "hierarchy", None)
    if hierarchy is None:
        raise ValueSetError(f"value set {v.name!r} needs a hierarchy table for vocabulary {v.vocabulary}")
    for root in v.include + v.exclude:
        if root not in hierarchy:
            raise ValueSetError(f"value set {v.name!r}: unknown root CURIE {root} in hierarchy table")
    included: set[str] = set()
    for root in v.include:
        included |= hierarchy.descendants(root)
    for root in v.exclude:
        included -= hierarchy.descendants(root)
    return frozenset(included)


# --- serialization -----------------------------------------------------------


_FLOW_PLAIN = re.compile(r"[A-Za-z_][\w.:-]*")


def _flow_scalar(text: str) -> str:
    # Plain scalars inside [..] / {..} cannot carry ',', brackets or braces.
    if _FLOW_PLAIN.fullmatch(text) and scalar(text) == text:
        return text
    return json.dumps(text, ensure_ascii=False)


def _flow_list(items: Iterable[str]) -> str:
    return "[" + ", ".join(_flow_scalar(i) for i in items) + "]"


def dump_schema(s: Schema) -> str:
    """Canonical text form; ``parse_schema(dump_schema(s)) == s``."""
    lines = [f"schema: {scalar(s.name)}"]
    if s.prefixes:
        lines.append("prefixes:")
        lines += [f"  {scalar(k)}: {scalar(v)}" for k, v in s.prefixes.items()]
    if s.value_sets:
        lines.append("value_sets:")
        for vs in s.value_sets.values():
            lines.append(f"  {scalar(vs.name)}:")
            if vs.kind == "extensional":
                lines.append("    members:" if vs.members else "    members: {}")
                lines += [f"      {scalar(c)}: {scalar(label)}" for c, label in vs.members]
            else:
                lines.append(f"    vocabulary: {scalar(vs.vocabulary)}")
                lines.append(f"    include: {_flow_list(vs.include)}")
                lines.append(f"    exclude: {_flow_list(vs.exclude)}")
    lines.append("classes:")
    for cls in s.classes.values():
        body = []
        if cls.is_entity:
            body.append("    entity: true")
        if cls.id_spaces:
            body.append(f"    id_spaces: {_flow_list(cls.id_spaces)}")
        if cls.value_set is not None:
            body.append(f"    value_set: {scalar(cls.value_set.name)}")
        if cls.attributes:
            body.append("    attributes:")
            for a in cls.attributes:
                props = [f"range: {_flow_scalar(a.range.name)}"]
                for flag in ("multivalued", "identifier", "inlined"):
                    if getattr(a, flag):
                        props.append(f"{flag}: true")
                if a.prompt is not None:
                    props.append(f"prompt: {json.dumps(a.prompt, ensure_ascii=False)}")
                body.append(f"      {scalar(a.name)}: {{{', '.join(props)}}}")
        lines.append(f"  {scalar(cls.name)}:" + ("" if body else " {}"))
        lines += body
    return "\n".join(lines) + "\n"

