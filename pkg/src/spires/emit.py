"""Render extraction results as YAML, JSON, or an OWL functional-syntax listing."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping
from urllib.parse import quote

from ._yamlfmt import scalar
from .curie import CurieError, split_curie
from .grounding import GroundedEntity
from .instance import BlankNode, Instance, camel_case
from .schema import Schema

METADATA_KEY = "_metadata"


@dataclass
class InstanceDocument:
    root: Instance
    schema_name: str
    engine_metadata: dict[str, Any] = field(default_factory=dict)


def _metadata(doc: InstanceDocument) -> dict[str, Any]:
    meta = {k: doc.engine_metadata[k] for k in sorted(doc.engine_metadata)}
    meta["warnings"] = list(doc.root.warnings)
    if doc.root.provenance is not None:
        meta.setdefault("source_id", doc.root.provenance)
    return meta


# --- YAML --------------------------------------------------------------------


def _one_line(text: str) -> str:
    return " ".join(text.split())


def _leaf(value: Any) -> str:
    if isinstance(value, GroundedEntity):
        return f"{scalar(value.curie)}  ## {_one_line(value.label)}"
    if isinstance(value, BlankNode):
        return scalar(value.id or "_:" + value.surface)
    return scalar(value)


def _block(value: Any, indent: int) -> list[str]:
    """Lines for a mapping (Instance) or sequence (list) at ``indent`` spaces."""
    pad = " " * indent
    lines: list[str] = []
    if isinstance(value, Instance):
        for key, v in value.values.items():
            if isinstance(v, list) and not v:
                lines.append(f"{pad}{scalar(key)}: []")
            elif isinstance(v, Instance) and not v.values:
                lines.append(f"{pad}{scalar(key)}: {{}}")
            elif isinstance(v, (Instance, list)):
                lines.append(f"{pad}{scalar(key)}:")
                lines += _block(v, indent + 2)
            else:
                lines.append(f"{pad}{scalar(key)}: {_leaf(v)}")
        return lines
    for item in value:
        if isinstance(item, Instance):
            if not item.values:
                lines.append(f"{pad}- {{}}")
                continue
            inner = _block(item, indent + 2)
            lines.append(f"{pad}- {inner[0][indent + 2:]}")
            lines += inner[1:]
        else:
            lines.append(f"{pad}- {_leaf(item)}")
    return lines


def _yaml_meta(meta: Mapping[str, Any], indent: int = 2) -> list[str]:
    pad = " " * indent
    lines = []
    for k, v in meta.items():
        if isinstance(v, (list, tuple)):
            if v:
                lines.append(f"{pad}{scalar(k)}:")
                lines += [f"{pad}  - {scalar(x)}" for x in v]
            else:
                lines.append(f"{pad}{scalar(k)}: []")
        else:
            lines.append(f"{pad}{scalar(k)}: {scalar(v)}")
    return lines


def emit_yaml(doc: InstanceDocument) -> str:
    lines = [f"schema: {scalar(doc.schema_name)}", f"class: {scalar(doc.root.class_name)}"]
    body = _block(doc.root, 2)
    lines += ["instance:"] + body if body else ["instance: {}"]
    lines.append(f"{METADATA_KEY}:")
    lines += _yaml_meta(_metadata(doc))
    return "\n".join(lines) + "\n"


# --- JSON --------------------------------------------------------------------


def to_jsonable(value: Any) -> Any:
    if isinstance(value, Instance):
        return {k: to_jsonable(v) for k, v in value.values.items()}
    if isinstance(value, list):
        return [to_jsonable(v) for v in value]
    if isinstance(value, GroundedEntity):
        return {"id": value.curie, "label": value.label}
    if isinstance(value, BlankNode):
        return {"id": value.id or "_:" + value.surface}
    return value


def emit_json(doc: InstanceDocument) -> str:
    data = {
        "schema": doc.schema_name,
        "class": doc.root.class_name,
        "instance": to_jsonable(doc.root),
        METADATA_KEY: _metadata(doc),
    }
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def instance_from_jsonable(data: Mapping[str, Any], s: Schema, class_name: str) -> Instance:
    """Rebuild an :class:`Instance` from :func:`to_jsonable` output.

    Grounded leaves come back without their surface or candidate list, so
    they compare equal only on CURIE and label; use :func:`abstract_tree`
    for whole-document comparisons.
    """
    cls = s.get_class(class_name)
    inst = Instance(class_name)
    for a in cls.attributes:
        if a.key not in data:
            continue
        raw = data[a.key]
        items = raw if a.multivalued else [raw]
        out = []
        for item in items:
            if a.range.is_class and a.inlined:
                out.append(instance_from_jsonable(item, s, a.range.name))
            elif isinstance(item, dict) and "id" in item:
                if item["id"].startswith("_:"):
                    out.append(BlankNode(surface="", id=item["id"]))
                else:
                    out.append(GroundedEntity(surface="", curie=item["id"], label=item.get("label", ""), source_vocabulary=item["id"].split(":")[0]))
            else:
                out.append(item)
        inst.values[a.key] = out if a.multivalued else out[0]
    return inst


def abstract_tree(value: Any) -> Any:
    """Format-neutral view: entity leaves collapse to their identifier."""
    if isinstance(value, Instance):
        return {k: abstract_tree(v) for k, v in value.values.items()}
    if isinstance(value, list):
        return [abstract_tree(v) for v in value]
    if isinstance(value, GroundedEntity):
        return value.curie
    if isinstance(value, BlankNode):
        return value.id
    return value


# --- OWL functional-syntax listing -------------------------------------------


class AxiomError(ValueError):
    pass


RDFS_LABEL = "rdfs:label"
_XSD = {bool: "xsd:boolean", int: "xsd:integer", float: "xsd:double", str: "xsd:string"}
STANDARD_PREFIXES = {
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
}


@dataclass
class AxiomListing:
    lines: list[str]
    ontology_iri: str = ""

    def render(self) -> str:
        out = [f"Prefix({p}:=<{iri}>)" for p, iri in STANDARD_PREFIXES.items()]
        out.append(f"Ontology(<{self.ontology_iri}>")
        out += ["  " + line for line in self.lines]
        out.append(")")
        return "\n".join(out) + "\n"


def _literal(value: Any) -> str:
    if isinstance(value, bool):
        text = "true" if value else "false"
    elif isinstance(value, float) and not math.isfinite(value):
        text = "NaN" if value != value else ("INF" if value > 0 else "-INF")
    elif isinstance(value, (int, float)):
        text = json.dumps(value)
    else:
        text = str(value)
    escaped = text.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"^^{_XSD[type(value)]}'


def _string_literal(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_axioms(doc: InstanceDocument, s: Schema, blank_scope: str = "") -> AxiomListing:
    """One individual per instance and blank node; one property assertion per value."""
    base = s.prefixes.get(s.name)
    if base is None:
        raise AxiomError(f"unexpandable prefix: schema namespace {s.name!r} is not declared under prefixes")

    def term(name: str) -> str:
        return f"<{base}{quote(name, safe='')}>"

    def expand(curie: str) -> str:
        try:
            prefix, local = split_curie(curie)
        except CurieError as e:
            raise AxiomError(str(e)) from None
        if prefix not in s.prefixes:
            raise AxiomError(f"unexpandable prefix {prefix!r} in {curie}")
        return f"<{s.prefixes[prefix]}{quote(local, safe=':/-._~()')}>"

    lines: list[str] = []
    annotations: set[str] = set()
    counter: dict[str, int] = {}

    scope = quote(doc.root.provenance, safe="") + "/" if doc.root.provenance else ""

    def individual(inst: Instance) -> str:
        counter[inst.class_name] = counter.get(inst.class_name, 0) + 1
        ind = f"<{base}{scope}{quote(inst.class_name, safe='')}_{counter[inst.class_name]}>"
        lines.append(f"ClassAssertion({term(inst.class_name)} {ind})")
        cls = s.classes.get(inst.class_name)
        for key, value in inst.values.items():
            attr = cls.attribute(key) if cls else None
            range_name = attr.range.name if attr else key
            for v in value if isinstance(value, list) else [value]:
                prop = term(key)
                if isinstance(v, Instance):
                    child = individual(v)
                    lines.append(f"ObjectPropertyAssertion({prop} {ind} {child})")
                elif isinstance(v, GroundedEntity):
                    iri = expand(v.curie)
                    lines.append(f"ObjectPropertyAssertion({prop} {ind} {iri})")
                    ann = f"AnnotationAssertion({RDFS_LABEL} {iri} {_string_literal(v.surface)})"
                    if ann not in annotations:
                        annotations.add(ann)
                        lines.append(ann)
                elif isinstance(v, BlankNode):
                    node = "_:" + blank_scope + (v.id or "_:" + camel_case(v.surface))[2:]
                    lines.append(f"ObjectPropertyAssertion({prop} {ind} {node})")
                    lines.append(f"ClassAssertion({term(range_name)} {node})")
                    lines.append(f"AnnotationAssertion({RDFS_LABEL} {node} {_string_literal(v.surface)})")
                else:
                    lines.append(f"DataPropertyAssertion({prop} {ind} {_literal(v)})")
        return ind

    individual(doc.root)
    return AxiomListing(lines=lines, ontology_iri=base.rstrip("/#") or base)


def emit_many(docs: list[InstanceDocument], fmt: str, s: Schema | None = None) -> str:
    """Render several documents into one stream (YAML documents, a JSON array, or one ontology)."""
    if len(docs) == 1:
        return emit(docs[0], fmt, s)
    if fmt == "yaml":
        return "".join("---\n" + emit_yaml(d) for d in docs)
    if fmt == "json":
        parts = [json.loads(emit_json(d)) for d in docs]
        return json.dumps(parts, indent=2, ensure_ascii=False) + "\n"
    if fmt == "ofn":
        if s is None:
            raise ValueError("ofn output needs the schema")
        # Blank-node labels are only unique within one document.
        listings = [emit_axioms(d, s, blank_scope=f"d{n}_") for n, d in enumerate(docs, 1)]
        merged = [line for listing in listings for line in listing.lines]
        return AxiomListing(merged, listings[0].ontology_iri).render()
    raise ValueError(f"unknown output format {fmt!r}")


def emit(doc: InstanceDocument, fmt: str, s: Schema | None = None) -> str:
    if fmt == "yaml":
        return emit_yaml(doc)
    if fmt == "json":
        return emit_json(doc)
    if fmt == "ofn":
        if s is None:
            raise ValueError("ofn output needs the schema")
        return emit_axioms(doc, s).render()
    raise ValueError(f"unknown output format {fmt!r}")
