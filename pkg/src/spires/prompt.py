"""Prompt rendering for a (schema, class, text) triple."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .schema import AttributeDef, ClassDef, Schema

MULTI_ENTITY_INSTRUCTION = "From the text below, extract the following entities in the following format:"
SPLIT_FIELDS_INSTRUCTION = "Split the following piece of text into fields in the following format:"
MULTIVALUED_PREFIX = "A semicolon-separated list"
TEXT_INTRO = "Text:"
BREAK = "==="


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Prompt:
    text: str
    class_name: str
    input_digest: str

    @classmethod
    def from_text(cls, text: str, class_name: str) -> "Prompt":
        return cls(text=text, class_name=class_name, input_digest=digest(text))


def instruction_text(c: ClassDef) -> str:
    # Single-valued inlined attributes (Ingredient.amount) keep the split-into-fields form.
    if any(a.multivalued for a in c.attributes):
        return MULTI_ENTITY_INSTRUCTION
    return SPLIT_FIELDS_INSTRUCTION


def attribute_prompt(a: AttributeDef) -> str:
    """The hint after ``name:``; auto-generated as ``<the words>`` when unset."""
    hint = a.prompt if a.prompt is not None else f"<the {a.name.replace('_', ' ')}>"
    if a.multivalued:
        hint = f"{MULTIVALUED_PREFIX} {hint}"
    return hint


def attribute_template(c: ClassDef) -> list[str]:
    return [f"{a.name}: {attribute_prompt(a)}" for a in c.attributes]


def generate_prompt(s: Schema, c: str, t: str) -> Prompt:
    cls = s.get_class(c)
    if not t:
        raise ValueError("input text must be non-empty")
    lines = [instruction_text(cls), ""]
    template = attribute_template(cls)
    if template:
        lines += template + [""]
    lines += [TEXT_INTRO, t, "", BREAK]
    return Prompt.from_text("\n".join(lines), c)
