"""The recursive extraction loop: prompt, complete, parse, ground, recurse."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from typing import Any

from .gateway import DEFAULT_MODEL, CompletionRequest, Gateway
from .grounding import Grounder
from .instance import BlankNode, Instance, assign_blank_nodes
from .parsing import parse_completion
from .prompt import generate_prompt
from .schema import AttributeDef, ClassDef, Schema, normalize_name

logger = logging.getLogger(__name__)

DEFAULT_NULL_MARKERS = ("none", "n/a", "-", "")


class ExtractionError(RuntimeError):
    pass


class RecursionLimitExceeded(ExtractionError):
    pass


class ExtractionWarningError(ExtractionError):
    """Raised instead of returning a result when warnings are treated as errors."""

    def __init__(self, warnings: list[str]):
        self.warnings = warnings
        super().__init__("; ".join(warnings))


@dataclass(frozen=True)
class EngineConfig:
    recursion_limit: int = 10
    delimiter: str = ";"
    null_markers: tuple[str, ...] = DEFAULT_NULL_MARKERS
    warnings_as_errors: bool = False
    model_id: str = DEFAULT_MODEL
    temperature: float = 0.0
    max_output_chars: int = 16000

    def __post_init__(self) -> None:
        if self.recursion_limit < 0:
            raise ValueError("recursion_limit must be non-negative")
        if not self.delimiter:
            raise ValueError("delimiter must be non-empty")
        object.__setattr__(self, "null_markers", tuple(m.strip().lower() for m in self.null_markers))


@dataclass
class ExtractionContext:
    """Everything one extraction needs besides the schema."""

    gateway: Gateway
    grounder: Grounder | None = None
    config: EngineConfig = field(default_factory=EngineConfig)
    warnings: list[str] = field(default_factory=list)
    depth: int = 0

    def warn(self, where: str, message: str) -> None:
        msg = f"{where}: {message}"
        logger.debug(msg)
        self.warnings.append(msg)


_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_TRUE = {"true", "yes"}
_FALSE = {"false", "no"}


def _coerce(token: str, kind: str, where: str, ctx: ExtractionContext) -> Any:
    if kind == "number":
        if _INT_RE.match(token):
            return int(token)
        # float() alone would also take "nan", "inf" and "1_000".
        if _FLOAT_RE.match(token) and math.isfinite(float(token)):
            return float(token)
        ctx.warn(where, f"could not read {token!r} as a number; kept as text")
        return token
    if kind == "boolean":
        low = token.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        ctx.warn(where, f"could not read {token!r} as a boolean; kept as text")
        return token
    return token


def _entity_class(a: AttributeDef, s: Schema) -> ClassDef:
    if a.range.is_value_set:
        vs = s.value_sets[a.range.name]
        spaces = (vs.vocabulary,) if vs.vocabulary else ()
        return ClassDef(name=vs.name, id_spaces=spaces, value_set=vs, is_entity=True)
    return s.get_class(a.range.name)


def _parse_token(token: str, a: AttributeDef, s: Schema, ctx: ExtractionContext, where: str) -> Any:
    if a.range.is_primitive:
        return _coerce(token, a.range.name, where, ctx)
    if a.range.is_class and a.inlined:
        return _extract(s, a.range.name, token, ctx, provenance=token)
    cls = _entity_class(a, s)
    entity = ctx.grounder.ground(token, cls, ctx.warnings) if ctx.grounder is not None else None
    return entity if entity is not None else BlankNode(token)


def parse_value(v: str, a: AttributeDef, s: Schema, ctx: ExtractionContext, where: str | None = None) -> Any:
    """Interpret the text after the colon according to the attribute's range and cardinality.

    Returns ``None`` when the value is absent (empty, or a null marker).
    """
    where = where or a.name
    if a.multivalued:
        out = []
        for raw in v.split(ctx.config.delimiter):
            token = raw.strip()
            if not token:
                ctx.warn(where, "empty list element dropped")
                continue
            if token.lower() in ctx.config.null_markers:
                ctx.warn(where, f"null marker {token!r} in list dropped")
                continue
            out.append(_parse_token(token, a, s, ctx, where))
        return out or None
    token = v.strip()
    if token.lower() in ctx.config.null_markers:
        ctx.warn(where, f"value {token!r} treated as absent")
        return None
    return _parse_token(token, a, s, ctx, where)


def _extract(s: Schema, c: str, t: str, ctx: ExtractionContext, provenance: str | None = None) -> Instance:
    if ctx.depth > ctx.config.recursion_limit:
        raise RecursionLimitExceeded(f"recursion depth {ctx.depth} exceeds limit {ctx.config.recursion_limit} at class {c}")
    cls = s.get_class(c)
    prompt = generate_prompt(s, c, t)
    req = CompletionRequest(
        prompt=prompt,
        model_id=ctx.config.model_id,
        temperature=ctx.config.temperature,
        max_output_chars=ctx.config.max_output_chars,
    )
    completion = ctx.gateway.complete(req)
    if completion.truncated:
        ctx.warn(c, f"completion truncated to {ctx.config.max_output_chars} characters")
    inst = Instance(class_name=c, provenance=provenance)
    if not completion.text.strip():
        ctx.warn(c, "empty completion; no attributes populated")
        return inst
    parsed = parse_completion(completion.text, s, c)
    for line in parsed.unmatched_lines:
        if line.strip():
            ctx.warn(c, f"unmatched completion line ignored: {line.strip()!r}")
    raw_values: dict[str, str] = {}
    for name, value in parsed.pairs:
        key = normalize_name(name)
        if key in raw_values:
            ctx.warn(f"{c}.{key}", "attribute appears more than once; last occurrence wins")
        raw_values[key] = value
    ctx.depth += 1
    try:
        for a in cls.attributes:
            if a.key not in raw_values:
                continue
            value = parse_value(raw_values[a.key], a, s, ctx, where=f"{c}.{a.key}")
            if value is not None:
                inst.values[a.key] = value
    finally:
        ctx.depth -= 1
    return inst


def extract(s: Schema, c: str, t: str, ctx: ExtractionContext, source_id: str | None = None) -> Instance:
    """Extract one instance of class ``c`` from ``t``, recursing into inlined attributes."""
    ctx.warnings = []
    ctx.depth = 0
    inst = assign_blank_nodes(_extract(s, c, t, ctx))
    inst.provenance = source_id
    inst.warnings = list(ctx.warnings)
    for w in inst.warnings:
        logger.warning(w)
    if ctx.config.warnings_as_errors and inst.warnings:
        raise ExtractionWarningError(inst.warnings)
    return inst


class Extractor:
    """Binds a schema to a gateway and grounder; safe to share across threads."""

    def __init__(self, schema: Schema, gateway: Gateway, grounder: Grounder | None = None, config: EngineConfig | None = None):
        self.schema = schema
        self.gateway = gateway
        self.grounder = grounder
        self.config = config or EngineConfig()

    def extract(self, class_name: str, text: str, source_id: str | None = None) -> Instance:
        ctx = ExtractionContext(self.gateway, self.grounder, self.config)
        return extract(self.schema, class_name, text, ctx, source_id)
