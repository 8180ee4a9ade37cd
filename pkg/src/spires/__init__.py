"""Schema-driven recursive information extraction with ontology grounding."""

__version__ = "0.1.0"

from .engine import EngineConfig, ExtractionContext, Extractor, extract
from .gateway import Cassette, CompletionRequest, Gateway, HttpBackend, ReplayBackend
from .grounding import Grounder, Lexicon, NormalizationMap, load_lexicon, load_normalization_map
from .instance import BlankNode, Instance
from .prompt import Prompt, generate_prompt
from .schema import Schema, load_schema, load_schema_file, validate_schema

__all__ = [
    "BlankNode",
    "Cassette",
    "CompletionRequest",
    "EngineConfig",
    "ExtractionContext",
    "Extractor",
    "Gateway",
    "Grounder",
    "HttpBackend",
    "Instance",
    "Lexicon",
    "NormalizationMap",
    "Prompt",
    "ReplayBackend",
    "Schema",
    "extract",
    "generate_prompt",
    "load_lexicon",
    "load_normalization_map",
    "load_schema",
    "load_schema_file",
    "validate_schema",
]
