"""Entity grounding: map surface strings to CURIEs and enforce class constraints.

Annotators propose candidates; the :class:`Grounder` ranks them, maps them
onto canonical identifiers through a :class:`NormalizationMap`, and keeps the
first one that satisfies the class's ID spaces and value set.
"""

from __future__ import annotations

import logging
import re
import threading
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Protocol, Sequence

from .curie import CurieError, is_curie, prefix_of
from .hierarchy import Hierarchy, load_hierarchy
from .schema import ClassDef, ValueSetSpec, resolve_value_set

logger = logging.getLogger(__name__)


class LexiconError(ValueError):
    pass


class AnnotatorError(RuntimeError):
    """Raised by remote annotators on transport failure."""


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_label(text: str) -> str:
    """Lower-case, collapse whitespace, strip leading/trailing punctuation."""
    text = " ".join(text.lower().split())
    start, end = 0, len(text)
    while start < end and (_is_punct(text[start]) or text[start].isspace()):
        start += 1
    while end > start and (_is_punct(text[end - 1]) or text[end - 1].isspace()):
        end -= 1
    return text[start:end]


# --- lexicons ----------------------------------------------------------------


@dataclass(frozen=True)
class Lexicon:
    vocabulary_prefix: str
    entries: Mapping[str, tuple[str, ...]]
    labels: Mapping[str, str]
    hierarchy: Hierarchy | None = None

    def __len__(self) -> int:
        return len(self.labels)

    def lookup(self, normalized: str) -> tuple[str, ...]:
        return self.entries.get(normalized, ())


def parse_lexicon(
    text: str,
    vocabulary_prefix: str | None = None,
    hierarchy: Hierarchy | None = None,
    source: str = "<lexicon>",
) -> Lexicon:
    entries: dict[str, list[str]] = {}
    labels: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        cols = line.rstrip("\r").split("\t")
        if len(cols) not in (2, 3):
            raise LexiconError(f"{source}:{lineno}: expected 'curie<TAB>label[<TAB>synonyms]', got {len(cols)} columns")
        curie, label = cols[0].strip(), cols[1].strip()
        if not is_curie(curie):
            raise LexiconError(f"{source}:{lineno}: malformed CURIE {curie!r}")
        if not label:
            raise LexiconError(f"{source}:{lineno}: empty preferred label")
        prefix = prefix_of(curie)
        if vocabulary_prefix is None:
            vocabulary_prefix = prefix
        elif prefix != vocabulary_prefix:
            raise LexiconError(f"{source}:{lineno}: prefix {prefix} differs from lexicon vocabulary {vocabulary_prefix}")
        if curie in labels:
            raise LexiconError(f"{source}:{lineno}: duplicate CURIE {curie}")
        labels[curie] = label
        names = [label]
        if len(cols) == 3:
            names += [s for s in cols[2].split("|") if s.strip()]
        for name in names:
            key = normalize_label(name)
            if key and curie not in entries.setdefault(key, []):
                entries[key].append(curie)
    if vocabulary_prefix is None:
        raise LexiconError(f"{source}: empty lexicon and no vocabulary prefix given")
    return Lexicon(
        vocabulary_prefix=vocabulary_prefix,
        entries={k: tuple(sorted(v)) for k, v in entries.items()},
        labels=labels,
        hierarchy=hierarchy,
    )


def load_lexicon(
    path: str | Path,
    vocabulary_prefix: str | None = None,
    hierarchy: str | Path | Hierarchy | None = None,
) -> Lexicon:
    """Load a lexicon TSV; a sibling ``<stem>.hierarchy.tsv`` is picked up automatically."""
    path = Path(path)
    if hierarchy is None:
        sibling = path.with_name(path.name.split(".")[0] + ".hierarchy.tsv")
        if sibling.exists():
            hierarchy = sibling
    if isinstance(hierarchy, (str, Path)):
        hierarchy = load_hierarchy(hierarchy)
    return parse_lexicon(path.read_text(encoding="utf-8"), vocabulary_prefix, hierarchy, str(path))


# --- normalization -----------------------------------------------------------


@dataclass(frozen=True)
class NormalizationMap:
    pairs: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for src, dst in self.pairs.items():
            if self.pairs.get(dst, dst) != dst:
                raise LexiconError(f"normalization map is not idempotent: {src} -> {dst} -> {self.pairs[dst]}")


def normalize(curie: str, norm: NormalizationMap | None) -> str:
    prefix_of(curie)
    if norm is None:
        return curie
    return norm.pairs.get(curie, curie)


def parse_normalization_map(text: str, source: str = "<normmap>") -> NormalizationMap:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        cols = [c.strip() for c in line.rstrip("\r").split("\t")]
        if len(cols) != 2 or not all(is_curie(c) for c in cols):
            raise LexiconError(f"{source}:{lineno}: expected 'source_curie<TAB>canonical_curie', got {line!r}")
        if cols[0] in pairs and pairs[cols[0]] != cols[1]:
            raise LexiconError(f"{source}:{lineno}: conflicting mapping for {cols[0]}")
        pairs[cols[0]] = cols[1]
    return NormalizationMap(pairs)


def load_normalization_map(path: str | Path) -> NormalizationMap:
    path = Path(path)
    return parse_normalization_map(path.read_text(encoding="utf-8"), str(path))


# --- annotators --------------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    curie: str
    label: str
    match: str  # "exact" | "partial"
    length: int


class Annotator(Protocol):
    name: str
    vocabularies: tuple[str, ...]

    def annotate(self, surface: str, vocabularies: Sequence[str] = ()) -> list[Candidate]: ...


_WORD_BOUNDARY = re.compile(r"\s+")


class LexiconAnnotator:
    """Exact matching against one local lexicon, plus token n-gram matches when ``partial``.

    Partial matching is off by default: a modified span such as "chopped onion"
    should stay an ungrounded node rather than collapse onto "onion".
    """

    def __init__(self, lexicon: Lexicon, partial: bool = False):
        self.lexicon = lexicon
        self.partial = partial
        self.name = f"lexicon:{lexicon.vocabulary_prefix}"
        self.vocabularies = (lexicon.vocabulary_prefix,)

    def annotate(self, surface: str, vocabularies: Sequence[str] = ()) -> list[Candidate]:
        norm = normalize_label(surface)
        found: dict[str, Candidate] = {}
        for curie in self.lexicon.lookup(norm):
            found[curie] = Candidate(curie, self.lexicon.labels[curie], "exact", len(norm))
        tokens = _WORD_BOUNDARY.split(norm) if norm and self.partial else []
        n = len(tokens)
        for i in range(n):
            for j in range(i + 1, n + 1):
                if j - i == n:
                    continue
                key = normalize_label(" ".join(tokens[i:j]))
                for curie in self.lexicon.lookup(key):
                    prev = found.get(curie)
                    if prev is None or (prev.match == "partial" and prev.length < len(key)):
                        found[curie] = Candidate(curie, self.lexicon.labels[curie], "partial", len(key))
        return list(found.values())


class ValueSetAnnotator:
    """Matches surfaces against the member labels of an extensional value set."""

    def __init__(self, value_set: ValueSetSpec):
        self.name = f"value-set:{value_set.name}"
        self.vocabularies = tuple(sorted({prefix_of(c) for c, _ in value_set.members}))
        self._by_label: dict[str, list[tuple[str, str]]] = {}
        for curie, label in value_set.members:
            for key in {normalize_label(label), normalize_label(curie)}:
                self._by_label.setdefault(key, []).append((curie, label))

    def annotate(self, surface: str, vocabularies: Sequence[str] = ()) -> list[Candidate]:
        norm = normalize_label(surface)
        return [Candidate(c, label, "exact", len(norm)) for c, label in self._by_label.get(norm, ())]


class HttpAnnotator:
    """Client for a remote annotator speaking the generic JSON contract.

    Request: ``{"text": ..., "vocabularies": [...]}``; response:
    ``{"candidates": [{"curie": ..., "label": ..., "match": "exact"|"partial"}]}``.
    """

    def __init__(
        self,
        endpoint: str,
        vocabularies: Sequence[str],
        *,
        name: str | None = None,
        timeout: float = 10.0,
        limiter: Any = None,
        client: Any = None,
        headers: Mapping[str, str] | None = None,
    ):
        import httpx

        self.endpoint = endpoint
        self.vocabularies = tuple(vocabularies)
        self.name = name or f"http:{endpoint}"
        self.limiter = limiter
        self._client = client or httpx.Client(timeout=timeout, headers=dict(headers or {}))

    def annotate(self, surface: str, vocabularies: Sequence[str] = ()) -> list[Candidate]:
        import httpx

        if self.limiter is not None:
            self.limiter.acquire()
        vocabs = list(vocabularies) or list(self.vocabularies)
        try:
            resp = self._client.post(self.endpoint, json={"text": surface, "vocabularies": vocabs})
            resp.raise_for_status()
            payload = resp.json()
        except (httpx.HTTPError, ValueError) as e:
            raise AnnotatorError(f"{self.name}: {e}") from e
        out = []
        for item in payload.get("candidates", []):
            curie = item.get("curie", "")
            if not is_curie(curie):
                logger.warning("%s returned malformed CURIE %r; ignored", self.name, curie)
                continue
            label = item.get("label") or curie
            match = "exact" if item.get("match") == "exact" else "partial"
            length = len(normalize_label(surface)) if match == "exact" else len(normalize_label(label))
            out.append(Candidate(curie, label, match, length))
        return out


# --- grounding ---------------------------------------------------------------


@dataclass(frozen=True)
class GroundedEntity:
    surface: str
    curie: str
    label: str
    source_vocabulary: str
    candidates: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class ConstraintCheck:
    ok: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


ValueSetResolver = Callable[[ValueSetSpec], frozenset]


def check_id_constraints(e: GroundedEntity | str, cls: ClassDef, resolver: ValueSetResolver | Mapping[str, Lexicon] | None = None) -> ConstraintCheck:
    """Check a grounded CURIE against the class's ID spaces and value set."""
    curie = e if isinstance(e, str) else e.curie
    try:
        prefix = prefix_of(curie)
    except CurieError:
        return ConstraintCheck(False, "prefix")
    if cls.id_spaces and prefix not in cls.id_spaces:
        return ConstraintCheck(False, "prefix")
    if cls.value_set is not None:
        if resolver is None:
            members = resolve_value_set(cls.value_set, None)
        elif callable(resolver):
            members = resolver(cls.value_set)
        else:
            members = resolve_value_set(cls.value_set, resolver.get(cls.value_set.vocabulary or ""))
        if curie not in members:
            return ConstraintCheck(False, "value-set")
    return ConstraintCheck(True)


class Grounder:
    """An ordered annotator stack plus normalization and constraint filtering.

    ``order="id_spaces"`` (default) queries annotators whose vocabularies come
    first in the class's ID spaces before the rest; ``order="configured"``
    keeps the stack order as given.
    """

    def __init__(
        self,
        annotators: Iterable[Annotator] = (),
        normalization: NormalizationMap | None = None,
        lexicons: Iterable[Lexicon] = (),
        order: str = "id_spaces",
    ):
        if order not in ("id_spaces", "configured"):
            raise ValueError(f"unknown annotator order {order!r}")
        self.annotators = list(annotators)
        self.normalization = normalization or NormalizationMap()
        self.lexicons: dict[str, Lexicon] = {lex.vocabulary_prefix: lex for lex in lexicons}
        for a in self.annotators:
            if isinstance(a, LexiconAnnotator):
                self.lexicons.setdefault(a.lexicon.vocabulary_prefix, a.lexicon)
        self.order = order
        self._vs_cache: dict[ValueSetSpec, frozenset] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_lexicons(
        cls,
        lexicons: Iterable[Lexicon],
        normalization: NormalizationMap | None = None,
        partial: bool = False,
        **kw: Any,
    ) -> "Grounder":
        lexicons = list(lexicons)
        return cls([LexiconAnnotator(lex, partial) for lex in lexicons], normalization, lexicons, **kw)

    def value_set_members(self, vs: ValueSetSpec) -> frozenset:
        with self._lock:
            if vs not in self._vs_cache:
                self._vs_cache[vs] = resolve_value_set(vs, self.lexicons.get(vs.vocabulary or ""))
            return self._vs_cache[vs]

    def label_for(self, curie: str) -> str | None:
        try:
            lex = self.lexicons.get(prefix_of(curie))
        except CurieError:
            return None
        return lex.labels.get(curie) if lex else None

    def _ordered(self, cls: ClassDef) -> list[Annotator]:
        stack = list(self.annotators)
        if cls.value_set is not None and cls.value_set.kind == "extensional":
            stack.insert(0, ValueSetAnnotator(cls.value_set))
        if self.order == "configured" or not cls.id_spaces:
            return stack

        def rank(a: Annotator) -> int:
            hits = [cls.id_spaces.index(v) for v in a.vocabularies if v in cls.id_spaces]
            return min(hits) if hits else len(cls.id_spaces)

        return sorted(stack, key=rank)

    def _space_rank(self, cls: ClassDef, curie: str) -> int:
        p = prefix_of(curie)
        return cls.id_spaces.index(p) if p in cls.id_spaces else len(cls.id_spaces)

    def ground(self, surface: str, cls: ClassDef, warnings: list[str] | None = None) -> GroundedEntity | None:
        if not surface or not surface.strip():
            raise ValueError("cannot ground an empty surface string")
        for annotator in self._ordered(cls):
            try:
                cands = annotator.annotate(surface, cls.id_spaces)
            except AnnotatorError as e:
                msg = f"annotator {annotator.name} failed, skipped: {e}"
                logger.warning(msg)
                if warnings is not None:
                    warnings.append(msg)
                continue
            if not cands:
                continue
            normed = [(normalize(c.curie, self.normalization), c) for c in cands]
            normed.sort(key=lambda p: (p[1].match != "exact", -p[1].length, self._space_rank(cls, p[0]), p[0], p[1].curie))
            considered = tuple(dict.fromkeys((curie, c.match) for curie, c in normed))
            for curie, cand in normed:
                if check_id_constraints(curie, cls, self.value_set_members):
                    return GroundedEntity(
                        surface=surface,
                        curie=curie,
                        label=self.label_for(curie) or cand.label,
                        source_vocabulary=prefix_of(cand.curie),
                        candidates=considered,
                    )
        return None


def ground(surface: str, cls: ClassDef, grounder: Grounder, warnings: list[str] | None = None) -> GroundedEntity | None:
    return grounder.ground(surface, cls, warnings)
