"""Relation-extraction and grounding evaluation, plus document chunking."""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .curie import CurieError, prefix_of
from .grounding import GroundedEntity, Grounder, NormalizationMap, normalize
from .instance import Instance
from .schema import ClassDef, Schema

PREDICATE = "INDUCES"
NEGATION = "NOT"
DEFAULT_WINDOW = 1500
DEFAULT_OVERLAP = 200
ENTITY_TYPES = ("chemical", "disease")


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class TripleRecord:
    source_id: str
    subject: str
    object: str
    subject_qualifier: str | None = None
    object_qualifier: str | None = None
    predicate_qualifier: str | None = None
    predicate: str = PREDICATE

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.source_id, self.subject, self.object)

    @property
    def negated(self) -> bool:
        return (self.predicate_qualifier or "").strip().upper() == NEGATION


@dataclass
class Counts:
    true_positives: int = 0
    false_positives: int = 0
    false_negatives: int = 0


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


@dataclass
class ScoreReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    per_document: dict[str, Counts] = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return _ratio(self.true_positives, self.true_positives + self.false_positives)

    @property
    def recall(self) -> float:
        return _ratio(self.true_positives, self.true_positives + self.false_negatives)

    @property
    def f_score(self) -> float:
        """Harmonic mean of precision and recall on a 0-100 scale."""
        p, r = self.precision, self.recall
        return 100 * 2 * p * r / (p + r) if p + r else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "precision": self.precision,
            "recall": self.recall,
            "f_score": self.f_score,
            "per_document": {k: asdict(v) for k, v in sorted(self.per_document.items())},
        }


def _check_curie(curie: str) -> str:
    try:
        prefix_of(curie)
    except CurieError as e:
        raise EvaluationError(str(e)) from None
    return curie


def _compare(gold: set[tuple], predicted: set[tuple]) -> ScoreReport:
    docs: dict[str, Counts] = {}
    for key in gold | predicted:
        c = docs.setdefault(key[0], Counts())
        if key in gold and key in predicted:
            c.true_positives += 1
        elif key in predicted:
            c.false_positives += 1
        else:
            c.false_negatives += 1
    return ScoreReport(
        true_positives=len(gold & predicted),
        false_positives=len(predicted - gold),
        false_negatives=len(gold - predicted),
        per_document=docs,
    )


def score_triples(gold: Iterable[TripleRecord], predicted: Iterable[TripleRecord], norm: NormalizationMap | None = None) -> ScoreReport:
    """Compare on (source, subject, object); negated predictions are discarded first."""

    def keys(records: Iterable[TripleRecord], drop_negated: bool) -> set[tuple[str, str, str]]:
        out = set()
        for t in records:
            _check_curie(t.subject)
            _check_curie(t.object)
            if drop_negated and t.negated:
                continue
            out.add((t.source_id, normalize(t.subject, norm), normalize(t.object, norm)))
        return out

    return _compare(keys(gold, False), keys(predicted, True))


def score_ner(
    gold: Iterable[tuple[str, str, str]],
    predicted: Iterable[tuple[str, str, str]],
    entity_types: Sequence[str] = ENTITY_TYPES,
    norm: NormalizationMap | None = None,
) -> dict[str, ScoreReport]:
    """Per entity type, compare (source, CURIE) sets."""
    split: dict[str, tuple[set, set]] = {t: (set(), set()) for t in entity_types}
    for side, rows in ((0, gold), (1, predicted)):
        for source_id, curie, etype in rows:
            if etype not in split:
                raise EvaluationError(f"unknown entity type {etype!r}; expected one of {list(entity_types)}")
            split[etype][side].add((source_id, normalize(_check_curie(curie), norm)))
    return {t: _compare(g, p) for t, (g, p) in split.items()}


@dataclass
class GroundingReport:
    per_vocabulary: dict[str, tuple[int, int]]
    failures: list[tuple[str, str, str | None]] = field(default_factory=list)

    @property
    def matched(self) -> int:
        return sum(m for m, _ in self.per_vocabulary.values())

    @property
    def total(self) -> int:
        return sum(t for _, t in self.per_vocabulary.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "matched": self.matched,
            "total": self.total,
            "per_vocabulary": {k: {"matched": m, "total": t} for k, (m, t) in sorted(self.per_vocabulary.items())},
            "failures": [{"label": lb, "expected": e, "got": g} for lb, e, g in self.failures],
        }


def score_grounding(pairs: Iterable[tuple[str, str]], grounder: Grounder) -> GroundingReport:
    """A pair counts when the label grounds, unchanged, to the expected CURIE."""
    counts: dict[str, list[int]] = {}
    failures = []
    for label, expected in pairs:
        vocab = prefix_of(_check_curie(expected))
        c = counts.setdefault(vocab, [0, 0])
        c[1] += 1
        entity = None
        if label.strip():
            entity = grounder.ground(label, ClassDef(name=f"{vocab} term", id_spaces=(vocab,), is_entity=True))
        if entity is not None and entity.curie == expected and entity.surface == label:
            c[0] += 1
        else:
            failures.append((label, expected, entity.curie if entity else None))
    return GroundingReport({k: (m, t) for k, (m, t) in counts.items()}, failures)


# --- chunking ----------------------------------------------------------------


@dataclass(frozen=True)
class ChunkPlan:
    chunks: tuple[tuple[str, int], ...]
    window_chars: int
    overlap_chars: int

    def reconstruct(self) -> str:
        out = ""
        for text, offset in self.chunks:
            out = out[:offset] + text
        return out


def join_title_abstract(title: str, abstract: str) -> str:
    title, abstract = title.strip(), abstract.strip()
    if not abstract:
        return title
    if not title:
        return abstract
    sep = " " if title[-1] in ".?!" else ". "
    return f"{title}{sep}{abstract}"


_BOUNDARY = re.compile(r"(?<=\. )(?=[A-Z])")


def chunk_text(text: str, window: int = DEFAULT_WINDOW, overlap: int = DEFAULT_OVERLAP) -> list[tuple[str, int]]:
    if window <= 0 or overlap < 0 or overlap >= window:
        raise EvaluationError(f"invalid chunk parameters: window={window} overlap={overlap} (need window > overlap >= 0)")
    boundaries = [m.start() for m in _BOUNDARY.finditer(text)]
    chunks = []
    start = 0
    while True:
        end = min(start + window, len(text))
        if end < len(text):
            snapped = [b for b in boundaries if start + overlap < b <= end]
            if snapped:
                end = snapped[-1]
        chunks.append((text[start:end], start))
        if end >= len(text):
            return chunks
        start = end - overlap


def chunk_document(
    title: str,
    abstract: str,
    window: int = DEFAULT_WINDOW,
    overlap: int = DEFAULT_OVERLAP,
    chunking: bool = True,
) -> ChunkPlan:
    text = join_title_abstract(title, abstract)
    if not chunking:
        if window <= 0 or overlap < 0 or overlap >= window:
            raise EvaluationError(f"invalid chunk parameters: window={window} overlap={overlap}")
        return ChunkPlan(((text, 0),), window, overlap)
    return ChunkPlan(tuple(chunk_text(text, window, overlap)), window, overlap)


def merge_chunk_results(per_chunk: Iterable[Iterable[TripleRecord]]) -> list[TripleRecord]:
    """Union over chunks, deduplicated on (source, subject, object); first occurrence wins."""
    merged: dict[tuple[str, str, str], TripleRecord] = {}
    for triples in per_chunk:
        for t in triples:
            merged.setdefault(t.key, t)
    return list(merged.values())


# --- instance -> evaluation records --------------------------------------------


def _text(value: Any) -> str | None:
    if value is None:
        return None
    if isinstance(value, GroundedEntity):
        return value.surface
    return str(getattr(value, "surface", value))


def triples_from_instance(inst: Instance, source_id: str) -> list[TripleRecord]:
    """Collect grounded subject/object statements anywhere in the tree."""
    out = []
    for node in inst.walk():
        subj, obj = node.values.get("subject"), node.values.get("object")
        if not (isinstance(subj, GroundedEntity) and isinstance(obj, GroundedEntity)):
            continue
        predicate = node.values.get("predicate")
        if predicate is not None and str(_text(predicate)).strip().upper() != PREDICATE:
            continue
        out.append(
            TripleRecord(
                source_id=source_id,
                subject=subj.curie,
                object=obj.curie,
                subject_qualifier=_text(node.values.get("subject_qualifier")),
                object_qualifier=_text(node.values.get("object_qualifier")),
                predicate_qualifier=_text(node.values.get("qualifier", node.values.get("predicate_qualifier"))),
            )
        )
    return out


def entities_from_instance(
    inst: Instance,
    source_id: str,
    schema: Schema,
    type_map: Mapping[str, str] = {"Chemical": "chemical", "Disease": "disease"},
) -> set[tuple[str, str, str]]:
    out = set()
    for node in inst.walk():
        cls = schema.classes.get(node.class_name)
        if cls is None:
            continue
        for a in cls.attributes:
            etype = type_map.get(a.range.name)
            if etype is None or a.key not in node.values:
                continue
            value = node.values[a.key]
            for v in value if isinstance(value, list) else [value]:
                if isinstance(v, GroundedEntity):
                    out.add((source_id, v.curie, etype))
    return out


# --- corpus and batch --------------------------------------------------------


@dataclass(frozen=True)
class Document:
    source_id: str
    title: str
    abstract: str = ""


def _rows(path: str | Path, min_cols: int, max_cols: int, what: str) -> Iterable[tuple[int, list[str]]]:
    path = Path(path)
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        cols = line.rstrip("\r").split("\t")
        if not min_cols <= len(cols) <= max_cols:
            raise EvaluationError(f"{path}:{lineno}: malformed {what} row, expected {min_cols}-{max_cols} tab-separated columns, got {len(cols)}")
        yield lineno, cols + [""] * (max_cols - len(cols))


def load_corpus(path: str | Path) -> list[Document]:
    return [Document(c[0].strip(), c[1], c[2]) for _, c in _rows(path, 2, 3, "corpus")]


def read_triples(path: str | Path) -> list[TripleRecord]:
    out = []
    for lineno, c in _rows(path, 3, 6, "triple"):
        for curie in (c[1].strip(), c[2].strip()):
            try:
                prefix_of(curie)
            except CurieError as e:
                raise EvaluationError(f"{path}:{lineno}: {e}") from None
        out.append(TripleRecord(c[0].strip(), c[1].strip(), c[2].strip(), c[3].strip() or None, c[4].strip() or None, c[5].strip() or None))
    return out


def write_triples(triples: Iterable[TripleRecord]) -> str:
    lines = []
    for t in triples:
        cols = [t.source_id, t.subject, t.object, t.subject_qualifier or "", t.object_qualifier or "", t.predicate_qualifier or ""]
        lines.append("\t".join(_one_line(c) for c in cols))
    return "".join(line + "\n" for line in lines)


def _one_line(text: str) -> str:
    return " ".join(text.replace("\t", " ").split())


def read_ner(path: str | Path) -> list[tuple[str, str, str]]:
    out = []
    for lineno, c in _rows(path, 3, 3, "NER"):
        try:
            prefix_of(c[1].strip())
        except CurieError as e:
            raise EvaluationError(f"{path}:{lineno}: {e}") from None
        out.append((c[0].strip(), c[1].strip(), c[2].strip()))
    return out


def write_ner(rows: Iterable[tuple[str, str, str]]) -> str:
    return "".join("\t".join(r) + "\n" for r in sorted(rows))


def read_grounding_pairs(path: str | Path) -> list[tuple[str, str]]:
    out = []
    for lineno, c in _rows(path, 2, 2, "grounding pair"):
        try:
            prefix_of(c[1].strip())
        except CurieError as e:
            raise EvaluationError(f"{path}:{lineno}: {e}") from None
        out.append((c[0], c[1].strip()))
    return out


@dataclass
class DocumentResult:
    document: Document
    instances: list[Instance]


def extract_corpus(
    extractor: Any,
    class_name: str,
    documents: Sequence[Document],
    *,
    chunking: bool = False,
    window: int = DEFAULT_WINDOW,
    overlap: int = DEFAULT_OVERLAP,
    workers: int = 1,
) -> list[DocumentResult]:
    """Extract every document (one instance per chunk); results sorted by source id."""

    def run(doc: Document) -> DocumentResult:
        plan = chunk_document(doc.title, doc.abstract, window, overlap, chunking)
        return DocumentResult(doc, [extractor.extract(class_name, text, source_id=doc.source_id) for text, _ in plan.chunks])

    if workers <= 1:
        results = [run(d) for d in documents]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, documents))
    return sorted(results, key=lambda r: r.document.source_id)


def predicted_triples(results: Iterable[DocumentResult]) -> list[TripleRecord]:
    out = []
    for r in results:
        out += merge_chunk_results(triples_from_instance(i, r.document.source_id) for i in r.instances)
    return out


def predicted_entities(results: Iterable[DocumentResult], schema: Schema, **kw: Any) -> set[tuple[str, str, str]]:
    out: set[tuple[str, str, str]] = set()
    for r in results:
        for inst in r.instances:
            out |= entities_from_instance(inst, r.document.source_id, schema, **kw)
    return out


# --- reports -----------------------------------------------------------------


def summary_table(reports: Mapping[str, ScoreReport]) -> str:
    rows = [f"{'set':<12} {'TP':>5} {'FP':>5} {'FN':>5} {'P':>6} {'R':>6} {'F':>7}"]
    for name, r in reports.items():
        rows.append(
            f"{name:<12} {r.true_positives:>5} {r.false_positives:>5} {r.false_negatives:>5} "
            f"{r.precision:>6.2f} {r.recall:>6.2f} {r.f_score:>7.2f}"
        )
    return "\n".join(rows) + "\n"


def grounding_summary(report: GroundingReport) -> str:
    rows = [f"{vocab}: {m}/{t}" for vocab, (m, t) in sorted(report.per_vocabulary.items())]
    rows.append(f"total: {report.matched}/{report.total}")
    return "\n".join(rows) + "\n"


def report_json(payload: Mapping[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
