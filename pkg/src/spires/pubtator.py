"""Convert BioCreative CDR PubTator files into the native corpus/gold TSV formats.

PubTator blocks look like::

    2160002|t|Vasodilation of large and small coronary vessels ...
    2160002|a|The effects of ...
    2160002\t0\t12\tVasodilation\tDisease\tD014664
    2160002\tCID\tD019806\tD014664

Entity identifiers are bare MeSH ids (``-1`` for unmapped, ``|`` for multiple).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .evaluation import Document, TripleRecord


class PubTatorError(ValueError):
    pass


@dataclass
class PubTatorCorpus:
    documents: list[Document] = field(default_factory=list)
    triples: list[TripleRecord] = field(default_factory=list)
    entities: set[tuple[str, str, str]] = field(default_factory=set)


def _mesh(ident: str) -> list[str]:
    return [f"MESH:{i.strip()}" for i in ident.split("|") if i.strip() and i.strip() != "-1"]


def parse_pubtator(text: str) -> PubTatorCorpus:
    corpus = PubTatorCorpus()
    titles: dict[str, str] = {}
    abstracts: dict[str, str] = {}
    order: list[str] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if "|t|" in line[:40] or "|a|" in line[:40]:
            pmid, kind, body = line.split("|", 2)
            if pmid not in titles and pmid not in abstracts:
                order.append(pmid)
            (titles if kind == "t" else abstracts)[pmid] = body
            continue
        cols = line.split("\t")
        if len(cols) >= 4 and cols[1] == "CID":
            for chem in _mesh(cols[2]):
                for dis in _mesh(cols[3]):
                    corpus.triples.append(TripleRecord(cols[0], chem, dis))
        elif len(cols) >= 6:
            etype = cols[4].strip().lower()
            for curie in _mesh(cols[5]):
                corpus.entities.add((cols[0], curie, etype))
        else:
            raise PubTatorError(f"line {lineno}: unrecognized PubTator line {line[:60]!r}")
    corpus.documents = [Document(p, titles.get(p, ""), abstracts.get(p, "")) for p in order]
    return corpus


def corpus_tsv(documents: list[Document]) -> str:
    def clean(text: str) -> str:
        return " ".join(text.replace("\t", " ").split())

    return "".join(f"{d.source_id}\t{clean(d.title)}\t{clean(d.abstract)}\n" for d in documents)
