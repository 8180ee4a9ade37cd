"""Acceptance suite: one test per criterion, each printing a single pass/fail line.

The lines are echoed in the pytest terminal summary.
"""

from __future__ import annotations

import time
from contextlib import contextmanager

import pytest

from conftest import CTD_LEXICONS, RECIPE_LEXICONS, lexicon_paths
from oracles import check_chunking, check_parse_rules, check_scoring_oracle, constraint_fuzz, instance_depth, round_trip
from spires.cli import main
from spires.evaluation import load_corpus, read_grounding_pairs, score_grounding, triples_from_instance
from spires.grounding import Grounder, GroundedEntity, load_lexicon
from spires.instance import Instance
from spires.prompt import generate_prompt

# The worked Ingredient prompt, one entry per line.
GARLIC_PROMPT = "\n".join(
    [
        "Split the following piece of text into fields in the following format:",
        "",
        "food_item: <the food item>",
        "amount: <the quantity of the ingredient>",
        "",
        "Text:",
        "garlic powder (2 tablespoons)",
        "",
        "===",
    ]
)

# (source id, subject, object, subject qualifier, object qualifier) as listed in the worked CTD table.
TABLE_TRIPLES = [
    ("2160002", "MESH:D019806", "MESH:D014664", None, "large and small coronary vessels"),
    ("2160002", "MESH:D020110", "MESH:D014664", None, "large and small coronary vessels"),
    ("19154241", "MESH:D008094", "MESH:D006934", "Chronic", None),
    ("10327032", "MESH:D005472", "MESH:D001927", None, "Transient"),
]


# Collected for the terminal summary hook in conftest.py.
RESULTS: list[str] = []


def _report(line: str) -> None:
    RESULTS.append(line)
    print(line)


@contextmanager
def criterion(n: int, name: str, budget: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        _report(f"[FAIL] criterion {n}: {name} ({type(exc).__name__}: {exc})")
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < budget
    _report(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {name} ({elapsed:.2f}s, budget {budget:g}s)")
    assert ok, f"criterion {n} took {elapsed:.2f}s"


def test_criterion_01_golden_prompt(recipe_schema):
    with criterion(1, "golden Ingredient prompt", 1):
        p = generate_prompt(recipe_schema, "Ingredient", "garlic powder (2 tablespoons)")
        assert p.text == GARLIC_PROMPT


def test_criterion_02_garlic_end_to_end(recipe_extractor):
    with criterion(2, "garlic replay extraction", 1):
        inst = recipe_extractor.extract("Ingredient", "garlic powder (2 tablespoons)")
        food = inst.values["food_item"]
        assert isinstance(food, GroundedEntity) and food.curie == "FOODON:03301844"
        amount = inst.values["amount"]
        assert isinstance(amount, Instance) and amount.class_name == "Quantity"
        assert amount.values["value"] == "2"
        assert amount.values["unit"].curie == "UCUM:[tbs_us]"


def test_criterion_03_round_trip():
    with criterion(3, "round trip on 300 random instances", 30):
        for seed in range(300):
            expected, got = round_trip(seed)
            assert instance_depth(expected) <= 3
            assert got == expected, f"seed {seed}"


def test_criterion_04_parse_rules(recipe_schema, ctd_schema):
    with criterion(4, "parse rules on 1000 fuzzed completions", 30):
        for seed in range(1000):
            schema = recipe_schema if seed % 2 else ctd_schema
            check_parse_rules(schema, list(schema.classes), seed)


def test_criterion_05_grounding_completeness(data):
    with criterion(5, "exact-label grounding GO/EMAPA/MONDO 100/100", 10):
        for vocab in ("go", "emapa", "mondo"):
            g = Grounder.from_lexicons([load_lexicon(data / "lexicons" / f"{vocab}.tsv")])
            report = score_grounding(read_grounding_pairs(data / "corpora" / "grounding" / f"{vocab}_pairs.tsv"), g)
            assert (report.matched, report.total) == (100, 100), (vocab, report.failures)


def test_criterion_06_constraint_soundness(data):
    with criterion(6, "constraint soundness over 1000 ground calls", 30):
        out = constraint_fuzz(data, n=1000, seed=0)
        assert out.calls == 1000 and out.grounded > 0
        assert out.violations == []


def test_criterion_07_scoring_oracle():
    with criterion(7, "scoring matches brute force on 100 set pairs", 10):
        for seed in range(100):
            check_scoring_oracle(seed)


def test_criterion_08_table_triples(ctd_extractor, data):
    with criterion(8, "worked CTD triples from titles", 5):
        docs = {d.source_id: d for d in load_corpus(data / "corpora" / "ctd" / "corpus.tsv")}
        found = {}
        for sid in sorted({t[0] for t in TABLE_TRIPLES}):
            inst = ctd_extractor.extract("ChemicalToDiseaseDocument", docs[sid].title, source_id=sid)
            for t in triples_from_instance(inst, sid):
                found[(sid, t.subject, t.object)] = t
        for sid, subj, obj, subjq, objq in TABLE_TRIPLES:
            t = found[(sid, subj, obj)]
            assert t.predicate == "INDUCES"
            assert (t.subject_qualifier or "").strip() == (subjq or "")
            assert (t.object_qualifier or "").strip() == (objq or "")


def test_criterion_09_chunking():
    with criterion(9, "chunk coverage on 100 random documents", 10):
        for seed in range(100):
            check_chunking(seed)


def _extract_runs(data, tmp_path, tag: str) -> dict[str, bytes]:
    recipe = ["--schema", "recipe", "--cassette", str(data / "cassettes" / "recipe.yaml")]
    recipe += [x for p in lexicon_paths(RECIPE_LEXICONS) for x in ("--lexicon", str(p))]
    ctd = ["--schema", "ctd", "--class", "ChemicalToDiseaseDocument", "--cassette", str(data / "cassettes" / "ctd.yaml")]
    ctd += [x for p in lexicon_paths(CTD_LEXICONS) for x in ("--lexicon", str(p))]
    ctd += ["--normmap", str(data / "normmap" / "chebi_mesh.tsv"), "--corpus", str(data / "corpora" / "ctd" / "corpus.tsv")]
    jobs = {
        "garlic": [*recipe, "--class", "Ingredient", str(data / "corpora" / "recipe" / "garlic.txt")],
        "spaghetti": [*recipe, "--class", "Recipe", str(data / "corpora" / "recipe" / "spaghetti.txt")],
        "ctd": ctd,
    }
    outputs = {}
    for name, argv in jobs.items():
        for fmt in ("yaml", "json", "ofn"):
            path = tmp_path / f"{tag}-{name}.{fmt}"
            assert main(["extract", *argv, "--deterministic", "--format", fmt, "--out", str(path)]) == 0
            outputs[f"{name}.{fmt}"] = path.read_bytes()
    return outputs


def test_criterion_10_determinism(data, tmp_path):
    with criterion(10, "byte-identical deterministic extraction in all formats", 30):
        first = _extract_runs(data, tmp_path, "a")
        second = _extract_runs(data, tmp_path, "b")
        assert len(first) == 9 and all(first.values())
        for key in first:
            assert first[key] == second[key], key


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
