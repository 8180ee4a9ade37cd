from __future__ import annotations

import hashlib
import json
import subprocess
import sys

import pytest
import yaml

from conftest import CTD_LEXICONS, RECIPE_LEXICONS, lexicon_paths
from spires.cli import EXIT_CONFIG, EXIT_INVALID, EXIT_IO, EXIT_OK, EXIT_REPLAY_MISS, main
from spires.gateway import Cassette
from spires.prompt import generate_prompt


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def lexicon_flags(names: list[str]) -> list[str]:
    return [x for p in lexicon_paths(names) for x in ("--lexicon", str(p))]


def recipe_args(data, cassette=None) -> list[str]:
    return [
        "--schema", "recipe", "--class", "Ingredient",
        "--cassette", str(cassette or data / "cassettes" / "recipe.yaml"),
        *lexicon_flags(RECIPE_LEXICONS), "--deterministic",
    ]


def ctd_args(data) -> list[str]:
    return [
        "--schema", "ctd", "--class", "ChemicalToDiseaseDocument",
        "--cassette", str(data / "cassettes" / "ctd.yaml"),
        *lexicon_flags(CTD_LEXICONS), "--normmap", str(data / "normmap" / "chebi_mesh.tsv"),
    ]


# --- validate ------------------------------------------------------------------


def test_validate_ok(capsys, data):
    code, _, err = run(capsys, "validate", data / "schemas" / "recipe.yaml")
    assert code == EXIT_OK and "ok" in err


def test_validate_dangling(capsys, tmp_path, data):
    text = (data / "schemas" / "recipe.yaml").read_text().replace("range: Quantity", "range: Quantitty")
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    code, out, _ = run(capsys, "validate", path)
    assert code == EXIT_INVALID and "Quantitty" in out


def test_validate_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "validate", tmp_path / "nope.yaml")
    assert code == EXIT_IO and "nope.yaml" in err


def test_validate_syntax_error_has_line(capsys, tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("schema: x\nclasses:\n  A: {attributes: [\n")
    code, _, err = run(capsys, "validate", path)
    assert code == EXIT_INVALID and "line" in err


# --- extract -------------------------------------------------------------------


def test_extract_garlic_yaml(capsys, data):
    code, out, _ = run(capsys, "extract", *recipe_args(data), data / "corpora" / "recipe" / "garlic.txt")
    assert code == EXIT_OK
    assert "food_item: FOODON:03301844  ## garlic powder" in out
    meta = yaml.safe_load(out)["_metadata"]
    assert meta["model_id"] == "fixture-authored" and meta["created_at"].startswith("1970")


def test_extract_json_matches_yaml(capsys, data):
    garlic = data / "corpora" / "recipe" / "garlic.txt"
    _, out_yaml, _ = run(capsys, "extract", *recipe_args(data), garlic)
    _, out_json, _ = run(capsys, "extract", *recipe_args(data), "--format", "json", garlic)
    as_json = json.loads(out_json)["instance"]
    as_yaml = yaml.safe_load(out_yaml)["instance"]
    assert as_json["food_item"]["id"] == as_yaml["food_item"]
    assert as_json["amount"]["unit"]["id"] == as_yaml["amount"]["unit"]


def test_extract_ofn(capsys, data, tmp_path):
    out_path = tmp_path / "garlic.ofn.txt"
    code, out, _ = run(capsys, "extract", *recipe_args(data), "--format", "ofn", "--out", out_path, data / "corpora" / "recipe" / "garlic.txt")
    assert code == EXIT_OK and out == ""
    assert "purl.obolibrary.org/obo/FOODON_03301844" in out_path.read_text()


def test_extract_from_stdin(capsys, data, monkeypatch):
    import io

    monkeypatch.setattr(sys, "stdin", io.StringIO("garlic powder (2 tablespoons)\n"))
    code, out, _ = run(capsys, "extract", *recipe_args(data), "-")
    assert code == EXIT_OK and "FOODON:03301844" in out


def test_replay_miss_names_digest(capsys, data, tmp_path, recipe_schema):
    empty = tmp_path / "empty.yaml"
    Cassette().save(empty)
    code, _, err = run(capsys, "extract", *recipe_args(data, empty), data / "corpora" / "recipe" / "garlic.txt")
    assert code == EXIT_REPLAY_MISS
    prompt = generate_prompt(recipe_schema, "Ingredient", "garlic powder (2 tablespoons)")
    assert hashlib.sha256(prompt.text.encode()).hexdigest() in err


def test_replay_without_cassette_is_config_error(capsys, data):
    code, _, err = run(capsys, "extract", "--schema", "recipe", "--class", "Ingredient", data / "corpora" / "recipe" / "garlic.txt")
    assert code == EXIT_CONFIG and "cassette" in err


def test_warnings_as_errors_exit(capsys, data):
    code, _, err = run(capsys, "extract", *recipe_args(data), "--class", "Recipe", "--warnings-as-errors", data / "corpora" / "recipe" / "spaghetti.txt")
    assert code == 6 and "treated as absent" in err


def test_extract_is_byte_stable(capsys, data):
    argv = ["extract", *ctd_args(data), "--deterministic", "--corpus", data / "corpora" / "ctd" / "corpus.tsv"]
    first = run(capsys, *argv)
    second = run(capsys, *argv, "--workers", "4")
    assert first[0] == EXIT_OK and first[1] == second[1]
    assert first[1].count("---\n") == 5


# --- eval ----------------------------------------------------------------------


def test_eval_triples_identical(capsys, data):
    gold = data / "corpora" / "ctd" / "gold_triples.tsv"
    code, out, _ = run(capsys, "eval", "triples", "--gold", gold, "--pred", gold)
    assert code == EXIT_OK and "100.00" in out


def test_eval_triples_from_corpus(capsys, data, tmp_path):
    report, pred = tmp_path / "r.json", tmp_path / "pred.tsv"
    code, out, _ = run(
        capsys, "eval", "triples", *ctd_args(data), "--gold", data / "corpora" / "ctd" / "gold_triples.tsv",
        "--corpus", data / "corpora" / "ctd" / "corpus.tsv", "--report", report, "--write-pred", pred,
    )
    assert code == EXIT_OK
    payload = json.loads(report.read_text())["triples"]
    assert (payload["true_positives"], payload["false_positives"], payload["false_negatives"]) == (4, 2, 3)
    assert "61.54" in out
    assert len(pred.read_text().splitlines()) == 7


def test_eval_ner_from_corpus(capsys, data):
    code, out, _ = run(
        capsys, "eval", "ner", *ctd_args(data), "--gold", data / "corpora" / "ctd" / "gold_ner.tsv",
        "--corpus", data / "corpora" / "ctd" / "corpus.tsv",
    )
    assert code == EXIT_OK and out.splitlines()[1].startswith("chemical")


def test_eval_grounding_go(capsys, data, tmp_path):
    report = tmp_path / "g.json"
    code, out, _ = run(
        capsys, "eval", "grounding", "--lexicon", data / "lexicons" / "go.tsv",
        "--pairs", data / "corpora" / "grounding" / "go_pairs.tsv", "--report", report,
    )
    assert code == EXIT_OK and "GO: 100/100" in out
    assert json.loads(report.read_text())["matched"] == 100


def test_eval_malformed_gold(capsys, tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("1\tMESH:D1\n")
    code, _, err = run(capsys, "eval", "triples", "--gold", bad, "--pred", bad)
    assert code == EXIT_INVALID and ":1:" in err


def test_eval_needs_pred_or_corpus(capsys, data):
    code, _, _ = run(capsys, "eval", "triples", "--gold", data / "corpora" / "ctd" / "gold_triples.tsv")
    assert code == EXIT_CONFIG


# --- record --------------------------------------------------------------------


def test_record_twice_then_replay(capsys, data, tmp_path, stub_server):
    stub_server.default = (200, {"choices": [{"message": {"content": "food_item: garlic powder\namount: none"}}]})
    cassette = tmp_path / "rec.yaml"
    garlic = data / "corpora" / "recipe" / "garlic.txt"
    argv = ["record", "--schema", "recipe", "--class", "Ingredient", "--backend", "http", "--cassette", cassette, *lexicon_flags(RECIPE_LEXICONS), "--deterministic", garlic]
    import os

    os.environ["SPIRES_LLM_ENDPOINT"] = stub_server.url
    try:
        code, recorded, _ = run(capsys, *argv)
        assert code == EXIT_OK
        size = len(Cassette.load(cassette))
        assert run(capsys, *argv)[0] == EXIT_OK
        assert len(Cassette.load(cassette)) == size == 1
    finally:
        del os.environ["SPIRES_LLM_ENDPOINT"]
    code, replayed, _ = run(capsys, "extract", *recipe_args(data, cassette), garlic)
    assert code == EXIT_OK
    strip = lambda text: {k: v for k, v in yaml.safe_load(text).items() if k != "_metadata"}  # noqa: E731
    assert strip(replayed) == strip(recorded)


def test_record_with_replay_backend(capsys, data, tmp_path):
    code, _, err = run(capsys, "record", *recipe_args(data, tmp_path / "c.yaml"), data / "corpora" / "recipe" / "garlic.txt")
    assert code == EXIT_CONFIG and "http" in err


def test_module_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "spires.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "replay miss" in proc.stdout


@pytest.mark.parametrize("argv", [["--version"], ["extract", "--help"]])
def test_help_and_version(argv, capsys):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == 0
