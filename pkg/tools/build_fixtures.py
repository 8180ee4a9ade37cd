"""Regenerate the shipped fixtures under src/spires/data.

Lexicons, the mini MeSH hierarchy, corpora, and gold files are written from
the tables below.  Cassettes are produced by running the real extractor over
each entry-point input against a scripted backend that serves the authored
completions, so every recorded digest is one the engine actually asks for.
Authored completions that no extraction reaches are an error.

    python3 tools/build_fixtures.py
"""

from __future__ import annotations

import sys
from itertools import product
from pathlib import Path

from spires.engine import EngineConfig, Extractor
from spires.evaluation import Document, chunk_document, write_ner, write_triples, TripleRecord
from spires.gateway import Cassette, CompletionRequest, Gateway, RecordingBackend
from spires.grounding import Grounder, load_lexicon, load_normalization_map, normalize_label
from spires.prompt import generate_prompt
from spires.schema import load_schema_file

DATA = Path(__file__).resolve().parent.parent / "src" / "spires" / "data"
CREATED_AT = "2026-10-16T00:00:00+00:00"
FIXTURE_MODEL = "fixture-authored"

# --- lexicons ------------------------------------------------------------------
# Identifiers in the 99xxxxxx / D9xxxxx ranges are synthetic placeholders.

FOODON = [
    ("FOODON:03301844", "garlic powder", "powdered garlic"),
    ("FOODON:99000001", "spaghetti", ""),
    ("FOODON:99000002", "ground beef", "minced beef"),
    ("FOODON:99000003", "onion", "onions"),
    ("FOODON:99000004", "tomato sauce", ""),
    ("FOODON:99000005", "salt", "table salt"),
    ("FOODON:99000006", "water", ""),
    ("FOODON:99000101", "boiling", "boil"),
    ("FOODON:99000102", "browning", "brown"),
    ("FOODON:99000103", "chopping", "chop"),
    ("FOODON:99000104", "simmering", "simmer"),
    ("FOODON:99000105", "serving", "serve"),
    ("FOODON:99000201", "cooking pot", "pot"),
    ("FOODON:99000202", "skillet", "frying pan"),
    ("FOODON:99000203", "kitchen knife", "knife"),
]
WIKIDATA = [("WIKIDATA:Q10716334", "garlic powder", "")]
UCUM = [
    ("UCUM:[tbs_us]", "tablespoon", "tablespoons|tbsp"),
    ("UCUM:[tsp_us]", "teaspoon", "teaspoons|tsp"),
    ("UCUM:[lb_av]", "pound", "pounds|lb"),
    ("UCUM:[cup_us]", "cup", "cups"),
    ("UCUM:g", "gram", "grams"),
]
DBPEDIA = [
    ("DBPEDIA:Italian_cuisine", "Italian cuisine", ""),
    ("DBPEDIA:Pasta", "pasta", "pasta dish"),
]

CHEMICAL_ROOTS = [
    ("MESH:D000602", "Amino Acids, Peptides, and Proteins"),
    ("MESH:D001685", "Biological Factors"),
    ("MESH:D002241", "Carbohydrates"),
    ("MESH:D004364", "Pharmaceutical Preparations"),
    ("MESH:D006571", "Heterocyclic Compounds"),
    ("MESH:D007287", "Inorganic Chemicals"),
    ("MESH:D008055", "Lipids"),
    ("MESH:D009706", "Nucleic Acids, Nucleotides, and Nucleosides"),
    ("MESH:D009930", "Organic Chemicals"),
    ("MESH:D011083", "Polycyclic Compounds"),
    ("MESH:D013812", "Therapeutics"),
    ("MESH:D019602", "Food and Beverages"),
    ("MESH:D045424", "Complex Mixtures"),
    ("MESH:D045762", "Enzymes and Coenzymes"),
    ("MESH:D046911", "Macromolecular Substances"),
]
DISEASE_ROOTS = [
    ("MESH:D001423", "Bacterial Infections and Mycoses"),
    ("MESH:D001523", "Mental Disorders"),
    ("MESH:D002318", "Cardiovascular Diseases"),
    ("MESH:D002943", "Circulatory and Respiratory Physiological Phenomena"),
    ("MESH:D004066", "Digestive System Diseases"),
    ("MESH:D004700", "Endocrine System Diseases"),
    ("MESH:D005128", "Eye Diseases"),
    ("MESH:D005261", "Female Urogenital Diseases and Pregnancy Complications"),
    ("MESH:D006425", "Hemic and Lymphatic Diseases"),
    ("MESH:D007154", "Immune System Diseases"),
    ("MESH:D007280", "Disorders of Environmental Origin"),
    ("MESH:D009057", "Stomatognathic Diseases"),
    ("MESH:D009140", "Musculoskeletal Diseases"),
    ("MESH:D009358", "Congenital, Hereditary, and Neonatal Diseases and Abnormalities"),
    ("MESH:D009369", "Neoplasms"),
    ("MESH:D009422", "Nervous System Diseases"),
    ("MESH:D009750", "Nutritional and Metabolic Diseases"),
    ("MESH:D009784", "Occupational Diseases"),
    ("MESH:D010038", "Otorhinolaryngologic Diseases"),
    ("MESH:D010272", "Parasitic Diseases"),
    ("MESH:D012140", "Respiratory Tract Diseases"),
    ("MESH:D013568", "Pathological Conditions, Signs and Symptoms"),
    ("MESH:D014777", "Virus Diseases"),
    ("MESH:D014947", "Wounds and Injuries"),
    ("MESH:D017437", "Skin and Connective Tissue Diseases"),
    ("MESH:D052801", "Male Urogenital Diseases"),
    ("MESH:D064419", "Chemically-Induced Disorders"),
]
CHEMICAL_TOP = ("MESH:D900001", "Placeholder chemical category")
DISEASE_TOP = ("MESH:D900002", "Placeholder disease category")

# (curie, label, synonyms, parent)
MESH_TERMS = [
    ("MESH:D019806", "Cromakalim", "", "MESH:D006571"),
    ("MESH:D020110", "Pinacidil", "", "MESH:D009930"),
    ("MESH:D008094", "Lithium", "", "MESH:D007287"),
    ("MESH:D005472", "Fluorouracil", "5-fluorouracil|5-FU", "MESH:D006571"),
    ("MESH:D900101", "Examplamine", "", "MESH:D009930"),
    ("MESH:D900201", "Fictazole hydrochloride", "", "MESH:D006571"),
    ("MESH:D014664", "Vasodilation", "", "MESH:D002943"),
    ("MESH:D007022", "Hypotension", "", "MESH:D002318"),
    ("MESH:D006934", "Hypercalcemia", "", "MESH:D009750"),
    ("MESH:D001927", "Brain Diseases", "encephalopathy", "MESH:D009422"),
    ("MESH:D900301", "Nephrotoxicity syndrome", "", "MESH:D064419"),
    ("MESH:D900302", "Placeholder hepatitis", "", "MESH:D004066"),
    ("MESH:D900303", "Placeholder dermatitis", "", "MESH:D017437"),
    ("MESH:D900401", "Placeholder carcinoma", "", "MESH:D009369"),
    ("MESH:D900402", "Placeholder carcinoma, subtype A", "", "MESH:D900401"),
    ("MESH:D900403", "Placeholder sarcoma", "", "MESH:D009369"),
]
MESH_ROOT_SYNONYMS = {"MESH:D009369": "cancer|tumors"}

CHEBI = [("CHEBI:900001", "fictazole", "")]
NORMMAP = [("CHEBI:900001", "MESH:D900201")]

_GO_SUBSTRATES = [
    "glucose", "fructose", "galactose", "lactate", "pyruvate", "citrate", "glutamate", "glycine",
    "serine", "alanine", "histidine", "tryptophan", "cholesterol", "sphingosine", "heme", "urea",
    "glycogen", "thiamine", "folate", "riboflavin",
]
_GO_SUFFIXES = ["kinase activity", "transmembrane transport", "biosynthetic process", "catabolic process", "binding"]
_EMAPA_ORGANS = [
    "heart", "liver", "lung", "kidney", "stomach", "brain", "spinal cord", "retina", "forelimb",
    "hindlimb", "tail", "pancreas", "spleen", "thymus", "bladder", "tongue", "skin", "ear", "gonad", "gut",
]
_EMAPA_PARTS = ["mesenchyme", "epithelium", "vasculature", "nerve", "primordium"]
_MONDO_SITES = [
    "renal", "hepatic", "cardiac", "pulmonary", "ocular", "cutaneous", "skeletal", "muscular",
    "neural", "gastric", "pancreatic", "splenic", "thyroid", "adrenal", "vascular", "dental",
    "auditory", "intestinal", "ovarian", "testicular",
]
_MONDO_KINDS = ["dysplasia", "hypoplasia", "fibrosis", "neoplasm", "disorder, susceptibility to"]


def _numbered(prefix: str, width: int, start: int, labels: list[str]) -> list[tuple[str, str, str]]:
    return [(f"{prefix}:{start + i:0{width}d}", label, "") for i, label in enumerate(labels)]


def go_terms() -> list[tuple[str, str, str]]:
    labels = [f"{s} {x}" for s, x in product(_GO_SUBSTRATES, _GO_SUFFIXES)][:99]
    return [("GO:0008907", "integrase activity", "")] + _numbered("GO", 7, 9900001, labels)


def emapa_terms() -> list[tuple[str, str, str]]:
    labels = [f"{o} {p}" for o, p in product(_EMAPA_ORGANS, _EMAPA_PARTS)]
    return _numbered("EMAPA", 5, 99001, labels)


def mondo_terms() -> list[tuple[str, str, str]]:
    labels = [f"{s} {k}" for s, k in product(_MONDO_SITES, _MONDO_KINDS)][:99]
    return _numbered("MONDO", 7, 9900001, ["UV-induced skin damage, susceptibility to"] + labels)


def mesh_lexicon() -> list[tuple[str, str, str]]:
    rows = [(c, lab, MESH_ROOT_SYNONYMS.get(c, "")) for c, lab in CHEMICAL_ROOTS + DISEASE_ROOTS]
    rows += [CHEMICAL_TOP + ("",), DISEASE_TOP + ("",)]
    rows += [(c, lab, syn) for c, lab, syn, _ in MESH_TERMS]
    return rows


def mesh_hierarchy() -> list[tuple[str, str]]:
    edges = [(c, CHEMICAL_TOP[0]) for c, _ in CHEMICAL_ROOTS]
    edges += [(c, DISEASE_TOP[0]) for c, _ in DISEASE_ROOTS]
    edges += [(c, parent) for c, _, _, parent in MESH_TERMS]
    return edges


def lexicon_tsv(rows: list[tuple[str, str, str]]) -> str:
    keys: dict[str, str] = {}
    for curie, label, syn in rows:
        for name in [label] + [s for s in syn.split("|") if s]:
            key = normalize_label(name)
            if keys.setdefault(key, curie) != curie:
                raise SystemExit(f"label {name!r} is ambiguous between {keys[key]} and {curie}")
    return "".join(f"{c}\t{lab}\t{syn}\n" if syn else f"{c}\t{lab}\n" for c, lab, syn in rows)


# --- recipe --------------------------------------------------------------------

SPAGHETTI = """Simple Spaghetti

A quick weeknight spaghetti with a garlicky meat sauce.

Ingredients:
- 1 pound spaghetti
- 1 pound ground beef
- 1 onion, chopped
- 2 tablespoons garlic powder
- 1 jar tomato sauce
- salt to taste

Directions:
1. Boil the spaghetti in a large pot of salted water until tender.
2. Brown the ground beef in a skillet.
3. Chop the onion.
4. Add the chopped onion, garlic powder and tomato sauce to the beef and simmer for 20 minutes.
5. Serve the sauce over the spaghetti."""

GARLIC = "garlic powder (2 tablespoons)"

RECIPE_INPUTS = {"garlic.txt": ("Ingredient", GARLIC), "spaghetti.txt": ("Recipe", SPAGHETTI)}

RECIPE_COMPLETIONS = {
    ("Recipe", SPAGHETTI): """label: Simple Spaghetti
description: A quick weeknight spaghetti with a garlicky meat sauce
categories: Italian cuisine; pasta dish
ingredients: spaghetti (1 pound); ground beef (1 pound); onion (1, chopped); garlic powder (2 tablespoons); tomato sauce (1 jar); salt (to taste)
steps: boil the spaghetti in a large pot of salted water until tender; brown the ground beef in a skillet; chop the onion; add the chopped onion, garlic powder and tomato sauce to the beef and simmer for 20 minutes; serve the sauce over the spaghetti""",
    ("Ingredient", GARLIC): "food_item: garlic powder\namount: 2 tablespoons",
    ("Ingredient", "spaghetti (1 pound)"): "food_item: spaghetti\namount: 1 pound",
    ("Ingredient", "ground beef (1 pound)"): "food_item: ground beef\namount: 1 pound",
    ("Ingredient", "onion (1, chopped)"): "food_item: onion\namount: 1",
    ("Ingredient", "tomato sauce (1 jar)"): "food_item: tomato sauce\namount: 1 jar",
    ("Ingredient", "salt (to taste)"): "food_item: salt\namount: none",
    ("Quantity", "2 tablespoons"): "value: 2\nunit: tablespoons",
    ("Quantity", "1 pound"): "value: 1\nunit: pound",
    ("Quantity", "1"): "value: 1\nunit: none",
    ("Quantity", "1 jar"): "value: 1\nunit: jar",
    ("Step", "boil the spaghetti in a large pot of salted water until tender"): """action: boil
inputs: spaghetti; water; salt
outputs: cooked spaghetti
utensils: pot""",
    ("Step", "brown the ground beef in a skillet"): """action: brown
inputs: ground beef
outputs: browned ground beef
utensils: skillet""",
    ("Step", "chop the onion"): """action: chop
inputs: onion
outputs: chopped onion
utensils: knife""",
    ("Step", "add the chopped onion, garlic powder and tomato sauce to the beef and simmer for 20 minutes"): """action: simmer
inputs: chopped onion; garlic powder; tomato sauce; browned ground beef
outputs: meat sauce
utensils: skillet""",
    ("Step", "serve the sauce over the spaghetti"): """action: serve
inputs: meat sauce; cooked spaghetti
outputs: spaghetti with meat sauce""",
}

# --- chemical-to-disease ----------------------------------------------------------

CTD_DOCS = [
    Document("10327032", "Transient hyperammonemic encephalopathy after fluorouracil-based chemotherapy in cancer patients"),
    Document("19154241", "Hypercalcemia during chronic lithium therapy: a case report"),
    Document("2160002", "Vasodilation of large and small coronary vessels and hypotension induced by cromakalim and pinacidil"),
    Document(
        "S0001",
        "Renal safety of examplamine in rats",
        "Examplamine did not induce nephrotoxicity syndrome at any dose tested. Mild weight loss was observed in the high-dose group.",
    ),
    Document(
        "S0002",
        "Fictazole-associated liver injury",
        "Fictazole induced placeholder hepatitis in three patients. One patient also developed placeholder dermatitis.",
    ),
]


def _rel(subject: str, obj: str, qualifier: str = "none", sq: str = "none", oq: str = "none") -> str:
    return (
        f"subject: {subject}\npredicate: INDUCES\nobject: {obj}\n"
        f"qualifier: {qualifier}\nsubject_qualifier: {sq}\nobject_qualifier: {oq}"
    )


def _doc_text(d: Document) -> str:
    (text, _), = chunk_document(d.title, d.abstract, chunking=False).chunks
    return text


_ROOT = "ChemicalToDiseaseDocument"
_REL = "ChemicalToDiseaseRelationship"
CTD_COMPLETIONS = {
    (_ROOT, _doc_text(CTD_DOCS[2])): """chemicals: cromakalim; pinacidil
diseases: vasodilation; hypotension
chemical_to_disease_relationships: cromakalim induces vasodilation of large and small coronary vessels; pinacidil induces vasodilation of large and small coronary vessels; cromakalim induces hypotension""",
    (_REL, "cromakalim induces vasodilation of large and small coronary vessels"): _rel("cromakalim", "vasodilation", oq="large and small coronary vessels"),
    (_REL, "pinacidil induces vasodilation of large and small coronary vessels"): _rel("pinacidil", "vasodilation", oq="large and small coronary vessels"),
    (_REL, "cromakalim induces hypotension"): _rel("cromakalim", "hypotension"),
    (_ROOT, _doc_text(CTD_DOCS[1])): """chemicals: lithium
diseases: hypercalcemia
chemical_to_disease_relationships: chronic lithium therapy induces hypercalcemia""",
    (_REL, "chronic lithium therapy induces hypercalcemia"): _rel("lithium", "hypercalcemia", sq="Chronic"),
    (_ROOT, _doc_text(CTD_DOCS[0])): """chemicals: fluorouracil
diseases: encephalopathy; cancer
chemical_to_disease_relationships: fluorouracil induces transient hyperammonemic encephalopathy""",
    (_REL, "fluorouracil induces transient hyperammonemic encephalopathy"): _rel("fluorouracil", "encephalopathy", oq="Transient"),
    (_ROOT, _doc_text(CTD_DOCS[3])): """chemicals: examplamine
diseases: nephrotoxicity syndrome; weight loss
chemical_to_disease_relationships: examplamine does not induce nephrotoxicity syndrome""",
    (_REL, "examplamine does not induce nephrotoxicity syndrome"): _rel("examplamine", "nephrotoxicity syndrome", qualifier="NOT"),
    (_ROOT, _doc_text(CTD_DOCS[4])): """chemicals: fictazole
diseases: placeholder hepatitis
chemical_to_disease_relationships: fictazole induces placeholder hepatitis""",
    (_REL, "fictazole induces placeholder hepatitis"): _rel("fictazole", "placeholder hepatitis"),
}

GOLD_TRIPLES = [
    TripleRecord("2160002", "MESH:D019806", "MESH:D007022"),
    TripleRecord("2160002", "MESH:D020110", "MESH:D007022"),
    TripleRecord("19154241", "MESH:D008094", "MESH:D006934"),
    TripleRecord("10327032", "MESH:D005472", "MESH:D001927"),
    TripleRecord("S0001", "MESH:D900101", "MESH:D900301"),
    TripleRecord("S0002", "MESH:D900201", "MESH:D900302"),
    TripleRecord("S0002", "MESH:D900201", "MESH:D900303"),
]
GOLD_NER = [
    ("2160002", "MESH:D019806", "chemical"),
    ("2160002", "MESH:D020110", "chemical"),
    ("2160002", "MESH:D014664", "disease"),
    ("2160002", "MESH:D007022", "disease"),
    ("19154241", "MESH:D008094", "chemical"),
    ("19154241", "MESH:D006934", "disease"),
    ("10327032", "MESH:D005472", "chemical"),
    ("10327032", "MESH:D001927", "disease"),
    ("10327032", "MESH:D009369", "disease"),
    ("S0001", "MESH:D900101", "chemical"),
    ("S0001", "MESH:D900301", "disease"),
    ("S0002", "MESH:D900201", "chemical"),
    ("S0002", "MESH:D900302", "disease"),
    ("S0002", "MESH:D900303", "disease"),
]

# --- build -----------------------------------------------------------------------


class ScriptedBackend:
    """Serves authored completions keyed by the prompt the engine generates."""

    name = "scripted"

    def __init__(self, schema, completions):
        self.by_digest = {generate_prompt(schema, c, t).input_digest: text for (c, t), text in completions.items()}
        self.used: set[str] = set()

    def complete(self, req: CompletionRequest) -> str:
        d = req.prompt.input_digest
        if d not in self.by_digest:
            raise SystemExit(f"no authored completion for {req.prompt.class_name} prompt:\n{req.prompt.text}")
        self.used.add(d)
        return self.by_digest[d]


def record_cassette(schema_name, completions, entries, lexicons, normmap=None) -> None:
    schema = load_schema_file(DATA / "schemas" / f"{schema_name}.yaml")
    scripted = ScriptedBackend(schema, completions)
    cassette = Cassette(model_id=FIXTURE_MODEL, created_at=CREATED_AT)
    grounder = Grounder.from_lexicons([load_lexicon(DATA / "lexicons" / f) for f in lexicons], normmap)
    extractor = Extractor(schema, Gateway(RecordingBackend(scripted, cassette, autosave=False)), grounder, EngineConfig())
    for class_name, text in entries:
        extractor.extract(class_name, text)
    unused = set(scripted.by_digest) - scripted.used
    if unused:
        raise SystemExit(f"{schema_name}: {len(unused)} authored completions are never requested")
    (DATA / "cassettes").mkdir(exist_ok=True)
    (DATA / "cassettes" / f"{schema_name}.yaml").write_text(cassette.dumps(), encoding="utf-8")
    print(f"cassette {schema_name}: {len(cassette)} entries")


def write(rel: str, text: str) -> None:
    path = DATA / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def main() -> int:
    for name, rows in [
        ("foodon", FOODON), ("wikidata", WIKIDATA), ("ucum", UCUM), ("dbpedia", DBPEDIA),
        ("mesh", mesh_lexicon()), ("chebi", CHEBI),
        ("go", go_terms()), ("emapa", emapa_terms()), ("mondo", mondo_terms()),
    ]:
        write(f"lexicons/{name}.tsv", lexicon_tsv(rows))
    write("lexicons/mesh.hierarchy.tsv", "".join(f"{c}\t{p}\n" for c, p in mesh_hierarchy()))
    write("normmap/chebi_mesh.tsv", "".join(f"{a}\t{b}\n" for a, b in NORMMAP))
    for name, rows in [("go", go_terms()), ("emapa", emapa_terms()), ("mondo", mondo_terms())]:
        write(f"corpora/grounding/{name}_pairs.tsv", "".join(f"{lab}\t{c}\n" for c, lab, _ in rows))

    for fname, (_, text) in RECIPE_INPUTS.items():
        write(f"corpora/recipe/{fname}", text + "\n")
    write("corpora/ctd/corpus.tsv", "".join(f"{d.source_id}\t{d.title}\t{d.abstract}\n" for d in CTD_DOCS))
    write("corpora/ctd/gold_triples.tsv", write_triples(GOLD_TRIPLES))
    write("corpora/ctd/gold_ner.tsv", write_ner(GOLD_NER))

    record_cassette("recipe", RECIPE_COMPLETIONS, RECIPE_INPUTS.values(), ["foodon.tsv", "wikidata.tsv", "ucum.tsv", "dbpedia.tsv"])
    record_cassette(
        "ctd",
        CTD_COMPLETIONS,
        [(_ROOT, _doc_text(d)) for d in CTD_DOCS],
        ["mesh.tsv", "chebi.tsv"],
        load_normalization_map(DATA / "normmap" / "chebi_mesh.tsv"),
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
