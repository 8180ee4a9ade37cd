"""Command-line interface: ``spires validate|extract|eval|record``.

Exit codes:
  0  success
  1  invalid input (schema violations, malformed files)
  2  I/O error (missing file, unreadable input)
  3  replay miss (prompt digest absent from the cassette)
  4  transport or rate-limit failure from the completion backend
  5  configuration error (bad flag combination, missing endpoint)
  6  extraction error (recursion limit, warnings treated as errors)
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .config import ConfigError, RunConfig, resolve_schema_path
from .emit import InstanceDocument, emit_many
from .engine import ExtractionError, Extractor
from .evaluation import (
    Document,
    EvaluationError,
    extract_corpus,
    grounding_summary,
    load_corpus,
    predicted_entities,
    predicted_triples,
    read_grounding_pairs,
    read_ner,
    read_triples,
    report_json,
    score_grounding,
    score_ner,
    score_triples,
    summary_table,
    write_triples,
)
from .gateway import Cassette, CassetteError, Gateway, GatewayError, HttpBackend, RecordingBackend, ReplayBackend, ReplayMiss
from .grounding import Grounder, LexiconError, load_lexicon, load_normalization_map
from .hierarchy import HierarchyError
from .schema import SchemaError, load_schema, parse_schema, validate_schema

logger = logging.getLogger("spires")

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_REPLAY_MISS, EXIT_TRANSPORT, EXIT_CONFIG, EXIT_EXTRACTION = range(7)
EPOCH = "1970-01-01T00:00:00+00:00"


def _err(msg: str) -> None:
    print(f"spires: {msg}", file=sys.stderr)


# --- shared construction -----------------------------------------------------


def _run_config(args: argparse.Namespace, needs_backend: bool = True) -> RunConfig:
    flags = {
        "schema": getattr(args, "schema", None),
        "class_name": getattr(args, "class_name", None),
        "backend": getattr(args, "backend", None),
        "cassette": getattr(args, "cassette", None),
        "lexicons": getattr(args, "lexicon", None),
        "normmap": getattr(args, "normmap", None),
        "partial_match": getattr(args, "partial_match", None),
        "format": getattr(args, "format", None),
        "chunking": getattr(args, "chunking", None),
        "window": getattr(args, "window", None),
        "overlap": getattr(args, "overlap", None),
        "workers": getattr(args, "workers", None),
        "model": getattr(args, "model", None),
        "recursion_limit": getattr(args, "recursion_limit", None),
        "delimiter": getattr(args, "delimiter", None),
        "warnings_as_errors": getattr(args, "warnings_as_errors", None),
        "deterministic": getattr(args, "deterministic", None),
    }
    return RunConfig.from_sources(flags, config_file=getattr(args, "config", None), needs_backend=needs_backend)


def _load_schema(cfg: RunConfig):
    if not cfg.schema:
        raise ConfigError("--schema is required")
    path = resolve_schema_path(cfg.schema)
    return load_schema(path.read_text(encoding="utf-8"))


def _grounder(cfg: RunConfig) -> Grounder:
    lexicons = [load_lexicon(p) for p in cfg.lexicons]
    norm = load_normalization_map(cfg.normmap) if cfg.normmap else None
    return Grounder.from_lexicons(lexicons, norm, partial=cfg.partial_match)


def _gateway(cfg: RunConfig, record_into: Cassette | None = None) -> tuple[Gateway, Cassette | None]:
    if cfg.backend == "replay":
        cassette = Cassette.load(cfg.cassette)
        return Gateway(ReplayBackend(cassette), deterministic=cfg.deterministic), cassette
    backend: Any = HttpBackend.from_env(cfg.endpoint, cfg.api_key)
    if record_into is not None:
        backend = RecordingBackend(backend, record_into)
    return Gateway(backend, deterministic=cfg.deterministic), record_into


def _documents(inputs: Sequence[str], corpus: str | None) -> list[Document]:
    docs: list[Document] = []
    if corpus:
        docs += load_corpus(corpus)
    for item in inputs:
        if item == "-":
            docs.append(Document("stdin", sys.stdin.read()))
        elif item.endswith(".tsv"):
            docs += load_corpus(item)
        else:
            path = Path(item)
            docs.append(Document(path.stem, path.read_text(encoding="utf-8")))
    if not docs:
        docs.append(Document("stdin", sys.stdin.read()))
    return docs


def _file_digest(path: str | None) -> str | None:
    if not path or not Path(path).exists():
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _run_extraction(cfg: RunConfig, docs: list[Document], gateway: Gateway):
    schema = _load_schema(cfg)
    if not cfg.class_name:
        raise ConfigError("--class is required")
    extractor = Extractor(schema, gateway, _grounder(cfg), cfg.engine_config())
    started = time.monotonic()
    results = extract_corpus(
        extractor, cfg.class_name, docs, chunking=cfg.chunking, window=cfg.window, overlap=cfg.overlap, workers=cfg.workers
    )
    elapsed = 0 if cfg.deterministic else int((time.monotonic() - started) * 1000)
    return schema, results, elapsed


def _documents_out(cfg: RunConfig, schema, results, elapsed: int, model_id: str | None = None) -> list[InstanceDocument]:
    meta = {
        "backend": cfg.backend,
        "model_id": model_id or cfg.model,
        "cassette_digest": _file_digest(cfg.cassette) if cfg.backend == "replay" else None,
        "created_at": EPOCH if cfg.deterministic else datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
        "elapsed_ms": elapsed,
    }
    meta = {k: v for k, v in meta.items() if v is not None}
    docs = []
    for r in results:
        for n, inst in enumerate(r.instances, 1):
            m = dict(meta)
            if len(r.instances) > 1:
                m["chunk"] = n
            docs.append(InstanceDocument(inst, schema.name, m))
    return docs


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --- commands ----------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    path = resolve_schema_path(args.schema_path)
    text = path.read_text(encoding="utf-8")
    schema = parse_schema(text)
    violations = validate_schema(schema)
    for v in violations:
        print(v)
    if violations:
        print(f"{path}: {len(violations)} violation(s)", file=sys.stderr)
        return EXIT_INVALID
    print(f"{path}: ok ({len(schema.classes)} classes)", file=sys.stderr)
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    docs = _documents(args.inputs, args.corpus)
    gateway, cassette = _gateway(cfg)
    schema, results, elapsed = _run_extraction(cfg, docs, gateway)
    # A replayed answer comes from whichever model recorded the cassette.
    model_id = cassette.model_id if cassette is not None else None
    _write(emit_many(_documents_out(cfg, schema, results, elapsed, model_id), cfg.format, schema), args.out)
    return EXIT_OK


def cmd_record(args: argparse.Namespace) -> int:
    cfg = _run_config(args, needs_backend=False)
    if cfg.backend != "http":
        raise ConfigError("record needs the http backend (--backend http)")
    if not cfg.cassette:
        raise ConfigError("record needs --cassette to write into")
    cfg.check()
    cassette = Cassette.load(cfg.cassette, missing_ok=True)
    cassette.model_id = cfg.model
    if not cassette.created_at or cfg.deterministic:
        cassette.created_at = EPOCH if cfg.deterministic else datetime.now(timezone.utc).replace(microsecond=0).isoformat()
    gateway, _ = _gateway(cfg, record_into=cassette)
    docs = _documents(args.inputs, args.corpus)
    try:
        schema, results, elapsed = _run_extraction(cfg, docs, gateway)
    finally:
        cassette.save()
    _write(emit_many(_documents_out(cfg, schema, results, elapsed), cfg.format, schema), args.out)
    print(f"{cfg.cassette}: {len(cassette)} entries", file=sys.stderr)
    return EXIT_OK


def _predictions(args: argparse.Namespace):
    """Either read predictions from --pred or run extraction over --corpus."""
    if args.pred:
        return None
    if not args.corpus:
        raise ConfigError("give either --pred or --corpus")
    cfg = _run_config(args)
    gateway, _ = _gateway(cfg)
    schema, results, _ = _run_extraction(cfg, load_corpus(args.corpus), gateway)
    return schema, results


def cmd_eval_triples(args: argparse.Namespace) -> int:
    gold = read_triples(args.gold)
    produced = _predictions(args)
    if produced is None:
        pred = read_triples(args.pred)
    else:
        pred = predicted_triples(produced[1])
        if args.write_pred:
            Path(args.write_pred).write_text(write_triples(pred), encoding="utf-8")
    norm = load_normalization_map(args.normmap) if args.normmap else None
    report = score_triples(gold, pred, norm)
    if args.report:
        Path(args.report).write_text(report_json({"triples": report.to_dict()}), encoding="utf-8")
    sys.stdout.write(summary_table({"triples": report}))
    return EXIT_OK


def cmd_eval_ner(args: argparse.Namespace) -> int:
    gold = read_ner(args.gold)
    produced = _predictions(args)
    pred = read_ner(args.pred) if produced is None else sorted(predicted_entities(produced[1], produced[0]))
    norm = load_normalization_map(args.normmap) if args.normmap else None
    types = tuple(args.entity_type) if args.entity_type else ("chemical", "disease")
    reports = score_ner(gold, pred, types, norm)
    if args.report:
        Path(args.report).write_text(report_json({t: r.to_dict() for t, r in reports.items()}), encoding="utf-8")
    sys.stdout.write(summary_table(reports))
    return EXIT_OK


def cmd_eval_grounding(args: argparse.Namespace) -> int:
    cfg = _run_config(args, needs_backend=False)
    pairs = read_grounding_pairs(args.pairs)
    report = score_grounding(pairs, _grounder(cfg))
    if args.report:
        Path(args.report).write_text(report_json(report.to_dict()), encoding="utf-8")
    sys.stdout.write(grounding_summary(report))
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def _run_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run options")
    g.add_argument("--config", help="YAML config file (flags > env vars > config file)")
    g.add_argument("--schema", help="schema file, or a bundled schema name (recipe, ctd)")
    g.add_argument("--class", dest="class_name", help="entry-point class")
    g.add_argument("--backend", choices=("replay", "http"))
    g.add_argument("--cassette", help="cassette YAML for replay/record")
    g.add_argument("--lexicon", action="append", help="lexicon TSV (repeatable)")
    g.add_argument("--normmap", help="normalization map TSV")
    g.add_argument("--partial-match", action="store_true", default=None, help="also ground on lexicon labels found inside a span")
    g.add_argument("--format", choices=("yaml", "json", "ofn"))
    g.add_argument("--chunking", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--window", type=int, help="chunk window in characters")
    g.add_argument("--overlap", type=int, help="chunk overlap in characters")
    g.add_argument("--workers", type=int, help="worker threads for batch extraction")
    g.add_argument("--model", help="model id sent to the backend")
    g.add_argument("--recursion-limit", type=int)
    g.add_argument("--delimiter", help="multivalued delimiter (default ';')")
    g.add_argument("--warnings-as-errors", action="store_true", default=None)
    g.add_argument("--deterministic", action="store_true", default=None, help="zero timestamps and latencies")
    g.add_argument("--out", help="write output here instead of stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spires",
        description="Schema-driven recursive extraction from text via a completion model.",
        epilog=__doc__.split("\n", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = _run_flags()

    p = sub.add_parser("validate", help="check a schema file")
    p.add_argument("schema_path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("extract", parents=[run], help="extract instances from text")
    p.add_argument("inputs", nargs="*", help="text files, corpus .tsv files, or '-' for stdin")
    p.add_argument("--corpus", help="corpus TSV: source_id, title, abstract")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("record", parents=[run], help="run against a live backend and record a cassette")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--corpus")
    p.set_defaults(func=cmd_record)

    ev = sub.add_parser("eval", help="evaluation protocols").add_subparsers(dest="eval_command", required=True)
    for name, func in (("triples", cmd_eval_triples), ("ner", cmd_eval_ner)):
        p = ev.add_parser(name, parents=[run])
        p.add_argument("--gold", required=True)
        p.add_argument("--pred", help="predictions TSV")
        p.add_argument("--corpus", help="corpus TSV to extract predictions from")
        p.add_argument("--report", help="write JSON report here")
        if name == "triples":
            p.add_argument("--write-pred", help="save extracted predictions as triple TSV")
        else:
            p.add_argument("--entity-type", action="append")
        p.set_defaults(func=func)
    p = ev.add_parser("grounding", parents=[run])
    p.add_argument("--pairs", required=True, help="label<TAB>expected_curie TSV")
    p.add_argument("--report")
    p.set_defaults(func=cmd_eval_grounding)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ReplayMiss as e:
        _err(str(e))
        return EXIT_REPLAY_MISS
    except GatewayError as e:
        _err(str(e))
        return EXIT_TRANSPORT
    except ConfigError as e:
        _err(f"configuration error: {e}")
        return EXIT_CONFIG
    except ExtractionError as e:
        _err(f"extraction failed: {e}")
        return EXIT_EXTRACTION
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        _err(f"I/O error: {e}")
        return EXIT_IO
    except (SchemaError, LexiconError, HierarchyError, EvaluationError, CassetteError, ValueError) as e:
        _err(str(e))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
