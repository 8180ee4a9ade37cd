from __future__ import annotations

import json
import threading
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from spires.config import data_path
from spires.engine import EngineConfig, Extractor
from spires.gateway import Cassette, Gateway, ReplayBackend
from spires.grounding import Grounder, load_lexicon, load_normalization_map
from spires.schema import load_schema_file

DATA = data_path()
RECIPE_LEXICONS = ["foodon.tsv", "wikidata.tsv", "ucum.tsv", "dbpedia.tsv"]
CTD_LEXICONS = ["mesh.tsv", "chebi.tsv"]


def lexicon_paths(names: list[str]) -> list[Path]:
    return [DATA / "lexicons" / n for n in names]


@pytest.fixture(scope="session")
def data() -> Path:
    return DATA


@pytest.fixture(scope="session")
def recipe_schema():
    return load_schema_file(DATA / "schemas" / "recipe.yaml")


@pytest.fixture(scope="session")
def ctd_schema():
    return load_schema_file(DATA / "schemas" / "ctd.yaml")


@pytest.fixture(scope="session")
def mesh():
    return load_lexicon(DATA / "lexicons" / "mesh.tsv")


@pytest.fixture(scope="session")
def recipe_grounder():
    return Grounder.from_lexicons([load_lexicon(p) for p in lexicon_paths(RECIPE_LEXICONS)])


@pytest.fixture(scope="session")
def ctd_grounder():
    norm = load_normalization_map(DATA / "normmap" / "chebi_mesh.tsv")
    return Grounder.from_lexicons([load_lexicon(p) for p in lexicon_paths(CTD_LEXICONS)], norm)


@pytest.fixture(scope="session")
def recipe_extractor(recipe_schema, recipe_grounder):
    cassette = Cassette.load(DATA / "cassettes" / "recipe.yaml")
    return Extractor(recipe_schema, Gateway(ReplayBackend(cassette)), recipe_grounder, EngineConfig())


@pytest.fixture(scope="session")
def ctd_extractor(ctd_schema, ctd_grounder):
    cassette = Cassette.load(DATA / "cassettes" / "ctd.yaml")
    return Extractor(ctd_schema, Gateway(ReplayBackend(cassette)), ctd_grounder, EngineConfig())


def replay_gateway(entries: dict[str, str]) -> Gateway:
    return Gateway(ReplayBackend(Cassette(entries=dict(entries))))


class StubServer:
    """Local HTTP server answering POSTs from a queue of (status, json-body) replies."""

    def __init__(self):
        self.replies: deque[tuple[int, object]] = deque()
        self.default: tuple[int, object] | None = None
        self.requests: list[dict] = []
        self.headers: list[dict] = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                stub.requests.append(json.loads(self.rfile.read(length) or b"{}"))
                stub.headers.append(dict(self.headers))
                status, body = stub.replies.popleft() if stub.replies else (stub.default or (500, {"error": "no reply queued"}))
                payload = json.dumps(body).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self._server.server_address[1]}/v1/chat"
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def reply(self, status: int, body: object) -> None:
        self.replies.append((status, body))

    def chat(self, content: str) -> None:
        self.reply(200, {"choices": [{"message": {"role": "assistant", "content": content}}]})

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_server():
    server = StubServer()
    yield server
    server.close()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
