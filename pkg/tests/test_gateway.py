from __future__ import annotations

import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spires.gateway import (
    Cassette,
    CassetteError,
    Completion,
    CompletionRequest,
    Gateway,
    HttpBackend,
    RateLimitError,
    RecordingBackend,
    ReplayBackend,
    ReplayMiss,
    TokenBucket,
    TransportError,
    complete,
    record,
)
from spires.prompt import Prompt, generate_prompt


def req(text: str = "hello", **kw) -> CompletionRequest:
    return CompletionRequest(Prompt.from_text(text, "X"), **kw)


def test_garlic_replay(recipe_schema, data):
    cassette = Cassette.load(data / "cassettes" / "recipe.yaml")
    p = generate_prompt(recipe_schema, "Ingredient", "garlic powder (2 tablespoons)")
    c = complete(CompletionRequest(p), Gateway(ReplayBackend(cassette)))
    assert c.text == "food_item: garlic powder\namount: 2 tablespoons"
    assert c.backend == "replay"


def test_empty_cassette_misses():
    r = req()
    with pytest.raises(ReplayMiss) as err:
        Gateway(ReplayBackend(Cassette())).complete(r)
    assert err.value.digest == r.prompt.input_digest
    assert r.prompt.input_digest in str(err.value)


def test_replay_miss_is_not_retried():
    calls = []

    class Counting(ReplayBackend):
        def complete(self, r):
            calls.append(1)
            return super().complete(r)

    with pytest.raises(ReplayMiss):
        Gateway(Counting(Cassette()), sleep=lambda s: None).complete(req())
    assert len(calls) == 1


def test_record_then_replay():
    cassette = Cassette()
    r = req("p1")
    record(r, Completion("answer", "http"), cassette)
    assert Gateway(ReplayBackend(cassette)).complete(r).text == "answer"
    record(req("p2"), Completion("other", "http"), cassette)
    assert len(cassette) == 2
    record(r, Completion("answer v2", "http"), cassette)
    assert len(cassette) == 2
    assert cassette.lookup(r.prompt.input_digest) == "answer v2"


def test_trailing_newline_normalized():
    r = req()
    cassette = Cassette(entries={r.prompt.input_digest: "a: b\n\n"})
    assert Gateway(ReplayBackend(cassette)).complete(r).text == "a: b"


def test_truncation_is_flagged(caplog):
    r = req(max_output_chars=5)
    cassette = Cassette(entries={r.prompt.input_digest: "0123456789"})
    c = Gateway(ReplayBackend(cassette)).complete(r)
    assert c.text == "01234" and c.truncated
    assert "truncated" in caplog.text


def test_temperature_bounds():
    assert req().temperature == 0
    with pytest.raises(ValueError):
        req(temperature=2.5)
    with pytest.raises(ValueError):
        req(max_output_chars=0)


def test_cassette_file_round_trip(tmp_path):
    cassette = Cassette(model_id="m", created_at="2026-01-01T00:00:00+00:00")
    cassette.put(Prompt.from_text("one", "X"), "line 1\nline 2")
    cassette.put(Prompt.from_text("two", "X"), "  leading space")
    cassette.put(Prompt.from_text("three", "X"), "")
    path = cassette.save(tmp_path / "c.yaml")
    text = path.read_text()
    assert text.startswith("metadata:\n  model_id: m\n")
    assert "|-" in text
    back = Cassette.load(path)
    assert back.entries == cassette.entries
    assert back.prompts == cassette.prompts
    assert (back.model_id, back.created_at) == ("m", "2026-01-01T00:00:00+00:00")


completions = st.text(st.characters(blacklist_categories=("Cs",)), max_size=80)


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.text(max_size=20), completions, max_size=5))
def test_cassette_text_round_trip(pairs):
    cassette = Cassette()
    for prompt, text in pairs.items():
        cassette.put(Prompt.from_text(prompt, "X"), text)
    back = Cassette.loads(cassette.dumps())
    assert back.entries == cassette.entries
    assert back.prompts == cassette.prompts


def test_cassette_rejects_bad_keys():
    with pytest.raises(CassetteError):
        Cassette.loads("metadata: {}\nnot-a-digest: x\n")
    with pytest.raises(CassetteError):
        Cassette.loads("- a list\n")


def test_missing_ok(tmp_path):
    c = Cassette.load(tmp_path / "new.yaml", missing_ok=True)
    assert len(c) == 0 and c.path == tmp_path / "new.yaml"


@settings(max_examples=50, deadline=None)
@given(st.text(min_size=1, max_size=50), completions)
def test_replay_is_byte_stable(prompt, text):
    r = req(prompt)
    g = Gateway(ReplayBackend(Cassette(entries={r.prompt.input_digest: text})))
    first = g.complete(r)
    assert all(g.complete(r).text == first.text for _ in range(3))
    assert r.prompt.text == prompt


# --- HTTP backend against the stub server ---------------------------------------


def test_http_backend_reads_message_content(stub_server):
    stub_server.chat("food_item: garlic powder")
    backend = HttpBackend(stub_server.url, "secret")
    c = Gateway(backend).complete(req("the prompt", model_id="m-1", temperature=0.5))
    assert c.text == "food_item: garlic powder"
    assert c.backend == "http"
    body = stub_server.requests[0]
    assert body == {"model": "m-1", "temperature": 0.5, "messages": [{"role": "user", "content": "the prompt"}]}
    assert stub_server.headers[0]["Authorization"] == "Bearer secret"


def test_http_custom_auth_header(stub_server):
    stub_server.chat("ok")
    Gateway(HttpBackend(stub_server.url, "k", auth_header="api-key", auth_scheme="")).complete(req())
    assert stub_server.headers[0]["api-key"] == "k"


def test_http_retries_429_then_succeeds(stub_server):
    sleeps = []
    stub_server.reply(429, {})
    stub_server.reply(429, {})
    stub_server.chat("third time")
    c = Gateway(HttpBackend(stub_server.url), sleep=sleeps.append, backoff_seconds=0.5).complete(req())
    assert c.text == "third time"
    assert sleeps == [0.5, 1.0]
    assert len(stub_server.requests) == 3


def test_http_rate_limit_budget_exhausted(stub_server):
    stub_server.default = (429, {})
    with pytest.raises(RateLimitError):
        Gateway(HttpBackend(stub_server.url), sleep=lambda s: None).complete(req())
    assert len(stub_server.requests) == 3


def test_http_server_error_not_retried(stub_server):
    stub_server.default = (500, {"error": "boom"})
    with pytest.raises(TransportError, match="HTTP 500"):
        Gateway(HttpBackend(stub_server.url), sleep=lambda s: None).complete(req())
    assert len(stub_server.requests) == 1


def test_http_bad_shape(stub_server):
    stub_server.reply(200, {"unexpected": True})
    with pytest.raises(TransportError, match="response shape"):
        Gateway(HttpBackend(stub_server.url)).complete(req())


def test_http_connection_refused_retries():
    sleeps = []
    with pytest.raises(TransportError):
        Gateway(HttpBackend("http://127.0.0.1:9/nothing", timeout=1), sleep=sleeps.append).complete(req())
    assert len(sleeps) == 2


def test_http_needs_endpoint(monkeypatch):
    monkeypatch.delenv("SPIRES_LLM_ENDPOINT", raising=False)
    with pytest.raises(Exception, match="SPIRES_LLM_ENDPOINT"):
        HttpBackend.from_env()


def test_http_from_env(monkeypatch, stub_server):
    monkeypatch.setenv("SPIRES_LLM_ENDPOINT", stub_server.url)
    monkeypatch.setenv("SPIRES_LLM_KEY", "envkey")
    stub_server.chat("x")
    Gateway(HttpBackend.from_env()).complete(req())
    assert stub_server.headers[0]["Authorization"] == "Bearer envkey"


def test_recording_backend_persists(stub_server, tmp_path):
    stub_server.chat("recorded\n")
    cassette = Cassette(path=tmp_path / "rec.yaml")
    r = req("to record")
    c = Gateway(RecordingBackend(HttpBackend(stub_server.url), cassette)).complete(r)
    assert c.text == "recorded"
    assert Cassette.load(tmp_path / "rec.yaml").lookup(r.prompt.input_digest) == "recorded"


# --- rate limiting ------------------------------------------------------------


class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.slept: list[float] = []

    def __call__(self) -> float:
        return self.now

    def sleep(self, s: float) -> None:
        self.slept.append(s)
        self.now += s


def test_token_bucket_waits_when_empty():
    clock = FakeClock()
    bucket = TokenBucket(capacity=2, refill_per_second=4, clock=clock, sleep=clock.sleep)
    for _ in range(2):
        bucket.acquire()
    assert clock.slept == []
    bucket.acquire()
    assert clock.slept == [pytest.approx(0.25)]


def test_token_bucket_refills_to_capacity():
    clock = FakeClock()
    bucket = TokenBucket(capacity=3, refill_per_second=1, clock=clock, sleep=clock.sleep)
    clock.now = 100.0
    for _ in range(3):
        bucket.acquire()
    assert clock.slept == []


def test_token_bucket_validates():
    with pytest.raises(ValueError):
        TokenBucket(capacity=0)


def test_limiter_is_not_consulted_for_replay():
    class Exploding:
        def acquire(self):
            raise AssertionError("replay must not wait on the rate limiter")

    r = req()
    Gateway(ReplayBackend(Cassette(entries={r.prompt.input_digest: "x"})), limiter=Exploding()).complete(r)


def test_concurrent_puts_are_serialized():
    cassette = Cassette()

    def worker(n):
        for i in range(50):
            cassette.put(Prompt.from_text(f"{n}-{i}", "X"), str(i))

    threads = [threading.Thread(target=worker, args=(n,)) for n in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(cassette) == 400
    assert len(Cassette.loads(cassette.dumps())) == 400
