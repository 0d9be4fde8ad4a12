import json

import numpy as np
import pytest
import requests

from wikiforge.errors import (
    EmptyInput,
    MissingVariable,
    MockScriptMiss,
    Timeout,
    TransportFailure,
    WikiforgeError,
)
from wikiforge.gateway import (
    TEMPLATE_VARIABLES,
    BackendConfig,
    ChatRequest,
    HttpChatBackend,
    HttpEmbedBackend,
    MockChatBackend,
    MockEmbedBackend,
    ModelGateway,
    cosine,
    default_routing,
    load_templates,
    mock_script_key,
    render_prompt,
)


def make_gateway(script=None, strict=False, dimension=16, seed=0):
    return ModelGateway(
        MockChatBackend(script=script, strict=strict),
        MockEmbedBackend(dimension=dimension, seed=seed),
    )


# ---------------------------------------------------------------------------
# templates
# ---------------------------------------------------------------------------


def test_every_template_placeholder_set_matches_documentation():
    templates = load_templates()
    assert set(templates) == set(TEMPLATE_VARIABLES)
    # load_templates raises if any placeholder set deviates; spot-check one
    assert "{topic}" in templates["extract"] and "{text}" in templates["extract"]


def test_render_prompt_missing_variable():
    templates = load_templates()
    with pytest.raises(MissingVariable):
        render_prompt(templates["extract"], {"topic": "X"})


def test_chat_missing_variable_via_gateway():
    gw = make_gateway()
    with pytest.raises(MissingVariable):
        gw.chat(ChatRequest("entailer", {"source": "s"}))


def test_unknown_template_rejected():
    gw = make_gateway()
    with pytest.raises(WikiforgeError):
        gw.chat(ChatRequest("nonexistent", {}))


def test_asset_comments_stripped():
    templates = load_templates()
    assert "#:" not in templates["summarizer"]


# ---------------------------------------------------------------------------
# mock chat
# ---------------------------------------------------------------------------


def test_mock_scripted_response_verbatim():
    variables = {"topic": "X", "text": "Facts about X. More on X."}
    script = {mock_script_key("extract", variables): '["fact A","fact B"]'}
    gw = make_gateway(script=script)
    assert gw.chat(ChatRequest("extract", variables)) == '["fact A","fact B"]'


def test_mock_strict_miss():
    gw = make_gateway(strict=True)
    with pytest.raises(MockScriptMiss):
        gw.chat(ChatRequest("entailer", {"source": "s", "claim": "c"}))


def test_mock_script_file(tmp_path):
    variables = {"source": "a", "claim": "b"}
    path = tmp_path / "script.json"
    path.write_text(
        json.dumps({mock_script_key("entailer", variables): "No, never."}),
        encoding="utf-8",
    )
    gw = ModelGateway(MockChatBackend(script=str(path)), MockEmbedBackend(dimension=4))
    assert gw.chat(ChatRequest("entailer", variables)) == "No, never."


def test_mock_default_stream_is_deterministic():
    requests_stream = [
        ChatRequest("extract", {"topic": "Tea", "text": "Tea is old. Tea is hot."}),
        ChatRequest("summarizer", {"topic": "Tea", "text": "Tea is old. Tea is hot. Tea is wet."}),
        ChatRequest("query_maker", {"topic": "Tea", "count": "2"}),
    ]
    out_a = [make_gateway().chat(r) for r in requests_stream]
    out_b = [make_gateway().chat(r) for r in requests_stream]
    assert out_a == out_b


def test_mock_default_extract_offtopic_empty():
    gw = make_gateway()
    out = gw.chat(ChatRequest("extract", {"topic": "Quantum Physics", "text": "Cats sit on warm mats all day."}))
    assert out == "[]"


def test_mock_default_citation_finder_picks_best_overlap():
    gw = make_gateway()
    out = gw.chat(
        ChatRequest(
            "citation_finder",
            {
                "claim": "The stadium holds 60,000 people.",
                "source_list": json.dumps(
                    ["The river is long.", "The stadium holds 60,000 people.", "Cats nap."]
                ),
            },
        )
    )
    assert json.loads(out) == [1]


def test_call_log_records_template_and_variables():
    backend = MockChatBackend()
    gw = ModelGateway(backend, MockEmbedBackend(dimension=4))
    gw.chat(ChatRequest("entailer", {"source": "s", "claim": "c"}))
    assert backend.calls == [("entailer", {"source": "s", "claim": "c"})]


# ---------------------------------------------------------------------------
# http backends
# ---------------------------------------------------------------------------


class _FailingPost:
    def __init__(self, exc):
        self.exc = exc
        self.calls = 0

    def __call__(self, *args, **kwargs):
        self.calls += 1
        raise self.exc


def test_http_retry_contract_transport():
    post = _FailingPost(requests.exceptions.ConnectionError("refused"))
    backend = HttpChatBackend(
        BackendConfig(kind="http", endpoint="http://127.0.0.1:1/v1", model_name="m",
                      retries=2, backoff_base=0.0),
        post=post,
        sleep=lambda _: None,
    )
    with pytest.raises(TransportFailure):
        backend.complete("entailer", "p", {}, "m", 0.0, 1.0)
    assert post.calls == 3  # initial + 2 retries


def test_http_timeout_error():
    post = _FailingPost(requests.exceptions.Timeout("slow"))
    backend = HttpChatBackend(
        BackendConfig(kind="http", endpoint="http://127.0.0.1:1/v1", model_name="m",
                      retries=1, backoff_base=0.0),
        post=post,
        sleep=lambda _: None,
    )
    with pytest.raises(Timeout):
        backend.complete("entailer", "p", {}, "m", 0.0, 1.0)
    assert post.calls == 2


class _Response:
    def __init__(self, payload):
        self.payload = payload

    def raise_for_status(self):
        return None

    def json(self):
        return self.payload


def test_http_chat_reads_first_choice():
    captured = {}

    def post(url, json=None, headers=None, timeout=None):
        captured["payload"] = json
        return _Response({"choices": [{"message": {"content": "hello"}}]})

    backend = HttpChatBackend(
        BackendConfig(kind="http", endpoint="http://x/v1", model_name="m"), post=post
    )
    out = backend.complete("entailer", "the prompt", {}, "strong-model", 0.0, 1.0)
    assert out == "hello"
    assert captured["payload"]["model"] == "strong-model"
    assert captured["payload"]["messages"] == [{"role": "user", "content": "the prompt"}]
    assert captured["payload"]["temperature"] == 0.0
    assert captured["payload"]["top_p"] == 1.0


def test_http_embed_reads_vectors_in_order():
    def post(url, json=None, headers=None, timeout=None):
        return _Response(
            {"data": [{"embedding": [1.0, 0.0]}, {"embedding": [0.0, 1.0]}]}
        )

    backend = HttpEmbedBackend(
        BackendConfig(kind="http", endpoint="http://x/emb", model_name="m"),
        dimension=2,
        post=post,
    )
    vectors = backend.embed(["a", "b"])
    assert np.allclose(vectors[0], [1.0, 0.0])
    assert np.allclose(vectors[1], [0.0, 1.0])


def test_http_config_requires_endpoint_and_model():
    with pytest.raises(WikiforgeError):
        BackendConfig(kind="http", endpoint="", model_name="m")


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------


def test_embed_identical_inputs_identical_vectors():
    gw = make_gateway()
    a, b = gw.embed(["a", "a"])
    assert np.array_equal(a, b)


def test_embed_token_overlap_raises_cosine():
    # the token-hash construction puts overlapping texts closer than
    # disjoint ones; verified numerically before being frozen here
    gw = make_gateway(dimension=64)
    apple, pie, qcd = gw.embed(["red apple", "red apple pie", "quantum chromodynamics"])
    assert cosine(apple, pie) > cosine(apple, qcd)


def test_embed_empty_input():
    gw = make_gateway()
    with pytest.raises(EmptyInput):
        gw.embed([])


def test_embed_dimension_declared():
    gw = make_gateway(dimension=8)
    (v,) = gw.embed(["one text"])
    assert v.shape == (8,)


# ---------------------------------------------------------------------------
# routing
# ---------------------------------------------------------------------------


def test_default_routing_split():
    routing = default_routing("strong", "fast")
    assert routing["section_writer"] == "strong"
    assert routing["outliner"] == "strong"
    assert routing["extract"] == "fast"
    assert routing["entailer"] == "fast"
    assert set(routing) == set(TEMPLATE_VARIABLES)


def test_routing_reaches_backend():
    seen = {}

    class SpyBackend:
        def complete(self, template_id, prompt, variables, model, temperature, top_p):
            seen[template_id] = model
            return "ok"

    gw = ModelGateway(SpyBackend(), MockEmbedBackend(dimension=4),
                      routing=default_routing("big", "small"))
    gw.chat(ChatRequest("section_writer", {"topic": "t", "section_name": "s", "fact_list": "[]"}))
    gw.chat(ChatRequest("entailer", {"source": "s", "claim": "c"}))
    assert seen == {"section_writer": "big", "entailer": "small"}


def test_routing_unknown_template_rejected():
    with pytest.raises(WikiforgeError):
        ModelGateway(MockChatBackend(), MockEmbedBackend(dimension=4),
                     routing={"bogus": "m"})


def test_gateway_bounds_in_flight_concurrency():
    import threading
    import time as _time

    class SlowBackend:
        def __init__(self):
            self.active = 0
            self.peak = 0
            self.lock = threading.Lock()

        def complete(self, template_id, prompt, variables, model, temperature, top_p):
            with self.lock:
                self.active += 1
                self.peak = max(self.peak, self.active)
            _time.sleep(0.01)
            with self.lock:
                self.active -= 1
            return "ok"

    backend = SlowBackend()
    gw = ModelGateway(backend, MockEmbedBackend(dimension=4), max_concurrency=2)

    def call():
        gw.chat(ChatRequest("entailer", {"source": "s", "claim": "c"}))

    threads = [__import__("threading").Thread(target=call) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert backend.peak <= 2
