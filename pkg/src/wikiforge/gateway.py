"""Uniform chat-completion and embedding interface with live and mock backends.

All prompt instruction texts live as assets under ``templates/``; a chat call
names a template and supplies its variables, and the gateway renders a single
user message from the asset. Placeholder sets are checked against the
documented variable table at load time, so a drifting asset fails fast.

Two backend families exist per capability:

* ``http`` speaks a chat-completions-compatible wire protocol (and a
  matching embeddings endpoint), retrying transport failures with
  exponential backoff. API keys come from an environment variable only.
* ``mock`` is fully deterministic. Chat responses come from a script keyed
  by ``template_id`` plus a hash of the variables; unscripted requests fall
  back to a documented per-template default behavior (below), or raise in
  strict mode. Embeddings hash tokens into a fixed-dimension vector, so
  equal texts embed equally and token overlap raises cosine similarity.

Mock chat defaults (pure functions of the request variables):

========================  ====================================================
template                  default behavior
========================  ====================================================
extract                   "[]" if no content token of the topic appears in
                          the text; otherwise up to 6 sentences of the text
                          (4..60 words each) as a JSON list
summarizer                first 3 sentences of the fact text joined by spaces
outliner                  a fixed two-line draft ("Overview", "Background")
outline_rewriter          one heading per collected-information line: its
                          first capitalized run not contained in the section
                          title, else "Aspect N"
outline_refiner           the outline lines with duplicates dropped
section_writer            the facts (JSON list input) joined by spaces
section_refiner           the input text unchanged
citation_finder           index of the source with the highest token overlap
                          with the claim, or "[]" when nothing overlaps
entailer                  "Yes" iff >= 60% of claim tokens appear in source
partial_entailer          "Yes" iff >= 30% of claim tokens appear in source
query_maker               JSON list of "<topic> <suffix>" queries from a
                          fixed suffix cycle
subtopic_maker            first 2 multi-word capitalized runs of the summary
                          that share no token with the topic, as a JSON list
========================  ====================================================
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import (
    EmptyInput,
    MissingVariable,
    MockScriptMiss,
    Timeout,
    TransportFailure,
    WikiforgeError,
)
from .textutil import capitalized_runs, content_tokens, segment_sentences, tokenize

# template id -> variables its asset must consume
TEMPLATE_VARIABLES: dict[str, frozenset[str]] = {
    "extract": frozenset({"topic", "text"}),
    "outliner": frozenset({"section_title"}),
    "outline_rewriter": frozenset({"section_title", "information_collected", "current_outline"}),
    "outline_refiner": frozenset({"outline"}),
    "section_writer": frozenset({"topic", "section_name", "fact_list"}),
    "section_refiner": frozenset({"topic", "text"}),
    "citation_finder": frozenset({"claim", "source_list"}),
    "entailer": frozenset({"source", "claim"}),
    "partial_entailer": frozenset({"source", "claim"}),
    "summarizer": frozenset({"topic", "text"}),
    "query_maker": frozenset({"topic", "count"}),
    "subtopic_maker": frozenset({"topic", "summary"}),
}

# Planning and prose templates default to the stronger model; everything else
# runs on the cheaper one. Override per template via GatewayConfig.routing.
STRONG_MODEL_TEMPLATES = frozenset(
    {"outliner", "outline_rewriter", "outline_refiner", "section_writer", "section_refiner"}
)

_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


def load_templates() -> dict[str, str]:
    """Read every prompt asset and assert its placeholders match the
    documented variable set."""
    templates = {}
    root = resources.files("wikiforge").joinpath("templates")
    for template_id, expected in TEMPLATE_VARIABLES.items():
        body = root.joinpath(f"{template_id}.txt").read_text(encoding="utf-8")
        body = "\n".join(l for l in body.split("\n") if not l.startswith("#:"))
        body = body.lstrip("\n")
        found = frozenset(_PLACEHOLDER.findall(body))
        if found != expected:
            raise WikiforgeError(
                f"template {template_id!r}: placeholders {sorted(found)} "
                f"!= documented variables {sorted(expected)}"
            )
        templates[template_id] = body
    return templates


def render_prompt(body: str, variables: dict[str, str]) -> str:
    def _sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in variables:
            raise MissingVariable(name)
        return str(variables[name])

    return _PLACEHOLDER.sub(_sub, body)


@dataclass
class ChatRequest:
    template_id: str
    variables: dict[str, str]
    temperature: float = 0.0
    top_p: float = 1.0


@dataclass
class BackendConfig:
    kind: str = "mock"  # "http" or "mock"
    endpoint: str = ""
    model_name: str = ""
    max_concurrency: int = 4
    timeout: float = 30.0
    retries: int = 2
    seed: int = 0
    api_key_env: str = "WIKIFORGE_API_KEY"
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.kind == "http" and not (self.endpoint and self.model_name):
            raise WikiforgeError("http backend requires endpoint and model_name")


def mock_script_key(template_id: str, variables: dict[str, str]) -> str:
    """Script lookup key: template id plus a short hash of the variables."""
    payload = json.dumps(variables, sort_keys=True, ensure_ascii=False)
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
    return f"{template_id}:{digest}"


# ---------------------------------------------------------------------------
# chat backends
# ---------------------------------------------------------------------------


class HttpChatBackend:
    """Chat-completions wire protocol client with bounded retries.

    POSTs {model, messages, temperature, top_p} and reads the first choice's
    message content. Transport failures and timeouts are retried up to
    ``config.retries`` times with exponential backoff; the final failure is
    re-raised as TransportFailure or Timeout.
    """

    def __init__(self, config: BackendConfig, post=None, sleep=time.sleep):
        import requests  # deferred so mock-only runs never need it

        self._requests = requests
        self.config = config
        self._post = post or requests.post
        self._sleep = sleep

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, template_id, prompt, variables, model, temperature, top_p) -> str:
        payload = {
            "model": model or self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "top_p": top_p,
        }
        last_exc: Exception | None = None
        timed_out = False
        for attempt in range(self.config.retries + 1):
            if attempt:
                self._sleep(self.config.backoff_base * 2 ** (attempt - 1))
            try:
                response = self._post(
                    self.config.endpoint,
                    json=payload,
                    headers=self._headers(),
                    timeout=self.config.timeout,
                )
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except self._requests.exceptions.Timeout as exc:
                last_exc, timed_out = exc, True
            except (self._requests.exceptions.RequestException, OSError) as exc:
                last_exc, timed_out = exc, False
            except (KeyError, IndexError, ValueError) as exc:
                raise TransportFailure(f"malformed completion response: {exc}") from exc
        if timed_out:
            raise Timeout(f"chat request timed out after {self.config.retries + 1} attempts")
        raise TransportFailure(
            f"chat request failed after {self.config.retries + 1} attempts: {last_exc}"
        ) from last_exc


class MockChatBackend:
    """Deterministic chat backend: scripted responses with documented
    per-template fallbacks (see module docstring).

    `script` maps ``mock_script_key(template_id, variables)`` -> response;
    a path to a JSON file with that mapping is also accepted. In strict mode
    an unscripted request raises MockScriptMiss instead of falling back.
    """

    QUERY_SUFFIXES = ("history", "highlights", "background", "details", "timeline")

    def __init__(self, script: dict[str, str] | str | None = None, strict: bool = False):
        if isinstance(script, (str, os.PathLike)):
            with open(script, "r", encoding="utf-8") as fh:
                script = json.load(fh)
        self.script: dict[str, str] = dict(script or {})
        self.strict = strict
        self.calls: list[tuple[str, dict[str, str]]] = []

    def complete(self, template_id, prompt, variables, model, temperature, top_p) -> str:
        self.calls.append((template_id, dict(variables)))
        key = mock_script_key(template_id, variables)
        if key in self.script:
            return self.script[key]
        if self.strict:
            raise MockScriptMiss(f"no scripted response for {key} ({template_id})")
        return self._default(template_id, variables)

    # -- documented default behaviors ---------------------------------------

    def _default(self, template_id: str, v: dict[str, str]) -> str:
        if template_id == "extract":
            return self._extract(v["topic"], v["text"])
        if template_id == "summarizer":
            return " ".join(segment_sentences(v["text"])[:3])
        if template_id == "outliner":
            return "Overview\nBackground"
        if template_id == "outline_rewriter":
            return self._rewrite_outline(v["section_title"], v["information_collected"])
        if template_id == "outline_refiner":
            return self._dedup_lines(v["outline"])
        if template_id == "section_writer":
            return self._write_section(v["fact_list"])
        if template_id == "section_refiner":
            return v["text"]
        if template_id == "citation_finder":
            return self._find_citation(v["claim"], v["source_list"])
        if template_id == "entailer":
            return self._entail(v["source"], v["claim"], 0.6)
        if template_id == "partial_entailer":
            return self._entail(v["source"], v["claim"], 0.3)
        if template_id == "query_maker":
            count = int(v["count"])
            queries = [f"{v['topic']} {s}" for s in self.QUERY_SUFFIXES[:count]]
            return json.dumps(queries)
        if template_id == "subtopic_maker":
            return self._subtopics(v["topic"], v["summary"])
        raise MockScriptMiss(f"no default behavior for template {template_id!r}")

    @staticmethod
    def _extract(topic: str, text: str) -> str:
        if not (content_tokens(topic) & set(tokenize(text))):
            return "[]"
        facts = [s for s in segment_sentences(text) if 4 <= len(s.split()) <= 60]
        return json.dumps(facts[:6], ensure_ascii=False)

    @staticmethod
    def _rewrite_outline(section_title: str, information_collected: str) -> str:
        title_cf = section_title.casefold()
        lines = [l for l in information_collected.split("\n") if l.strip()]
        headings = []
        for line in lines:
            multiword = [
                r
                for r in capitalized_runs(line, min_tokens=2)
                if r.casefold() not in title_cf
            ]
            if multiword:
                headings.append(multiword[0])
        if not headings:
            headings = [f"Aspect {i + 1}" for i in range(len(lines))]
        seen, out = set(), []
        for h in headings:
            if h.casefold() not in seen:
                seen.add(h.casefold())
                out.append(h)
        return "\n".join(out)

    @staticmethod
    def _dedup_lines(outline: str) -> str:
        seen, out = set(), []
        for line in outline.split("\n"):
            if line.strip() and line.strip().casefold() not in seen:
                seen.add(line.strip().casefold())
                out.append(line.strip())
        return "\n".join(out)

    @staticmethod
    def _write_section(fact_list: str) -> str:
        try:
            facts = json.loads(fact_list)
        except json.JSONDecodeError:
            return fact_list
        return " ".join(str(f) for f in facts)

    @staticmethod
    def _find_citation(claim: str, source_list: str) -> str:
        try:
            sources = json.loads(source_list)
        except json.JSONDecodeError:
            sources = [l for l in source_list.split("\n") if l.strip()]
        claim_tokens = set(tokenize(claim))
        if not claim_tokens or not sources:
            return "[]"
        overlaps = [
            len(claim_tokens & set(tokenize(str(s)))) / len(claim_tokens) for s in sources
        ]
        best = max(range(len(sources)), key=lambda i: (overlaps[i], -i))
        return json.dumps([best]) if overlaps[best] > 0 else "[]"

    @staticmethod
    def _entail(source: str, claim: str, threshold: float) -> str:
        claim_tokens = set(tokenize(claim))
        if not claim_tokens:
            return "No"
        overlap = len(claim_tokens & set(tokenize(source))) / len(claim_tokens)
        return "Yes" if overlap >= threshold else "No"

    @staticmethod
    def _subtopics(topic: str, summary: str) -> str:
        topic_tokens = set(tokenize(topic))
        picks = []
        for run in capitalized_runs(summary, min_tokens=2):
            if not (set(tokenize(run)) & topic_tokens):
                picks.append(run)
            if len(picks) == 2:
                break
        return json.dumps(picks, ensure_ascii=False)


# ---------------------------------------------------------------------------
# embedding backends
# ---------------------------------------------------------------------------


class HttpEmbedBackend:
    """Embeddings endpoint client: POST {model, input}, vectors returned in
    input order."""

    def __init__(self, config: BackendConfig, dimension: int | None = None, post=None,
                 sleep=time.sleep):
        import requests

        self._requests = requests
        self.config = config
        self.dimension = dimension
        self._post = post or requests.post
        self._sleep = sleep

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        payload = {"model": self.config.model_name, "input": list(texts)}
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last_exc: Exception | None = None
        timed_out = False
        for attempt in range(self.config.retries + 1):
            if attempt:
                self._sleep(self.config.backoff_base * 2 ** (attempt - 1))
            try:
                response = self._post(
                    self.config.endpoint, json=payload, headers=headers,
                    timeout=self.config.timeout,
                )
                response.raise_for_status()
                data = response.json()["data"]
                return [np.asarray(row["embedding"], dtype=float) for row in data]
            except self._requests.exceptions.Timeout as exc:
                last_exc, timed_out = exc, True
            except (self._requests.exceptions.RequestException, OSError) as exc:
                last_exc, timed_out = exc, False
            except (KeyError, ValueError, TypeError) as exc:
                raise TransportFailure(f"malformed embedding response: {exc}") from exc
        if timed_out:
            raise Timeout(f"embed request timed out after {self.config.retries + 1} attempts")
        raise TransportFailure(
            f"embed request failed after {self.config.retries + 1} attempts: {last_exc}"
        ) from last_exc


class MockEmbedBackend:
    """Token-hash embeddings: every token owns a fixed pseudo-random unit
    vector (seeded by the token and the backend seed); a text embeds as the
    normalized sum over its token multiset.

    Equal texts embed identically, and texts sharing tokens land closer in
    cosine than disjoint ones.
    """

    def __init__(self, dimension: int = 64, seed: int = 0):
        self.dimension = dimension
        self.seed = seed
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            digest = hashlib.sha256(f"{self.seed}:{token}".encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
            vec = rng.standard_normal(self.dimension)
            vec /= np.linalg.norm(vec)
            self._token_cache[token] = vec
        return vec

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            tokens = tokenize(text) or ["<empty>"]
            vec = np.sum([self._token_vector(t) for t in tokens], axis=0)
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec = vec / norm
            out.append(vec)
        return out


# ---------------------------------------------------------------------------
# gateway
# ---------------------------------------------------------------------------


def default_routing(strong_model: str, fast_model: str) -> dict[str, str]:
    """Per-template model table: planning/prose on the strong model, the
    rest on the fast one."""
    return {
        t: (strong_model if t in STRONG_MODEL_TEMPLATES else fast_model)
        for t in TEMPLATE_VARIABLES
    }


class ModelGateway:
    """Routes chat/embed calls to configured backends under one in-flight
    concurrency bound. Thread-safe."""

    def __init__(self, chat_backend, embed_backend, routing: dict[str, str] | None = None,
                 max_concurrency: int = 4):
        self.templates = load_templates()
        self.chat_backend = chat_backend
        self.embed_backend = embed_backend
        self.routing = dict(routing or {})
        unknown = set(self.routing) - set(TEMPLATE_VARIABLES)
        if unknown:
            raise WikiforgeError(f"routing names unknown templates: {sorted(unknown)}")
        self._sem = threading.BoundedSemaphore(max_concurrency)

    def chat(self, request: ChatRequest) -> str:
        if request.template_id not in self.templates:
            raise WikiforgeError(f"unknown template {request.template_id!r}")
        prompt = render_prompt(self.templates[request.template_id], request.variables)
        model = self.routing.get(request.template_id, "")
        with self._sem:
            return self.chat_backend.complete(
                request.template_id,
                prompt,
                request.variables,
                model,
                request.temperature,
                request.top_p,
            )

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        if not texts:
            raise EmptyInput("embed() requires at least one text")
        with self._sem:
            vectors = self.embed_backend.embed(list(texts))
        if len(vectors) != len(texts):
            raise TransportFailure(
                f"embedding backend returned {len(vectors)} vectors for {len(texts)} texts"
            )
        dims = {v.shape for v in vectors}
        if len(dims) > 1:
            raise TransportFailure(f"inconsistent embedding dimensions: {dims}")
        declared = getattr(self.embed_backend, "dimension", None)
        if declared and vectors and vectors[0].shape != (declared,):
            raise TransportFailure(
                f"embedding dimension {vectors[0].shape} != configured {declared}"
            )
        return vectors

    @property
    def dimension(self) -> int | None:
        return getattr(self.embed_backend, "dimension", None)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero vectors compare as 0."""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
