"""Pipeline configuration: one YAML/JSON file validated against a fixed
schema. Unknown keys are rejected with their dotted location. Relative paths
resolve against the config file's directory. Secrets never live in the file;
backends read API keys from the environment variables the config names.

A single top-level `seed` feeds every source of randomness (K-Means init and
the mock embedder), so runs are reproducible end to end.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .acquisition import (
    ExplorationBudget,
    ExtractionConfig,
    FixtureFetcher,
    FixtureSearch,
    HttpFetcher,
    HttpSearch,
)
from .errors import ConfigError
from .gateway import (
    BackendConfig,
    HttpChatBackend,
    HttpEmbedBackend,
    MockChatBackend,
    MockEmbedBackend,
    ModelGateway,
    default_routing,
)
from .organization import OrganizeConfig


@dataclass
class ChatBackendSection:
    kind: str = "mock"
    endpoint: str = ""
    model_name: str = ""
    strong_model: str = ""
    fast_model: str = ""
    routing: dict = field(default_factory=dict)
    max_concurrency: int = 4
    timeout: float = 30.0
    retries: int = 2
    api_key_env: str = "WIKIFORGE_API_KEY"
    script: str | None = None
    strict: bool = False


@dataclass
class EmbedBackendSection:
    kind: str = "mock"
    endpoint: str = ""
    model_name: str = ""
    dimension: int = 64
    timeout: float = 30.0
    retries: int = 2
    api_key_env: str = "WIKIFORGE_API_KEY"


@dataclass
class SearchBackendSection:
    kind: str = "fixture"
    directory: str = ""
    endpoint: str = ""
    timeout: float = 30.0
    api_key_env: str = "WIKIFORGE_SEARCH_KEY"


@dataclass
class FetchBackendSection:
    kind: str = "fixture"
    page_map: str = ""
    timeout: float = 30.0


@dataclass
class OrganizationSection:
    recursion_threshold: int = 12
    max_outline_depth: int = 3
    kmeans_k: int | None = None


@dataclass
class EvaluationSection:
    entity_mentions_candidate: str | None = None
    entity_mentions_reference: str | None = None
    numeral_mentions_candidate: str | None = None
    numeral_mentions_reference: str | None = None


@dataclass
class PipelineConfig:
    seed: int = 0
    budgets: ExplorationBudget = field(default_factory=ExplorationBudget)
    organization: OrganizationSection = field(default_factory=OrganizationSection)
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    chat_backend: ChatBackendSection = field(default_factory=ChatBackendSection)
    embed_backend: EmbedBackendSection = field(default_factory=EmbedBackendSection)
    search_backend: SearchBackendSection = field(default_factory=SearchBackendSection)
    fetch_backend: FetchBackendSection = field(default_factory=FetchBackendSection)
    evaluation: EvaluationSection = field(default_factory=EvaluationSection)
    base_dir: Path = field(default_factory=Path)

    def resolve(self, path_str: str) -> Path:
        path = Path(path_str)
        return path if path.is_absolute() else self.base_dir / path


def _build_section(cls, data, location):
    if not isinstance(data, dict):
        raise ConfigError(f"{location}: expected a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"{location}.{key}: unknown key")
        target = known[key].type
        if dataclasses.is_dataclass(value.__class__):
            kwargs[key] = value
        elif isinstance(value, dict) and target not in ("dict", dict):
            raise ConfigError(f"{location}.{key}: unexpected mapping")
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{location}: {exc}") from exc


_SECTION_TYPES = {
    "budgets": ExplorationBudget,
    "organization": OrganizationSection,
    "extraction": ExtractionConfig,
    "chat_backend": ChatBackendSection,
    "embed_backend": EmbedBackendSection,
    "search_backend": SearchBackendSection,
    "fetch_backend": FetchBackendSection,
    "evaluation": EvaluationSection,
}


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    cfg = PipelineConfig(base_dir=path.resolve().parent)
    for key, value in raw.items():
        if key == "seed":
            if not isinstance(value, int):
                raise ConfigError("seed: must be an integer")
            cfg.seed = value
        elif key in _SECTION_TYPES:
            setattr(cfg, key, _build_section(_SECTION_TYPES[key], value, key))
        else:
            raise ConfigError(f"{key}: unknown key")
    return cfg


# ---------------------------------------------------------------------------
# component builders
# ---------------------------------------------------------------------------


def build_gateway(cfg: PipelineConfig) -> ModelGateway:
    chat = cfg.chat_backend
    if chat.kind == "mock":
        script = str(cfg.resolve(chat.script)) if chat.script else None
        chat_backend = MockChatBackend(script=script, strict=chat.strict)
    elif chat.kind == "http":
        chat_backend = HttpChatBackend(
            BackendConfig(
                kind="http",
                endpoint=chat.endpoint,
                model_name=chat.model_name or chat.fast_model,
                max_concurrency=chat.max_concurrency,
                timeout=chat.timeout,
                retries=chat.retries,
                seed=cfg.seed,
                api_key_env=chat.api_key_env,
            )
        )
    else:
        raise ConfigError(f"chat_backend.kind: unknown kind {chat.kind!r}")

    embed = cfg.embed_backend
    if embed.kind == "mock":
        embed_backend = MockEmbedBackend(dimension=embed.dimension, seed=cfg.seed)
    elif embed.kind == "http":
        embed_backend = HttpEmbedBackend(
            BackendConfig(
                kind="http",
                endpoint=embed.endpoint,
                model_name=embed.model_name,
                timeout=embed.timeout,
                retries=embed.retries,
                seed=cfg.seed,
                api_key_env=embed.api_key_env,
            ),
            dimension=embed.dimension,
        )
    else:
        raise ConfigError(f"embed_backend.kind: unknown kind {embed.kind!r}")

    routing = {}
    if chat.strong_model and chat.fast_model:
        routing = default_routing(chat.strong_model, chat.fast_model)
    routing.update(chat.routing)
    return ModelGateway(
        chat_backend, embed_backend, routing=routing,
        max_concurrency=chat.max_concurrency,
    )


def build_search(cfg: PipelineConfig):
    search = cfg.search_backend
    if search.kind == "fixture":
        if not search.directory:
            raise ConfigError("search_backend.directory: required for fixture kind")
        return FixtureSearch(cfg.resolve(search.directory))
    if search.kind == "http":
        if not search.endpoint:
            raise ConfigError("search_backend.endpoint: required for http kind")
        return HttpSearch(search.endpoint, api_key_env=search.api_key_env,
                          timeout=search.timeout)
    raise ConfigError(f"search_backend.kind: unknown kind {search.kind!r}")


def build_fetcher(cfg: PipelineConfig):
    fetch = cfg.fetch_backend
    if fetch.kind == "fixture":
        if not fetch.page_map:
            raise ConfigError("fetch_backend.page_map: required for fixture kind")
        return FixtureFetcher(cfg.resolve(fetch.page_map),
                              char_cap=cfg.extraction.fetch_char_cap)
    if fetch.kind == "http":
        return HttpFetcher(char_cap=cfg.extraction.fetch_char_cap, timeout=fetch.timeout)
    raise ConfigError(f"fetch_backend.kind: unknown kind {fetch.kind!r}")


def build_organize_config(cfg: PipelineConfig) -> OrganizeConfig:
    return OrganizeConfig(
        recursion_threshold=cfg.organization.recursion_threshold,
        max_outline_depth=cfg.organization.max_outline_depth,
        kmeans_seed=cfg.seed,
        fixed_k=cfg.organization.kmeans_k,
    )


def build_recognizer(cfg: PipelineConfig):
    from .evaluation import FileMentionRecognizer, RuleBasedRecognizer

    ev = cfg.evaluation
    paths = [
        ev.entity_mentions_candidate,
        ev.entity_mentions_reference,
        ev.numeral_mentions_candidate,
        ev.numeral_mentions_reference,
    ]
    if not any(paths):
        return RuleBasedRecognizer()

    def _load(path_str):
        if not path_str:
            return []
        text = cfg.resolve(path_str).read_text(encoding="utf-8")
        return [l.strip() for l in text.splitlines() if l.strip()]

    return FileMentionRecognizer(
        entity_mentions={
            "candidate": _load(ev.entity_mentions_candidate),
            "reference": _load(ev.entity_mentions_reference),
        },
        numeral_mentions={
            "candidate": _load(ev.numeral_mentions_candidate),
            "reference": _load(ev.numeral_mentions_reference),
        },
    )
