"""Application configuration: TOML file, environment, and flag precedence.

Settings resolve as flag > environment variable > config file > default. The
recognized environment variables are KNOWLEDGPT_API_KEY, KNOWLEDGPT_PROVIDER,
KNOWLEDGPT_FIXTURES, KNOWLEDGPT_PKB, KNOWLEDGPT_MESSAGE_CAP and
KNOWLEDGPT_RELATION_THRESHOLD.

Config file shape::

    [providers]
    llm = "scripted"            # or "live"
    fixtures = "fixtures/llm"   # scripted responses
    base_url = "https://api.example.com/v1"
    model = "some-model"

    [pkb]
    path = "pkb.jsonl"

    [thresholds]
    relation_threshold = 0.85
    relation_floor = 0.30
    message_cap = 8000

    [routing]
    english = ["mainkb"]
    chinese = ["cndb"]

    [[kb]]
    tag = "mainkb"
    type = "triples_tsv"        # triples_tsv | nlpcc_tsv | remote
    path = "kb.tsv"
    descriptions = "desc.tsv"   # optional
    aliases = "alias.tsv"       # optional
    kbqa_mode = false

    [[kb]]
    tag = "bigkb"
    type = "remote"
    search_url = "https://kb.example/search"
    linking_url = "https://kb.example/link"
    entity_url = "https://kb.example/entity"
    transport = "http"          # or a mock-fixture directory path
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from knowledgpt.kb.base import KbBackend
from knowledgpt.kb.filekb import FileKb, load_file_kb
from knowledgpt.kb.remote import HttpTransport, MockTransport, RemoteKb
from knowledgpt.llm.embeddings import HashEmbedder, RemoteEmbedder
from knowledgpt.llm.gateway import KnowledgeGateway
from knowledgpt.llm.providers import LiveLlm, ScriptedLlm
from knowledgpt.retrieval import RetrievalConfig

DEFAULT_CONFIG_NAME = "knowledgpt.toml"
PKB_TAG = "PKB"


class ConfigError(Exception):
    pass


@dataclass
class KbEntry:
    tag: str
    type: str
    path: str | None = None
    descriptions: str | None = None
    aliases: str | None = None
    kbqa_mode: bool = False
    search_url: str = ""
    linking_url: str = ""
    entity_url: str = ""
    transport: str = "http"  # "http" or a mock-fixture directory


@dataclass
class AppConfig:
    llm_provider: str = "scripted"
    fixtures_dir: str | None = None
    base_url: str = ""
    model: str = ""
    api_key: str = ""
    embedder_kind: str = "hash"
    embedding_dim: int = 256
    pkb_path: str | None = None
    relation_threshold: float = 0.85
    relation_floor: float = 0.30
    message_cap: int = 8000
    routing: dict[str, list[str]] = field(default_factory=dict)
    kbs: list[KbEntry] = field(default_factory=list)

    def retrieval_config(self) -> RetrievalConfig:
        return RetrievalConfig(
            relation_threshold=self.relation_threshold,
            relation_floor=self.relation_floor,
            message_cap=self.message_cap,
        )


def _read_file(path: Path) -> dict:
    try:
        with path.open("rb") as handle:
            return tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc


def load_config(
    path: str | Path | None = None,
    env: dict[str, str] | None = None,
    **overrides,
) -> AppConfig:
    """Resolve the configuration with flag > env > file precedence.

    ``overrides`` are flag-level values; None means "not given".
    """
    env = dict(os.environ if env is None else env)
    config = AppConfig()

    file_path: Path | None = None
    if path is not None:
        file_path = Path(path)
        if not file_path.exists():
            raise ConfigError(f"config file not found: {file_path}")
    elif Path(DEFAULT_CONFIG_NAME).exists():
        file_path = Path(DEFAULT_CONFIG_NAME)

    if file_path is not None:
        data = _read_file(file_path)
        providers = data.get("providers", {})
        config.llm_provider = providers.get("llm", config.llm_provider)
        config.fixtures_dir = providers.get("fixtures", config.fixtures_dir)
        config.base_url = providers.get("base_url", config.base_url)
        config.model = providers.get("model", config.model)
        config.embedder_kind = providers.get("embedder", config.embedder_kind)
        config.embedding_dim = int(providers.get("embedding_dim", config.embedding_dim))
        config.pkb_path = data.get("pkb", {}).get("path", config.pkb_path)
        thresholds = data.get("thresholds", {})
        config.relation_threshold = float(
            thresholds.get("relation_threshold", config.relation_threshold)
        )
        config.relation_floor = float(
            thresholds.get("relation_floor", config.relation_floor)
        )
        config.message_cap = int(thresholds.get("message_cap", config.message_cap))
        config.routing = {
            language: list(tags) for language, tags in data.get("routing", {}).items()
        }
        base = file_path.parent

        def resolve(value: str | None) -> str | None:
            if value is None:
                return None
            candidate = Path(value)
            return str(candidate if candidate.is_absolute() else base / candidate)

        for entry in data.get("kb", []):
            kind = str(entry.get("type", "triples_tsv"))
            if kind == "remote":
                transport = str(entry.get("transport", "http"))
                config.kbs.append(
                    KbEntry(
                        tag=str(entry["tag"]),
                        type=kind,
                        search_url=str(entry.get("search_url", "")),
                        linking_url=str(entry.get("linking_url", "")),
                        entity_url=str(entry.get("entity_url", "")),
                        transport=transport if transport == "http" else resolve(transport),
                    )
                )
            else:
                config.kbs.append(
                    KbEntry(
                        tag=str(entry["tag"]),
                        type=kind,
                        path=resolve(str(entry["path"])),
                        descriptions=resolve(entry.get("descriptions")),
                        aliases=resolve(entry.get("aliases")),
                        kbqa_mode=bool(entry.get("kbqa_mode", False)),
                    )
                )
        if config.fixtures_dir:
            config.fixtures_dir = resolve(config.fixtures_dir)
        if config.pkb_path:
            config.pkb_path = resolve(config.pkb_path)

    if "KNOWLEDGPT_PROVIDER" in env:
        config.llm_provider = env["KNOWLEDGPT_PROVIDER"]
    if "KNOWLEDGPT_FIXTURES" in env:
        config.fixtures_dir = env["KNOWLEDGPT_FIXTURES"]
    if "KNOWLEDGPT_PKB" in env:
        config.pkb_path = env["KNOWLEDGPT_PKB"]
    if "KNOWLEDGPT_MESSAGE_CAP" in env:
        config.message_cap = int(env["KNOWLEDGPT_MESSAGE_CAP"])
    if "KNOWLEDGPT_RELATION_THRESHOLD" in env:
        config.relation_threshold = float(env["KNOWLEDGPT_RELATION_THRESHOLD"])
    config.api_key = env.get("KNOWLEDGPT_API_KEY", config.api_key)

    for name, value in overrides.items():
        if value is not None:
            setattr(config, name, value)

    if not 0.0 <= config.relation_threshold <= 1.0:
        raise ConfigError("relation_threshold must be within [0, 1]")
    if config.message_cap <= 0:
        raise ConfigError("message_cap must be positive")
    return config


def build_gateway(config: AppConfig) -> KnowledgeGateway:
    if config.llm_provider == "scripted":
        if not config.fixtures_dir:
            raise ConfigError("scripted provider needs a fixtures directory")
        fixtures = Path(config.fixtures_dir)
        if not fixtures.is_dir():
            raise ConfigError(f"fixtures directory not found: {fixtures}")
        return KnowledgeGateway(ScriptedLlm(fixtures))
    if config.llm_provider == "live":
        if not config.base_url or not config.model:
            raise ConfigError("live provider needs base_url and model")
        return KnowledgeGateway(
            LiveLlm(config.base_url, config.model, api_key=config.api_key)
        )
    raise ConfigError(f"unknown llm provider {config.llm_provider!r}")


def build_embedder(config: AppConfig):
    if config.embedder_kind == "hash":
        return HashEmbedder(config.embedding_dim)
    if config.embedder_kind == "remote":
        if not config.base_url:
            raise ConfigError("remote embedder needs base_url")
        return RemoteEmbedder(config.base_url, config.model, api_key=config.api_key)
    raise ConfigError(f"unknown embedder {config.embedder_kind!r}")


def build_file_kb(entry: KbEntry) -> FileKb:
    path = Path(entry.path or "")
    if not path.exists():
        raise ConfigError(f"KB file not found: {path}")
    for sidecar in (entry.descriptions, entry.aliases):
        if sidecar is not None and not Path(sidecar).exists():
            raise ConfigError(f"KB sidecar not found: {sidecar}")
    return load_file_kb(
        path,
        format=entry.type,
        kb_tag=entry.tag,
        descriptions_path=entry.descriptions,
        aliases_path=entry.aliases,
        kbqa_mode=entry.kbqa_mode,
    )


def build_backend(entry: KbEntry) -> KbBackend:
    if entry.type != "remote":
        return build_file_kb(entry)
    if not (entry.search_url and entry.linking_url and entry.entity_url):
        raise ConfigError(f"remote KB {entry.tag!r} needs search_url, linking_url and entity_url")
    if entry.transport == "http":
        transport = HttpTransport()
    else:
        fixtures = Path(entry.transport)
        if not fixtures.is_dir():
            raise ConfigError(f"mock transport fixtures not found: {fixtures}")
        transport = MockTransport(fixtures)
    return RemoteKb(
        entry.tag,
        search_url=entry.search_url,
        linking_url=entry.linking_url,
        entity_url=entry.entity_url,
        transport=transport,
    )
