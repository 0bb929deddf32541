"""The writable personal knowledge base: extraction ingestion, persistence, and reads.

Extraction output is appended verbatim: a newly extracted mention is never
merged with entities already in the store, so the same real-world entity may
exist under several ids, and lookups return every match. Each entity keeps the
alias list it was extracted with.

Persistence is UTF-8 line-delimited JSON, one tagged object per line::

    {"kind": "entity", "id": "e1", "aliases": ["Socrates"]}
    {"kind": "description", "entity": "e1", "text": "...", "source": "..."}
    {"kind": "triple", "entity": "e1", "relation": "...", "tail": "...", "source": "..."}
    {"kind": "aspect", "entity": "e1", "aspect": "...", "text": "...", "source": "..."}

Embeddings are not persisted; the index is rebuilt deterministically on demand.
Writers take an exclusive lock; reads are lock-free (single-writer, multi-reader).
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path

from knowledgpt.kb.base import EntityCandidate, EntityInfo, KbBackend
from knowledgpt.llm.embeddings import EmbeddingProvider, cosine
from knowledgpt.llm.gateway import ExtractedRecord, KnowledgeGateway
from knowledgpt.model import (
    AliasList,
    AspectRecord,
    Description,
    EntityId,
    KnowledgeRecord,
    Query,
    Triple,
)

DEFAULT_KB_TAG = "PKB"

#: Cosine floor for counting a stored name as matching a queried alias.
EMBEDDING_MATCH_THRESHOLD = 0.80


class CorruptStore(Exception):
    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class PkbStore:
    def __init__(self, path: str | Path | None = None, kb_tag: str = DEFAULT_KB_TAG) -> None:
        self.path = Path(path) if path is not None else None
        self.kb_tag = kb_tag
        self.records: list[KnowledgeRecord] = []
        self.registry: dict[EntityId, AliasList] = {}
        self._vectors: dict[str, tuple[float, ...]] = {}
        self._write_lock = threading.Lock()

    def __eq__(self, other) -> bool:
        if not isinstance(other, PkbStore):
            return NotImplemented
        return self.records == other.records and self.registry == other.registry

    def record_id(self, index: int) -> str:
        return f"r{index + 1}"

    def _next_entity_id(self) -> EntityId:
        return EntityId(self.kb_tag, f"e{len(self.registry) + 1}")

    def register_entity(self, aliases: AliasList) -> EntityId:
        entity = self._next_entity_id()
        self.registry[entity] = aliases
        return entity

    def name_vector(self, name: str, embedder: EmbeddingProvider) -> tuple[float, ...]:
        vector = self._vectors.get(name)
        if vector is None:
            vector = tuple(embedder.embed(name))
            self._vectors[name] = vector
        return vector


def _doc_tag(document: str) -> str:
    return hashlib.sha256(document.encode("utf-8")).hexdigest()[:12]


def _to_knowledge(record: ExtractedRecord, entity: EntityId, source: str) -> KnowledgeRecord:
    if record.kind == "description":
        return KnowledgeRecord(Description(entity, record.text), source_doc=source)
    if record.kind == "triple":
        return KnowledgeRecord(Triple(entity, record.relation, record.tail), source_doc=source)
    return KnowledgeRecord(AspectRecord(entity, record.aspect, record.text), source_doc=source)


def store_document(
    document: str,
    store: PkbStore,
    gateway: KnowledgeGateway,
    embedder: EmbeddingProvider | None = None,
) -> list[str]:
    """Extract knowledge from the document and append it to the store.

    Mentions are kept distinct from anything already stored; each distinct
    alias list within this document becomes a fresh entity. The new state is
    persisted atomically before the in-memory store is touched, so a failed
    write leaves the store unchanged. Returns the new record ids.
    """
    if not document:
        raise ValueError("document must be non-empty")
    extracted = gateway.extract_knowledge(document)
    source = _doc_tag(document)
    with store._write_lock:
        new_entities: dict[AliasList, EntityId] = {}
        new_records: list[KnowledgeRecord] = []
        next_entity = len(store.registry)
        for record in extracted:
            entity = new_entities.get(record.entity_aliases)
            if entity is None:
                next_entity += 1
                entity = EntityId(store.kb_tag, f"e{next_entity}")
                new_entities[record.entity_aliases] = entity
            new_records.append(_to_knowledge(record, entity, source))
        if store.path is not None:
            _write_file(
                store.path,
                list(store.registry.items())
                + [(entity, aliases) for aliases, entity in new_entities.items()],
                store.records + new_records,
            )
        first = len(store.records)
        for aliases, entity in new_entities.items():
            store.registry[entity] = aliases
        store.records.extend(new_records)
        if embedder is not None:
            for aliases in new_entities:
                for alias in aliases:
                    store.name_vector(alias, embedder)
        return [store.record_id(i) for i in range(first, len(store.records))]


def pkb_entity_linking(
    query: Query,
    aliases: AliasList,
    store: PkbStore,
    embedder: EmbeddingProvider,
    threshold: float = EMBEDDING_MATCH_THRESHOLD,
) -> list[EntityCandidate]:
    """Every stored entity matching the aliases exactly, case-folded, or by embedding.

    All matches are returned (the store may hold several mentions of one
    real-world entity); disambiguation happens later, with each candidate
    carrying its stored alias list.
    """
    folded_query = {a.casefold() for a in aliases}
    exact: list[EntityId] = []
    fuzzy: list[EntityId] = []
    for entity, stored in store.registry.items():
        if any(s.casefold() in folded_query for s in stored):
            exact.append(entity)
            continue
        query_vectors = [store.name_vector(a, embedder) for a in aliases]
        hit = False
        for name in stored:
            name_vector = store.name_vector(name, embedder)
            if any(cosine(qv, name_vector) >= threshold for qv in query_vectors):
                hit = True
                break
        if hit:
            fuzzy.append(entity)
    return [
        EntityCandidate(
            entity=entity,
            display_name=store.registry[entity].preferred,
            aliases=store.registry[entity].aliases,
        )
        for entity in exact + fuzzy
    ]


# -- persistence --------------------------------------------------------------


def _record_line(entity_ids: dict[EntityId, str], record: KnowledgeRecord) -> dict:
    body = record.body
    if isinstance(body, Description):
        return {
            "kind": "description",
            "entity": entity_ids[body.entity],
            "text": body.text,
            "source": record.source_doc,
        }
    if isinstance(body, Triple):
        return {
            "kind": "triple",
            "entity": entity_ids[body.head],
            "relation": body.relation,
            "tail": body.tail,
            "source": record.source_doc,
        }
    return {
        "kind": "aspect",
        "entity": entity_ids[body.entity],
        "aspect": body.aspect,
        "text": body.text,
        "source": record.source_doc,
    }


def _write_file(path: Path, entities, records: list[KnowledgeRecord]) -> None:
    entity_ids = {entity: entity.local_id for entity, _ in entities}
    lines = [
        json.dumps(
            {"kind": "entity", "id": entity.local_id, "aliases": list(aliases)},
            ensure_ascii=False,
        )
        for entity, aliases in entities
    ]
    lines += [
        json.dumps(_record_line(entity_ids, record), ensure_ascii=False)
        for record in records
    ]
    temporary = path.with_name(path.name + ".tmp")
    temporary.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    os.replace(temporary, path)


def save(store: PkbStore, path: str | Path | None = None) -> Path:
    """Persist the store atomically (write to a temp file, then rename into place)."""
    target = Path(path) if path is not None else store.path
    if target is None:
        raise ValueError("no path to save to")
    with store._write_lock:
        _write_file(target, list(store.registry.items()), store.records)
    store.path = target
    return target


def load(path: str | Path, kb_tag: str = DEFAULT_KB_TAG) -> PkbStore:
    """Read a store back; schema violations name the offending line."""
    source = Path(path)
    store = PkbStore(path=source, kb_tag=kb_tag)
    entities: dict[str, EntityId] = {}
    for number, line in enumerate(source.read_text(encoding="utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except ValueError as exc:
            raise CorruptStore(f"invalid JSON ({exc})", number) from exc
        if not isinstance(data, dict):
            raise CorruptStore("expected an object", number)
        kind = data.get("kind")
        try:
            if kind == "entity":
                entity = EntityId(kb_tag, str(data["id"]))
                if entity in store.registry:
                    raise CorruptStore(f"duplicate entity {data['id']!r}", number)
                store.registry[entity] = AliasList(data["aliases"])
                entities[entity.local_id] = entity
                continue
            if kind not in ("description", "triple", "aspect"):
                raise CorruptStore(f"unknown kind {kind!r}", number)
            entity_ref = str(data["entity"])
            if entity_ref not in entities:
                raise CorruptStore(f"record references unknown entity {entity_ref!r}", number)
            entity = entities[entity_ref]
            source_doc = data.get("source")
            if kind == "description":
                body = Description(entity, str(data["text"]))
            elif kind == "triple":
                body = Triple(entity, str(data["relation"]), str(data["tail"]))
            else:
                body = AspectRecord(entity, str(data["aspect"]), str(data["text"]))
            store.records.append(KnowledgeRecord(body, source_doc=source_doc))
        except CorruptStore:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptStore(str(exc), number) from exc
    return store


class PkbBackend(KbBackend):
    """Read-side adapter exposing a PkbStore through the standard backend surface."""

    pkb_mode = True

    def __init__(self, store: PkbStore, embedder: EmbeddingProvider) -> None:
        self.store = store
        self.embedder = embedder
        self.kb_tag = store.kb_tag
        self.has_descriptions = True
        self.kbqa_mode = False

    def _entity_linking(self, query: Query, aliases: AliasList) -> list[EntityCandidate]:
        return pkb_entity_linking(query, aliases, self.store, self.embedder)

    def _get_entity_triples(self, entity: EntityId) -> list[Triple]:
        """Stored triples plus aspect records surfaced as (aspect label -> text) triples,
        so aspect knowledge is retrievable through relation search."""
        triples: list[Triple] = []
        for record in self.store.records:
            body = record.body
            if isinstance(body, Triple) and body.head == entity:
                triples.append(body)
            elif isinstance(body, AspectRecord) and body.entity == entity:
                triples.append(Triple(entity, body.aspect, body.text))
        return triples

    def _get_entity_info(
        self, entity: EntityId, relation_hint: AliasList | None = None
    ) -> EntityInfo:
        descriptions = [
            record.body.text
            for record in self.store.records
            if isinstance(record.body, Description) and record.body.entity == entity
        ]
        return EntityInfo(
            description=" ".join(descriptions) or None,
            triples=tuple(self._get_entity_triples(entity)),
        )

    def display_name(self, entity: EntityId) -> str:
        aliases = self.store.registry.get(entity)
        return aliases.preferred if aliases else entity.local_id
