"""Generic remote-KB client: linking/search/entity endpoints behind a pluggable transport.

Every call is cached within the session, so repeated requests cost at most one
transport round trip. Expected response shapes:

- linking/search endpoints: ``{"candidates": [{"id": ..., "name": ...}, ...]}``
- entity endpoint: ``{"name": ..., "description": ... or null, "triples": [["relation", "tail"], ...]}``
"""

from __future__ import annotations

import json
import logging
import threading
import urllib.parse
import urllib.request
from collections import OrderedDict
from pathlib import Path
from typing import Protocol

from knowledgpt.kb.base import EntityCandidate, EntityInfo, KbBackend
from knowledgpt.model import AliasList, EntityId, Query, Triple

logger = logging.getLogger(__name__)

DEFAULT_CANDIDATE_CAP = 8
DEFAULT_CACHE_SIZE = 4096


class TransportError(Exception):
    """The transport could not produce a response."""


class Transport(Protocol):
    def request(self, url: str, params: dict[str, str]) -> dict: ...


class HttpTransport:
    def __init__(self, timeout: float = 30.0) -> None:
        self.timeout = timeout

    def request(self, url: str, params: dict[str, str]) -> dict:
        full = f"{url}?{urllib.parse.urlencode(params)}"
        try:
            with urllib.request.urlopen(full, timeout=self.timeout) as response:
                return json.loads(response.read().decode("utf-8"))
        except (OSError, ValueError) as exc:
            raise TransportError(f"request to {url} failed: {exc}") from exc


class MockTransport:
    """Replays canned responses from a fixtures directory.

    Each ``*.json`` fixture holds ``{"url": ..., "params": {...}, "response": {...}}``.
    Unmatched requests raise TransportError. All requests are recorded on
    ``self.calls`` so tests can assert how often the wire was touched.
    """

    def __init__(self, fixtures_dir: str | Path | None = None) -> None:
        self._responses: dict[str, dict] = {}
        self.calls: list[tuple[str, tuple[tuple[str, str], ...]]] = []
        if fixtures_dir is not None:
            for path in sorted(Path(fixtures_dir).glob("*.json")):
                data = json.loads(path.read_text(encoding="utf-8"))
                self.add(data["url"], data.get("params", {}), data["response"])

    @staticmethod
    def _key(url: str, params: dict[str, str]) -> str:
        return json.dumps([url, sorted(params.items())], ensure_ascii=False)

    def add(self, url: str, params: dict[str, str], response: dict) -> None:
        self._responses[self._key(url, params)] = response

    def request(self, url: str, params: dict[str, str]) -> dict:
        self.calls.append((url, tuple(sorted(params.items()))))
        key = self._key(url, params)
        if key not in self._responses:
            raise TransportError(f"no canned response for {key}")
        return self._responses[key]


class _LruCache:
    def __init__(self, capacity: int) -> None:
        self._capacity = capacity
        self._entries: OrderedDict[str, dict] = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: str) -> dict | None:
        with self._lock:
            if key not in self._entries:
                return None
            self._entries.move_to_end(key)
            return self._entries[key]

    def put(self, key: str, value: dict) -> None:
        with self._lock:
            self._entries[key] = value
            self._entries.move_to_end(key)
            while len(self._entries) > self._capacity:
                self._entries.popitem(last=False)


class RemoteKb(KbBackend):
    """A remote knowledge base reached through three HTTP endpoints."""

    def __init__(
        self,
        kb_tag: str,
        search_url: str,
        linking_url: str,
        entity_url: str,
        transport: Transport,
        candidate_cap: int = DEFAULT_CANDIDATE_CAP,
        cache_size: int = DEFAULT_CACHE_SIZE,
    ) -> None:
        self.kb_tag = kb_tag
        self.search_url = search_url
        self.linking_url = linking_url
        self.entity_url = entity_url
        self.transport = transport
        self.candidate_cap = candidate_cap
        self.has_descriptions = True
        self.kbqa_mode = False
        self._cache = _LruCache(cache_size)
        self._names: dict[str, str] = {}

    def _request(self, url: str, params: dict[str, str]) -> dict:
        key = json.dumps([url, sorted(params.items())], ensure_ascii=False)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        response = self.transport.request(url, params)
        self._cache.put(key, response)
        return response

    def _candidates_from(self, payload: dict) -> list[EntityCandidate]:
        out = []
        for row in payload.get("candidates", []):
            local_id = str(row.get("id", ""))
            if not local_id:
                continue
            name = str(row.get("name", local_id))
            self._names[local_id] = name
            out.append(EntityCandidate(EntityId(self.kb_tag, local_id), name))
        return out

    def _entity_linking(self, query: Query, aliases: AliasList) -> list[EntityCandidate]:
        """Union of the linking API (name + context) and search API (name only) results.

        Linking-API results come first; transport failures yield an empty list.
        """
        candidates: list[EntityCandidate] = []
        seen: set[EntityId] = set()
        try:
            for alias in aliases:
                payload = self._request(
                    self.linking_url, {"name": alias, "context": query.text}
                )
                for candidate in self._candidates_from(payload):
                    if candidate.entity not in seen:
                        seen.add(candidate.entity)
                        candidates.append(candidate)
            for alias in aliases:
                payload = self._request(self.search_url, {"name": alias})
                for candidate in self._candidates_from(payload):
                    if candidate.entity not in seen:
                        seen.add(candidate.entity)
                        candidates.append(candidate)
        except TransportError as exc:
            logger.warning("remote linking failed on %s: %s", self.kb_tag, exc)
            return []
        return candidates[: self.candidate_cap]

    def _entity_payload(self, entity: EntityId) -> dict:
        return self._request(self.entity_url, {"id": entity.local_id})

    def _get_entity_triples(self, entity: EntityId) -> list[Triple]:
        if entity.kb_tag != self.kb_tag:
            return []
        payload = self._entity_payload(entity)
        triples = []
        for pair in payload.get("triples", []):
            if len(pair) != 2:
                continue
            relation, tail = pair
            triples.append(Triple(entity, str(relation), str(tail)))
        return triples

    def _get_entity_info(
        self, entity: EntityId, relation_hint: AliasList | None = None
    ) -> EntityInfo:
        if entity.kb_tag != self.kb_tag:
            return EntityInfo(description=None, triples=())
        payload = self._entity_payload(entity)
        if "name" in payload:
            self._names[entity.local_id] = str(payload["name"])
        description = payload.get("description") or None
        return EntityInfo(
            description=description, triples=tuple(self._get_entity_triples(entity))
        )

    def display_name(self, entity: EntityId) -> str:
        return self._names.get(entity.local_id, entity.local_id)
