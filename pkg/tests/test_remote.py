from __future__ import annotations

import json

from knowledgpt.kb.remote import MockTransport, RemoteKb
from knowledgpt.model import AliasList, EntityId, Query

QUERY = Query.detect("who voices the heroine?")

URLS = dict(
    search_url="https://kb.example/search",
    linking_url="https://kb.example/link",
    entity_url="https://kb.example/entity",
)


def build_remote(transport=None, **kwargs) -> tuple[MockTransport, RemoteKb]:
    transport = transport or MockTransport()
    kb = RemoteKb("RemoteKB", transport=transport, **URLS, **kwargs)
    return transport, kb


def test_linking_unions_both_apis_linking_first():
    transport, kb = build_remote()
    transport.add(
        URLS["linking_url"],
        {"name": "Saber", "context": QUERY.text},
        {"candidates": [{"id": "e1", "name": "Saber (anime)"}]},
    )
    transport.add(
        URLS["search_url"],
        {"name": "Saber"},
        {"candidates": [{"id": "e2", "name": "Saber (game)"}, {"id": "e1", "name": "Saber (anime)"}]},
    )
    candidates = kb._entity_linking(QUERY, AliasList(["Saber"]))
    assert [c.entity.local_id for c in candidates] == ["e1", "e2"]
    assert candidates[0].display_name == "Saber (anime)"


def test_candidate_cap():
    transport, kb = build_remote(candidate_cap=2)
    transport.add(
        URLS["linking_url"],
        {"name": "X", "context": QUERY.text},
        {"candidates": [{"id": f"e{i}", "name": f"X{i}"} for i in range(6)]},
    )
    transport.add(URLS["search_url"], {"name": "X"}, {"candidates": []})
    assert len(kb._entity_linking(QUERY, AliasList(["X"]))) == 2


def test_transport_failure_degrades_to_empty():
    transport, kb = build_remote()  # no canned responses: every request fails
    assert kb._entity_linking(QUERY, AliasList(["ghost"])) == []


def test_cache_at_most_one_transport_call_per_unique_request():
    transport, kb = build_remote()
    transport.add(
        URLS["entity_url"],
        {"id": "e1"},
        {"name": "Saber", "description": "a character", "triples": [["height", "154 cm"]]},
    )
    entity = EntityId("RemoteKB", "e1")
    for _ in range(4):
        kb._get_entity_info(entity)
        kb._get_entity_triples(entity)
    assert len(transport.calls) == 1


def test_identical_request_sequence_identical_responses():
    def run() -> list:
        transport, kb = build_remote()
        transport.add(
            URLS["linking_url"],
            {"name": "Saber", "context": QUERY.text},
            {"candidates": [{"id": "e1", "name": "Saber (anime)"}]},
        )
        transport.add(URLS["search_url"], {"name": "Saber"}, {"candidates": []})
        transport.add(
            URLS["entity_url"],
            {"id": "e1"},
            {"name": "Saber (anime)", "description": "a character", "triples": [["height", "154 cm"]]},
        )
        out = []
        for _ in range(2):
            out.append([c.entity for c in kb._entity_linking(QUERY, AliasList(["Saber"]))])
            out.append(kb._get_entity_triples(EntityId("RemoteKB", "e1")))
        return out

    assert run() == run()


def test_entity_triples_and_info():
    transport, kb = build_remote()
    transport.add(
        URLS["entity_url"],
        {"id": "e1"},
        {"name": "Saber (anime)", "description": "a character", "triples": [["height", "154 cm"], ["voice", "Ayako Kawasumi"]]},
    )
    entity = EntityId("RemoteKB", "e1")
    triples = kb._get_entity_triples(entity)
    assert [(t.relation, t.tail) for t in triples] == [("height", "154 cm"), ("voice", "Ayako Kawasumi")]
    info = kb._get_entity_info(entity)
    assert info.description == "a character"
    assert kb.display_name(entity) == "Saber (anime)"


def test_cache_bound_evicts_least_recently_used():
    from knowledgpt.kb.remote import _LruCache

    cache = _LruCache(capacity=2)
    cache.put("a", {"v": 1})
    cache.put("b", {"v": 2})
    assert cache.get("a") == {"v": 1}  # refresh "a"
    cache.put("c", {"v": 3})  # evicts "b"
    assert cache.get("b") is None
    assert cache.get("a") == {"v": 1}
    assert cache.get("c") == {"v": 3}


def test_mock_transport_fixture_dir(tmp_path):
    fixture = {
        "url": URLS["search_url"],
        "params": {"name": "Saber"},
        "response": {"candidates": [{"id": "e9", "name": "Saber"}]},
    }
    (tmp_path / "search.json").write_text(json.dumps(fixture), encoding="utf-8")
    transport = MockTransport(tmp_path)
    assert transport.request(URLS["search_url"], {"name": "Saber"})["candidates"][0]["id"] == "e9"
