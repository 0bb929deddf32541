from __future__ import annotations

import pytest

from knowledgpt.llm.gateway import CandidateView, KnowledgeGateway, MalformedOutput
from knowledgpt.llm.providers import ScriptedLlm
from knowledgpt.model import AliasList, Query

DONGWU_CODE = (
    "def search():\n"
    "    messages = ''\n"
    "    capital, msg = find_entity_or_value(entity_aliases = ['Dongwu Securities'], "
    "relation_aliases = ['Registered Capital', 'Capital'])\n"
    "    messages += msg\n"
    "    return messages"
)


def scripted_gateway() -> tuple[ScriptedLlm, KnowledgeGateway]:
    llm = ScriptedLlm()
    return llm, KnowledgeGateway(llm)


class TestGenerateSearchCode:
    def test_no_knowledge_needed(self):
        llm, gateway = scripted_gateway()
        query = Query.detect("Hello, how are you?")
        llm.add(
            "search_code",
            {"query": query.text, "language": "english"},
            {"needs_kb": False, "code": ""},
        )
        decision = gateway.generate_search_code(query)
        assert decision.needs_kb is False
        assert decision.code == ""

    def test_single_call_program(self):
        llm, gateway = scripted_gateway()
        query = Query.detect("What is the registered capital of Dong Wu Securities?")
        llm.add(
            "search_code",
            {"query": query.text, "language": "english"},
            {"needs_kb": True, "code": DONGWU_CODE},
        )
        decision = gateway.generate_search_code(query)
        assert decision.needs_kb is True
        assert "find_entity_or_value(entity_aliases = ['Dongwu Securities']" in decision.code

    def test_prose_twice_is_malformed(self):
        llm, gateway = scripted_gateway()
        query = Query.detect("anything")
        llm.add(
            "search_code",
            {"query": query.text, "language": "english"},
            "I think you should search the knowledge base for this.",
        )
        with pytest.raises(MalformedOutput):
            gateway.generate_search_code(query)

    def test_json_wrapped_in_prose_is_accepted(self):
        llm, gateway = scripted_gateway()
        query = Query.detect("anything")
        llm.add(
            "search_code",
            {"query": query.text, "language": "english"},
            'Sure! Here you go: {"needs_kb": false, "code": ""} Hope that helps.',
        )
        assert gateway.generate_search_code(query).needs_kb is False

    def test_needs_kb_false_forces_empty_code(self):
        llm, gateway = scripted_gateway()
        query = Query.detect("smalltalk")
        llm.add(
            "search_code",
            {"query": query.text, "language": "english"},
            {"needs_kb": False, "code": "def search(): ..."},
        )
        assert gateway.generate_search_code(query).code == ""


class TestDisambiguateEntity:
    CANDIDATES = [
        CandidateView(name='Quiet Night Thoughts (A poem by Li Bai)', info="a poem"),
        CandidateView(name="Quiet Night Thoughts (a 2009 pop song)", info="a song"),
    ]

    def key_slots(self, query: Query, aliases, candidates, hint=None):
        return {
            "query": query.text,
            "aliases": list(aliases),
            "relation_hint": list(hint) if hint else [],
            "candidates": [
                {"name": c.name, "info": c.info, "aliases": list(c.aliases)} for c in candidates
            ],
        }

    def test_empty_candidates_short_circuits(self):
        _, gateway = scripted_gateway()
        assert (
            gateway.disambiguate_entity(Query.detect("q"), AliasList(["x"]), []) is None
        )

    def test_picks_the_poem(self):
        llm, gateway = scripted_gateway()
        query = Query.detect("What are the titles of the poet writing Quiet Night Thoughts?")
        aliases = AliasList(["Quiet Night Thoughts"])
        llm.add(
            "entity_linking",
            self.key_slots(query, aliases, self.CANDIDATES),
            {"choice": 0},
        )
        assert gateway.disambiguate_entity(query, aliases, self.CANDIDATES) == 0

    def test_none_token_rejects_all(self):
        llm, gateway = scripted_gateway()
        query = Query.detect("boiling point of mercury?")
        aliases = AliasList(["Mercury"])
        llm.add(
            "entity_linking",
            self.key_slots(query, aliases, self.CANDIDATES),
            {"choice": "[NONE]"},
        )
        assert gateway.disambiguate_entity(query, aliases, self.CANDIDATES) is None

    def test_out_of_range_choice_is_malformed(self):
        llm, gateway = scripted_gateway()
        query = Query.detect("q")
        aliases = AliasList(["x"])
        llm.add(
            "entity_linking",
            self.key_slots(query, aliases, self.CANDIDATES),
            {"choice": 7},
        )
        with pytest.raises(MalformedOutput):
            gateway.disambiguate_entity(query, aliases, self.CANDIDATES)


class TestAnswerWithKnowledge:
    def test_uses_knowledge(self):
        llm, gateway = scripted_gateway()
        query = Query.detect("What is the registered capital of Dong Wu Securities?")
        knowledge = "... Registered Capital: 1.5 billion Yuan"
        llm.add(
            "answer",
            {"query": query.text, "knowledge": knowledge},
            {"used_knowledge": True, "answer": "1.5 billion Yuan."},
        )
        decision = gateway.answer_with_knowledge(query, knowledge)
        assert decision.used_knowledge is True
        assert decision.answer == "1.5 billion Yuan."

    def test_empty_knowledge_independent_answer(self):
        llm, gateway = scripted_gateway()
        query = Query.detect("Hello!")
        llm.add(
            "answer",
            {"query": query.text, "knowledge": ""},
            {"used_knowledge": False, "answer": "Hi there."},
        )
        decision = gateway.answer_with_knowledge(query, "")
        assert decision.used_knowledge is False

    def test_irrelevant_knowledge_ignored(self):
        llm, gateway = scripted_gateway()
        query = Query.detect("Who wrote Hamlet?")
        knowledge = "[FROM KB][find_entity_or_value(...) -> ] Dongwu Securities, Registered Capital: 1.5 billion Yuan"
        llm.add(
            "answer",
            {"query": query.text, "knowledge": knowledge},
            {"used_knowledge": False, "answer": "William Shakespeare."},
        )
        assert gateway.answer_with_knowledge(query, knowledge).used_knowledge is False


class TestExtractKnowledge:
    def test_socrates_aspect(self):
        llm, gateway = scripted_gateway()
        document = (
            "Socrates served as a Greek hoplite or heavy infantryman during the "
            "Peloponnesian War."
        )
        llm.add(
            "extraction",
            {"document": document},
            {
                "entities": [
                    {
                        "name": "Socrates",
                        "aliases": ["Socrates"],
                        "description": "",
                        "triples": [],
                        "aspects": [
                            [
                                "Military Service",
                                "Socrates served as a Greek hoplite or heavy infantryman during the Peloponnesian War.",
                            ]
                        ],
                    }
                ]
            },
        )
        records = gateway.extract_knowledge(document)
        assert len(records) == 1
        record = records[0]
        assert record.kind == "aspect"
        assert record.aspect == "Military Service"
        assert record.entity_aliases.preferred == "Socrates"
        assert "Greek hoplite" in record.text

    def test_empty_extraction(self):
        llm, gateway = scripted_gateway()
        llm.add("extraction", {"document": "The meeting is rescheduled."}, {"entities": []})
        assert gateway.extract_knowledge("The meeting is rescheduled.") == []

    def test_two_sentence_biography(self):
        llm, gateway = scripted_gateway()
        document = "Mira Voss is a glassblower from Tallinn. She founded the Amber Studio."
        llm.add(
            "extraction",
            {"document": document},
            {
                "entities": [
                    {
                        "name": "Mira Voss",
                        "aliases": ["Mira Voss", "Mira"],
                        "description": "A glassblower from Tallinn.",
                        "triples": [["founded", "Amber Studio"], ["occupation", "glassblower"]],
                        "aspects": [],
                    }
                ]
            },
        )
        records = gateway.extract_knowledge(document)
        kinds = [r.kind for r in records]
        assert kinds.count("triple") >= 1
        assert kinds.count("description") >= 1
        assert all(r.entity_aliases.aliases == ("Mira Voss", "Mira") for r in records)

    def test_rejects_empty_document(self, gateway):
        with pytest.raises(ValueError):
            gateway.extract_knowledge("")
