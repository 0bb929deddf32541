"""The four LLM-backed operations: search code generation, entity disambiguation,
knowledge-grounded answering, and knowledge extraction.

Each operation fills its prompt template, dispatches it through the configured
provider, and validates the structured response. A response that fails schema
validation is retried once with a format reminder appended; a second failure is
a MalformedOutput error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Sequence

from knowledgpt.llm.prompts import PromptCatalog
from knowledgpt.model import AliasList, Query

_FORMAT_REMINDER = (
    "\nReminder: output exactly one JSON object in the documented format, with no "
    "surrounding prose."
)

NONE_TOKEN = "[NONE]"


class MalformedOutput(Exception):
    """The provider's response failed schema validation twice."""


class _SchemaError(Exception):
    pass


@dataclass(frozen=True)
class CodeDecision:
    needs_kb: bool
    code: str


@dataclass(frozen=True)
class AnswerDecision:
    used_knowledge: bool
    answer: str


@dataclass(frozen=True)
class ExtractedRecord:
    """One extracted knowledge row, before the personal KB assigns entity identities.

    ``entity_aliases`` lists the mention's surface forms (preferred form first);
    rows extracted from the same document with identical alias lists describe the
    same mention.
    """

    kind: str  # "description" | "triple" | "aspect"
    entity_aliases: AliasList
    text: str = ""  # description text or aspect text
    relation: str = ""
    tail: str = ""
    aspect: str = ""


@dataclass
class CandidateView:
    """What the disambiguation prompt sees of one candidate entity."""

    name: str
    info: str
    aliases: tuple[str, ...] = ()


def _parse_object(response: Any) -> dict:
    """Accept a dict directly or extract the first JSON object from text."""
    if isinstance(response, dict):
        return response
    if not isinstance(response, str):
        raise _SchemaError(f"expected object or text, got {type(response).__name__}")
    text = response.strip()
    try:
        parsed = json.loads(text)
        if isinstance(parsed, dict):
            return parsed
    except ValueError:
        pass
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        parsed = json.loads(text[start : i + 1])
                    except ValueError:
                        break
                    if isinstance(parsed, dict):
                        return parsed
                    break
        start = text.find("{", start + 1)
    raise _SchemaError("no JSON object found in response")


class KnowledgeGateway:
    """Binds a provider and a prompt catalog into the four typed operations."""

    def __init__(self, llm, catalog: PromptCatalog | None = None) -> None:
        self.llm = llm
        self.catalog = catalog or PromptCatalog.bundled()

    def _ask(self, template: str, fill_slots: dict[str, str], key_slots: dict, validate):
        prompt = self.catalog.fill(template, fill_slots)
        response = self.llm.complete(template, prompt, key_slots)
        try:
            return validate(_parse_object(response))
        except _SchemaError as first:
            retry = self.llm.complete(template, prompt + _FORMAT_REMINDER, key_slots)
            try:
                return validate(_parse_object(retry))
            except _SchemaError as second:
                raise MalformedOutput(f"{first}; after retry: {second}") from second

    def generate_search_code(self, query: Query) -> CodeDecision:
        """Judge whether the query needs KB knowledge and, if so, emit a search program."""
        slots = {"query": query.text, "language": query.language.value}

        def validate(obj: dict) -> CodeDecision:
            needs = obj.get("needs_kb")
            code = obj.get("code", "")
            if not isinstance(needs, bool) or not isinstance(code, str):
                raise _SchemaError("expected {needs_kb: bool, code: str}")
            if not needs:
                code = ""
            return CodeDecision(needs_kb=needs, code=code)

        return self._ask("search_code", slots, slots, validate)

    def disambiguate_entity(
        self,
        query: Query,
        target_aliases: AliasList,
        candidates: Sequence[CandidateView],
        relation_hint: AliasList | None = None,
    ) -> int | None:
        """Pick the candidate index the query refers to, or None when nothing fits."""
        if not candidates:
            return None
        hint = list(relation_hint) if relation_hint else []
        lines = []
        for i, cand in enumerate(candidates):
            alias_note = f" (aliases: {', '.join(cand.aliases)})" if cand.aliases else ""
            lines.append(f"{i}. {cand.name}{alias_note} - {cand.info}")
        fill_slots = {
            "query": query.text,
            "aliases": repr(list(target_aliases)),
            "relation_hint": repr(hint) if hint else "none",
            "candidates": "\n".join(lines),
        }
        key_slots = {
            "query": query.text,
            "aliases": list(target_aliases),
            "relation_hint": hint,
            "candidates": [
                {"name": c.name, "info": c.info, "aliases": list(c.aliases)}
                for c in candidates
            ],
        }

        def validate(obj: dict) -> int | None:
            choice = obj.get("choice")
            if isinstance(choice, str) and choice.strip().upper().strip("[]") == "NONE":
                return None
            if isinstance(choice, bool) or not isinstance(choice, int):
                raise _SchemaError("choice must be an index or the NONE token")
            if not 0 <= choice < len(candidates):
                raise _SchemaError(f"choice {choice} out of range")
            return choice

        return self._ask("entity_linking", fill_slots, key_slots, validate)

    def answer_with_knowledge(self, query: Query, knowledge: str) -> AnswerDecision:
        """Answer the query, grounded in the retrieved knowledge when it suffices."""
        slots = {"query": query.text, "knowledge": knowledge}

        def validate(obj: dict) -> AnswerDecision:
            used = obj.get("used_knowledge")
            answer = obj.get("answer")
            if not isinstance(used, bool) or not isinstance(answer, str):
                raise _SchemaError("expected {used_knowledge: bool, answer: str}")
            return AnswerDecision(used_knowledge=used, answer=answer)

        return self._ask("answer", slots, slots, validate)

    def extract_knowledge(self, document: str) -> list[ExtractedRecord]:
        """Extract per-entity knowledge rows (triples and aspects preferred) from a document."""
        if not document:
            raise ValueError("document must be non-empty")
        slots = {"document": document}

        def validate(obj: dict) -> list[ExtractedRecord]:
            entities = obj.get("entities")
            if not isinstance(entities, list):
                raise _SchemaError("expected {entities: [...]}")
            records: list[ExtractedRecord] = []
            for entry in entities:
                if not isinstance(entry, dict):
                    raise _SchemaError("entity entry must be an object")
                name = entry.get("name", "")
                aliases = entry.get("aliases") or [name]
                if not isinstance(aliases, list):
                    raise _SchemaError("aliases must be a list")
                if name and name not in aliases:
                    aliases = [name, *aliases]
                try:
                    alias_list = AliasList(aliases)
                except ValueError as exc:
                    raise _SchemaError(str(exc)) from exc
                description = entry.get("description") or ""
                if description:
                    records.append(
                        ExtractedRecord("description", alias_list, text=description)
                    )
                for pair in entry.get("triples") or []:
                    if not isinstance(pair, list) or len(pair) != 2:
                        raise _SchemaError("triple must be a [relation, value] pair")
                    relation, tail = pair
                    if not relation or not tail:
                        raise _SchemaError("triple relation and value must be non-empty")
                    records.append(
                        ExtractedRecord(
                            "triple", alias_list, relation=str(relation), tail=str(tail)
                        )
                    )
                for pair in entry.get("aspects") or []:
                    if not isinstance(pair, list) or len(pair) != 2:
                        raise _SchemaError("aspect must be a [label, text] pair")
                    label, text = pair
                    if not label or not text:
                        raise _SchemaError("aspect label and text must be non-empty")
                    records.append(
                        ExtractedRecord(
                            "aspect", alias_list, aspect=str(label), text=str(text)
                        )
                    )
            return records

        return self._ask("extraction", slots, slots, validate)
