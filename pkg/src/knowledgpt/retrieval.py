"""The unified KB functions and the three-step answer pipeline:
generate a search program, execute it against every registered KB, then answer
from the concatenated retrieval messages.

Each KB gets its own accessor and trace; executions run in parallel but their
outputs are concatenated in registration order, so results are deterministic.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from knowledgpt.dsl.ast import Builtin, Call
from knowledgpt.dsl.interpreter import ExecOutcome, execute, program_from_calls
from knowledgpt.dsl.parser import ParseError, extract_calls, parse
from knowledgpt.kb.base import KbBackend
from knowledgpt.linking import best_relation, embsim, entity_linking, entity_similarity
from knowledgpt.llm.embeddings import EmbeddingProvider
from knowledgpt.llm.gateway import KnowledgeGateway
from knowledgpt.model import AliasList, Query, TraceLog, Triple, token_set, tokenize

TRUNCATION_MARKER = "[truncated]"

_SENTENCE_END = re.compile(r"(?<=[.!?。！？])\s+")


def split_sentences(text: str) -> list[str]:
    """Split on sentence punctuation followed by whitespace or end of text."""
    return [s.strip() for s in _SENTENCE_END.split(text) if s.strip()]


@dataclass
class RetrievalConfig:
    relation_threshold: float = 0.85  # PKB mode: keep every relation scoring at least this
    relation_floor: float = 0.30  # below this, the argmax relation is treated as "no triples"
    message_cap: int = 8000
    info_truncation: int = 500
    always_consult_llm: bool = False
    max_workers: int = 4


@dataclass
class AnswerResult:
    answer: str
    used_knowledge: bool
    needs_kb: bool
    outcomes: dict[str, ExecOutcome] = field(default_factory=dict)
    knowledge: str = ""

    @property
    def traces(self) -> dict[str, TraceLog]:
        return {tag: outcome.trace for tag, outcome in self.outcomes.items()}


def _group_tails(triples: list[Triple], relation: str) -> list[str]:
    return [t.tail for t in triples if t.relation == relation]


def _render_info(description: str | None, triples) -> str:
    parts: list[str] = []
    if description:
        parts.append(description)
    if triples:
        grouped: dict[str, list[str]] = {}
        for triple in triples:
            grouped.setdefault(triple.relation, []).append(triple.tail)
        rendered = "; ".join(
            f"{relation}->{', '.join(tails)}" for relation, tails in grouped.items()
        )
        parts.append(f"Attributes: {rendered}.")
    return " ".join(parts)


class UnifiedAccessor:
    """The three KB functions bound to exactly one backend, with a private trace."""

    def __init__(
        self,
        backend: KbBackend,
        gateway: KnowledgeGateway,
        embedder: EmbeddingProvider,
        config: RetrievalConfig | None = None,
    ) -> None:
        self.backend = backend
        self.gateway = gateway
        self.embedder = embedder
        self.config = config or RetrievalConfig()
        self.trace = TraceLog()
        self.query: Query | None = None

    @property
    def kb_tag(self) -> str:
        return self.backend.kb_tag

    @property
    def pkb_mode(self) -> bool:
        return getattr(self.backend, "pkb_mode", False)

    # -- interpreter entry point ---------------------------------------------

    def call(self, call: Call, kwargs: dict[str, list[str]]):
        args = ", ".join(f"{name} = {kwargs[name]!r}" for name, _ in call.args)
        if call.builtin is Builtin.GET_ENTITY_INFO:
            info, message = self.get_entity_info(
                AliasList(kwargs["entity_aliases"]), _args=args
            )
            return info or "", message
        if call.builtin is Builtin.FIND_ENTITY_OR_VALUE:
            return self.find_entity_or_value(
                AliasList(kwargs["entity_aliases"]),
                AliasList(kwargs["relation_aliases"]),
                _args=args,
            )
        return self.find_relationship(
            AliasList(kwargs["entity1_aliases"]),
            AliasList(kwargs["entity2_aliases"]),
            _args=args,
        )

    # -- the three unified KB functions ---------------------------------------

    def _link(self, aliases: AliasList, relation_hint: AliasList | None = None):
        query = self.query if self.query is not None else Query.detect(aliases.preferred)
        return entity_linking(
            query,
            aliases,
            self.backend,
            self.gateway,
            relation_hint=relation_hint,
            always_consult_llm=self.config.always_consult_llm,
            info_truncation=self.config.info_truncation,
        )

    def get_entity_info(self, aliases: AliasList, _args: str | None = None):
        """Link the aliases, then render the entity's description and triples."""
        args = _args or f"entity_aliases = {list(aliases)!r}"
        entity = self._link(aliases)
        if entity is None:
            return None, self.trace.record(self.kb_tag, "get_entity_info", args, "")
        info = self.backend._get_entity_info(entity)
        text = _render_info(info.description, info.triples)
        display = self.backend.display_name(entity)
        result = f"{display}: {text}" if text else ""
        message = self.trace.record(self.kb_tag, "get_entity_info", args, result)
        return (text or None), message

    def find_entity_or_value(
        self,
        entity_aliases: AliasList,
        relation_aliases: AliasList,
        _args: str | None = None,
    ):
        """Entities or values reached from the entity via the best-matching relation.

        The relation is chosen by embedding similarity over the entity's stored
        relations; with no usable relation the entity description is searched
        for a sentence mentioning a relation alias, and failing that the whole
        description is returned. In PKB mode every relation scoring at or above
        the threshold contributes, not just the argmax.
        """
        args = _args or (
            f"entity_aliases = {list(entity_aliases)!r}, "
            f"relation_aliases = {list(relation_aliases)!r}"
        )
        record = lambda result: self.trace.record(
            self.kb_tag, "find_entity_or_value", args, result
        )
        entity = self._link(entity_aliases, relation_hint=relation_aliases)
        if entity is None:
            return [], record("")
        display = self.backend.display_name(entity)
        triples = self.backend._get_entity_triples(entity)
        relations: list[str] = []
        for triple in triples:
            if triple.relation not in relations:
                relations.append(triple.relation)

        if self.pkb_mode:
            cache: dict = {}
            matches = []
            for index, relation in enumerate(relations):
                score = embsim(relation, relation_aliases, self.embedder, _cache=cache)
                if score.value >= self.config.relation_threshold:
                    matches.append((-score.value, index, relation))
            if matches:
                matches.sort()
                values: list[str] = []
                sections = []
                for _, _, relation in matches:
                    tails = _group_tails(triples, relation)
                    values.extend(tails)
                    sections.append(f"{relation}: {', '.join(tails)}")
                return values, record(f"{display}, {'; '.join(sections)}")
        else:
            best = best_relation(relations, relation_aliases, self.embedder)
            if best is not None and best[1].value >= self.config.relation_floor:
                relation = best[0]
                values = _group_tails(triples, relation)
                return values, record(f"{display}, {relation}: {', '.join(values)}")

        description = self.backend._get_entity_info(entity).description
        if not description:
            return [], record("")
        for sentence in split_sentences(description):
            sentence_tokens = token_set(sentence)
            for alias in relation_aliases:
                alias_tokens = tokenize(alias)
                if alias_tokens and set(alias_tokens) <= sentence_tokens:
                    return [sentence], record(f"{display}: {sentence}")
        return [description], record(f"{display}: {description}")

    def find_relationship(
        self,
        entity1_aliases: AliasList,
        entity2_aliases: AliasList,
        _args: str | None = None,
    ):
        """Relations connecting the two entities, best tail match first.

        Tails of the first entity's triples are scored against the second
        entity's aliases; when nothing matches (triples or description), the
        two entities swap roles and the search runs once more.
        """
        args = _args or (
            f"entity1_aliases = {list(entity1_aliases)!r}, "
            f"entity2_aliases = {list(entity2_aliases)!r}"
        )
        record = lambda result: self.trace.record(
            self.kb_tag, "find_relationship", args, result
        )
        for source, target in (
            (entity1_aliases, entity2_aliases),
            (entity2_aliases, entity1_aliases),
        ):
            entity = self._link(source)
            if entity is None:
                continue
            display = self.backend.display_name(entity)
            triples = self.backend._get_entity_triples(entity)
            scored = []
            for index, triple in enumerate(triples):
                score = max(
                    entity_similarity(triple.tail, alias).value for alias in target
                )
                if score > 0:
                    scored.append((-score, index, triple))
            if scored:
                scored.sort()
                relations: list[str] = []
                sections: list[str] = []
                for _, _, triple in scored:
                    if triple.relation in relations:
                        continue
                    relations.append(triple.relation)
                    sections.append(f"{triple.relation}: {triple.tail}")
                return relations, record(f"{display}, {'; '.join(sections)}")
            description = self.backend._get_entity_info(entity).description
            if description:
                for sentence in split_sentences(description):
                    sentence_tokens = token_set(sentence)
                    for alias in target:
                        alias_tokens = tokenize(alias)
                        if alias_tokens and set(alias_tokens) <= sentence_tokens:
                            return [sentence], record(f"{display}: {sentence}")
        return [], record("")


def compose_knowledge(outcomes: list[tuple[str, ExecOutcome]], cap: int) -> str:
    """Join per-KB outputs in registration order, truncating at entry boundaries."""
    blocks = [(tag, o) for tag, o in outcomes if o.messages]
    joined = "\n".join(o.messages for _, o in blocks)
    if len(joined) <= cap:
        return joined
    out = ""
    for _, outcome in blocks:
        separator = "\n" if out else ""
        budget = cap - len(out) - len(separator)
        block = outcome.messages
        if len(block) <= budget:
            out += separator + block
            continue
        # cut points: end offset of each rendered trace entry inside this block
        cuts = []
        position = 0
        for entry in outcome.trace:
            found = block.find(entry.rendered(), position)
            if found == -1:
                break
            position = found + len(entry.rendered())
            cuts.append(position)
        fitting = [c for c in cuts if c <= budget]
        if fitting:
            out += separator + block[: fitting[-1]]
        break
    return out + TRUNCATION_MARKER


def answer_query(
    query: Query,
    backends: list[KbBackend],
    gateway: KnowledgeGateway,
    embedder: EmbeddingProvider,
    config: RetrievalConfig | None = None,
) -> AnswerResult:
    """Answer a user query with knowledge retrieved from the given KBs.

    Code generation decides whether KBs are needed at all; execution failures
    never propagate (each KB contributes whatever its program managed to
    retrieve); the final answer step may still ignore insufficient knowledge.
    """
    config = config or RetrievalConfig()
    decision = gateway.generate_search_code(query)
    if not decision.needs_kb or not backends:
        answered = gateway.answer_with_knowledge(query, "")
        return AnswerResult(
            answer=answered.answer,
            used_knowledge=False,
            needs_kb=decision.needs_kb,
        )
    try:
        program = parse(decision.code)
    except ParseError:
        program = program_from_calls(extract_calls(decision.code))

    def run(backend: KbBackend) -> tuple[str, ExecOutcome]:
        accessor = UnifiedAccessor(backend, gateway, embedder, config)
        accessor.query = query
        return backend.kb_tag, execute(program, accessor, query)

    if len(backends) == 1:
        ordered = [run(backends[0])]
    else:
        with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
            ordered = list(pool.map(run, backends))
    knowledge = compose_knowledge(ordered, config.message_cap)
    answered = gateway.answer_with_knowledge(query, knowledge)
    return AnswerResult(
        answer=answered.answer,
        used_knowledge=answered.used_knowledge and decision.needs_kb,
        needs_kb=decision.needs_kb,
        outcomes=dict(ordered),
        knowledge=knowledge,
    )
