"""Entity linking and the similarity primitives it is built on.

Three similarity families, each with its own scale:

- embedding cosine over relation aliases (the running max starts at -1),
- entity similarity ``100 - edit distance`` gated on word overlap,
- jaccard similarity of token sets.

Unified entity linking pipelines a backend's candidate lookup, per-candidate
info gathering, and LLM disambiguation into a single EntityId decision.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from knowledgpt.llm.embeddings import cosine
from knowledgpt.llm.gateway import CandidateView, KnowledgeGateway, MalformedOutput
from knowledgpt.llm.providers import ProviderError
from knowledgpt.model import AliasList, EntityId, Query, tokenize

if TYPE_CHECKING:
    from knowledgpt.kb.base import EntityCandidate, KbBackend

logger = logging.getLogger(__name__)

#: Characters kept of each candidate's information when building the disambiguation prompt.
INFO_TRUNCATION = 500


class Scale(enum.Enum):
    COSINE = "cosine"  # [-1, 1]
    ENTITY = "entity"  # {0} union (-inf, 100]
    JACCARD = "jaccard"  # [0, 1]


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    scale: Scale

    def __post_init__(self) -> None:
        if self.scale is Scale.COSINE and not -1.0 - 1e-9 <= self.value <= 1.0 + 1e-9:
            raise ValueError(f"cosine score {self.value} out of range")
        if self.scale is Scale.JACCARD and not 0.0 <= self.value <= 1.0:
            raise ValueError(f"jaccard score {self.value} out of range")
        if self.scale is Scale.ENTITY and self.value > 100.0:
            raise ValueError(f"entity score {self.value} out of range")


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[len(b)]


def entity_similarity(name1: str, name2: str) -> SimilarityScore:
    """100 minus edit distance when the names share a word, 0 otherwise.

    Word overlap is computed on case-folded tokens; CJK text is tokenized per
    character, so single shared characters count as overlap there.
    """
    if not name1 or not name2:
        raise ValueError("entity names must be non-empty")
    if set(tokenize(name1)) & set(tokenize(name2)):
        return SimilarityScore(100.0 - levenshtein(name1, name2), Scale.ENTITY)
    return SimilarityScore(0.0, Scale.ENTITY)


def jaccard(tokens_a: set[str], tokens_b: set[str]) -> SimilarityScore:
    """Intersection over union; 0 when both sets are empty."""
    union = tokens_a | tokens_b
    if not union:
        return SimilarityScore(0.0, Scale.JACCARD)
    return SimilarityScore(len(tokens_a & tokens_b) / len(union), Scale.JACCARD)


def embsim(
    relation: str,
    aliases: AliasList,
    embedder,
    _cache: dict[str, tuple[float, ...]] | None = None,
) -> SimilarityScore:
    """Max cosine between the relation's embedding and each alias embedding."""
    if not relation:
        raise ValueError("relation must be non-empty")
    cache = _cache if _cache is not None else {}

    def embed(text: str):
        vector = cache.get(text)
        if vector is None:
            vector = embedder.embed(text)
            cache[text] = vector
        return vector

    relation_vector = embed(relation)
    best = -1.0
    for alias in aliases:
        score = cosine(relation_vector, embed(alias))
        if score > best:
            best = score
    return SimilarityScore(best, Scale.COSINE)


def best_relation(
    candidate_relations: Sequence[str],
    aliases: AliasList,
    embedder,
) -> tuple[str, SimilarityScore] | None:
    """Argmax of embsim over the candidates; None for an empty candidate list.

    Ties break to the first occurrence. Embeddings are cached for the duration
    of the call, so repeated relations and aliases are embedded once.
    """
    cache: dict[str, tuple[float, ...]] = {}
    winner: str | None = None
    best: SimilarityScore | None = None
    for relation in candidate_relations:
        score = embsim(relation, aliases, embedder, _cache=cache)
        if best is None or score.value > best.value:
            winner, best = relation, score
    if winner is None or best is None:
        return None
    return winner, best


def _snippet(backend: "KbBackend", candidate: "EntityCandidate", relation_hint, cap: int) -> str:
    info = backend._get_entity_info(candidate.entity, relation_hint)
    parts: list[str] = []
    if info.description:
        parts.append(info.description)
    if info.triples:
        parts.append("; ".join(f"{t.relation}: {t.tail}" for t in info.triples))
    return " | ".join(parts)[:cap]


def entity_linking(
    query: Query,
    aliases: AliasList,
    backend: "KbBackend",
    gateway: KnowledgeGateway,
    relation_hint: AliasList | None = None,
    always_consult_llm: bool = False,
    info_truncation: int = INFO_TRUNCATION,
) -> EntityId | None:
    """Resolve aliases to one entity of the backend, or None.

    Candidates come from the backend, information is gathered and truncated per
    candidate, and the LLM picks. When exactly one candidate's name equals one
    of the aliases verbatim, it wins without consulting the LLM (disable via
    ``always_consult_llm``). Provider failures degrade to None.
    """
    candidates = backend._entity_linking(query, aliases)
    if not candidates:
        return None
    if not always_consult_llm:
        exact = [c for c in candidates if c.display_name in aliases]
        if len(exact) == 1:
            return exact[0].entity
    enriched = [
        dataclasses.replace(
            c, info_snippet=_snippet(backend, c, relation_hint, info_truncation)
        )
        for c in candidates
    ]
    views = [
        CandidateView(name=c.display_name, info=c.info_snippet, aliases=c.aliases)
        for c in enriched
    ]
    try:
        choice = gateway.disambiguate_entity(query, aliases, views, relation_hint)
    except (ProviderError, MalformedOutput) as exc:
        logger.warning("entity disambiguation failed for %r: %s", list(aliases), exc)
        return None
    if choice is None:
        return None
    return enriched[choice].entity
