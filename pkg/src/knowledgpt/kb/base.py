"""The KB-specific level: the minimal per-KB surface everything else is built on.

Each backend implements three primitives (historically written with a leading
underscore, marking them as the KB-specific level under the unified KB
functions): candidate lookup, triple retrieval, and entity information.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

from knowledgpt.model import AliasList, EntityId, Query, Triple


@dataclass(frozen=True)
class EntityCandidate:
    """A KB entity under consideration during disambiguation."""

    entity: EntityId
    display_name: str
    info_snippet: str = ""
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class EntityInfo:
    description: str | None
    triples: tuple[Triple, ...]


class KbBackend(ABC):
    """One knowledge base behind the unified accessor."""

    kb_tag: str
    has_descriptions: bool = True
    kbqa_mode: bool = False

    @abstractmethod
    def _entity_linking(self, query: Query, aliases: AliasList) -> list[EntityCandidate]:
        """Candidate entities for the aliases, deduplicated, in source order."""

    @abstractmethod
    def _get_entity_triples(self, entity: EntityId) -> list[Triple]:
        """All stored triples with this entity as head; [] for an unknown entity."""

    @abstractmethod
    def _get_entity_info(
        self, entity: EntityId, relation_hint: AliasList | None = None
    ) -> EntityInfo:
        """Description plus triples; KBQA-mode backends return a relation-ranked top slice."""

    @abstractmethod
    def display_name(self, entity: EntityId) -> str:
        """Human-readable name used in message renderings."""
