"""File-backed knowledge base: TSV ingestion, alias index, and the three primitives.

The on-disk formats are UTF-8, LF-terminated, tab-separated:

- ``triples_tsv``: one ``head\trelation\ttail`` triple per line.
- ``nlpcc_tsv``: the same, but stored tails may pack several values separated by
  special symbols; they are split apart at load time.
- descriptions sidecar: ``name\tdescription`` lines.
- aliases sidecar: ``alias\tname`` lines.

Entity names that carry a trailing parenthetical disambiguator (``Li Bai (Famous
poet of the Tang Dynasty)``) automatically get the bare name as an alias.
"""

from __future__ import annotations

import re
from pathlib import Path

from knowledgpt.kb.base import EntityCandidate, EntityInfo, KbBackend
from knowledgpt.linking import jaccard
from knowledgpt.model import AliasList, EntityId, Query, Triple, token_set

NLPCC_TAIL_DELIMITERS = ("|", "、")

_PARENTHETICAL = re.compile(r"^(.*?)\s*[(（].+[)）]$")


class FormatError(Exception):
    """The KB file yielded no usable rows."""


class FileKb(KbBackend):
    def __init__(
        self,
        kb_tag: str,
        tail_split_delimiters: tuple[str, ...] = (),
        kbqa_mode: bool = False,
        kbqa_top_n: int = 10,
    ) -> None:
        self.kb_tag = kb_tag
        self.tail_split_delimiters = tuple(tail_split_delimiters)
        self.kbqa_mode = kbqa_mode
        self.kbqa_top_n = kbqa_top_n
        self.has_descriptions = True
        self.malformed_lines = 0
        self._triples: dict[str, list[Triple]] = {}
        self._descriptions: dict[str, str] = {}
        # alias -> names in registration order; exact and case-folded tiers
        self._alias_exact: dict[str, list[str]] = {}
        self._alias_folded: dict[str, list[str]] = {}

    # -- construction -------------------------------------------------------

    def _register(self, name: str) -> None:
        self._add_alias(name, name)
        bare = _PARENTHETICAL.match(name)
        if bare and bare.group(1):
            self._add_alias(bare.group(1), name)

    def _add_alias(self, alias: str, name: str) -> None:
        exact = self._alias_exact.setdefault(alias, [])
        if name not in exact:
            exact.append(name)
        folded = self._alias_folded.setdefault(alias.casefold(), [])
        if name not in folded:
            folded.append(name)

    def add_alias(self, alias: str, name: str) -> None:
        self._add_alias(alias, name)

    def _split_tail(self, tail: str) -> list[str]:
        parts = [tail]
        for delimiter in self.tail_split_delimiters:
            parts = [piece for part in parts for piece in part.split(delimiter)]
        return [p.strip() for p in parts if p.strip()]

    def add_triple(self, head: str, relation: str, tail: str) -> int:
        """Store a triple, splitting packed tails; returns how many rows were stored."""
        if not head or not relation or not tail:
            raise ValueError("head, relation and tail must be non-empty")
        self._register(head)
        entity = EntityId(self.kb_tag, head)
        rows = self._triples.setdefault(head, [])
        tails = self._split_tail(tail) if self.tail_split_delimiters else [tail]
        for piece in tails:
            rows.append(Triple(entity, relation, piece))
        return len(tails)

    def add_description(self, name: str, text: str) -> None:
        if not name or not text:
            raise ValueError("name and description must be non-empty")
        self._register(name)
        self._descriptions[name] = text

    @property
    def triple_count(self) -> int:
        return sum(len(rows) for rows in self._triples.values())

    def triples_by_head(self) -> dict[str, list[Triple]]:
        """Stored triples grouped by head name, in registration order."""
        return {name: list(rows) for name, rows in self._triples.items()}

    def all_triples(self) -> list[Triple]:
        return [t for rows in self._triples.values() for t in rows]

    # -- the KB-specific primitives -----------------------------------------

    def _entity_linking(self, query: Query, aliases: AliasList) -> list[EntityCandidate]:
        names: list[str] = []
        seen: set[str] = set()
        for alias in aliases:
            for name in self._alias_exact.get(alias, []):
                if name not in seen:
                    seen.add(name)
                    names.append(name)
        for alias in aliases:
            for name in self._alias_folded.get(alias.casefold(), []):
                if name not in seen:
                    seen.add(name)
                    names.append(name)
        return [
            EntityCandidate(entity=EntityId(self.kb_tag, name), display_name=name)
            for name in names
        ]

    def _get_entity_triples(self, entity: EntityId) -> list[Triple]:
        if entity.kb_tag != self.kb_tag:
            return []
        return list(self._triples.get(entity.local_id, []))

    def _get_entity_info(
        self, entity: EntityId, relation_hint: AliasList | None = None
    ) -> EntityInfo:
        triples = self._get_entity_triples(entity)
        if self.kbqa_mode:
            if relation_hint is not None:
                hint_tokens = set()
                for alias in relation_hint:
                    hint_tokens |= token_set(alias)
                ranked = sorted(
                    enumerate(triples),
                    key=lambda pair: (
                        -jaccard(hint_tokens, token_set(pair[1].relation)).value,
                        pair[0],
                    ),
                )
                triples = [t for _, t in ranked]
            return EntityInfo(description=None, triples=tuple(triples[: self.kbqa_top_n]))
        description = self._descriptions.get(entity.local_id) if entity.kb_tag == self.kb_tag else None
        return EntityInfo(description=description, triples=tuple(triples))

    def display_name(self, entity: EntityId) -> str:
        return entity.local_id


def load_file_kb(
    path: str | Path,
    format: str = "triples_tsv",
    kb_tag: str = "FileKB",
    descriptions_path: str | Path | None = None,
    aliases_path: str | Path | None = None,
    kbqa_mode: bool = False,
    tail_split_delimiters: tuple[str, ...] | None = None,
) -> FileKb:
    """Build a FileKb from a triples file; malformed lines are counted, not fatal.

    Raises FormatError when no line parses, OSError when the file is unreadable.
    """
    if format not in ("triples_tsv", "nlpcc_tsv"):
        raise ValueError(f"unknown format {format!r}")
    if tail_split_delimiters is None:
        tail_split_delimiters = NLPCC_TAIL_DELIMITERS if format == "nlpcc_tsv" else ()
    kb = FileKb(
        kb_tag,
        tail_split_delimiters=tail_split_delimiters,
        kbqa_mode=kbqa_mode,
    )
    parsed = 0
    text = Path(path).read_text(encoding="utf-8")
    for line in text.split("\n"):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3 or not all(f.strip() for f in fields):
            kb.malformed_lines += 1
            continue
        kb.add_triple(fields[0].strip(), fields[1].strip(), fields[2].strip())
        parsed += 1
    if parsed == 0:
        raise FormatError(f"no triples parsed from {path}")
    if descriptions_path is not None:
        for line in Path(descriptions_path).read_text(encoding="utf-8").split("\n"):
            if not line.strip():
                continue
            fields = line.split("\t", 1)
            if len(fields) != 2 or not all(f.strip() for f in fields):
                kb.malformed_lines += 1
                continue
            kb.add_description(fields[0].strip(), fields[1].strip())
    if aliases_path is not None:
        for line in Path(aliases_path).read_text(encoding="utf-8").split("\n"):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2 or not all(f.strip() for f in fields):
                kb.malformed_lines += 1
                continue
            kb.add_alias(fields[0].strip(), fields[1].strip())
    return kb
