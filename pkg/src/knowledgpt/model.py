"""Shared domain types and the message-rendering convention used by every KB function.

Every KB function logs its call and result as a bracketed message string; the
search output handed to answer generation is the plain concatenation of those
messages. The renderer here is the single source of truth for that format, so
fixture comparisons can be byte-exact.
"""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass, field


class Language(enum.Enum):
    ENGLISH = "english"
    CHINESE = "chinese"
    OTHER = "other"


def is_cjk(ch: str) -> bool:
    """True for CJK ideographs and common CJK punctuation-free script blocks."""
    code = ord(ch)
    return (
        0x4E00 <= code <= 0x9FFF  # CJK Unified Ideographs
        or 0x3400 <= code <= 0x4DBF  # Extension A
        or 0xF900 <= code <= 0xFAFF  # Compatibility Ideographs
        or 0x3040 <= code <= 0x30FF  # Hiragana / Katakana
    )


def detect_language(text: str) -> Language:
    """Classify a query as Chinese when at least 30% of its non-space characters are CJK."""
    chars = [c for c in text if not c.isspace()]
    if not chars:
        return Language.ENGLISH
    cjk = sum(1 for c in chars if is_cjk(c))
    if cjk / len(chars) >= 0.30:
        return Language.CHINESE
    return Language.ENGLISH


_PUNCT_STRIP = ".,;:!?()[]{}\"'`，。；：！？（）【】〈〉《》“”‘’、"


def tokenize(text: str) -> list[str]:
    """Split text into case-folded tokens: whitespace words, with CJK characters as single tokens.

    Mixed-script chunks are split so that each CJK character stands alone and
    contiguous non-CJK runs stay together. Surrounding punctuation is stripped
    from word tokens.
    """

    def emit(run: str, out: list[str]) -> None:
        run = run.casefold().strip(_PUNCT_STRIP)
        if run:
            out.append(run)

    tokens: list[str] = []
    for chunk in text.split():
        if not any(is_cjk(c) for c in chunk):
            emit(chunk, tokens)
            continue
        run = ""
        for ch in chunk:
            if is_cjk(ch):
                emit(run, tokens)
                run = ""
                tokens.append(ch)
            else:
                run += ch
        emit(run, tokens)
    return tokens


def token_set(text: str) -> set[str]:
    return set(tokenize(text))


class AliasList:
    """Ordered surface forms for one entity or relation; the first alias is the preferred form.

    Construction drops empty strings and case-folded duplicates (LLMs routinely
    emit the same alias twice) while preserving first-occurrence order. An alias
    list can never be empty.
    """

    __slots__ = ("aliases",)

    def __init__(self, aliases) -> None:
        seen: set[str] = set()
        kept: list[str] = []
        for alias in aliases:
            if not isinstance(alias, str):
                raise ValueError(f"alias must be a string, got {type(alias).__name__}")
            alias = alias.strip()
            if not alias:
                continue
            folded = alias.casefold()
            if folded in seen:
                continue
            seen.add(folded)
            kept.append(alias)
        if not kept:
            raise ValueError("alias list must contain at least one non-empty alias")
        self.aliases: tuple[str, ...] = tuple(kept)

    @property
    def preferred(self) -> str:
        return self.aliases[0]

    def __iter__(self):
        return iter(self.aliases)

    def __len__(self) -> int:
        return len(self.aliases)

    def __getitem__(self, i):
        return self.aliases[i]

    def __contains__(self, item) -> bool:
        return item in self.aliases

    def __eq__(self, other) -> bool:
        if isinstance(other, AliasList):
            return self.aliases == other.aliases
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.aliases)

    def __repr__(self) -> str:
        return f"AliasList({list(self.aliases)!r})"


@dataclass(frozen=True)
class EntityId:
    """Identity of one entity inside one KB: the owning KB's tag plus an opaque local id."""

    kb_tag: str
    local_id: str

    def __post_init__(self) -> None:
        if not self.local_id:
            raise ValueError("local_id must be non-empty")


@dataclass(frozen=True)
class Triple:
    """A relational triple. Tails are stored as surface strings; a tail naming an
    entity is written by name, matching the tab-separated external format."""

    head: EntityId
    relation: str
    tail: str

    def __post_init__(self) -> None:
        if not self.relation:
            raise ValueError("relation must be non-empty")
        if not self.tail:
            raise ValueError("tail must be non-empty")


@dataclass(frozen=True)
class AspectRecord:
    """A triple-like record whose object is long-form text, indexed by (entity, aspect label)."""

    entity: EntityId
    aspect: str
    text: str

    def __post_init__(self) -> None:
        if not self.aspect or not self.text:
            raise ValueError("aspect and text must be non-empty")


@dataclass(frozen=True)
class Description:
    """Free-text encyclopedic description of one entity."""

    entity: EntityId
    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("description text must be non-empty")


@dataclass(frozen=True)
class KnowledgeRecord:
    """One stored piece of knowledge in exactly one of the three forms."""

    body: Description | Triple | AspectRecord
    source_doc: str | None = None

    @property
    def kind(self) -> str:
        if isinstance(self.body, Description):
            return "description"
        if isinstance(self.body, Triple):
            return "triple"
        return "aspect"

    @property
    def entity(self) -> EntityId:
        if isinstance(self.body, Triple):
            return self.body.head
        return self.body.entity


@dataclass(frozen=True)
class Query:
    """A user question plus the detected query language (used for KB routing)."""

    text: str
    language: Language

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("query text must be non-empty")

    @classmethod
    def detect(cls, text: str) -> "Query":
        return cls(text=text, language=detect_language(text))


def render_message(kb_tag: str, function_name: str, args: str, result: str) -> str:
    """Render one KB function call and its result in the fixed bracketed format.

    The result may be empty (failed call); all other parts must be non-empty.
    Concatenating these strings in call order yields the search output.
    """
    if not kb_tag or not function_name or not args:
        raise ValueError("kb_tag, function_name and args must be non-empty")
    return f"[FROM {kb_tag}][{function_name}({args}) -> ] {result}"


@dataclass(frozen=True)
class TraceEntry:
    kb_tag: str
    call_rendering: str  # "<function>(<rendered args>)"
    result_rendering: str

    def rendered(self) -> str:
        fn, _, args = self.call_rendering.partition("(")
        return render_message(self.kb_tag, fn, args.rstrip(")"), self.result_rendering)


@dataclass
class TraceLog:
    """Append-only log of KB function calls made during one program execution."""

    entries: list[TraceEntry] = field(default_factory=list)

    def record(self, kb_tag: str, function_name: str, args: str, result: str) -> str:
        """Append one call and return its rendered message."""
        self.entries.append(TraceEntry(kb_tag, f"{function_name}({args})", result))
        return render_message(kb_tag, function_name, args, result)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def normalize_answer(text: str) -> str:
    """Normalization used when comparing answers: trim, case-fold, unify full/half-width."""
    return unicodedata.normalize("NFKC", text).strip().casefold()
