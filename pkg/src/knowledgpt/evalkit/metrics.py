"""Evaluation metrics: exact-match accuracy (averaged F1 with one answer per row)
and word-recall extraction coverage.

Word sets are built with a bundled stoplist and a pinned rule-based lemmatizer
(plural and possessive stripping for space-delimited words, identity for CJK),
so coverage numbers are reproducible across environments.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

from knowledgpt.model import (
    AspectRecord,
    Description,
    KnowledgeRecord,
    Triple,
    normalize_answer,
    tokenize,
)


@lru_cache(maxsize=None)
def _stopwords() -> frozenset[str]:
    package = resources.files("knowledgpt.evalkit") / "data"
    words: set[str] = set()
    for name in ("stopwords_en.txt", "stopwords_zh.txt"):
        text = (package / name).read_text(encoding="utf-8")
        words.update(w.strip() for w in text.splitlines() if w.strip())
    return frozenset(words)


def lemmatize(token: str) -> str:
    """Pinned suffix-stripping rules; CJK tokens and short words pass through."""
    if len(token) <= 3 or not token.isascii():
        return token
    if token.endswith("'s"):
        token = token[:-2]
    if len(token) > 4 and token.endswith("ies"):
        return token[:-3] + "y"
    if len(token) > 4 and token.endswith("es") and token[-3] in "sxz":
        return token[:-2]
    if len(token) > 5 and token.endswith(("ches", "shes")):
        return token[:-2]
    if token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


def build_word_set(text: str) -> set[str]:
    """Content words of the text: tokenized, stopwords removed, lemmatized."""
    stop = _stopwords()
    words = set()
    for token in tokenize(text):
        token = token.strip(".,;:!?()[]{}\"'`，。；：！？（）【】〈〉《》“”‘’")
        if not token or token in stop:
            continue
        lemma = lemmatize(token)
        if lemma and lemma not in stop:
            words.add(lemma)
    return words


def record_text(record: KnowledgeRecord) -> str:
    body = record.body
    if isinstance(body, Description):
        return body.text
    if isinstance(body, Triple):
        return f"{body.head.local_id} {body.relation} {body.tail}"
    assert isinstance(body, AspectRecord)
    return f"{body.entity.local_id} {body.aspect} {body.text}"


def extraction_word_set(records: Iterable[KnowledgeRecord]) -> set[str]:
    words: set[str] = set()
    for record in records:
        words |= build_word_set(record_text(record))
    return words


def word_recall(extracted: Sequence[KnowledgeRecord], doc: str) -> float:
    """Share of the document's content words covered by the extracted knowledge."""
    if not doc:
        raise ValueError("doc must be non-empty")
    doc_words = build_word_set(doc)
    extracted_words = extraction_word_set(extracted)
    if not doc_words:
        if not extracted_words:
            return 1.0
        raise ValueError("document has no content words but the extraction does")
    return len(extracted_words & doc_words) / len(doc_words)


def averaged_f1(predictions: Sequence[str], golds: Sequence[str]) -> float:
    """With one gold and one prediction per row this reduces to exact-match accuracy,
    after trimming, case-folding and full/half-width unification."""
    if len(predictions) != len(golds):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions, {len(golds)} golds"
        )
    if not golds:
        raise ValueError("nothing to score")
    hits = sum(
        1
        for prediction, gold in zip(predictions, golds)
        if normalize_answer(prediction) == normalize_answer(gold)
    )
    return hits / len(golds)


def ablation_coverage(
    pairs: Sequence[tuple[str, Sequence[KnowledgeRecord]]],
) -> dict[str, float]:
    """Mean coverage with extraction restricted to triples only, plus descriptions,
    plus aspects; quantifies what each added representation buys."""
    if not pairs:
        raise ValueError("no pairs to evaluate")
    subsets = {
        "triples_only": ("triple",),
        "with_descriptions": ("triple", "description"),
        "with_aspects": ("triple", "description", "aspect"),
    }
    out: dict[str, float] = {}
    for label, kinds in subsets.items():
        scores = [
            word_recall([r for r in records if r.kind in kinds], doc)
            for doc, records in pairs
        ]
        out[label] = sum(scores) / len(scores)
    return out
