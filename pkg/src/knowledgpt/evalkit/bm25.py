"""BM25 ranking implemented from scratch (Okapi weighting).

Score of document D for query Q:

    sum over query terms t of  idf(t) * tf(t, D) * (k1 + 1)
                               / (tf(t, D) + k1 * (1 - b + b * |D| / avgdl))

    idf(t) = ln( (N - df(t) + 0.5) / (df(t) + 0.5) + 1 )

Stopwords are removed from both documents and queries before scoring.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from knowledgpt.evalkit.metrics import _stopwords
from knowledgpt.model import tokenize


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.5
    b: float = 0.75


def content_tokens(text: str) -> list[str]:
    stop = _stopwords()
    return [t for t in tokenize(text) if t not in stop]


class Bm25Index:
    def __init__(self, documents: Sequence[tuple[str, str]], params: Bm25Params | None = None) -> None:
        """``documents`` are (doc_id, text) pairs; order defines tie-breaking."""
        self.params = params or Bm25Params()
        self.doc_ids = [doc_id for doc_id, _ in documents]
        self._term_counts = [Counter(content_tokens(text)) for _, text in documents]
        self._lengths = [sum(c.values()) for c in self._term_counts]
        total = sum(self._lengths)
        self._avgdl = total / len(self._lengths) if self._lengths else 0.0
        self._doc_freq: Counter[str] = Counter()
        for counts in self._term_counts:
            self._doc_freq.update(counts.keys())

    def __len__(self) -> int:
        return len(self.doc_ids)

    def idf(self, term: str) -> float:
        n = len(self.doc_ids)
        df = self._doc_freq.get(term, 0)
        return math.log((n - df + 0.5) / (df + 0.5) + 1.0)

    def score(self, query_tokens: Sequence[str], index: int) -> float:
        counts = self._term_counts[index]
        length = self._lengths[index]
        k1, b = self.params.k1, self.params.b
        score = 0.0
        for term in query_tokens:
            tf = counts.get(term, 0)
            if tf == 0:
                continue
            denominator = tf + k1 * (1.0 - b + b * (length / self._avgdl if self._avgdl else 0.0))
            score += self.idf(term) * tf * (k1 + 1.0) / denominator
        return score

    def scores(self, query: str) -> list[float]:
        """Score of every document for the query, in document order."""
        tokens = content_tokens(query)
        return [self.score(tokens, i) for i in range(len(self.doc_ids))]

    def rank(self, query: str) -> list[tuple[str, float]]:
        """Documents best first; ties keep document order."""
        scored = self.scores(query)
        order = sorted(range(len(scored)), key=lambda i: (-scored[i], i))
        return [(self.doc_ids[i], scored[i]) for i in order]
