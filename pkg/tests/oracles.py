"""Independent brute-force oracles used to check the production implementations."""

from __future__ import annotations

import math


def levenshtein_oracle(a: str, b: str) -> int:
    """Full-matrix dynamic programming, written straight from the recurrence."""
    rows, cols = len(a) + 1, len(b) + 1
    matrix = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        matrix[i][0] = i
    for j in range(cols):
        matrix[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            substitution = matrix[i - 1][j - 1] + (0 if a[i - 1] == b[j - 1] else 1)
            matrix[i][j] = min(matrix[i - 1][j] + 1, matrix[i][j - 1] + 1, substitution)
    return matrix[rows - 1][cols - 1]


def cosine_oracle(u, v) -> float:
    dot = sum(x * y for x, y in zip(u, v))
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(y * y for y in v))
    return dot / (nu * nv) if nu and nv else 0.0


def embsim_oracle(relation: str, aliases, embedder) -> float:
    """Exhaustive max over the alias list, embedding everything independently."""
    scores = [cosine_oracle(embedder.embed(relation), embedder.embed(a)) for a in aliases]
    return max(scores)


def bm25_oracle(query_tokens, doc_tokens_list, k1: float, b: float) -> list[float]:
    """Direct transcription of the scoring formula over tokenized documents."""
    n = len(doc_tokens_list)
    lengths = [len(tokens) for tokens in doc_tokens_list]
    avgdl = sum(lengths) / n if n else 0.0
    scores = []
    for tokens, length in zip(doc_tokens_list, lengths):
        score = 0.0
        for term in query_tokens:
            tf = tokens.count(term)
            if tf == 0:
                continue
            df = sum(1 for other in doc_tokens_list if term in other)
            idf = math.log((n - df + 0.5) / (df + 0.5) + 1.0)
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * length / avgdl))
        scores.append(score)
    return scores
