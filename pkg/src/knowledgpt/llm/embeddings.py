"""Embedding providers: a remote HTTP client and a deterministic hashed-ngram fallback.

All providers return unit-norm vectors of a fixed dimension, so cosine similarity
is a plain dot product.
"""

from __future__ import annotations

import hashlib
import json
import math
import unicodedata
import urllib.request
from typing import Protocol, Sequence

from knowledgpt.llm.providers import ProviderError

Vector = tuple[float, ...]


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise ValueError("dimension mismatch")
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


class EmbeddingProvider(Protocol):
    kind: str
    dimension: int

    def embed(self, text: str) -> Vector: ...


class HashEmbedder:
    """Deterministic character-trigram hashing into a fixed-dimension unit vector.

    Each trigram of the normalized text is hashed to one coordinate with a
    +1/-1 sign; shared trigrams between two strings therefore force higher
    cosine similarity, which is the monotonicity relation matching relies on.
    """

    kind = "hash_fallback"

    def __init__(self, dimension: int = 256) -> None:
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self._cache: dict[str, Vector] = {}

    def _ngrams(self, text: str) -> list[str]:
        normalized = unicodedata.normalize("NFKC", text).casefold()
        padded = f" {normalized} "
        if len(padded) < 3:
            return [padded]
        return [padded[i : i + 3] for i in range(len(padded) - 2)]

    def embed(self, text: str) -> Vector:
        if not text:
            raise ValueError("cannot embed empty text")
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        values = [0.0] * self.dimension
        for gram in self._ngrams(text):
            digest = hashlib.md5(gram.encode("utf-8")).digest()
            index = int.from_bytes(digest[:4], "big") % self.dimension
            sign = 1.0 if digest[4] & 1 else -1.0
            values[index] += sign
        norm = math.sqrt(sum(v * v for v in values))
        if norm == 0.0:
            values[0] = 1.0
            norm = 1.0
        vector = tuple(v / norm for v in values)
        self._cache[text] = vector
        return vector


class RemoteEmbedder:
    """Client for an embeddings HTTP endpoint (OpenAI-style request body)."""

    kind = "remote"

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        dimension: int = 1536,
        timeout: float = 30.0,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.dimension = dimension
        self.timeout = timeout

    def embed(self, text: str) -> Vector:
        if not text:
            raise ValueError("cannot embed empty text")
        payload = json.dumps({"model": self.model, "input": text}).encode("utf-8")
        request = urllib.request.Request(
            f"{self.base_url}/embeddings",
            data=payload,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self.api_key}",
            },
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                body = json.loads(response.read().decode("utf-8"))
        except (OSError, ValueError) as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc
        try:
            values = body["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError("embedding response missing data") from exc
        norm = math.sqrt(sum(v * v for v in values))
        if norm == 0.0:
            raise ProviderError("embedding response was a zero vector")
        return tuple(v / norm for v in values)
