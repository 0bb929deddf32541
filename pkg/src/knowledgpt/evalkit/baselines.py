"""The two retrieval baselines: BM25 over per-entity documents and embedding
similarity over per-triple documents, each with the one-extra-hop chaining rule
(feed the first retrieval's best triple back into the query, retrieve again).

Later hops retrieve a document not seen on earlier hops: the augmented query
always contains the first document's own tokens, so without that exclusion the
second retrieval would trivially return the first document again.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from knowledgpt.evalkit.bm25 import Bm25Index, Bm25Params, content_tokens
from knowledgpt.kb.filekb import FileKb
from knowledgpt.linking import jaccard
from knowledgpt.llm.embeddings import EmbeddingProvider, cosine
from knowledgpt.model import Triple, token_set


@dataclass
class BaselineResult:
    answer: str
    zero_confidence: bool = False
    hop_triples: list[Triple] = field(default_factory=list)  # bridge triple(s) used for chaining
    final_doc: str = ""  # entity name (BM25) or triple rendering (embedding)
    final_doc_triples: tuple[Triple, ...] = ()


def render_triple(triple: Triple) -> str:
    return f"{triple.head.local_id} {triple.relation} {triple.tail}"


def entity_documents(kb: FileKb) -> list[tuple[str, str]]:
    """One document per entity, concatenating all of its triples."""
    return [
        (name, " ".join(render_triple(t) for t in rows))
        for name, rows in kb.triples_by_head().items()
    ]


def _best_triple_by_relation(triples, query_tokens: set[str]) -> Triple:
    best = None
    best_key = None
    for index, triple in enumerate(triples):
        score = jaccard(query_tokens, token_set(triple.relation)).value
        key = (-score, index)
        if best_key is None or key < best_key:
            best, best_key = triple, key
    assert best is not None
    return best


def bm25_baseline(
    question: str,
    kb: FileKb,
    hops: int = 1,
    params: Bm25Params | None = None,
) -> BaselineResult:
    """Retrieve the most relevant per-entity document with BM25 and read the answer
    off its best-matching triple; two-hop questions chain one extra retrieval."""
    documents = entity_documents(kb)
    if not documents:
        raise ValueError("knowledge base has no triples")
    index = Bm25Index(documents, params)
    query = question
    hop_triples: list[Triple] = []
    entity = ""
    seen: set[str] = set()
    for hop in range(max(1, hops)):
        ranking = [(name, score) for name, score in index.rank(query) if name not in seen]
        entity, _ = ranking[0]
        seen.add(entity)
        if hop + 1 >= max(1, hops):
            break
        bridge = _best_triple_by_relation(
            kb.triples_by_head()[entity], set(content_tokens(question))
        )
        hop_triples.append(bridge)
        query = f"{query} {render_triple(bridge)}"
    scores = index.scores(query)
    zero = max(scores) <= 0.0
    final_triples = tuple(kb.triples_by_head()[entity])
    answer_triple = _best_triple_by_relation(final_triples, set(content_tokens(query)))
    return BaselineResult(
        answer=answer_triple.tail,
        zero_confidence=zero,
        hop_triples=hop_triples,
        final_doc=entity,
        final_doc_triples=final_triples,
    )


def embedding_scores(
    query: str, triples: list[Triple], embedder: EmbeddingProvider
) -> list[float]:
    """Cosine of the query against each triple rendering, in stored order."""
    query_vector = embedder.embed(query)
    return [cosine(query_vector, embedder.embed(render_triple(t))) for t in triples]


def embedding_baseline(
    question: str,
    kb: FileKb,
    embedder: EmbeddingProvider,
    hops: int = 1,
) -> BaselineResult:
    """Retrieve the most similar triple by sentence embedding; two-hop questions
    append the first triple's rendering to the query and retrieve once more."""
    triples = kb.all_triples()
    if not triples:
        raise ValueError("knowledge base has no triples")
    query = question
    hop_triples: list[Triple] = []
    best = triples[0]
    seen: set[int] = set()
    for hop in range(max(1, hops)):
        scores = embedding_scores(query, triples, embedder)
        candidates = [i for i in range(len(triples)) if i not in seen]
        best_index = min(candidates, key=lambda i: (-scores[i], i))
        best = triples[best_index]
        seen.add(best_index)
        if hop + 1 >= max(1, hops):
            break
        hop_triples.append(best)
        query = f"{query} {render_triple(best)}"
    return BaselineResult(
        answer=best.tail,
        zero_confidence=False,
        hop_triples=hop_triples,
        final_doc=render_triple(best),
        final_doc_triples=(best,),
    )
