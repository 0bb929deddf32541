from knowledgpt.llm.embeddings import HashEmbedder, RemoteEmbedder, cosine
from knowledgpt.llm.gateway import (
    AnswerDecision,
    CodeDecision,
    ExtractedRecord,
    KnowledgeGateway,
    MalformedOutput,
)
from knowledgpt.llm.providers import LiveLlm, ProviderError, ScriptedLlm

__all__ = [
    "AnswerDecision",
    "CodeDecision",
    "ExtractedRecord",
    "HashEmbedder",
    "KnowledgeGateway",
    "LiveLlm",
    "MalformedOutput",
    "ProviderError",
    "RemoteEmbedder",
    "ScriptedLlm",
    "cosine",
]
