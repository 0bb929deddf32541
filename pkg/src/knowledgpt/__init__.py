"""Connect language models to knowledge bases: program-based retrieval, a writable
personal KB populated by extraction, and an offline evaluation harness."""

from knowledgpt.model import (
    AliasList,
    AspectRecord,
    Description,
    EntityId,
    KnowledgeRecord,
    Language,
    Query,
    TraceLog,
    Triple,
    render_message,
)

__all__ = [
    "AliasList",
    "AspectRecord",
    "Description",
    "EntityId",
    "KnowledgeRecord",
    "Language",
    "Query",
    "TraceLog",
    "Triple",
    "render_message",
]

__version__ = "0.1.0"
