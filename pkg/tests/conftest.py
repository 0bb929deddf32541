from __future__ import annotations

import pytest

from knowledgpt.kb.filekb import FileKb
from knowledgpt.llm.embeddings import HashEmbedder
from knowledgpt.llm.gateway import KnowledgeGateway
from knowledgpt.llm.providers import ScriptedLlm


def make_filekb(
    triples=(),
    descriptions=(),
    aliases=(),
    kb_tag="FileKB",
    kbqa_mode=False,
    tail_split_delimiters=(),
) -> FileKb:
    kb = FileKb(kb_tag, kbqa_mode=kbqa_mode, tail_split_delimiters=tail_split_delimiters)
    for head, relation, tail in triples:
        kb.add_triple(head, relation, tail)
    for name, text in descriptions:
        kb.add_description(name, text)
    for alias, name in aliases:
        kb.add_alias(alias, name)
    return kb


@pytest.fixture
def embedder() -> HashEmbedder:
    return HashEmbedder()


@pytest.fixture
def scripted() -> ScriptedLlm:
    return ScriptedLlm()


@pytest.fixture
def gateway(scripted) -> KnowledgeGateway:
    return KnowledgeGateway(scripted)
