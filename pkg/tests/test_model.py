from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from knowledgpt.model import (
    AliasList,
    EntityId,
    Language,
    Query,
    TraceLog,
    Triple,
    detect_language,
    normalize_answer,
    render_message,
    tokenize,
)


def test_render_message_exact_format():
    rendered = render_message(
        "CNDBPedia",
        "find_entity_or_value",
        "entity_aliases = ['Dongwu Securities'], relation_aliases = ['Registered Capital', 'Capital']",
        "Dongwu Securities, Registered Capital: 1.5 billion Yuan",
    )
    assert rendered == (
        "[FROM CNDBPedia][find_entity_or_value(entity_aliases = ['Dongwu Securities'], "
        "relation_aliases = ['Registered Capital', 'Capital']) -> ] "
        "Dongwu Securities, Registered Capital: 1.5 billion Yuan"
    )


def test_render_message_empty_result_keeps_trailing_space():
    rendered = render_message("PKB", "get_entity_info", "entity_aliases = ['X']", "")
    assert rendered == "[FROM PKB][get_entity_info(entity_aliases = ['X']) -> ] "


def test_render_message_relationship():
    rendered = render_message(
        "FileKB",
        "find_relationship",
        "entity1_aliases = ['Li Ronghao'], entity2_aliases = ['Li Bai']",
        "Li Ronghao, Representative Work: Li Bai",
    )
    assert rendered.startswith("[FROM FileKB][find_relationship(")
    assert rendered.endswith(" -> ] Li Ronghao, Representative Work: Li Bai")


@given(
    st.text(min_size=1, alphabet=st.characters(blacklist_characters="[]", blacklist_categories=("Cs",))),
    st.text(min_size=1, alphabet=st.characters(blacklist_characters="[]()", blacklist_categories=("Cs",))),
    st.text(min_size=1, alphabet=st.characters(blacklist_characters="[]()", blacklist_categories=("Cs",))),
    st.text(alphabet=st.characters(blacklist_categories=("Cs",))),
)
def test_render_message_injective_on_parts(kb, fn, args, result):
    # distinct result strings always produce distinct renderings for fixed parts
    rendered = render_message(kb, fn, args, result)
    assert rendered == f"[FROM {kb}][{fn}({args}) -> ] {result}"


class TestAliasList:
    def test_preserves_order_and_preferred(self):
        aliases = AliasList(["Sun Maosong", "Prof. Sun Maosong"])
        assert list(aliases) == ["Sun Maosong", "Prof. Sun Maosong"]
        assert aliases.preferred == "Sun Maosong"

    def test_drops_casefold_duplicates_keeping_first(self):
        aliases = AliasList(["Registered Capital", "registered capital", "Capital"])
        assert list(aliases) == ["Registered Capital", "Capital"]

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            AliasList([])
        with pytest.raises(ValueError):
            AliasList(["", "   "])

    def test_rejects_non_string(self):
        with pytest.raises(ValueError):
            AliasList(["ok", 3])


class TestLanguageDetection:
    def test_english(self):
        assert detect_language("What is the registered capital of Dong Wu Securities?") is Language.ENGLISH

    def test_chinese(self):
        assert detect_language("静夜思的作者是谁？") is Language.CHINESE

    def test_mixed_below_threshold_is_english(self):
        # 2 CJK chars out of 30+ characters stays English
        assert detect_language("what does 诗人 mean in this long English sentence") is Language.ENGLISH

    def test_query_detect(self):
        assert Query.detect("hello").language is Language.ENGLISH
        with pytest.raises(ValueError):
            Query(text="", language=Language.ENGLISH)


class TestTokenize:
    def test_english_words(self):
        assert tokenize("Li Bai") == ["li", "bai"]

    def test_cjk_per_character(self):
        assert tokenize("注册资本") == ["注", "册", "资", "本"]

    def test_mixed(self):
        assert tokenize("capital 资本 x") == ["capital", "资", "本", "x"]


def test_trace_log_records_in_order():
    trace = TraceLog()
    first = trace.record("KB", "get_entity_info", "entity_aliases = ['A']", "A: info")
    second = trace.record("KB", "find_relationship", "entity1_aliases = ['A'], entity2_aliases = ['B']", "")
    assert len(trace) == 2
    assert trace.entries[0].rendered() == first
    assert trace.entries[1].rendered() == second
    assert first == "[FROM KB][get_entity_info(entity_aliases = ['A']) -> ] A: info"


def test_entity_id_and_triple_validation():
    with pytest.raises(ValueError):
        EntityId("KB", "")
    entity = EntityId("KB", "Li Bai")
    with pytest.raises(ValueError):
        Triple(entity, "", "x")
    with pytest.raises(ValueError):
        Triple(entity, "rel", "")


def test_normalize_answer_unifies_width_case_and_space():
    assert normalize_answer("  1.5 billion Yuan ") == normalize_answer("1.5 BILLION YUAN")
    assert normalize_answer("ＡＢＣ１２３") == normalize_answer("abc123")
