from __future__ import annotations

import json

import pytest

import kbqa_support as desk
from knowledgpt.evalkit.runner import (
    QaExample,
    load_multidoc_examples,
    load_qa_tsv,
    run_eval,
    write_report,
)
from knowledgpt.llm.gateway import KnowledgeGateway


def test_dataset_files_match_generator(tmp_path, monkeypatch):
    monkeypatch.setattr(desk, "FIXTURES", tmp_path)
    desk.write_dataset_files()
    for name in ("kb.tsv", "single_hop.tsv", "two_hop.tsv"):
        generated = (tmp_path / name).read_text(encoding="utf-8")
        bundled = (desk.Path(__file__).parent / "fixtures" / "kbqa" / name).read_text(encoding="utf-8")
        assert generated == bundled, f"{name} is stale; regenerate with kbqa_support.py"


def test_load_qa_tsv_round_trip():
    examples = load_qa_tsv(desk.FIXTURES / "single_hop.tsv")
    assert len(examples) == 20
    assert all(e.hops == 1 for e in examples)
    two = load_qa_tsv(desk.FIXTURES / "two_hop.tsv")
    assert len(two) == 10
    assert all(e.hops == 2 for e in two)


def test_load_qa_tsv_rejects_malformed(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("question only\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_qa_tsv(path)
    path.write_text("q\ta\t3\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_qa_tsv(path)
    path.write_text("", encoding="utf-8")
    with pytest.raises(ValueError):
        load_qa_tsv(path)


def test_run_eval_knowledgpt_scores_one(embedder):
    kb = desk.build_kb()
    gateway = KnowledgeGateway(desk.build_scripted())
    dataset = desk.single_hop_examples()[:5]
    report = run_eval(dataset, "knowledgpt", backends=[kb], gateway=gateway, embedder=embedder)
    assert report.aggregate == 1.0
    assert all(row["used_knowledge"] for row in report.rows)


def test_run_eval_bm25_doc_level_mode(embedder):
    kb = desk.build_kb()
    report = run_eval(desk.single_hop_examples(), "bm25", kb=kb)
    assert "doc_level_accuracy" in report.config
    assert all("doc_hit" in row for row in report.rows)
    assert report.config["bm25"] == {"k1": 1.5, "b": 0.75}


def test_run_eval_bm25_matches_direct_replay(embedder):
    from knowledgpt.evalkit.baselines import bm25_baseline
    from knowledgpt.model import normalize_answer

    kb = desk.build_kb()
    dataset = desk.two_hop_examples()
    report = run_eval(dataset, "bm25", kb=kb)
    replay = [bm25_baseline(e.question, kb, e.hops).answer for e in dataset]
    expected = sum(
        normalize_answer(p) == normalize_answer(e.gold_answer) for p, e in zip(replay, dataset)
    ) / len(dataset)
    assert report.aggregate == expected


def test_run_eval_empty_dataset_rejected(embedder):
    with pytest.raises(ValueError):
        run_eval([], "bm25", kb=desk.build_kb())


def test_run_eval_unknown_system_rejected():
    with pytest.raises(ValueError):
        run_eval([QaExample("q", "a", 1)], "bogus", kb=desk.build_kb())


def test_parallel_rows_stay_in_dataset_order(embedder):
    kb = desk.build_kb()
    dataset = desk.single_hop_examples()
    sequential = run_eval(dataset, "bm25", kb=kb, parallelism=1)
    parallel = run_eval(dataset, "bm25", kb=kb, parallelism=4)
    assert sequential.rows == parallel.rows


def test_write_report_files(tmp_path, embedder):
    kb = desk.build_kb()
    report = run_eval(desk.single_hop_examples()[:3], "bm25", kb=kb)
    json_path, table_path = write_report(report, tmp_path / "report.json")
    data = json.loads(json_path.read_text(encoding="utf-8"))
    assert data["aggregate"] == report.aggregate
    assert len(data["rows"]) == 3
    table = table_path.read_text(encoding="utf-8")
    assert "aggregate averaged F1" in table


def test_load_multidoc_examples(tmp_path):
    example = {
        "question": "When was the founder of Gale Harbor Observatory born?",
        "answer": "1881",
        "type": "bridge",
        "documents": [
            {"title": "Gale Harbor Observatory", "text": "Founded by Edwin Platt."},
            {"title": "Edwin Platt", "text": "Edwin Platt was born in 1881."},
        ],
    }
    (tmp_path / "ex1.json").write_text(json.dumps(example), encoding="utf-8")
    examples = load_multidoc_examples(tmp_path)
    assert len(examples) == 1
    assert examples[0].documents[1][0] == "Edwin Platt"
    with pytest.raises(ValueError):
        load_multidoc_examples(tmp_path / "empty")
