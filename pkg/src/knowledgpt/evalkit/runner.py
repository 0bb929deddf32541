"""Dataset loaders and the evaluation driver.

Dataset formats:

- QA TSV: UTF-8 lines of ``question\tanswer\thops``.
- multi-document QA: a directory with one JSON file per example,
  ``{"question": ..., "answer": ..., "type": ..., "documents": [{"title": ..., "text": ...}]}``.

Reports carry per-example rows, the aggregate score, and an echo of the scoring
configuration; they serialize to JSON plus a human-readable table.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from knowledgpt.evalkit.baselines import bm25_baseline, embedding_baseline
from knowledgpt.evalkit.bm25 import Bm25Params
from knowledgpt.evalkit.metrics import averaged_f1
from knowledgpt.model import Query, normalize_answer

SYSTEMS = ("knowledgpt", "bm25", "embedding")


@dataclass(frozen=True)
class QaExample:
    question: str
    gold_answer: str
    hops: int = 1
    supporting: tuple[tuple[str, str, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.gold_answer:
            raise ValueError("gold answer must be non-empty")
        if self.hops not in (1, 2):
            raise ValueError("hops must be 1 or 2")


@dataclass(frozen=True)
class MultiDocExample:
    question: str
    answer: str
    documents: tuple[tuple[str, str], ...]  # (title, text)
    qtype: str = "bridge"


@dataclass
class EvalReport:
    system: str
    aggregate: float
    rows: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "system": self.system,
                "aggregate": self.aggregate,
                "config": self.config,
                "rows": self.rows,
            },
            ensure_ascii=False,
            indent=2,
            sort_keys=True,
        )

    def table(self) -> str:
        lines = [
            f"system: {self.system}",
            f"aggregate averaged F1: {self.aggregate:.4f}",
            "",
            f"{'#':>3}  {'ok':2}  question -> prediction (gold)",
        ]
        for row in self.rows:
            mark = "y" if row["correct"] else "n"
            lines.append(
                f"{row['index']:>3}  {mark:2}  {row['question']} -> "
                f"{row['prediction']} ({row['gold']})"
            )
        return "\n".join(lines)


def load_qa_tsv(path: str | Path) -> list[QaExample]:
    examples: list[QaExample] = []
    for number, line in enumerate(
        Path(path).read_text(encoding="utf-8").split("\n"), start=1
    ):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ValueError(f"{path}:{number}: expected question\\tanswer\\thops")
        question, answer, hops = (f.strip() for f in fields)
        if hops not in ("1", "2"):
            raise ValueError(f"{path}:{number}: hops must be 1 or 2, got {hops!r}")
        examples.append(QaExample(question, answer, int(hops)))
    if not examples:
        raise ValueError(f"{path}: no examples")
    return examples


def load_multidoc_examples(directory: str | Path) -> list[MultiDocExample]:
    examples: list[MultiDocExample] = []
    for path in sorted(Path(directory).glob("*.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        documents = tuple(
            (str(d["title"]), str(d["text"])) for d in data.get("documents", [])
        )
        examples.append(
            MultiDocExample(
                question=str(data["question"]),
                answer=str(data["answer"]),
                documents=documents,
                qtype=str(data.get("type", "bridge")),
            )
        )
    if not examples:
        raise ValueError(f"{directory}: no examples")
    return examples


def run_eval(
    dataset: list[QaExample],
    system: str,
    *,
    kb=None,
    backends=None,
    gateway=None,
    embedder=None,
    bm25_params: Bm25Params | None = None,
    retrieval_config=None,
    parallelism: int = 1,
) -> EvalReport:
    """Score one system over the dataset; rows stay in dataset order."""
    if not dataset:
        raise ValueError("dataset is empty")
    if system not in SYSTEMS:
        raise ValueError(f"unknown system {system!r} (choose from {', '.join(SYSTEMS)})")
    params = bm25_params or Bm25Params()

    def evaluate(pair: tuple[int, QaExample]) -> dict:
        index, example = pair
        row: dict = {
            "index": index,
            "question": example.question,
            "gold": example.gold_answer,
            "hops": example.hops,
        }
        if system == "knowledgpt":
            from knowledgpt.retrieval import answer_query

            result = answer_query(
                Query.detect(example.question),
                backends or [],
                gateway,
                embedder,
                retrieval_config,
            )
            row["prediction"] = result.answer
            row["halted"] = any(o.halted_early for o in result.outcomes.values())
            row["used_knowledge"] = result.used_knowledge
        elif system == "bm25":
            result = bm25_baseline(example.question, kb, example.hops, params)
            row["prediction"] = result.answer
            row["zero_confidence"] = result.zero_confidence
            if example.supporting:
                stored = {
                    (t.head.local_id, t.relation, t.tail)
                    for t in result.final_doc_triples
                }
                row["doc_hit"] = any(tuple(s) in stored for s in example.supporting)
        else:
            result = embedding_baseline(example.question, kb, embedder, example.hops)
            row["prediction"] = result.answer
        row["correct"] = normalize_answer(row["prediction"]) == normalize_answer(
            example.gold_answer
        )
        return row

    pairs = list(enumerate(dataset))
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            rows = list(pool.map(evaluate, pairs))
    else:
        rows = [evaluate(pair) for pair in pairs]
    aggregate = averaged_f1(
        [row["prediction"] for row in rows], [e.gold_answer for e in dataset]
    )
    config: dict = {"system": system, "examples": len(dataset)}
    if system == "bm25":
        config["bm25"] = {"k1": params.k1, "b": params.b}
        hits = [row["doc_hit"] for row in rows if "doc_hit" in row]
        if hits:
            config["doc_level_accuracy"] = sum(hits) / len(hits)
    return EvalReport(system=system, aggregate=aggregate, rows=rows, config=config)


def write_report(report: EvalReport, path: str | Path) -> tuple[Path, Path]:
    """Write the JSON report at ``path`` and the table next to it as ``.txt``."""
    json_path = Path(path)
    table_path = (
        json_path.with_suffix(".txt")
        if json_path.suffix and json_path.suffix != ".txt"
        else json_path.with_name(json_path.name + ".txt")
    )
    json_path.write_text(report.to_json() + "\n", encoding="utf-8")
    table_path.write_text(report.table() + "\n", encoding="utf-8")
    return json_path, table_path
