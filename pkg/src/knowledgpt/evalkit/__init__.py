from knowledgpt.evalkit.baselines import BaselineResult, bm25_baseline, embedding_baseline
from knowledgpt.evalkit.bm25 import Bm25Index, Bm25Params
from knowledgpt.evalkit.metrics import (
    ablation_coverage,
    averaged_f1,
    build_word_set,
    word_recall,
)
from knowledgpt.evalkit.runner import (
    EvalReport,
    MultiDocExample,
    QaExample,
    load_multidoc_examples,
    load_qa_tsv,
    run_eval,
    write_report,
)

__all__ = [
    "BaselineResult",
    "Bm25Index",
    "Bm25Params",
    "EvalReport",
    "MultiDocExample",
    "QaExample",
    "ablation_coverage",
    "averaged_f1",
    "bm25_baseline",
    "build_word_set",
    "embedding_baseline",
    "load_multidoc_examples",
    "load_qa_tsv",
    "run_eval",
    "word_recall",
    "write_report",
]
