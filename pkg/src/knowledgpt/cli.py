"""Command-line surface: ask questions, store documents, import KBs, run
evaluations, and an interactive loop.

Exit codes: 0 success, 2 usage or configuration error, 3 provider error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from knowledgpt.config import (
    PKB_TAG,
    AppConfig,
    ConfigError,
    build_backend,
    build_embedder,
    build_file_kb,
    build_gateway,
    load_config,
)
from knowledgpt.kb.filekb import FormatError, load_file_kb
from knowledgpt.llm.gateway import MalformedOutput
from knowledgpt.llm.providers import ProviderError
from knowledgpt.model import Query
from knowledgpt.pkb import PkbBackend, PkbStore, load as load_pkb, store_document
from knowledgpt.retrieval import answer_query

EXIT_CONFIG = 2
EXIT_PROVIDER = 3


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(config_path: str | None, **overrides) -> AppConfig:
    try:
        return load_config(config_path, **overrides)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))


def _open_pkb(config: AppConfig) -> PkbStore | None:
    if not config.pkb_path:
        return None
    path = Path(config.pkb_path)
    if path.exists():
        return load_pkb(path)
    return PkbStore(path=path)


def _select_backends(config: AppConfig, query: Query, tags: tuple[str, ...], pkb: PkbStore | None, embedder):
    try:
        file_backends = {entry.tag: build_backend(entry) for entry in config.kbs}
    except (ConfigError, FormatError, OSError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    available = dict(file_backends)
    if pkb is not None:
        available[PKB_TAG] = PkbBackend(pkb, embedder)
    if tags:
        missing = [t for t in tags if t not in available]
        if missing:
            _fail(EXIT_CONFIG, f"unknown KB tag(s): {', '.join(missing)}")
        return [available[t] for t in tags]
    routed = config.routing.get(query.language.value)
    if routed is None:
        selected = list(file_backends.values())
    else:
        unknown = [t for t in routed if t not in available]
        if unknown:
            _fail(EXIT_CONFIG, f"routing references unknown KB tag(s): {', '.join(unknown)}")
        selected = [available[t] for t in routed]
    if pkb is not None and all(b.kb_tag != PKB_TAG for b in selected):
        selected.append(available[PKB_TAG])
    return selected


def _run_ask(question: str, config: AppConfig, tags: tuple[str, ...], no_kb: bool, show_trace: bool) -> None:
    try:
        gateway = build_gateway(config)
        embedder = build_embedder(config)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    query = Query.detect(question)
    pkb = _open_pkb(config)
    backends = [] if no_kb else _select_backends(config, query, tags, pkb, embedder)
    try:
        result = answer_query(query, backends, gateway, embedder, config.retrieval_config())
    except (ProviderError, MalformedOutput) as exc:
        _fail(EXIT_PROVIDER, str(exc))
    click.echo(result.answer)
    if show_trace:
        for tag, trace in result.traces.items():
            click.echo(f"--- trace [{tag}] ---", err=True)
            for entry in trace:
                click.echo(entry.rendered(), err=True)


@click.group()
def main() -> None:
    """Ask questions over knowledge bases, store documents into the personal KB,
    import KB files, and evaluate retrieval quality."""


@main.command()
@click.argument("question")
@click.option("--config", "config_path", type=str, default=None, help="Config file path.")
@click.option("--kb", "tags", multiple=True, help="Restrict to these KB tags.")
@click.option("--pkb", "pkb_path", type=str, default=None, help="Personal KB file.")
@click.option("--fixtures", "fixtures_dir", type=str, default=None, help="Scripted LLM fixtures.")
@click.option("--show-trace", is_flag=True, help="Print per-KB call traces to stderr.")
@click.option("--no-kb", is_flag=True, help="Answer directly without touching any KB.")
def ask(question, config_path, tags, pkb_path, fixtures_dir, show_trace, no_kb) -> None:
    """Answer QUESTION with knowledge retrieved from the configured KBs."""
    config = _load_config(config_path, pkb_path=pkb_path, fixtures_dir=fixtures_dir)
    _run_ask(question, config, tags, no_kb, show_trace)


@main.command()
@click.option("--config", "config_path", type=str, default=None)
@click.option("--pkb", "pkb_path", type=str, default=None, help="Personal KB file.")
@click.option("--fixtures", "fixtures_dir", type=str, default=None)
@click.option("--file", "doc_path", type=str, default=None, help="Document file (default: stdin).")
def store(config_path, pkb_path, fixtures_dir, doc_path) -> None:
    """Extract knowledge from a document and store it in the personal KB."""
    config = _load_config(config_path, pkb_path=pkb_path, fixtures_dir=fixtures_dir)
    if not config.pkb_path:
        _fail(EXIT_CONFIG, "no personal KB path configured (use --pkb)")
    if doc_path is not None:
        source = Path(doc_path)
        if not source.exists():
            _fail(EXIT_CONFIG, f"document not found: {source}")
        document = source.read_text(encoding="utf-8")
    else:
        document = sys.stdin.read()
    if not document.strip():
        _fail(EXIT_CONFIG, "document is empty")
    try:
        gateway = build_gateway(config)
        embedder = build_embedder(config)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    pkb = _open_pkb(config)
    assert pkb is not None
    try:
        ids = store_document(document, pkb, gateway, embedder)
    except (ProviderError, MalformedOutput) as exc:
        _fail(EXIT_PROVIDER, str(exc))
    except OSError as exc:
        _fail(EXIT_CONFIG, f"cannot write personal KB: {exc}")
    click.echo(f"stored {len(ids)} records")


@main.command(name="import")
@click.argument("path")
@click.option("--format", "kb_format", type=click.Choice(["triples_tsv", "nlpcc_tsv"]), default="triples_tsv")
@click.option("--out", "tag", default="FileKB", help="Tag to register the KB under.")
@click.option("--config", "config_path", type=str, default=None, help="Config file to append the KB entry to.")
def import_kb(path, kb_format, tag, config_path) -> None:
    """Load a KB file, report row counts, and optionally register it in the config."""
    source = Path(path)
    if not source.exists():
        _fail(EXIT_CONFIG, f"KB file not found: {source}")
    try:
        kb = load_file_kb(source, format=kb_format, kb_tag=tag)
    except FormatError as exc:
        _fail(EXIT_CONFIG, str(exc))
    except OSError as exc:
        _fail(EXIT_CONFIG, f"cannot read {source}: {exc}")
    if kb.malformed_lines:
        click.echo(f"{kb.triple_count} triples, {kb.malformed_lines} skipped")
    else:
        click.echo(f"{kb.triple_count} triples")
    if config_path is not None:
        entry = (
            f'\n[[kb]]\ntag = "{tag}"\ntype = "{kb_format}"\npath = "{source.resolve()}"\n'
        )
        with open(config_path, "a", encoding="utf-8") as handle:
            handle.write(entry)
        click.echo(f"registered {tag} in {config_path}")


@main.command(name="eval")
@click.option("--dataset", "dataset_path", required=True, type=str)
@click.option("--system", "system", required=True, type=str)
@click.option("--kb", "tag", default=None, help="KB tag to evaluate against.")
@click.option("--report", "report_path", default=None, type=str)
@click.option("--config", "config_path", type=str, default=None)
@click.option("--fixtures", "fixtures_dir", type=str, default=None)
def eval_cmd(dataset_path, system, tag, report_path, config_path, fixtures_dir) -> None:
    """Evaluate a system over a QA dataset and write the report files."""
    from knowledgpt.evalkit.runner import SYSTEMS, load_qa_tsv, run_eval, write_report

    config = _load_config(config_path, fixtures_dir=fixtures_dir)
    if system not in SYSTEMS:
        _fail(EXIT_CONFIG, f"unknown system {system!r} (choose from {', '.join(SYSTEMS)})")
    try:
        dataset = load_qa_tsv(dataset_path)
    except (OSError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    entries = [e for e in config.kbs if tag is None or e.tag == tag]
    if not entries:
        _fail(EXIT_CONFIG, f"no configured KB matches tag {tag!r}")
    if entries[0].type == "remote":
        _fail(EXIT_CONFIG, "evaluation requires a file-backed KB")
    try:
        kb = build_file_kb(entries[0])
        embedder = build_embedder(config)
        gateway = build_gateway(config) if system == "knowledgpt" else None
    except (ConfigError, FormatError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        report = run_eval(
            dataset,
            system,
            kb=kb,
            backends=[kb],
            gateway=gateway,
            embedder=embedder,
            retrieval_config=config.retrieval_config(),
        )
    except (ProviderError, MalformedOutput) as exc:
        _fail(EXIT_PROVIDER, str(exc))
    click.echo(f"aggregate averaged F1: {report.aggregate:.4f}")
    if report_path is not None:
        json_path, table_path = write_report(report, report_path)
        click.echo(f"report written to {json_path} and {table_path}")


@main.command()
@click.option("--config", "config_path", type=str, default=None)
@click.option("--kb", "tags", multiple=True)
@click.option("--pkb", "pkb_path", type=str, default=None)
@click.option("--fixtures", "fixtures_dir", type=str, default=None)
@click.option("--show-trace", is_flag=True)
def repl(config_path, tags, pkb_path, fixtures_dir, show_trace) -> None:
    """Interactive loop: each line is a question; ':store FILE' adds to the
    personal KB; ':quit' exits."""
    config = _load_config(config_path, pkb_path=pkb_path, fixtures_dir=fixtures_dir)
    try:
        gateway = build_gateway(config)
        embedder = build_embedder(config)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    pkb = _open_pkb(config)
    while True:
        try:
            line = input("> ").strip()
        except EOFError:
            break
        if not line:
            continue
        if line.startswith(":"):
            parts = line.split(None, 1)
            if parts[0] == ":quit":
                break
            if parts[0] == ":store":
                if len(parts) != 2:
                    click.echo("error: usage :store <file>", err=True)
                    continue
                source = Path(parts[1])
                if not source.exists():
                    click.echo(f"error: document not found: {source}", err=True)
                    continue
                if pkb is None:
                    click.echo("error: no personal KB configured", err=True)
                    continue
                try:
                    ids = store_document(source.read_text(encoding="utf-8"), pkb, gateway, embedder)
                except (ProviderError, MalformedOutput, OSError) as exc:
                    click.echo(f"error: {exc}", err=True)
                    continue
                click.echo(f"stored {len(ids)} records")
                continue
            click.echo(f"error: unknown directive {parts[0]}", err=True)
            continue
        query = Query.detect(line)
        backends = _select_backends(config, query, tags, pkb, embedder)
        try:
            result = answer_query(query, backends, gateway, embedder, config.retrieval_config())
        except (ProviderError, MalformedOutput) as exc:
            click.echo(f"error: {exc}", err=True)
            continue
        click.echo(result.answer)
        if show_trace:
            for kb_tag, trace in result.traces.items():
                for entry in trace:
                    click.echo(f"[{kb_tag}] {entry.rendered()}", err=True)


if __name__ == "__main__":
    main()
