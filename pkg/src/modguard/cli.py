"""Command-line entry points: ingest, serve, evaluate, ablate.

Every verb exits 0 on success; failures print one machine-readable error
line (``error=<code> detail=...``) and exit non-zero.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import ServiceConfig
from .core import Label, Post
from .errors import ModerationError
from .evalharness import render_metrics_table, run_ablation, run_eval
from .guidelines import load_guideline_documents
from .vector_index import read_corpus_tsv
from .wiring import agent_config_from, build_annotator, build_runtime


def _fail(code: str, detail: str):
    click.echo(f"error={code} detail={detail}", err=True)
    sys.exit(1)


def _load_config(path: str | None) -> ServiceConfig:
    try:
        return ServiceConfig.load(path)
    except FileNotFoundError:
        _fail("config-not-found", f"no config file at {path}")
    except (ValueError, TypeError) as exc:
        _fail("config-invalid", str(exc))


@click.group()
def main():
    """Content-moderation agent toolkit."""


@main.command("ingest-posts")
@click.option("--corpus", required=True, type=click.Path(exists=True), help="TSV: id<TAB>label<TAB>text")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def ingest_posts(corpus, config_path):
    """Embed and index a labelled post corpus."""
    config = _load_config(config_path)
    try:
        runtime = build_runtime(config, require_indexes=False)
        report = runtime.post_index.ingest_corpus(read_corpus_tsv(corpus), runtime.embedder)
        if runtime.post_index._path is None:
            runtime.post_index.save(config.post_index_path)
    except ModerationError as exc:
        _fail("ingest-failed", str(exc))
    click.echo(f"ingested {report.ingested}")
    for i, reason in report.failures:
        click.echo(f"failed record {i}: {reason}", err=True)


@main.command("ingest-guidelines")
@click.option("--dir", "directory", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def ingest_guidelines(directory, config_path):
    """Chunk, annotate, and index platform policy markdown files."""
    config = _load_config(config_path)
    try:
        runtime = build_runtime(config, require_indexes=False)
        docs = load_guideline_documents(directory)
        report = runtime.guideline_store.ingest(docs, build_annotator(config), runtime.embedder)
        runtime.guideline_store.save(config.guideline_index_path)
    except ModerationError as exc:
        _fail("ingest-failed", str(exc))
    click.echo(f"indexed {report.indexed} chunks")
    for chunk_id, reason in report.failures:
        click.echo(f"failed chunk {chunk_id}: {reason}", err=True)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve(config_path):
    """Run the HTTP service."""
    import uvicorn

    from .feedback import FeedbackStore
    from .service import build_app

    config = _load_config(config_path)
    try:
        runtime = build_runtime(config, require_indexes=True)
    except FileNotFoundError as exc:
        _fail("index-missing", str(exc))
    except ModerationError as exc:
        _fail("index-corrupt", str(exc))
    store = FeedbackStore(runtime.post_index, runtime.embedder, config.feedback_log_path)
    app = build_app(agent_config_from(config), runtime, store, cors_origin=config.cors_origin)
    host, _, port = config.listen.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080))


def _load_eval_corpus(path) -> list[tuple[Post, Label]]:
    corpus = []
    for i, (text, label) in enumerate(read_corpus_tsv(path)):
        if text.strip():
            corpus.append((Post(id=f"eval-{i:05d}", text=text), label))
    return corpus


@main.command("eval")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--mode", type=click.Choice(["planner", "fallback"]), default=None)
@click.option("--out", type=click.Path(), default=None)
def eval_cmd(corpus, config_path, mode, out):
    """Evaluate the agent on a labelled corpus and write a run directory."""
    config = _load_config(config_path)
    if mode:
        config.mode = mode
    try:
        runtime = build_runtime(config, require_indexes=False)
        agent_config = agent_config_from(config)
        report = run_eval(_load_eval_corpus(corpus), agent_config, runtime, out_dir=out)
    except ModerationError as exc:
        _fail("eval-failed", str(exc))
    click.echo(render_metrics_table([("this_run", report.result)]), nl=False)
    if report.errors:
        click.echo(f"posts scored as not_hate after decision failure: {report.errors}")


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--mode", type=click.Choice(["planner", "fallback"]), default=None)
@click.option("--out", type=click.Path(), default=None)
def ablate(corpus, config_path, mode, out):
    """Run the six-configuration tool-ablation matrix."""
    config = _load_config(config_path)
    if mode:
        config.mode = mode
    try:
        runtime = build_runtime(config, require_indexes=False)
        agent_config = agent_config_from(config)
        rows = run_ablation(_load_eval_corpus(corpus), agent_config, runtime, out_dir=out)
    except ModerationError as exc:
        _fail("ablate-failed", str(exc))
    click.echo(
        render_metrics_table([(r.config_name, r.result) for r in rows]), nl=False
    )


if __name__ == "__main__":
    main()
