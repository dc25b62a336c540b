"""Command-line surface for the claim-normalization pipeline.

Stages compose via files only: each subcommand reads its inputs, writes its
artifacts, and appends a manifest entry to the working directory so any
output can be traced back to config + input digests.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from . import augment as augment_mod
from . import cleaning, corpus, inference, retrieval
from .clients import (
    ChatClient,
    EmbeddingClient,
    MockChatClient,
    MockEmbeddingClient,
    ResponseCache,
)
from .config import PipelineConfig, load_config
from .errors import ClaimNormError, DataError
from .manifest import append_manifest, stage_lock
from .metrics import evaluate_run, format_report_table, load_external_scores
from .plots import plot_comparison, plot_report

ABLATION_LABELS = [
    "w/o CoT + w/o Few-Shot",
    "w/ CoT + w/o Few-Shot",
    "w/ CoT + w/ Few-Shot",
]


def _fail(e: ClaimNormError):
    click.echo(json.dumps({"error": type(e).__name__, "message": str(e)}), err=True)
    sys.exit(e.exit_code)


def _common_config(config_path, **flags) -> PipelineConfig:
    return load_config(config_path, **flags)


def _chat_client(cfg: PipelineConfig, mock: bool):
    cache = ResponseCache(cfg.cache_dir)
    if mock:
        return MockChatClient(cache=cache)
    return ChatClient(
        model=cfg.llm_model,
        cache=cache,
        temperature=cfg.temperature,
        max_tokens=cfg.max_tokens,
    )


def _embed_client(cfg: PipelineConfig, mock: bool):
    if mock:
        return MockEmbeddingClient(dim=cfg.embedding_dim)
    return EmbeddingClient(
        model=cfg.embedding_model,
        cache=ResponseCache(cfg.cache_dir),
        batch_size=cfg.batch_size,
    )


def _load_pairs(path, format, cfg: PipelineConfig, split: str):
    return corpus.load_dataset(path, format=format, language=cfg.language, split=split)


@click.group()
def main():
    """Claim normalization pipeline: clean, filter, augment, retrieve, infer, score."""


def config_options(f):
    f = click.option("--config", "config_path", type=click.Path(), default=None,
                     help="YAML/JSON config file.")(f)
    f = click.option("--language", default=None, help="Dataset language code.")(f)
    return f


@main.command()
@config_options
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv")
@click.option("--split", type=click.Choice(["train", "dev", "test"]), default="train")
def stats(config_path, language, input_path, fmt, split):
    """Record counts and mean post/claim lengths for a dataset."""
    try:
        cfg = _common_config(config_path, language=language)
        pairs = _load_pairs(input_path, fmt, cfg, split)
        st = corpus.dataset_stats(pairs)
        click.echo(json.dumps({
            "n_records": st.n_records,
            "avg_post_len": round(st.avg_post_len, 2),
            "avg_claim_len": round(st.avg_claim_len, 2) if st.avg_claim_len is not None else "-",
        }))
    except ClaimNormError as e:
        _fail(e)


@main.command()
@config_options
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv")
@click.option("--split", type=click.Choice(["train", "dev", "test"]), default="train")
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--workdir", type=click.Path(), default=".")
def clean(config_path, language, input_path, fmt, split, output_path, workdir):
    """Deduplicate repeated sentences within each post."""
    try:
        cfg = _common_config(config_path, language=language)
        started = time.time()
        with stage_lock(workdir):
            pairs = _load_pairs(input_path, fmt, cfg, split)
            cleaned = []
            for p in pairs:
                new_post = corpus.Post(
                    id=p.post.id, language=p.post.language,
                    text=cleaning.dedup_post(p.post.text), split=p.post.split,
                )
                cleaned.append(corpus.PostClaimPair(
                    post=new_post, claim=p.claim, recall_score=p.recall_score,
                ))
            corpus.save_jsonl(cleaned, output_path)
            append_manifest(
                workdir, "clean", cfg.to_dict(), [input_path], [output_path],
                {"in": len(pairs), "out": len(cleaned)}, started,
            )
        click.echo(f"cleaned {len(cleaned)} pairs -> {output_path}")
    except ClaimNormError as e:
        _fail(e)


@main.command("filter")
@config_options
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="jsonl")
@click.option("--split", type=click.Choice(["train", "dev", "test"]), default="train")
@click.option("--threshold", type=float, default=None, help="Recall retention threshold.")
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--workdir", type=click.Path(), default=".")
def filter_cmd(config_path, language, input_path, fmt, split, threshold,
               output_path, report_path, workdir):
    """Drop pairs whose claim has insufficient token recall against the post."""
    try:
        cfg = _common_config(config_path, language=language, recall_threshold=threshold)
        started = time.time()
        with stage_lock(workdir):
            pairs = _load_pairs(input_path, fmt, cfg, split)
            retained, removed = cleaning.filter_pairs(pairs, cfg.recall_threshold)
            corpus.save_jsonl(retained, output_path)
            report_path = report_path or str(Path(output_path).with_suffix(".report.jsonl"))
            cleaning.write_filter_report(retained, removed, cfg.recall_threshold, report_path)
            append_manifest(
                workdir, "filter", cfg.to_dict(), [input_path],
                [output_path, report_path],
                {"in": len(pairs), "out": len(retained), "removed": len(removed)},
                started,
            )
        click.echo(f"retained {len(retained)}, removed {len(removed)} -> {output_path}")
    except ClaimNormError as e:
        _fail(e)


@main.command("augment")
@config_options
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--mock-llm", is_flag=True, default=False)
@click.option("--workdir", type=click.Path(), default=".")
def augment_cmd(config_path, language, input_path, output_path, mock_llm, workdir):
    """Generate 5W1H reasoning for every filtered pair via the LLM."""
    try:
        cfg = _common_config(config_path, language=language)
        started = time.time()
        with stage_lock(workdir):
            pairs = _load_pairs(input_path, "jsonl", cfg, "train")
            llm = _chat_client(cfg, mock_llm)
            examples, dead = augment_mod.augment_pairs(
                pairs, llm, concurrency=cfg.concurrency
            )
            augment_mod.save_examples(examples, output_path)
            outputs = [output_path]
            if dead:
                dead_path = str(Path(output_path).with_suffix(".dead.jsonl"))
                with open(dead_path, "w", encoding="utf-8") as f:
                    for d in dead:
                        f.write(json.dumps({
                            "id": d.pair.post.id, "error": d.error,
                        }) + "\n")
                outputs.append(dead_path)
            append_manifest(
                workdir, "augment", cfg.to_dict(), [input_path], outputs,
                {"in": len(pairs), "out": len(examples), "dead_lettered": len(dead)},
                started,
            )
        click.echo(f"augmented {len(examples)} pairs ({len(dead)} dead letters) -> {output_path}")
    except ClaimNormError as e:
        _fail(e)


@main.command("index")
@config_options
@click.option("--examples", "examples_path", required=True, type=click.Path())
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--replace-subsets/--no-replace-subsets", "do_replace", default=True,
              help="Swap subset posts for their longer supersets before indexing.")
@click.option("--mock-llm", "mock", is_flag=True, default=False,
              help="Use the offline mock embedder.")
@click.option("--workdir", type=click.Path(), default=".")
def index_cmd(config_path, language, examples_path, output_path, do_replace, mock, workdir):
    """Embed training posts and build the exact-search vector index."""
    try:
        cfg = _common_config(config_path, language=language)
        started = time.time()
        with stage_lock(workdir):
            examples = augment_mod.load_examples(examples_path)
            if not examples:
                raise DataError(f"{examples_path}: no training examples")
            embedder = _embed_client(cfg, mock)
            index = retrieval.build_index(examples, embedder)
            n_replaced = 0
            outputs = [output_path]
            if do_replace:
                examples, log = retrieval.replace_subsets(
                    examples, index, k=cfg.k,
                    sim_threshold=cfg.superset_sim_threshold,
                    coverage_threshold=cfg.superset_coverage_threshold,
                )
                n_replaced = len(log)
                if log:
                    # re-embed so the index matches the replaced texts
                    index = retrieval.build_index(examples, embedder)
                    replaced_path = str(Path(examples_path).with_suffix(".replaced.jsonl"))
                    augment_mod.save_examples(examples, replaced_path)
                    log_path = str(Path(output_path).with_suffix(".replacements.jsonl"))
                    with open(log_path, "w", encoding="utf-8") as f:
                        for r in log:
                            f.write(json.dumps({
                                "subset_id": r.subset_id,
                                "superset_id": r.superset_id,
                                "similarity": round(r.similarity, 6),
                            }) + "\n")
                    outputs += [replaced_path, log_path]
            index.save(output_path)
            append_manifest(
                workdir, "index", cfg.to_dict(), [examples_path], outputs,
                {"in": len(examples), "out": len(index), "replaced": n_replaced},
                started,
            )
        click.echo(f"indexed {len(index)} posts (dim {index.dim}, {n_replaced} replaced) -> {output_path}")
    except ClaimNormError as e:
        _fail(e)


@main.command("infer")
@config_options
@click.option("--posts", "posts_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="jsonl")
@click.option("--split", type=click.Choice(["train", "dev", "test"]), default="test")
@click.option("--examples", "examples_path", type=click.Path(), default=None)
@click.option("--index", "index_path", type=click.Path(), default=None)
@click.option("--k", type=int, default=None)
@click.option("--output", "output_path", required=True, type=click.Path(),
              help="Predictions CSV; a JSONL twin is written next to it.")
@click.option("--no-fewshot", is_flag=True, default=False)
@click.option("--no-reasoning", is_flag=True, default=False)
@click.option("--mock-llm", is_flag=True, default=False)
@click.option("--workdir", type=click.Path(), default=".")
def infer_cmd(config_path, language, posts_path, fmt, split, examples_path,
              index_path, k, output_path, no_fewshot, no_reasoning, mock_llm, workdir):
    """Generate normalized claims for unseen posts."""
    try:
        cfg = _common_config(config_path, language=language, k=k)
        started = time.time()
        with stage_lock(workdir):
            pairs = _load_pairs(posts_path, fmt, cfg, split)
            posts = [p.post for p in pairs]
            index = retrieval.VectorIndex.load(index_path) if index_path else None
            example_map = {}
            if examples_path:
                example_map = {
                    ex.pair.post.id: ex for ex in augment_mod.load_examples(examples_path)
                }
            llm = _chat_client(cfg, mock_llm)
            embedder = _embed_client(cfg, mock_llm)
            predictions, run_report = inference.normalize_batch(
                posts, index, example_map, llm, embedder,
                k=cfg.k, use_reasoning=not no_reasoning,
                use_fewshot=not no_fewshot,
                most_similar_last=cfg.most_similar_last,
                concurrency=cfg.concurrency,
            )
            jsonl_path = str(Path(output_path).with_suffix(".jsonl"))
            inference.save_predictions(predictions, output_path, jsonl_path)
            report_path = str(Path(output_path).with_suffix(".run.json"))
            Path(report_path).write_text(json.dumps(run_report.to_dict(), indent=2))
            inputs = [posts_path] + [p for p in (examples_path, index_path) if p]
            append_manifest(
                workdir, "infer", cfg.to_dict(), inputs,
                [output_path, jsonl_path, report_path],
                {"in": len(posts), "out": run_report.n_success,
                 "dead_lettered": run_report.n_dead_letters},
                started,
            )
        click.echo(f"predicted {run_report.n_success}/{len(posts)} -> {output_path}")
    except ClaimNormError as e:
        _fail(e)


@main.command("evaluate")
@config_options
@click.option("--predictions", "pred_path", required=True, type=click.Path(),
              help="Predictions JSONL from infer.")
@click.option("--references", "ref_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="jsonl")
@click.option("--split", type=click.Choice(["train", "dev", "test"]), default="dev")
@click.option("--external-scores", "external_path", type=click.Path(), default=None,
              help="JSONL of precomputed per-pair scores (e.g. BERTScore).")
@click.option("--output", "output_path", required=True, type=click.Path(),
              help="Report JSON; .txt table and .png figure are written next to it.")
@click.option("--workdir", type=click.Path(), default=".")
def evaluate_cmd(config_path, language, pred_path, ref_path, fmt, split,
                 external_path, output_path, workdir):
    """Score predictions against gold claims with BLEU/ROUGE/METEOR."""
    try:
        cfg = _common_config(config_path, language=language)
        started = time.time()
        with stage_lock(workdir):
            predictions = inference.load_predictions(pred_path)
            references = _load_pairs(ref_path, fmt, cfg, split)
            external = load_external_scores(external_path) if external_path else None
            scorable = [p for p in predictions if not p.dead_letter]
            report = evaluate_run(scorable, references, cfg.language, external)
            out = Path(output_path)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
            table_path = out.with_suffix(".txt")
            table_path.write_text(format_report_table([report]) + "\n", encoding="utf-8")
            fig_path = out.with_suffix(".png")
            plot_report(report, fig_path)
            append_manifest(
                workdir, "evaluate", cfg.to_dict(), [pred_path, ref_path],
                [str(out), str(table_path), str(fig_path)],
                {"in": len(references), "scored": report.n - report.n_missing,
                 "missing": report.n_missing}, started,
            )
        click.echo(format_report_table([report]))
    except ClaimNormError as e:
        _fail(e)


@main.command("ablate")
@config_options
@click.option("--dev", "dev_path", required=True, type=click.Path(),
              help="Dev pairs with gold claims (JSONL).")
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="jsonl")
@click.option("--examples", "examples_path", type=click.Path(), default=None)
@click.option("--index", "index_path", type=click.Path(), default=None)
@click.option("--k", type=int, default=None)
@click.option("--output", "output_path", required=True, type=click.Path(),
              help="Ablation report JSON; .txt and .png twins are written next to it.")
@click.option("--mock-llm", is_flag=True, default=False)
@click.option("--workdir", type=click.Path(), default=".")
def ablate_cmd(config_path, language, dev_path, fmt, examples_path, index_path,
               k, output_path, mock_llm, workdir):
    """Compare no-reasoning, reasoning, and reasoning+few-shot configurations."""
    try:
        cfg = _common_config(config_path, language=language, k=k)
        started = time.time()
        with stage_lock(workdir):
            pairs = _load_pairs(dev_path, fmt, cfg, "dev")
            posts = [p.post for p in pairs]
            index = retrieval.VectorIndex.load(index_path) if index_path else None
            example_map = {}
            if examples_path:
                example_map = {
                    ex.pair.post.id: ex for ex in augment_mod.load_examples(examples_path)
                }
            llm = _chat_client(cfg, mock_llm)
            embedder = _embed_client(cfg, mock_llm)

            variants = [
                {"use_reasoning": False, "use_fewshot": False},
                {"use_reasoning": True, "use_fewshot": False},
                {"use_reasoning": True, "use_fewshot": True},
            ]
            rows = []
            for label, variant in zip(ABLATION_LABELS, variants):
                try:
                    predictions, _ = inference.normalize_batch(
                        posts, index, example_map, llm, embedder,
                        k=cfg.k, concurrency=cfg.concurrency,
                        most_similar_last=cfg.most_similar_last, **variant,
                    )
                    scorable = [p for p in predictions if not p.dead_letter]
                    report = evaluate_run(scorable, pairs, cfg.language)
                    rows.append({"label": label, "report": report, "error": None})
                except ClaimNormError as e:
                    rows.append({"label": label, "report": None, "error": str(e)})

            out = Path(output_path)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(json.dumps([
                {"configuration": r["label"],
                 **(r["report"].to_dict() if r["report"] else {"failed": r["error"]})}
                for r in rows
            ], indent=2), encoding="utf-8")

            ok_rows = [r for r in rows if r["report"]]
            table = format_report_table(
                [r["report"] for r in ok_rows], [r["label"] for r in ok_rows]
            )
            for r in rows:
                if r["report"] is None:
                    table += f"\n{r['label']:<24}FAILED: {r['error']}"
            table_path = out.with_suffix(".txt")
            table_path.write_text(table + "\n", encoding="utf-8")
            fig_path = out.with_suffix(".png")
            if ok_rows:
                plot_comparison(
                    [r["report"] for r in ok_rows], [r["label"] for r in ok_rows],
                    fig_path, title="Ablation: reasoning and few-shot retrieval",
                )
            inputs = [dev_path] + [p for p in (examples_path, index_path) if p]
            append_manifest(
                workdir, "ablate", cfg.to_dict(), inputs,
                [str(out), str(table_path), str(fig_path)],
                {"in": len(pairs), "variants_ok": len(ok_rows),
                 "variants_failed": len(rows) - len(ok_rows)}, started,
            )
        click.echo(table)
        if len(ok_rows) < len(rows):
            sys.exit(4)
    except ClaimNormError as e:
        _fail(e)


if __name__ == "__main__":
    main()
