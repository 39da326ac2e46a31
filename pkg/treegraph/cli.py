"""Command-line interface for treegraph."""

import logging
from dataclasses import replace
from pathlib import Path

import click
from dotenv import load_dotenv

from treegraph import __version__
from treegraph.config import TrainConfig, config, load_config
from treegraph.exceptions import TreegraphError
from treegraph.services import (
    ABLATION_VARIANTS,
    ablate,
    chunk_analysis,
    compare_ablations,
    cross_validate,
    evaluate,
    load_checkpoint,
    load_corpus,
    parse_ablation_flags,
    planted_corpus,
    primary_metric,
    save_checkpoint,
    save_corpus,
    train,
    tune_tau,
)
from treegraph.utils import (
    format_mean_std,
    write_ablation_table,
    write_chunks_csv,
    write_history_csv,
    write_jsonl,
    write_metrics_json,
    write_tau_table,
)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class TreegraphGroup(click.Group):
    """Command group that reads ``.env`` and maps treegraph errors to exit codes."""

    def main(self, *args, **kwargs):
        load_dotenv()
        return super().main(*args, **kwargs)

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except TreegraphError as e:
            click.echo(f"Error: {e}", err=True)
            ctx.exit(e.exit_code)


def config_options(f):
    """Options shared by every command that builds a TrainConfig."""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON config file."),
        click.option("--preset", type=click.Choice(sorted(config)), default="default", show_default=True),
        click.option("--seed", type=int, help="Random seed."),
        click.option("--tau", type=float, help="Sentence selection threshold in (0, 1)."),
        click.option("--ablate", "ablate_flags", help="Comma-separated ablation flags."),
        click.option("--threads", type=int, help="Worker threads for batch gradients."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def build_config(config_path, preset, seed, tau, ablate_flags, threads) -> TrainConfig:
    """Preset, then file and environment, then command-line flags."""
    cfg = load_config(config_path, preset)
    if ablate_flags is not None:
        cfg = ablate(cfg, parse_ablation_flags(ablate_flags))
    return cfg.with_overrides(seed=seed, tau=tau, threads=threads)


def out_dir(path: str) -> Path:
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def corpus_option(f):
    return click.option(
        "--corpus", required=True, type=click.Path(exists=True, dir_okay=False), help="JSON-lines corpus."
    )(f)


def model_option(f):
    return click.option(
        "--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False),
        help="Checkpoint written by 'train'.",
    )(f)


@click.group(cls=TreegraphGroup)
@click.option(
    "--log-level",
    envvar="TREEGRAPH_LOG_LEVEL",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    default="INFO",
    show_default=True,
)
@click.version_option(__version__, prog_name="treegraph")
def main(log_level):
    """treegraph - long-document classifier over syntax trees and document graphs."""
    logging.basicConfig(level=log_level.upper(), format=LOG_FORMAT)


@main.command("train")
@corpus_option
@config_options
@click.option("--out", default="runs/train", show_default=True, help="Output directory.")
def train_command(corpus, out, **options):
    """Train a model and save its checkpoint, history and validation metrics."""
    cfg = build_config(**options)
    result = train(load_corpus(corpus), cfg)
    directory = out_dir(out)
    save_checkpoint(result.model, directory / "model.gtfm")
    write_history_csv(result.history, directory / "history.csv")
    write_metrics_json(
        {
            "metric": primary_metric(cfg.task),
            "mean": result.best_metric,
            "std": 0.0,
            "per_fold": [result.best_metric],
            "best_epoch": result.best_epoch,
        },
        directory / "metrics.json",
    )
    click.echo(f"Best validation score {result.best_metric:.4f} at epoch {result.best_epoch}; saved to {directory}")


def _load_model(model_path: str, tau: float | None):
    model = load_checkpoint(model_path)
    if tau is not None:
        model.cfg = model.cfg.with_overrides(tau=tau)
    return model


@main.command("eval")
@model_option
@corpus_option
@click.option("--tau", type=float, help="Override the checkpoint's selection threshold.")
@click.option("--out", help="Directory for metrics.json.")
def eval_command(model_path, corpus, tau, out):
    """Evaluate a checkpoint on a labelled corpus."""
    model = _load_model(model_path, tau)
    metrics = evaluate(model, load_corpus(corpus))
    if out:
        write_metrics_json(metrics.to_dict(), out_dir(out) / "metrics.json")
    click.echo(f"accuracy {metrics.accuracy:.4f}  macro_f1 {metrics.macro_f1:.4f}")


@main.command("predict")
@model_option
@corpus_option
@click.option("--tau", type=float, help="Override the checkpoint's selection threshold.")
@click.option("--out", default="runs/predict", show_default=True, help="Output directory.")
@click.option("--explain", is_flag=True, help="Include selected sentences and label-wise scores.")
def predict_command(model_path, corpus, tau, out, explain):
    """Write one JSON line per document with predicted labels and probabilities."""
    model = _load_model(model_path, tau)
    records = []
    for doc in load_corpus(corpus):
        record = model.explain(doc)
        if not explain:
            record = {key: record[key] for key in ("id", "labels", "probabilities")}
        records.append(record)
    path = write_jsonl(records, out_dir(out) / "predictions.jsonl")
    click.echo(f"Wrote {len(records)} predictions to {path}")


@main.command("tune-tau")
@corpus_option
@config_options
@click.option("--out", default="runs/tune-tau", show_default=True, help="Output directory.")
def tune_tau_command(corpus, out, **options):
    """Coarse-to-fine grid search for the selection threshold."""
    cfg = build_config(**options)
    search = tune_tau(load_corpus(corpus), cfg)
    directory = out_dir(out)
    write_tau_table(search.rows(), directory / "tau.csv")
    write_metrics_json({"best_tau": search.best, "score": search.scores[search.best]}, directory / "tau.json")
    click.echo(f"Best tau {search.best:.2f} (score {search.scores[search.best]:.4f})")


@main.command("cv")
@corpus_option
@config_options
@click.option("--folds", type=int, help="Number of folds (default from config).")
@click.option("--runs", type=int, default=1, show_default=True, help="Repetitions with seeds seed..seed+runs-1.")
@click.option("--out", default="runs/cv", show_default=True, help="Output directory.")
def cv_command(corpus, folds, runs, out, **options):
    """Stratified k-fold cross-validation."""
    cfg = build_config(**options)
    if folds is not None:
        cfg = cfg.with_overrides(folds=folds)
    metrics = cross_validate(load_corpus(corpus), cfg, runs=runs)
    summary = {key: value for key, value in metrics.to_dict().items() if key in ("metric", "mean", "std", "per_fold")}
    write_metrics_json(summary, out_dir(out) / "metrics.json")
    click.echo(f"{metrics.metric} {format_mean_std(metrics.mean, metrics.std)}")


@main.command("chunks")
@model_option
@corpus_option
@click.option("--tau", type=float, help="Override the checkpoint's selection threshold.")
@click.option("--out", default="runs/chunks", show_default=True, help="Output directory.")
def chunks_command(model_path, corpus, tau, out):
    """Share of selected sentences in each third of the documents."""
    model = _load_model(model_path, tau)
    report = chunk_analysis(model, load_corpus(corpus))
    write_chunks_csv(report.fractions, out_dir(out) / "chunks.csv")
    click.echo(" ".join(f"chunk{i + 1}={f:.3f}" for i, f in enumerate(report.fractions)))


@main.command("ablate")
@corpus_option
@config_options
@click.option(
    "--variants",
    default=",".join(ABLATION_VARIANTS),
    show_default=True,
    help="Comma-separated variant names.",
)
@click.option("--out", default="runs/ablate", show_default=True, help="Output directory.")
def ablate_command(corpus, variants, out, **options):
    """Cross-validate the full model and its ablated variants."""
    cfg = build_config(**options)
    names = parse_ablation_flags(variants)
    unknown = [name for name in names if name not in ABLATION_VARIANTS]
    if unknown:
        raise click.BadParameter(f"unknown variant(s): {', '.join(unknown)}", param_hint="--variants")
    rows = compare_ablations(
        load_corpus(corpus), replace(cfg, ablations=()), {n: ABLATION_VARIANTS[n] for n in names}
    )
    write_ablation_table(rows, out_dir(out) / "ablation.csv")
    for row in rows:
        click.echo(f"{row.variant:<10} {row.metric} {format_mean_std(row.mean, row.std)}")


@main.command("synth")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Corpus file to write.")
@click.option("--docs", type=int, default=40, show_default=True)
@click.option("--classes", type=int, default=2, show_default=True)
@click.option("--vocab", "vocab_size", type=int, default=50, show_default=True)
@click.option("--min-sentences", type=int, default=3, show_default=True)
@click.option("--max-sentences", type=int, default=6, show_default=True)
@click.option("--plant", type=click.Choice(["any", "first_chunk"]), default="any", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def synth_command(out, docs, classes, vocab_size, min_sentences, max_sentences, plant, seed):
    """Generate a planted-token corpus."""
    corpus = planted_corpus(
        n_docs=docs,
        n_classes=classes,
        vocab_size=vocab_size,
        sentences=(min_sentences, max_sentences),
        seed=seed,
        plant=plant,
    )
    path = save_corpus(corpus, out)
    click.echo(f"Wrote {len(corpus)} documents to {path}")


if __name__ == "__main__":
    main()
