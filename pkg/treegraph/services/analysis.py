"""Selection-position analysis and ablation variants."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

from treegraph.config import ABLATION_FLAGS, TrainConfig
from treegraph.exceptions import ConfigError
from treegraph.models import Document

from .classifier import GraphTreeClassifier
from .crossval import cross_validate

logger = logging.getLogger(__name__)

N_CHUNKS = 3

# variant name -> ablation flags, in report order
ABLATION_VARIANTS = {
    "full": (),
    "no_ctt": ("no_ctt",),
    "no_dtt": ("no_dtt",),
    "no_tree": ("no_ctt", "no_dtt"),
    "no_gat": ("no_gat",),
    "no_bidir": ("no_bidir",),
}


def chunk_bounds(n: int, chunks: int = N_CHUNKS) -> list[tuple[int, int]]:
    """Contiguous near-equal [start, stop) ranges; earlier chunks take the remainder."""
    base, extra = divmod(n, chunks)
    bounds, start = [], 0
    for i in range(chunks):
        stop = start + base + (1 if i < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


@dataclass
class ChunkReport:
    fractions: tuple[float, ...]
    documents: tuple[int, ...]


def selection_fractions(
    selections: Sequence[tuple[int, Sequence[int]]], chunks: int = N_CHUNKS
) -> ChunkReport:
    """Average per-chunk selected share over documents.

    Args:
        selections: (sentence count, selected indices) per document.

    Returns:
        One fraction per chunk plus the number of documents that populate
        it; empty chunks of short documents are skipped.
    """
    totals = [0.0] * chunks
    counts = [0] * chunks
    for n, selected in selections:
        chosen = set(selected)
        for i, (start, stop) in enumerate(chunk_bounds(n, chunks)):
            if stop == start:
                continue
            totals[i] += sum(1 for j in range(start, stop) if j in chosen) / (stop - start)
            counts[i] += 1
    fractions = tuple(t / c if c else 0.0 for t, c in zip(totals, counts))
    return ChunkReport(fractions=fractions, documents=tuple(counts))


def chunk_analysis(model: GraphTreeClassifier, corpus: Sequence[Document]) -> ChunkReport:
    """Where in each document the model's pass-1 selection falls."""
    selections = [(len(doc.sentences), model.encode(doc).selected) for doc in corpus]
    report = selection_fractions(selections)
    logger.info(
        "Selected share by chunk: " + ", ".join(f"{f:.3f}" for f in report.fractions)
    )
    return report


def ablate(cfg: TrainConfig, flags: Sequence[str]) -> TrainConfig:
    """Config for a model variant with the given components removed.

    Raises:
        ConfigError: Unknown flag.
    """
    unknown = [flag for flag in flags if flag not in ABLATION_FLAGS]
    if unknown:
        raise ConfigError(
            f"unknown ablation flag(s): {', '.join(unknown)}; expected {', '.join(ABLATION_FLAGS)}"
        )
    return cfg.with_overrides(ablations=tuple(dict.fromkeys(flags)))


def parse_ablation_flags(text: str | None) -> tuple[str, ...]:
    """Comma-separated flag list as given on the command line."""
    if not text:
        return ()
    return tuple(flag.strip() for flag in text.split(",") if flag.strip())


@dataclass
class AblationRow:
    variant: str
    metric: str
    mean: float
    std: float


def compare_ablations(
    corpus: Sequence[Document],
    cfg: TrainConfig,
    variants: dict[str, tuple[str, ...]] | None = None,
) -> list[AblationRow]:
    """Cross-validate every variant with the same folds and seed."""
    variants = variants or ABLATION_VARIANTS
    rows = []
    for name, flags in variants.items():
        logger.info(f"Ablation variant {name}: {', '.join(flags) or 'full model'}")
        metrics = cross_validate(corpus, ablate(cfg, flags))
        rows.append(AblationRow(variant=name, metric=metrics.metric, mean=metrics.mean, std=metrics.std))
    return rows
