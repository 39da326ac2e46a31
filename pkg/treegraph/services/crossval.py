"""Stratified k-fold cross-validation and the tau grid search."""

import logging
import warnings
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from sklearn.model_selection import StratifiedKFold

from treegraph.config import TrainConfig, check_seed
from treegraph.exceptions import ConfigError
from treegraph.models import Document, LabelSet, Task

from .classifier import GraphTreeClassifier
from .training import (
    Metrics,
    evaluate,
    primary_metric,
    sklearn_random_state,
    split_train_validation,
    stratify_keys,
    train,
)

logger = logging.getLogger(__name__)

POOLED_STRATUM = -2
COARSE_STEP = 0.05
FINE_STEP = 0.01


def stratified_folds(
    corpus: Sequence[Document],
    k: int,
    seed: int,
    task: Task | str,
    labels: LabelSet | None = None,
) -> list[tuple[list[int], list[int]]]:
    """Disjoint test folds covering the corpus, as (train, test) index lists.

    Classes with fewer than ``k`` members are pooled into one shared stratum
    (so they are not stratified individually) and a warning is logged.

    Raises:
        ConfigError: ``k`` < 2 or larger than the corpus, or a bad seed.
    """
    check_seed(seed)
    if k < 2:
        raise ConfigError(f"need at least 2 folds, got {k}")
    if len(corpus) < k:
        raise ConfigError(f"corpus has {len(corpus)} documents, fewer than {k} folds")
    labels = labels or LabelSet.from_documents(corpus)
    keys = stratify_keys(corpus, labels, task)
    counts = Counter(keys)
    rare = sorted(key for key, count in counts.items() if count < k)
    if rare:
        logger.warning(
            f"{len(rare)} class(es) have fewer than {k} documents; "
            "folding them without per-class stratification"
        )
        keys = [POOLED_STRATUM if key in rare else key for key in keys]

    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=sklearn_random_state(seed))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        splits = list(splitter.split(np.zeros(len(keys)), keys))
    return [(sorted(map(int, tr)), sorted(map(int, te))) for tr, te in splits]


def summarize(metric: str, scores: Sequence[float], accuracy: float, macro_f1: float) -> Metrics:
    """Mean and population std of the fold scores; identical scores have zero spread."""
    values = [float(s) for s in scores]
    if min(values) == max(values):
        mean, std = values[0], 0.0
    else:
        mean, std = float(np.mean(values)), float(np.std(values))
    return Metrics(
        metric=metric,
        accuracy=accuracy,
        macro_f1=macro_f1,
        per_fold=values,
        mean=mean,
        std=std,
    )


def cross_validate(
    corpus: Sequence[Document], cfg: TrainConfig, k: int | None = None, runs: int = 1
) -> Metrics:
    """Train and score one model per fold, repeated ``runs`` times.

    Run r uses seed ``cfg.seed + r`` for both folding and training. The
    result holds every fold score of every run, their mean and their
    population standard deviation.
    """
    k = k or cfg.folds
    if runs < 1:
        raise ConfigError(f"runs must be >= 1, got {runs}")
    corpus = list(corpus)
    labels = LabelSet.from_documents(corpus, cfg.labels)
    metric = primary_metric(cfg.task)
    scores, accuracies, f1s = [], [], []
    for run in range(runs):
        run_cfg = cfg.with_overrides(seed=cfg.seed + run, labels=labels.names)
        folds = stratified_folds(corpus, k, run_cfg.seed, cfg.task, labels)
        for number, (train_idx, test_idx) in enumerate(folds, start=1):
            result = train([corpus[i] for i in train_idx], run_cfg)
            fold_metrics = evaluate(result.model, [corpus[i] for i in test_idx])
            scores.append(fold_metrics.primary)
            accuracies.append(fold_metrics.accuracy)
            f1s.append(fold_metrics.macro_f1)
            logger.info(f"Run {run + 1} fold {number}/{k}: {metric} {fold_metrics.primary:.4f}")
    report = summarize(metric, scores, float(np.mean(accuracies)), float(np.mean(f1s)))
    logger.info(f"Cross-validation {metric}: {report.mean:.4f} +/- {report.std:.4f}")
    return report


def coarse_grid() -> list[float]:
    """0.05, 0.10, ..., 0.50."""
    return [round(COARSE_STEP * i, 2) for i in range(1, 11)]


def fine_grid(center: float) -> list[float]:
    """Steps of 0.01 within +/-0.05 of ``center``, clipped to (0, 1)."""
    points = (round(center + FINE_STEP * i, 2) for i in range(-5, 6))
    return [tau for tau in points if 0.0 < tau < 1.0]


def best_tau(table: dict[float, float]) -> float:
    """Highest-scoring tau; the smallest one wins ties."""
    return min(table, key=lambda tau: (-table[tau], tau))


@dataclass
class TauSearch:
    best: float
    scores: dict[float, float] = field(default_factory=dict)

    def rows(self) -> list[tuple[float, float]]:
        return sorted(self.scores.items())


def tune_tau(corpus: Sequence[Document], cfg: TrainConfig) -> TauSearch:
    """Coarse-to-fine search for the selection threshold on a validation split."""
    corpus = list(corpus)
    labels = LabelSet.from_documents(corpus, cfg.labels)
    train_docs, validation = split_train_validation(corpus, cfg, labels)
    scores: dict[float, float] = {}

    def score(tau: float) -> float:
        if tau not in scores:
            run_cfg = cfg.with_overrides(tau=tau, labels=labels.names)
            model = GraphTreeClassifier.create(train_docs, run_cfg)
            result = train(train_docs, run_cfg, model=model, validation=validation)
            scores[tau] = result.best_metric
            logger.info(f"tau {tau:.2f}: validation {primary_metric(cfg.task)} {scores[tau]:.4f}")
        return scores[tau]

    for tau in coarse_grid():
        score(tau)
    center = best_tau(scores)
    for tau in fine_grid(center):
        score(tau)
    search = TauSearch(best=best_tau(scores), scores=scores)
    logger.info(f"Best tau {search.best:.2f}")
    return search
