"""Training loop, evaluation metrics and the train/validation split."""

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.metrics import accuracy_score, f1_score
from sklearn.model_selection import train_test_split

from treegraph.config import TrainConfig
from treegraph.exceptions import NumericalError
from treegraph.models import Document, LabelSet, Task
from treegraph.numeric import AdagradState, adagrad_step

from .classifier import GraphTreeClassifier, decide

logger = logging.getLogger(__name__)

PERFECT_METRIC = 1.0


@dataclass
class Metrics:
    """Scores of one evaluation, or of a set of folds.

    ``metric`` names the task's primary score (``accuracy`` for single-label
    tasks, ``macro_f1`` for multilabel); ``per_fold``, ``mean`` and ``std``
    summarize it.
    """

    metric: str
    accuracy: float
    macro_f1: float
    per_fold: list[float] = field(default_factory=list)
    mean: float = 0.0
    std: float = 0.0

    @property
    def primary(self) -> float:
        return self.accuracy if self.metric == "accuracy" else self.macro_f1

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "mean": self.mean,
            "std": self.std,
            "per_fold": list(self.per_fold),
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
        }


def sklearn_random_state(seed: int) -> int:
    """32-bit random_state for scikit-learn derived from a 64-bit seed."""
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


def primary_metric(task: Task | str) -> str:
    return "accuracy" if Task(task).single_label else "macro_f1"


def score_predictions(
    gold: Sequence[Sequence[int]], predicted: Sequence[Sequence[int]], n_labels: int, task: Task | str
) -> Metrics:
    """Accuracy and macro-F1 of predicted label-index lists against gold ones.

    Single-label accuracy compares the one label per document; multilabel
    accuracy is exact-set match. Labels absent from both gold and
    predictions score F1 = 0.
    """
    task = Task(task)
    labels = list(range(n_labels))
    if task.single_label:
        y_true = [g[0] for g in gold]
        y_pred = [p[0] for p in predicted]
        accuracy = float(accuracy_score(y_true, y_pred))
        f1 = float(f1_score(y_true, y_pred, labels=labels, average="macro", zero_division=0))
    else:
        y_true = np.zeros((len(gold), n_labels), dtype=int)
        y_pred = np.zeros((len(predicted), n_labels), dtype=int)
        for i, (g, p) in enumerate(zip(gold, predicted)):
            y_true[i, list(g)] = 1
            y_pred[i, list(p)] = 1
        accuracy = float(accuracy_score(y_true, y_pred))
        f1 = float(f1_score(y_true, y_pred, average="macro", zero_division=0))
    metrics = Metrics(metric=primary_metric(task), accuracy=accuracy, macro_f1=f1)
    metrics.per_fold = [metrics.primary]
    metrics.mean = metrics.primary
    return metrics


def evaluate(model: GraphTreeClassifier, corpus: Sequence[Document]) -> Metrics:
    """Score the model's decisions on a labelled corpus."""
    gold = [model.labels.indices(doc.labels) for doc in corpus]
    predicted = [decide(model.predict_proba(doc), model.task) for doc in corpus]
    return score_predictions(gold, predicted, len(model.labels), model.task)


def stratify_keys(corpus: Sequence[Document], labels: LabelSet, task: Task | str) -> list[int]:
    """One stratum per document.

    Single-label documents use their label; multilabel documents use their
    positive label that is most frequent in the corpus (-1 when they have none).
    """
    if Task(task).single_label:
        return [labels.index(doc.labels[0]) for doc in corpus]
    counts = np.zeros(len(labels), dtype=int)
    for doc in corpus:
        for i in labels.indices(doc.labels):
            counts[i] += 1
    keys = []
    for doc in corpus:
        positives = labels.indices(doc.labels)
        # ties go to the lower label index
        keys.append(max(positives, key=lambda i: (counts[i], -i)) if positives else -1)
    return keys


def split_train_validation(
    corpus: Sequence[Document], cfg: TrainConfig, labels: LabelSet | None = None
) -> tuple[list[Document], list[Document]]:
    """Stratified hold-out of ``cfg.val_fraction`` of the corpus for validation.

    Falls back to a plain shuffled split when some stratum is too small, and
    validates on the training documents when the corpus has a single one.
    """
    corpus = list(corpus)
    if len(corpus) < 2:
        logger.warning("Corpus too small for a validation split, validating on training data")
        return corpus, corpus
    labels = labels or LabelSet.from_documents(corpus, cfg.labels)
    keys = stratify_keys(corpus, labels, cfg.task)
    n_val = max(1, round(cfg.val_fraction * len(corpus)))
    n_strata = len(set(keys))
    counts = np.bincount(np.asarray(keys) + 1)
    enough = n_strata <= n_val and n_strata <= len(corpus) - n_val
    stratify = keys if enough and counts[counts > 0].min() >= 2 else None
    if stratify is None:
        logger.warning("Validation split is not stratified: too few documents per class")
    indices = np.arange(len(corpus))
    train_idx, val_idx = train_test_split(
        indices, test_size=n_val, random_state=sklearn_random_state(cfg.seed), stratify=stratify
    )
    return [corpus[i] for i in sorted(train_idx)], [corpus[i] for i in sorted(val_idx)]


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    val_metric: float


@dataclass
class TrainResult:
    model: GraphTreeClassifier
    history: list[EpochRecord]
    best_epoch: int
    best_metric: float


def batch_gradients(
    model: GraphTreeClassifier, batch: Sequence[Document], threads: int = 1
) -> tuple[list[float], dict[str, np.ndarray]]:
    """Per-document losses and the batch-mean gradient of every trainable parameter.

    Documents are differentiated independently (in parallel when
    ``threads`` > 1); gradients are summed in batch order, so the result
    does not depend on the thread count.
    """
    names = {id(t): name for name, t in model.params.trainable().items()}
    if threads > 1 and len(batch) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(model.gradients, batch))
    else:
        results = [model.gradients(doc) for doc in batch]

    grads: dict[str, np.ndarray] = {}
    losses = []
    for value, pairs in results:
        losses.append(value)
        for tensor, grad in pairs:
            name = names.get(id(tensor))
            if name is None:
                continue
            if name in grads:
                grads[name] += grad
            else:
                grads[name] = grad.copy()
    for name in grads:
        grads[name] /= len(batch)
    return losses, grads


def train(
    corpus: Sequence[Document],
    cfg: TrainConfig,
    model: GraphTreeClassifier | None = None,
    validation: Sequence[Document] | None = None,
) -> TrainResult:
    """Fit a classifier with mini-batch Adagrad.

    The learning rate is multiplied by ``cfg.lr_decay_factor`` after every
    epoch whose validation metric is lower than the previous epoch's. The
    parameters of the best validation epoch are restored at the end, and
    training stops after ``cfg.patience`` epochs without improvement
    or as soon as the validation metric reaches 1.0.

    Args:
        corpus: Labelled documents. A validation split is carved out of it
            unless ``validation`` is given.
        cfg: Training configuration.
        model: Model to continue training; a fresh one is created otherwise.
        validation: Explicit validation documents.

    Returns:
        The trained model and its per-epoch history.

    Raises:
        NumericalError: A document produced a non-finite loss.
    """
    cfg.validate()
    if model is None:
        model = GraphTreeClassifier.create(corpus, cfg)
    if validation is None:
        train_docs, validation = split_train_validation(corpus, cfg, model.labels)
    else:
        train_docs = list(corpus)

    params = model.params.trainable()
    state = AdagradState(lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    history: list[EpochRecord] = []
    best_metric = -math.inf
    best_epoch = 0
    best_values = model.params.snapshot()
    previous = None
    stale = 0

    logger.info(
        f"Training on {len(train_docs)} documents, validating on {len(validation)} "
        f"(batch {cfg.batch_size}, lr {cfg.lr}, up to {cfg.max_epochs} epochs)"
    )
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_docs))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_docs[i] for i in order[start : start + cfg.batch_size]]
            batch_losses, grads = batch_gradients(model, batch, cfg.threads)
            for doc, value in zip(batch, batch_losses):
                if not math.isfinite(value):
                    raise NumericalError(
                        f"non-finite loss {value} on document {doc.id!r} in epoch {epoch}"
                    )
            rejected = adagrad_step(params, grads, state)
            if rejected:
                logger.warning(f"Epoch {epoch}: skipped non-finite update for {', '.join(rejected)}")
            losses.extend(batch_losses)
            logger.debug(f"Epoch {epoch} batch {start // cfg.batch_size}: loss {np.mean(batch_losses):.4f}")

        metric = evaluate(model, validation).primary
        record = EpochRecord(epoch=epoch, lr=state.lr, train_loss=float(np.mean(losses)), val_metric=metric)
        history.append(record)
        logger.info(
            f"Epoch {epoch}: lr {record.lr:.6g} train_loss {record.train_loss:.4f} "
            f"val_{primary_metric(cfg.task)} {metric:.4f}"
        )

        if metric > best_metric:
            best_metric, best_epoch = metric, epoch
            best_values = model.params.snapshot()
            stale = 0
        else:
            stale += 1
        if state.decay_on_decline(previous, metric, cfg.lr_decay_factor):
            logger.warning(f"Validation metric declined ({previous:.4f} -> {metric:.4f}), lr now {state.lr:.6g}")
        previous = metric
        if best_metric >= PERFECT_METRIC:
            logger.info(f"Stopping after epoch {epoch}: validation {primary_metric(cfg.task)} is perfect")
            break
        if stale >= cfg.patience:
            logger.info(f"Stopping early after epoch {epoch}: no improvement for {stale} epochs")
            break

    model.params.restore(best_values)
    logger.info(f"Best validation {primary_metric(cfg.task)} {best_metric:.4f} at epoch {best_epoch}")
    return TrainResult(model=model, history=history, best_epoch=best_epoch, best_metric=best_metric)
