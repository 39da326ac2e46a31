"""Classification head, losses and the end-to-end classifier."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from treegraph.config import TrainConfig
from treegraph.exceptions import ConfigError, CorpusError
from treegraph.models import Document, HeadParams, LabelSet, ModelParams, Task, Vocab
from treegraph.numeric import Tape, Tensor, ops

from .corpus import build_vocab, init_embedding_table, load_embedding_file
from .propagation import AccessTracer, PassResult, run_passes

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-12
DECISION_THRESHOLD = 0.5


def classify(h: Tensor, head: HeadParams, task: Task | str) -> Tensor:
    """Label probabilities for a document vector.

    Softmax over labels for single-label tasks, independent sigmoids for
    multilabel.
    """
    hidden = ops.tanh(ops.affine(h, head.W_dense, head.b_dense))
    logits = ops.affine(hidden, head.W_out, head.b_out)
    if Task(task) is Task.MULTILABEL:
        return ops.sigmoid(logits)
    return ops.softmax(logits, axis=-1)


def loss(probs: Tensor, gold: Sequence[int], task: Task | str) -> Tensor:
    """Cross-entropy (single-label) or mean binary cross-entropy (multilabel).

    Args:
        probs: Probability vector over L labels.
        gold: Indices of the gold labels.
        task: Classification setting.

    Returns:
        Scalar loss tensor; probabilities are clamped so the value is finite.

    Raises:
        CorpusError: No gold label for a single-label task.
    """
    task = Task(task)
    target = np.zeros(probs.shape[0])
    target[list(gold)] = 1.0
    clamped = ops.clip(probs, PROB_FLOOR, 1.0 - PROB_FLOOR)
    if task.single_label:
        if len(gold) != 1:
            raise CorpusError(f"{task.value} loss needs exactly one gold label, got {len(gold)}")
        return ops.scale(ops.sum(ops.mul(ops.log(clamped), target)), -1.0)
    positive = ops.mul(ops.log(clamped), target)
    negative = ops.mul(ops.log(ops.sub(1.0, clamped)), 1.0 - target)
    return ops.scale(ops.mean(ops.add(positive, negative)), -1.0)


def selection_loss(scores: Tensor, gold: Sequence[int], task: Task | str) -> Tensor:
    """Mean cross-entropy of each sentence's label-wise scores against the gold labels.

    The target spreads evenly over the gold labels. A multilabel document
    without gold labels contributes zero.

    Args:
        scores: N x L label-wise scores, each row a distribution over labels.
        gold: Indices of the gold labels.
        task: Classification setting.

    Raises:
        CorpusError: No gold label for a single-label task.
    """
    task = Task(task)
    if task.single_label and len(gold) != 1:
        raise CorpusError(f"{task.value} selection loss needs exactly one gold label, got {len(gold)}")
    if not gold:
        return Tensor(np.zeros(()))
    n, n_labels = scores.shape
    target = np.zeros((n, n_labels))
    target[:, list(gold)] = 1.0 / len(gold)
    clamped = ops.clip(scores, PROB_FLOOR, 1.0)
    return ops.scale(ops.sum(ops.mul(ops.log(clamped), target)), -1.0 / n)


def decide(probs: np.ndarray, task: Task | str) -> list[int]:
    """Predicted label indices: argmax, or every label at or above 0.5."""
    if Task(task).single_label:
        return [int(np.argmax(probs))]
    return [int(i) for i in np.flatnonzero(probs >= DECISION_THRESHOLD)]


@dataclass
class GraphTreeClassifier:
    """Embeddings, encoders and head bound to a vocabulary and label set."""

    params: ModelParams
    vocab: Vocab
    labels: LabelSet
    cfg: TrainConfig

    def __repr__(self):
        return (
            f"<GraphTreeClassifier task={self.cfg.task} labels={len(self.labels)} "
            f"vocab={len(self.vocab)} d={self.params.embeddings.d}>"
        )

    @property
    def task(self) -> Task:
        return Task(self.cfg.task)

    @classmethod
    def create(cls, corpus: Sequence[Document], cfg: TrainConfig) -> "GraphTreeClassifier":
        """Fresh model whose vocabulary and label set come from ``corpus``.

        Raises:
            ConfigError: Label count or embedding width inconsistent with the config.
            CorpusError: Documents whose labels do not fit the task.
        """
        cfg.validate()
        task = Task(cfg.task)
        rng = np.random.default_rng(cfg.seed)
        vocab = build_vocab(corpus, cfg.min_count, cfg.hash_buckets)
        labels = LabelSet.from_documents(corpus, cfg.labels)
        if task is Task.BINARY and len(labels) != 2:
            raise ConfigError(f"binary task needs exactly 2 labels, found {len(labels)}")
        for doc in corpus:
            labels.check(doc, task)

        if cfg.embedding_backend == "file":
            embeddings = load_embedding_file(cfg.embedding_path, vocab, rng, cfg.embedding_std)
            if embeddings.d != cfg.d:
                raise ConfigError(f"embedding file has d={embeddings.d}, config asks for d={cfg.d}")
        else:
            embeddings = init_embedding_table(vocab, cfg.d, rng, cfg.embedding_std)
        params = ModelParams.init(rng, embeddings, len(labels), cfg)
        logger.info(
            f"Created model: {len(vocab.tokens)} tokens, {len(labels)} labels, "
            f"{sum(t.size for t in params.trainable().values())} trainable weights"
        )
        return cls(params=params, vocab=vocab, labels=labels, cfg=cfg)

    def encode(self, document: Document, tracer: AccessTracer | None = None) -> PassResult:
        return run_passes(
            document, self.params, self.vocab, self.labels.names, self.cfg, tracer=tracer
        )

    def forward(
        self, document: Document, tracer: AccessTracer | None = None
    ) -> tuple[Tensor, PassResult]:
        result = self.encode(document, tracer)
        return classify(result.final.h, self.params.head, self.task), result

    def document_loss(self, document: Document) -> Tensor:
        """Classification loss, plus the weighted selection loss when enabled."""
        probs, result = self.forward(document)
        gold = self.labels.indices(document.labels)
        value = loss(probs, gold, self.task)
        if self.cfg.selector_weight > 0:
            aux = selection_loss(result.attention.scores, gold, self.task)
            value = ops.add(value, ops.scale(aux, self.cfg.selector_weight))
        return value

    def gradients(self, document: Document) -> tuple[float, list[tuple[Tensor, np.ndarray]]]:
        """Loss value and (parameter, gradient) pairs for one document.

        Uses a private tape so documents may be processed on separate threads.
        """
        with Tape() as tape:
            value = self.document_loss(document)
        return value.item(), tape.leaf_gradients(np.ones(()), value)

    def predict_proba(self, document: Document) -> np.ndarray:
        probs, _ = self.forward(document)
        return probs.numpy()

    def predict(self, document: Document) -> list[str]:
        return [self.labels.names[i] for i in decide(self.predict_proba(document), self.task)]

    def explain(self, document: Document) -> dict:
        """Prediction plus the pass-1 sentence selection and label-wise scores."""
        probs, result = self.forward(document)
        p = probs.numpy()
        return {
            "id": document.id,
            "labels": [self.labels.names[i] for i in decide(p, self.task)],
            "probabilities": dict(zip(self.labels.names, (float(x) for x in p))),
            "selected": list(result.selected),
            "sentence_scores": result.attention.scores.numpy().tolist(),
        }
