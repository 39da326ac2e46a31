"""Document models - sentences, labelled documents and the label set."""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

from treegraph.exceptions import CorpusError

from .tree import ConstTree, DepTree


class Task(str, Enum):
    """Classification setting of a corpus."""

    BINARY = "binary"
    MULTICLASS = "multiclass"
    MULTILABEL = "multilabel"

    @property
    def single_label(self) -> bool:
        return self is not Task.MULTILABEL


@dataclass
class Sentence:
    """A tokenized sentence with its pre-computed dependency and constituency parses."""

    tokens: list[str]
    dep: DepTree
    cons: ConstTree

    def __post_init__(self):
        n = len(self.tokens)
        if n == 0:
            raise CorpusError("sentence has no tokens")
        if len(self.dep) != n:
            raise CorpusError(f"dependency tree has {len(self.dep)} nodes for {n} tokens")
        if len(self.cons) != n:
            raise CorpusError(f"constituency tree has {len(self.cons)} leaves for {n} tokens")

    def __len__(self):
        return len(self.tokens)


@dataclass
class Document:
    """A labelled document split into sentences."""

    id: str
    sentences: list[Sentence]
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.sentences:
            raise CorpusError(f"document {self.id!r} has no sentences")

    def __len__(self):
        return len(self.sentences)

    def __repr__(self):
        return f"<Document {self.id} sentences={len(self.sentences)} labels={self.labels}>"

    @property
    def word_types(self) -> list[str]:
        """Distinct tokens in first-occurrence order."""
        seen: dict[str, None] = {}
        for sentence in self.sentences:
            for token in sentence.tokens:
                seen.setdefault(token, None)
        return list(seen)


@dataclass(frozen=True)
class LabelSet:
    """Ordered label names; a label's index is its position."""

    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise CorpusError("label set is empty")
        if any(not name.strip() for name in self.names):
            raise CorpusError("label names must be non-empty")
        if len(set(self.names)) != len(self.names):
            raise CorpusError("label names must be unique")

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise CorpusError(f"label {name!r} is not in the label set") from None

    def indices(self, names: Iterable[str]) -> list[int]:
        return sorted(self.index(name) for name in names)

    @classmethod
    def from_documents(
        cls, documents: Sequence[Document], order: Sequence[str] | None = None
    ) -> "LabelSet":
        """Use an explicit order if given, else the sorted labels seen in the corpus."""
        if order:
            return cls(tuple(order))
        return cls(tuple(sorted({label for doc in documents for label in doc.labels})))

    def check(self, document: Document, task: Task):
        """Validate a document's gold labels against this set and the task.

        Raises:
            CorpusError: Unknown labels or a label count the task forbids.
        """
        for label in document.labels:
            self.index(label)
        if task.single_label and len(document.labels) != 1:
            raise CorpusError(
                f"document {document.id!r} needs exactly one label for a "
                f"{task.value} task, has {len(document.labels)}"
            )
