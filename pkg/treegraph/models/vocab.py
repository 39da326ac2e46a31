"""Vocabulary and embedding table models."""

import hashlib
from collections.abc import Sequence
from dataclasses import dataclass, field

from treegraph.numeric import Tensor

UNK_ID = 0


def stable_hash(word: str) -> int:
    """Process-independent hash (``hash()`` is salted per interpreter)."""
    return int.from_bytes(hashlib.blake2b(word.encode("utf-8"), digest_size=8).digest(), "big")


@dataclass
class Vocab:
    """Token to id map.

    Id 0 is UNK, ids ``1..H`` are hash buckets for out-of-vocabulary label
    words, and corpus tokens follow from ``H + 1``.
    """

    tokens: list[str]
    hash_buckets: int = 64
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        offset = 1 + self.hash_buckets
        self._index = {token: offset + i for i, token in enumerate(self.tokens)}

    def __len__(self):
        return 1 + self.hash_buckets + len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id(self, token: str) -> int:
        """Id of a corpus token, UNK if unseen."""
        return self._index.get(token, UNK_ID)

    def ids(self, tokens: Sequence[str]) -> list[int]:
        return [self._index.get(token, UNK_ID) for token in tokens]

    def bucket_id(self, word: str) -> int:
        return 1 + stable_hash(word) % self.hash_buckets

    def label_word_id(self, word: str) -> int:
        """Id for a label-name word; unseen words go to a hash bucket, never UNK."""
        return self._index.get(word, self.bucket_id(word))

    def token(self, id: int) -> str:
        offset = 1 + self.hash_buckets
        if id == UNK_ID:
            return "<unk>"
        if id < offset:
            return f"<bucket:{id - 1}>"
        return self.tokens[id - offset]


@dataclass
class EmbeddingTable:
    """|Vocab| x d matrix of word vectors."""

    weight: Tensor
    trainable: bool = True

    @property
    def d(self) -> int:
        return self.weight.shape[1]

    def __len__(self):
        return self.weight.shape[0]
