"""Checkpoint service - save and restore trained classifiers.

Layout: magic ``GTFM``, a little-endian uint16 format version, a uint32
length followed by a UTF-8 JSON header, then every tensor as float64
little-endian bytes in header order. The header echoes the config and
stores the vocabulary, label names and a tensor index (name, shape,
byte offset into the payload).
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any

import numpy as np

from treegraph.config import TrainConfig
from treegraph.exceptions import ConfigError, DataError
from treegraph.models import EmbeddingTable, LabelSet, ModelParams, Vocab
from treegraph.numeric import Tensor

from .classifier import GraphTreeClassifier

logger = logging.getLogger(__name__)

MAGIC = b"GTFM"
# Current checkpoint format version
CHECKPOINT_VERSION = 1
PAYLOAD_DTYPE = np.dtype("<f8")


def checkpoint_header(model: GraphTreeClassifier) -> dict[str, Any]:
    tensors, offset = [], 0
    for name, tensor in model.params.named_parameters():
        tensors.append({"name": name, "shape": list(tensor.shape), "offset": offset})
        offset += tensor.size * PAYLOAD_DTYPE.itemsize
    return {
        "version": CHECKPOINT_VERSION,
        "config": model.cfg.to_dict(),
        "vocab": {"tokens": list(model.vocab.tokens), "hash_buckets": model.vocab.hash_buckets},
        "labels": list(model.labels.names),
        "trainable_embeddings": model.params.embeddings.trainable,
        "tensors": tensors,
    }


def save_checkpoint(model: GraphTreeClassifier, path: str | Path) -> Path:
    """Write ``model`` to ``path``, creating parent directories.

    Returns:
        Path to the saved file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps(checkpoint_header(model), sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HI", CHECKPOINT_VERSION, len(header)))
        f.write(header)
        for _, tensor in model.params.named_parameters():
            f.write(np.ascontiguousarray(tensor.data, dtype=PAYLOAD_DTYPE).tobytes())
    logger.info(f"Saved checkpoint to {path}")
    return path


def load_checkpoint(path: str | Path) -> GraphTreeClassifier:
    """Rebuild a classifier from a checkpoint file.

    Raises:
        DataError: Unreadable file, wrong magic, a newer format version,
            a corrupt header, or tensors whose shapes do not match the config.
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read checkpoint {path}: {e}") from e
    if blob[:4] != MAGIC:
        raise DataError(f"{path} is not a treegraph checkpoint (bad magic)")
    if len(blob) < 10:
        raise DataError(f"{path}: truncated checkpoint header")
    version, header_len = struct.unpack("<HI", blob[4:10])
    if version > CHECKPOINT_VERSION:
        raise DataError(
            f"{path}: checkpoint format {version} is newer than supported ({CHECKPOINT_VERSION})"
        )
    try:
        header = json.loads(blob[10 : 10 + header_len].decode("utf-8"))
        cfg = TrainConfig(**header["config"]).validate()
        vocab = Vocab(tokens=list(header["vocab"]["tokens"]), hash_buckets=header["vocab"]["hash_buckets"])
        labels = LabelSet(tuple(header["labels"]))
        index = header["tensors"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ConfigError) as e:
        raise DataError(f"{path}: corrupt checkpoint header: {e}") from e

    trainable = bool(header.get("trainable_embeddings", True))
    embeddings = EmbeddingTable(
        weight=Tensor(np.zeros((len(vocab), cfg.d)), requires_grad=trainable, name="embeddings"),
        trainable=trainable,
    )
    params = ModelParams.init(np.random.default_rng(0), embeddings, len(labels), cfg)
    named = dict(params.named_parameters())
    payload = memoryview(blob)[10 + header_len :]
    seen = set()
    for entry in index:
        name, shape = entry["name"], tuple(entry["shape"])
        tensor = named.get(name)
        if tensor is None:
            raise DataError(f"{path}: unknown tensor {name!r}")
        if tensor.shape != shape:
            raise DataError(f"{path}: tensor {name!r} has shape {shape}, expected {tensor.shape}")
        count = int(np.prod(shape, dtype=np.int64))
        start = entry["offset"]
        end = start + count * PAYLOAD_DTYPE.itemsize
        if end > len(payload):
            raise DataError(f"{path}: truncated payload for tensor {name!r}")
        tensor.data = np.frombuffer(payload[start:end], dtype=PAYLOAD_DTYPE).reshape(shape).astype(np.float64)
        seen.add(name)
    missing = sorted(set(named) - seen)
    if missing:
        raise DataError(f"{path}: checkpoint lacks tensors {', '.join(missing)}")
    logger.info(f"Loaded checkpoint {path} (format {version})")
    return GraphTreeClassifier(params=params, vocab=vocab, labels=labels, cfg=cfg)
