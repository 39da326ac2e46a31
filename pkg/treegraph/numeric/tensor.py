"""Tensor type and the record-and-replay computation tape.

A :class:`Tape` is opened around one forward computation. Every primitive
whose inputs require gradients appends an :class:`OpRecord` to the active
tape; :func:`backward` replays the record in reverse. Tapes are rebuilt for
every forward pass because the document graph changes per document.
"""

import threading
from collections.abc import Callable, Iterable
from dataclasses import dataclass

import numpy as np

from treegraph.exceptions import GradientError, ShapeError

DTYPE = np.float64

VJP = Callable[[np.ndarray], tuple["np.ndarray | None", ...]]

_local = threading.local()


class Tensor:
    """Dense float64 array with optional gradient tracking.

    The value array is treated as immutable once the tensor has been used
    in a forward computation. Only ``grad`` is written by :func:`backward`.
    The optimizer replaces ``data`` between forward passes.
    """

    __slots__ = ("data", "requires_grad", "grad", "name", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=DTYPE)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"<Tensor{label} shape={self.shape} requires_grad={self.requires_grad}>"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        """Return a copy of the value array."""
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError("item", self.shape, ())
        return float(self.data.reshape(()))

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, name=self.name)

    # Operator sugar, resolved lazily to avoid an import cycle with ops.
    def __add__(self, other):
        from treegraph.numeric import ops

        return ops.add(self, other)

    def __radd__(self, other):
        from treegraph.numeric import ops

        return ops.add(other, self)

    def __sub__(self, other):
        from treegraph.numeric import ops

        return ops.sub(self, other)

    def __mul__(self, other):
        from treegraph.numeric import ops

        if isinstance(other, (int, float)):
            return ops.scale(self, float(other))
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        from treegraph.numeric import ops

        return ops.matmul(self, other)

    def __neg__(self):
        from treegraph.numeric import ops

        return ops.scale(self, -1.0)


def as_tensor(value) -> Tensor:
    """Wrap arrays and scalars as constant tensors; pass tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclass
class OpRecord:
    """One applied primitive: its inputs, its output and its vector-Jacobian product."""

    name: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    vjp: VJP


class Tape:
    """Topologically ordered record of the primitives applied in one forward pass.

    Usage::

        with Tape() as tape:
            loss = model_loss(doc)
        backward(tape, np.ones(loss.shape))
    """

    def __init__(self):
        self.ops: list[OpRecord] = []
        self._outputs: set[int] = set()

    def __len__(self):
        return len(self.ops)

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _stack().pop()
        return False

    def record(self, name: str, inputs: tuple[Tensor, ...], output: Tensor, vjp: VJP):
        """Append an op. Each output tensor may be produced only once."""
        key = id(output)
        if key in self._outputs:
            raise GradientError(f"tensor produced twice on the tape by {name}")
        self._outputs.add(key)
        self.ops.append(OpRecord(name, inputs, output, vjp))

    @property
    def output(self) -> Tensor:
        if not self.ops:
            raise GradientError("backward requested before any forward computation")
        return self.ops[-1].output

    def produced(self, tensor: Tensor) -> bool:
        return id(tensor) in self._outputs

    def leaf_gradients(
        self, seed: np.ndarray, output: Tensor | None = None
    ) -> list[tuple[Tensor, np.ndarray]]:
        """Reverse-mode sweep returning gradients for requires_grad leaves.

        Leaves are reported in order of first use on the tape so that
        callers merging gradients from several tapes do so deterministically.

        Args:
            seed: Gradient of the final objective w.r.t. ``output``.
            output: Tensor to differentiate; defaults to the last op output.

        Returns:
            List of (leaf tensor, gradient array) pairs.

        Raises:
            GradientError: If the tape is empty or ``output`` is not on it.
            ShapeError: If ``seed`` does not match the output shape.
        """
        if not self.ops:
            raise GradientError("backward requested before any forward computation")
        target = output if output is not None else self.output
        if not self.produced(target):
            raise GradientError("output tensor was not produced on this tape")
        seed = np.asarray(seed, dtype=DTYPE)
        if seed.shape != target.shape:
            raise ShapeError("backward seed", seed.shape, target.shape)

        grads: dict[int, np.ndarray] = {id(target): seed.copy()}
        leaves: dict[int, Tensor] = {}
        for op in reversed(self.ops):
            g = grads.pop(id(op.output), None)
            if g is None:
                continue
            input_grads = op.vjp(g)
            for tensor, gi in zip(op.inputs, input_grads):
                if gi is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if not self.produced(tensor):
                    leaves.setdefault(key, tensor)
                if key in grads:
                    grads[key] = grads[key] + gi
                else:
                    grads[key] = np.array(gi, dtype=DTYPE).reshape(tensor.shape)

        ordered = []
        for op in self.ops:
            for tensor in op.inputs:
                key = id(tensor)
                if key in leaves:
                    ordered.append((leaves.pop(key), grads[key]))
        return ordered


def _stack() -> list[Tape]:
    stack = getattr(_local, "tapes", None)
    if stack is None:
        stack = _local.tapes = []
    return stack


def current_tape() -> Tape | None:
    """Return the innermost tape active on this thread, if any."""
    stack = _stack()
    return stack[-1] if stack else None


def backward(record: Tape, seed: np.ndarray, output: Tensor | None = None):
    """Populate ``grad`` on every requires_grad leaf reachable from the output.

    Gradients accumulate (``+=``) into existing buffers; callers zero them
    before each batch.
    """
    for leaf, grad in record.leaf_gradients(seed, output):
        if leaf.grad is None:
            leaf.grad = grad.copy()
        else:
            leaf.grad = leaf.grad + grad


def zero_grad(tensors: Iterable[Tensor]):
    for tensor in tensors:
        tensor.zero_grad()
