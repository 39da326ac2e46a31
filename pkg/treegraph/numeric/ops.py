"""Differentiable primitives.

Every primitive computes its value with numpy, then registers a
vector-Jacobian product on the active tape when any input requires
gradients. Vectors are 1-D, matrices 2-D; ``add`` and ``mul`` broadcast
with numpy rules.
"""

from collections.abc import Sequence

import numpy as np

from treegraph.exceptions import NumericalError, ShapeError
from treegraph.numeric.tensor import DTYPE, Tensor, as_tensor, current_tape

LAYER_NORM_EPS = 1e-5
LEAKY_SLOPE = 0.2


def _result(name: str, data: np.ndarray, inputs: tuple[Tensor, ...], vjp) -> Tensor:
    requires = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=requires)
    if requires:
        tape = current_tape()
        if tape is not None:
            tape.record(name, inputs, out, vjp)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


def _axis_len(shape: tuple[int, ...], axis: int) -> int:
    if not shape:
        return 1
    return shape[axis]


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result("add", a.data + b.data, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return _result("sub", a.data - b.data, (a, b), vjp)


def mul(a, b) -> Tensor:
    """Elementwise product."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)

    def vjp(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _result("mul", a.data * b.data, (a, b), vjp)


def scale(a, factor: float) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        return (g * factor,)

    return _result("scale", a.data * factor, (a,), vjp)


def matmul(a, b) -> Tensor:
    """Matrix product supporting vector-matrix, matrix-vector and matrix-matrix."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim not in (1, 2) or b.data.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)

    def vjp(g):
        x, y = a.data, b.data
        if x.ndim == 1 and y.ndim == 1:
            return g * y, g * x
        if x.ndim == 1:
            return g @ y.T, np.outer(x, g)
        if y.ndim == 1:
            return np.outer(g, y), x.T @ g
        return g @ y.T, x.T @ g

    return _result("matmul", a.data @ b.data, (a, b), vjp)


def affine(x, W, b) -> Tensor:
    """``x @ W + b`` for a vector or a row-matrix ``x``."""
    x, W, b = as_tensor(x), as_tensor(W), as_tensor(b)
    if W.data.ndim != 2 or x.shape[-1] != W.shape[0] or b.shape != (W.shape[1],):
        raise ShapeError("affine", x.shape, W.shape, b.shape)

    def vjp(g):
        gx = g @ W.data.T
        if x.data.ndim == 1:
            gW = np.outer(x.data, g)
            gb = g
        else:
            gW = x.data.T @ g
            gb = g.sum(axis=0)
        return gx, gW, gb

    return _result("affine", x.data @ W.data + b.data, (x, W, b), vjp)


def transpose(a) -> Tensor:
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError("transpose", a.shape)

    def vjp(g):
        return (g.T,)

    return _result("transpose", a.data.T.copy(), (a,), vjp)


# ---------------------------------------------------------------------------
# Structure
# ---------------------------------------------------------------------------


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    """Concatenate along an existing axis."""
    parts = tuple(as_tensor(t) for t in tensors)
    if not parts:
        raise ShapeError("concat", ())
    try:
        data = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError:
        raise ShapeError("concat", *(p.shape for p in parts)) from None
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _result("concat", data, parts, vjp)


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    """Stack equally shaped tensors along a new axis (vectors to a row matrix)."""
    parts = tuple(as_tensor(t) for t in tensors)
    if not parts:
        raise ShapeError("stack", ())
    if any(p.shape != parts[0].shape for p in parts):
        raise ShapeError("stack", *(p.shape for p in parts))
    data = np.stack([p.data for p in parts], axis=axis)

    def vjp(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(parts)))

    return _result("stack", data, parts, vjp)


def narrow(a, start: int, length: int) -> Tensor:
    """Slice ``length`` entries along the first axis starting at ``start``."""
    a = as_tensor(a)
    if a.data.ndim == 0 or start < 0 or start + length > a.shape[0]:
        raise ShapeError("narrow", a.shape, (start, length))

    def vjp(g):
        out = np.zeros_like(a.data)
        out[start : start + length] = g
        return (out,)

    return _result("narrow", a.data[start : start + length].copy(), (a,), vjp)


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", a.shape, tuple(shape)) from None

    def vjp(g):
        return (g.reshape(a.shape),)

    return _result("reshape", data.copy(), (a,), vjp)


def take_rows(table, ids: Sequence[int]) -> Tensor:
    """Gather rows of a matrix; gradients scatter-add back into the table."""
    table = as_tensor(table)
    index = np.asarray(ids, dtype=np.int64)
    if table.data.ndim != 2 or (index.size and (index.min() < 0 or index.max() >= table.shape[0])):
        raise ShapeError("take_rows", table.shape, index.shape)

    def vjp(g):
        out = np.zeros_like(table.data)
        np.add.at(out, index, g)
        return (out,)

    return _result("take_rows", table.data[index], (table,), vjp)


def row(matrix, i: int) -> Tensor:
    """Select one row of a matrix as a vector."""
    matrix = as_tensor(matrix)
    if matrix.data.ndim != 2 or not 0 <= i < matrix.shape[0]:
        raise ShapeError("row", matrix.shape, (i,))

    def vjp(g):
        out = np.zeros_like(matrix.data)
        out[i] = g
        return (out,)

    return _result("row", matrix.data[i].copy(), (matrix,), vjp)


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------


def _expand(g: np.ndarray, shape: tuple[int, ...], axis, keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def sum(a, axis: int | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)

    def vjp(g):
        return (np.array(_expand(g, a.shape, axis, keepdims)),)

    return _result("sum", np.sum(a.data, axis=axis, keepdims=keepdims), (a,), vjp)


def mean(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.data.size if axis is None else _axis_len(a.shape, axis)
    if count == 0:
        raise ShapeError("mean", a.shape)

    def vjp(g):
        return (np.array(_expand(g, a.shape, axis, keepdims)) / count,)

    return _result("mean", np.mean(a.data, axis=axis, keepdims=keepdims), (a,), vjp)


def max(a, axis: int = 0) -> Tensor:  # noqa: A001
    """Maximum over an axis; the gradient goes to the first maximal entry."""
    a = as_tensor(a)
    if _axis_len(a.shape, axis) == 0:
        raise ShapeError("max", a.shape)
    winners = np.argmax(a.data, axis=axis)

    def vjp(g):
        out = np.zeros_like(a.data)
        np.put_along_axis(out, np.expand_dims(winners, axis), np.expand_dims(g, axis), axis=axis)
        return (out,)

    return _result("max", np.max(a.data, axis=axis), (a,), vjp)


# ---------------------------------------------------------------------------
# Elementwise nonlinearities
# ---------------------------------------------------------------------------


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)

    def vjp(g):
        return (g * (1.0 - y * y),)

    return _result("tanh", y, (a,), vjp)


def relu(a) -> Tensor:
    a = as_tensor(a)
    positive = a.data > 0

    def vjp(g):
        return (g * positive,)

    return _result("relu", np.where(positive, a.data, 0.0), (a,), vjp)


def leaky_relu(a, slope: float = LEAKY_SLOPE) -> Tensor:
    a = as_tensor(a)
    positive = a.data > 0

    def vjp(g):
        return (np.where(positive, g, g * slope),)

    return _result("leaky_relu", np.where(positive, a.data, a.data * slope), (a,), vjp)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    y = 0.5 * (1.0 + np.tanh(0.5 * a.data))

    def vjp(g):
        return (g * y * (1.0 - y),)

    return _result("sigmoid", y, (a,), vjp)


def log(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= 0):
        raise NumericalError("log of a non-positive value")

    def vjp(g):
        return (g / a.data,)

    return _result("log", np.log(a.data), (a,), vjp)


def clip(a, low: float, high: float) -> Tensor:
    """Clamp values; entries outside the interval receive zero gradient."""
    a = as_tensor(a)
    inside = (a.data >= low) & (a.data <= high)

    def vjp(g):
        return (g * inside,)

    return _result("clip", np.clip(a.data, low, high), (a,), vjp)


# ---------------------------------------------------------------------------
# Normalizations
# ---------------------------------------------------------------------------


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    if a.data.ndim == 0 or a.shape[axis] == 0:
        raise ShapeError("softmax", a.shape)
    shifted = a.data - np.max(a.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / np.sum(e, axis=axis, keepdims=True)

    def vjp(g):
        return (y * (g - np.sum(g * y, axis=axis, keepdims=True)),)

    return _result("softmax", y, (a,), vjp)


def masked_softmax(a, mask, axis: int = -1) -> Tensor:
    """Softmax where entries with ``mask == False`` are excluded and get weight 0.

    Raises:
        NumericalError: If some normalized slice has no unmasked entries.
    """
    a = as_tensor(a)
    keep = np.asarray(mask, dtype=bool)
    if keep.shape != a.shape:
        raise ShapeError("masked_softmax", a.shape, keep.shape)
    if a.data.ndim == 0 or a.shape[axis] == 0:
        raise ShapeError("masked_softmax", a.shape)
    if not np.all(np.any(keep, axis=axis)):
        raise NumericalError("masked_softmax: a normalized slice is fully masked")
    filled = np.where(keep, a.data, -np.inf)
    shifted = filled - np.max(filled, axis=axis, keepdims=True)
    e = np.where(keep, np.exp(shifted), 0.0)
    y = e / np.sum(e, axis=axis, keepdims=True)

    def vjp(g):
        return (y * (g - np.sum(g * y, axis=axis, keepdims=True)),)

    return _result("masked_softmax", y, (a,), vjp)


def layer_norm(x, gain, bias, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalize over the last axis, then apply a learnable gain and bias."""
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    width = x.shape[-1] if x.data.ndim else 0
    if width == 0 or gain.shape != (width,) or bias.shape != (width,):
        raise ShapeError("layer_norm", x.shape, gain.shape, bias.shape)
    mu = np.mean(x.data, axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt(np.mean(centered * centered, axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std

    def vjp(g):
        dxhat = g * gain.data
        dx = inv_std * (
            dxhat
            - np.mean(dxhat, axis=-1, keepdims=True)
            - xhat * np.mean(dxhat * xhat, axis=-1, keepdims=True)
        )
        lead = tuple(range(g.ndim - 1))
        return dx, np.sum(g * xhat, axis=lead), np.sum(g, axis=lead)

    return _result("layer_norm", xhat * gain.data + bias.data, (x, gain, bias), vjp)


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape, dtype=DTYPE))
