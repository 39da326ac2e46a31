"""Finite-difference verification of tape gradients."""

import logging
from collections.abc import Callable, Sequence

import numpy as np

from treegraph.exceptions import ShapeError
from treegraph.numeric.tensor import Tape, Tensor

logger = logging.getLogger(__name__)

FD_STEP = 1e-5


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max over elements of |a - n| / max(1e-8, |a| + |n|)."""
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


def _scalar(out: Tensor) -> float:
    if out.size != 1:
        raise ShapeError("grad_check objective", out.shape, ())
    return float(out.data.reshape(()))


def grad_check(
    fn: Callable[[Tensor], Tensor], input: Tensor, step: float = FD_STEP
) -> float:
    """Compare the tape gradient of a scalar function with central differences.

    Args:
        fn: Scalar-valued composite of primitives.
        input: Point at which to differentiate (its value is copied).
        step: Finite-difference step.

    Returns:
        Maximum relative error; ``inf`` if any evaluation is non-finite.
    """
    x = Tensor(input.data, requires_grad=True)
    return grad_check_params(lambda: fn(x), [x], step)


def grad_check_params(
    fn: Callable[[], Tensor], params: Sequence[Tensor], step: float = FD_STEP
) -> float:
    """Gradient check of a closure against every element of ``params``.

    The parameters' value arrays are perturbed one element at a time and
    restored afterwards. Their ``grad`` buffers are left holding the
    analytic gradient.
    """
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        out = fn()
    value = _scalar(out)
    if not np.isfinite(value):
        logger.warning("grad_check: objective is non-finite at the evaluation point")
        return float("inf")
    grads = {id(t): g for t, g in tape.leaf_gradients(np.ones(out.shape), out)}
    for p in params:
        p.grad = grads.get(id(p), np.zeros_like(p.data))

    worst = 0.0
    for p in params:
        numeric = np.zeros_like(p.data)
        original = p.data
        for idx in np.ndindex(*p.shape):
            shifted = original.copy()
            shifted[idx] += step
            p.data = shifted
            plus = _scalar(fn())
            shifted = original.copy()
            shifted[idx] -= step
            p.data = shifted
            minus = _scalar(fn())
            p.data = original
            if not (np.isfinite(plus) and np.isfinite(minus)):
                logger.warning(f"grad_check: non-finite objective at {idx} of {p!r}")
                return float("inf")
            numeric[idx] = (plus - minus) / (2.0 * step)
        worst = max(worst, relative_error(p.grad, numeric))
    return worst
