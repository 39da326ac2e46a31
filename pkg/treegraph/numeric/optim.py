"""Adagrad optimizer."""

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from treegraph.numeric.tensor import Tensor

logger = logging.getLogger(__name__)


@dataclass
class AdagradState:
    """Per-parameter squared-gradient accumulators plus the current step size."""

    lr: float = 0.1
    eps: float = 1e-10
    accumulators: dict[str, np.ndarray] = field(default_factory=dict)

    def decay(self, factor: float) -> float:
        """Multiply the learning rate by ``factor`` and return the new value."""
        self.lr *= factor
        return self.lr

    def decay_on_decline(self, previous: float | None, current: float, factor: float) -> bool:
        """Decay the learning rate when ``current`` is below ``previous``."""
        if previous is not None and current < previous:
            self.decay(factor)
            return True
        return False


def adagrad_step(
    params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray], state: AdagradState
) -> list[str]:
    """Apply one Adagrad update in place.

    ``accumulator += grad**2`` then ``param -= lr * grad / (sqrt(accumulator) + eps)``.
    Parameters without a gradient, or frozen ones, are left untouched.

    Args:
        params: Named parameters.
        grads: Gradients keyed by the same names.
        state: Optimizer state, updated in place.

    Returns:
        Names of parameters whose step was rejected for a non-finite gradient.
    """
    rejected = []
    for name, param in params.items():
        grad = grads.get(name)
        if grad is None or not param.requires_grad:
            continue
        if grad.shape != param.shape:
            raise ValueError(f"gradient for {name} has shape {grad.shape}, expected {param.shape}")
        if not np.all(np.isfinite(grad)):
            logger.warning(f"Rejected Adagrad step for {name}: non-finite gradient")
            rejected.append(name)
            continue
        acc = state.accumulators.get(name)
        if acc is None:
            acc = np.zeros_like(param.data)
        acc = acc + grad * grad
        state.accumulators[name] = acc
        param.data = param.data - state.lr * grad / (np.sqrt(acc) + state.eps)
    return rejected
