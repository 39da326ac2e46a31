"""Differentiable numeric core: tensors, tape, primitives, Adagrad."""

from . import ops
from .gradcheck import grad_check, grad_check_params, relative_error
from .optim import AdagradState, adagrad_step
from .tensor import OpRecord, Tape, Tensor, as_tensor, backward, current_tape, zero_grad

__all__ = [
    "ops",
    "Tensor",
    "Tape",
    "OpRecord",
    "as_tensor",
    "backward",
    "current_tape",
    "zero_grad",
    "grad_check",
    "grad_check_params",
    "relative_error",
    "AdagradState",
    "adagrad_step",
]
