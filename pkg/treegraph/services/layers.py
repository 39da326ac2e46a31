"""Small building blocks shared by the tree and graph encoders."""

from treegraph.exceptions import ConfigError
from treegraph.models import FFNParams
from treegraph.numeric import Tensor, ops

ACTIVATIONS = ("relu", "tanh", "identity")


def activate(x: Tensor, name: str) -> Tensor:
    """Apply a named elementwise nonlinearity.

    Raises:
        ConfigError: Unknown activation name.
    """
    if name == "relu":
        return ops.relu(x)
    if name == "tanh":
        return ops.tanh(x)
    if name == "identity":
        return x
    raise ConfigError(f"unknown activation {name!r}, expected one of {', '.join(ACTIVATIONS)}")


def feed_forward(x: Tensor, params: FFNParams) -> Tensor:
    """``act(x W1 + b1) W2 + b2`` for a vector or each row of a matrix."""
    hidden = activate(ops.affine(x, params.W1, params.b1), params.activation)
    return ops.affine(hidden, params.W2, params.b2)
