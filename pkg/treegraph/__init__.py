"""treegraph - long-document classification with syntax trees and document graphs."""

from .config import TrainConfig, config, load_config
from .exceptions import (
    ConfigError,
    CorpusError,
    DataError,
    GradientError,
    GraphError,
    NumericalError,
    ParseError,
    ShapeError,
    TreegraphError,
)

__version__ = "0.1.0"

__all__ = [
    "TrainConfig",
    "config",
    "load_config",
    "TreegraphError",
    "ConfigError",
    "DataError",
    "ParseError",
    "CorpusError",
    "NumericalError",
    "ShapeError",
    "GradientError",
    "GraphError",
]
