"""Graph convolution versus graph concatenation: analysis and benchmarking toolkit."""

from .errors import GcatError, NumericError, ParseError, ValidationError
from .graph import Graph, NormalizedAdjacency, TransformedFeatures, gcat, gconv, grid_graph, normalized_adjacency

__version__ = "0.1.0"

__all__ = [
    "GcatError", "NumericError", "ParseError", "ValidationError",
    "Graph", "NormalizedAdjacency", "TransformedFeatures",
    "gcat", "gconv", "grid_graph", "normalized_adjacency",
]
