"""Optimum-preserving dynamic-range compression of QUBO instances."""

from .bounds import (
    BoundMethod,
    PinnedPair,
    PreservationInterval,
    SubspaceBoundSet,
    preservation_interval,
    subspace_bounds,
)
from .compress import CompressionConfig, CompressionTrace, Heuristic, Selection, compress
from .core import (
    QuboInstance,
    brute_force_minima,
    diff_stats,
    dynamic_range,
    energy,
    optimum_included,
    round_entries,
    scale,
    spectral_gap,
)
from .errors import DegenerateError, DimensionError, EnumerationLimitError, ParseError, QuboError

__version__ = "0.1.0"

__all__ = [
    "BoundMethod",
    "CompressionConfig",
    "CompressionTrace",
    "DegenerateError",
    "DimensionError",
    "EnumerationLimitError",
    "Heuristic",
    "ParseError",
    "PinnedPair",
    "PreservationInterval",
    "QuboError",
    "QuboInstance",
    "Selection",
    "SubspaceBoundSet",
    "brute_force_minima",
    "compress",
    "diff_stats",
    "dynamic_range",
    "energy",
    "optimum_included",
    "preservation_interval",
    "round_entries",
    "scale",
    "spectral_gap",
    "subspace_bounds",
]
