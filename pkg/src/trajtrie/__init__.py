"""Exact top-k trajectory similarity search over z-order tries.

Hausdorff, discrete Frechet and DTW are supported.  Trajectories are
snapped to a power-of-two grid, indexed in a trie over their cell
sequences (or cell sets, for Hausdorff), and searched best-first with
lower bounds that make the result identical to a linear scan.
"""

from .core import GridConfig, Measure, Point, Trajectory, build_grid
from .distances import distance, dtw, frechet, hausdorff
from .engine import (
    PartitionedIndex,
    QueryResult,
    build_index,
    generate_clustered,
    ingest,
    linear_scan,
    load_index,
    query,
    read_trajectories,
    save_index,
    write_trajectories,
)
from .errors import ConfigurationError, FormatError, InputError, TrajTrieError
from .rp_trie import RPTrie, annotate, build_optimized_trie, build_trie, select_pivots
from .search import top_k_search
from .zorder import deinterleave, interleave, to_reference

__version__ = "0.1.0"

__all__ = [
    "GridConfig", "Measure", "Point", "Trajectory", "build_grid",
    "distance", "dtw", "frechet", "hausdorff",
    "PartitionedIndex", "QueryResult", "build_index", "generate_clustered", "ingest",
    "linear_scan", "load_index", "query", "read_trajectories", "save_index", "write_trajectories",
    "ConfigurationError", "FormatError", "InputError", "TrajTrieError",
    "RPTrie", "annotate", "build_optimized_trie", "build_trie", "select_pivots",
    "top_k_search", "deinterleave", "interleave", "to_reference",
]
