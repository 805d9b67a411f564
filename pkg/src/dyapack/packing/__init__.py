"""Permutation recovery for sparse symmetric 0-1 matrices.

Indices in this subpackage are 0-based; files written by the command-line
driver use 1-based permutations.
"""

from .embedding import (Skeleton, configuration_to_permutation, flesh_to_body, local_mds,
                        skeleton_select)
from .graph import (NeighborGraph, bfs_levels, half_widths, neighborhoods, outskirts,
                    symm_diff_distance, t_order)
from .permutation import Permutation, apply_permutation, random_permutation
from .pipeline import (BoundsDiagnostics, PackingReport, band_count, bounds_diagnostics, delta_m,
                       pack, report_stats)
from .reconstruct import (NeighborInfo, nearest_neighbor_info, reconstruct_from_distance,
                          reconstruct_points)
from .separators import SeparatorNode, find_separator, recursive_dyadic_pack

__all__ = [
    "NeighborGraph", "neighborhoods", "t_order", "outskirts", "bfs_levels", "symm_diff_distance",
    "half_widths", "Permutation", "apply_permutation", "random_permutation", "Skeleton",
    "skeleton_select", "local_mds", "flesh_to_body", "configuration_to_permutation",
    "PackingReport", "BoundsDiagnostics", "pack", "report_stats", "bounds_diagnostics",
    "delta_m", "band_count", "NeighborInfo", "nearest_neighbor_info",
    "reconstruct_from_distance", "reconstruct_points", "SeparatorNode", "find_separator",
    "recursive_dyadic_pack",
]
