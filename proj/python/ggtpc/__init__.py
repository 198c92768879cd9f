"""Federated prompt-calibration simulator: python surface over the C++ core."""

try:
    from ._ggtpc import (  # installed package layout
        canonical_config,
        extract_shape,
        gpcl_perturb,
        pooled_stats,
        run_cell_records,
        sampling_probabilities,
        select_clients,
    )
except ImportError:  # in-tree test layout: extension module next to the build
    from _ggtpc import (
        canonical_config,
        extract_shape,
        gpcl_perturb,
        pooled_stats,
        run_cell_records,
        sampling_probabilities,
        select_clients,
    )

__all__ = [
    "canonical_config",
    "extract_shape",
    "gpcl_perturb",
    "pooled_stats",
    "run_cell_records",
    "sampling_probabilities",
    "select_clients",
]
