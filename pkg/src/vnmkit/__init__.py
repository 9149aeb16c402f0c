"""Reference toolkit for the V:N:M sparse format."""

from .core import (
    SELECTED_COLUMNS,
    VnmConfig,
    VnmMatrix,
    as_dense,
    as_mask,
    compress,
    decompress,
    is_vnm_valid,
    mask_of,
    random_vnm_mask,
    validate_config,
)
from .errors import VnmError
from .metrics import EnergyReport, energy, energy_sweep
from .pruner import (
    DecaySchedule,
    FisherEstimator,
    gradual_prune,
    magnitude_prune_unstructured,
    magnitude_prune_vectorwise,
    magnitude_prune_vnm,
    make_decay_schedule,
    saliency_exact,
    saliency_pairwise,
    so_prune_vnm,
)
from .spmm import CostReport, TileShape, cost_model, gemm_dense, mma_sp_tile, spmm_reference

__version__ = "0.1.0"

__all__ = [
    "as_dense",
    "as_mask",
    "compress",
    "cost_model",
    "CostReport",
    "DecaySchedule",
    "decompress",
    "energy",
    "energy_sweep",
    "EnergyReport",
    "FisherEstimator",
    "gemm_dense",
    "gradual_prune",
    "is_vnm_valid",
    "magnitude_prune_unstructured",
    "magnitude_prune_vectorwise",
    "magnitude_prune_vnm",
    "make_decay_schedule",
    "mask_of",
    "mma_sp_tile",
    "random_vnm_mask",
    "saliency_exact",
    "saliency_pairwise",
    "SELECTED_COLUMNS",
    "so_prune_vnm",
    "spmm_reference",
    "TileShape",
    "validate_config",
    "VnmConfig",
    "VnmError",
    "VnmMatrix",
]
