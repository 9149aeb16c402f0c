from .fisher import FisherEstimator, pairwise_terms, saliency_exact, saliency_pairwise
from .magnitude import (
    keep_budget,
    magnitude_prune_unstructured,
    magnitude_prune_vectorwise,
    magnitude_prune_vnm,
)
from .schedule import DecaySchedule, gradual_prune, make_decay_schedule
from .second_order import SEARCH_BOUND, column_search, so_prune_vnm

__all__ = [
    "DecaySchedule",
    "FisherEstimator",
    "SEARCH_BOUND",
    "column_search",
    "gradual_prune",
    "keep_budget",
    "magnitude_prune_unstructured",
    "magnitude_prune_vectorwise",
    "magnitude_prune_vnm",
    "make_decay_schedule",
    "pairwise_terms",
    "saliency_exact",
    "saliency_pairwise",
    "so_prune_vnm",
]
