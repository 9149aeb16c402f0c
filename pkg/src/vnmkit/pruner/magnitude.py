"""Magnitude-based mask generation: V:N:M, unstructured and vector-wise."""

from __future__ import annotations

import math

import numpy as np

from ..core import SELECTED_COLUMNS, VnmConfig, as_dense, validate_config
from ..errors import NonDivisibleRows, VnmError


def keep_budget(s: float, total: int) -> int:
    """``ceil((1 - s) * total)``, robust to float noise in ``1 - s``."""
    if not 0.0 < s <= 1.0:
        raise VnmError(f"sparsity must lie in (0, 1], got {s}")
    return min(total, math.ceil(round((1.0 - s) * total, 9)))


def _top_positions(score: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` largest entries along the last axis, ascending.

    Ties resolve towards the lower index.
    """
    order = np.argsort(-score, axis=-1, kind="stable")[..., :count]
    return np.sort(order, axis=-1)


def magnitude_prune_vnm(d, cfg: VnmConfig) -> np.ndarray:
    """Two-level magnitude pruning.

    Per V x M block the four columns with the largest L1 norm are selected;
    within them each row keeps its ``cfg.n`` largest-magnitude entries.
    """
    d = as_dense(d)
    r, k = d.shape
    validate_config(r, k, cfg)
    v, n, m = cfg.v, cfg.n, cfg.m
    rb, kb = r // v, k // m

    mag = np.abs(d).astype(np.float64)
    col_l1 = mag.reshape(rb, v, kb, m).sum(axis=1)
    cols = _top_positions(col_l1, SELECTED_COLUMNS)

    glob = np.repeat(cols, v, axis=0) + (np.arange(kb) * m)[None, :, None]
    sel = np.take_along_axis(mag, glob.reshape(r, -1), axis=1).reshape(r, kb, SELECTED_COLUMNS)
    picks = _top_positions(sel, n)
    kept = np.take_along_axis(glob, picks, axis=-1)

    mask = np.zeros((r, k), dtype=bool)
    mask[np.arange(r)[:, None, None], kept] = True
    return mask


def magnitude_prune_unstructured(d, s: float) -> np.ndarray:
    """Keep the ``ceil((1-s)*size)`` largest-magnitude entries."""
    d = as_dense(d)
    keep = keep_budget(s, d.size)
    order = np.argsort(-np.abs(d).ravel(), kind="stable")[:keep]
    mask = np.zeros(d.size, dtype=bool)
    mask[order] = True
    return mask.reshape(d.shape)


def magnitude_prune_vectorwise(d, l: int, s: float) -> np.ndarray:
    """Keep whole vertical ``l x 1`` segments ranked by their L1 norm."""
    d = as_dense(d)
    rows, cols = d.shape
    if l < 1 or rows % l:
        raise NonDivisibleRows(f"vector length {l} does not divide {rows} rows")
    seg_l1 = np.abs(d).astype(np.float64).reshape(rows // l, l, cols).sum(axis=1)
    keep = keep_budget(s, seg_l1.size)
    order = np.argsort(-seg_l1.ravel(), kind="stable")[:keep]
    seg_mask = np.zeros(seg_l1.size, dtype=bool)
    seg_mask[order] = True
    return np.repeat(seg_mask.reshape(rows // l, cols), l, axis=0)

