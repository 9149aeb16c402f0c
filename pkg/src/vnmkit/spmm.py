"""Reference SpMM on the compressed operand, a 2:4 tile model and a cost model.

All products accumulate in float64 in ascending-k order per output element,
so the sparse engine and the dense oracle add the same terms in the same
sequence.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .core import SELECTED_COLUMNS, VnmConfig, VnmMatrix, as_dense, round_half, validate_config
from .errors import DimensionMismatch, IllegalMetadata, UnsupportedPattern

MMA_K_SHAPES = (16, 32)


@dataclass(frozen=True)
class TileShape:
    """``m16n8kK`` shapes of the fp16 sparse MMA instruction."""

    mma_k: int = 32
    mma_r: int = 16
    mma_c: int = 8

    def __post_init__(self):
        if (self.mma_r, self.mma_c) != (16, 8) or self.mma_k not in MMA_K_SHAPES:
            raise UnsupportedPattern(f"no fp16 mma.sp shape m{self.mma_r}n{self.mma_c}k{self.mma_k}")


def gemm_dense(a, b) -> np.ndarray:
    """Dense product with float64 accumulation, summing over k in ascending order."""
    a = as_dense(a).astype(np.float64)
    b = as_dense(b).astype(np.float64)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]))
    for kk in range(a.shape[1]):
        out += a[:, kk, None] * b[kk, None, :]
    return out


def spmm_reference(a: VnmMatrix, b) -> np.ndarray:
    """``decompress(a) @ b`` evaluated on the compressed form.

    ``b`` is only touched through ``b.shape`` and one row gather restricted
    to the columns named by ``column_loc``, so dense rows outside the
    selected columns are never read. Returns float64.
    """
    if len(b.shape) != 2 or b.shape[0] != a.k:
        raise DimensionMismatch(f"operand B has shape {tuple(b.shape)}, expected ({a.k}, C)")
    cols = a.stored_columns()
    rows_needed = np.unique(cols)
    b_sub = np.asarray(b[rows_needed], dtype=np.float64)
    pos = np.searchsorted(rows_needed, cols)

    vals = round_half(a.values) if a.half else a.values
    vals = vals.astype(np.float64)
    out = np.zeros((a.r, b.shape[1]))
    kb, n = cols.shape[1], cols.shape[2]
    for g in range(kb):
        for s in range(n):
            out += vals[:, g, s, None] * b_sub[pos[:, g, s]]
    return out


def _tile_positions(meta: np.ndarray) -> np.ndarray:
    meta = np.asarray(meta)
    if (meta >= SELECTED_COLUMNS).any() or (meta < 0).any():
        raise IllegalMetadata("metadata code outside [0, 4)")
    pairs = meta.reshape(meta.shape[0], -1, 2)
    if (pairs[..., 1] <= pairs[..., 0]).any():
        raise IllegalMetadata("metadata codes must be strictly increasing within each group")
    group = np.arange(meta.shape[1]) // 2
    return group[None, :] * SELECTED_COLUMNS + meta.astype(np.int64)


def mma_sp_tile(a_vals, meta, b, c_in, shape: TileShape = TileShape()) -> np.ndarray:
    """One 2:4 sparse MMA: ``c_in + A @ b`` with ``A`` given as values + 2-bit codes.

    ``a_vals`` and ``meta`` are ``16 x k/2``: the two stored values of every
    group of four columns and their positions within the group.
    """
    r, c, k = shape.mma_r, shape.mma_c, shape.mma_k
    a_vals = np.asarray(a_vals, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    acc = np.array(c_in, dtype=np.float64)
    meta = np.asarray(meta)
    if a_vals.shape != (r, k // 2) or meta.shape != (r, k // 2):
        raise DimensionMismatch(f"sparse operand must be {r}x{k // 2}, got {a_vals.shape} / {meta.shape}")
    if b.shape != (k, c) or acc.shape != (r, c):
        raise DimensionMismatch(f"expected B {k}x{c} and C {r}x{c}, got {b.shape} / {acc.shape}")
    pos = _tile_positions(meta)
    for j in range(k // 2):
        acc += a_vals[:, j, None] * b[pos[:, j]]
    return acc


def mma_sp_tiled(a_vals, meta, b, mma_k: int = 32) -> np.ndarray:
    """Full 2:4 product assembled from ``m16n8k{mma_k}`` tiles, chaining the accumulator along k."""
    shape = TileShape(mma_k)
    a_vals = np.asarray(a_vals, dtype=np.float64)
    meta = np.asarray(meta)
    b = np.asarray(b, dtype=np.float64)
    rows, half_k = a_vals.shape
    k, cols = b.shape
    if half_k * 2 != k or rows % shape.mma_r or cols % shape.mma_c or k % mma_k:
        raise DimensionMismatch(f"{rows}x{k} by {k}x{cols} does not tile into m16n8k{mma_k}")
    out = np.zeros((rows, cols))
    hk = mma_k // 2
    for i in range(0, rows, shape.mma_r):
        for j in range(0, cols, shape.mma_c):
            acc = np.zeros((shape.mma_r, shape.mma_c))
            for kk in range(0, k, mma_k):
                t = kk // 2
                acc = mma_sp_tile(a_vals[i:i + 16, t:t + hk], meta[i:i + 16, t:t + hk],
                                  b[kk:kk + mma_k, j:j + 8], acc, shape)
            out[i:i + 16, j:j + 8] = acc
    return out


@dataclass(frozen=True)
class CostReport:
    dense_macs: int
    sparse_macs: int
    b_rows_loaded: int
    column_loc_bytes: int
    metadata_bytes: int
    ideal_speedup: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def cost_model(r: int, k: int, c: int, cfg: VnmConfig) -> CostReport:
    """Operation and storage counts for an ``r x k`` V:N:M operand times ``k x c``.

    ``b_rows_loaded`` counts the rows of B one block-row touches: four per
    block-column, i.e. ``4*k/m`` of ``k``.
    """
    validate_config(r, k, cfg)
    kb = k // cfg.m
    stored = r * kb * cfg.n
    return CostReport(
        dense_macs=r * k * c,
        sparse_macs=stored * c,
        b_rows_loaded=SELECTED_COLUMNS * kb,
        column_loc_bytes=(r // cfg.v) * kb * SELECTED_COLUMNS * 2,
        metadata_bytes=-(-stored // 4),
        ideal_speedup=cfg.m / cfg.n,
    )
