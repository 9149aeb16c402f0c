"""V:N:M data model and lossless conversion to and from the compressed layout.

A V:N:M matrix is cut into V x M blocks. Each block keeps at most four of its
M columns (``column_loc``) and every row of the block keeps at most N entries
among those four columns. The compressed form stores, per row and per
block-column, exactly N values together with 2-bit codes (``m_indices``) that
point into the block's four selected columns.

Dense operands are plain 2-D ``float32`` numpy arrays and masks are 2-D
``bool`` arrays of the same shape; :func:`as_dense` and :func:`as_mask` enforce
those invariants at the library boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CorruptMetadata,
    InvalidMask,
    NonDivisibleCols,
    NonDivisibleRows,
    NonFiniteValue,
    ShapeMismatch,
    UnsupportedPattern,
)

#: Columns kept per V x M block; fixed by the 2:4 sparse tensor core mapping.
SELECTED_COLUMNS = 4


@dataclass(frozen=True)
class VnmConfig:
    v: int
    n: int
    m: int

    def __post_init__(self):
        for name in ("v", "n", "m"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise UnsupportedPattern(f"{name} must be a positive integer, got {value!r}")

    @classmethod
    def parse(cls, text: str) -> "VnmConfig":
        """Build a config from ``"V:N:M"`` notation, e.g. ``"64:2:8"``."""
        try:
            v, n, m = (int(p) for p in text.split(":"))
        except ValueError:
            raise UnsupportedPattern(f"expected V:N:M, got {text!r}") from None
        return cls(v, n, m)

    @property
    def a(self) -> int:
        return SELECTED_COLUMNS

    def sparsity(self) -> float:
        return 1.0 - self.n / self.m

    def ideal_speedup(self) -> float:
        return self.m / self.n

    def with_n(self, n: int) -> "VnmConfig":
        return VnmConfig(self.v, n, self.m)

    def __str__(self):
        return f"{self.v}:{self.n}:{self.m}"


def check_blocking(r: int, k: int, v: int, m: int) -> None:
    if r % v:
        raise NonDivisibleRows(f"block height {v} does not divide {r} rows")
    if k % m:
        raise NonDivisibleCols(f"block width {m} does not divide {k} columns")


def validate_config(r: int, k: int, cfg: VnmConfig) -> None:
    """Raise unless an ``r x k`` matrix can be stored in ``cfg``."""
    if cfg.n != 2 or cfg.m < SELECTED_COLUMNS:
        raise UnsupportedPattern(f"only V:2:M with M >= 4 is supported, got {cfg}")
    check_blocking(r, k, cfg.v, cfg.m)


def as_dense(x) -> np.ndarray:
    """Return ``x`` as a C-contiguous 2-D float32 array with finite entries."""
    arr = np.ascontiguousarray(x, dtype=np.float32)
    if arr.ndim != 2:
        raise ShapeMismatch(f"dense matrix must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteValue("dense matrix contains NaN or Inf")
    return arr


def as_mask(mask, shape: tuple[int, int] | None = None) -> np.ndarray:
    arr = np.ascontiguousarray(mask, dtype=bool)
    if arr.ndim != 2:
        raise ShapeMismatch(f"mask must be 2-D, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ShapeMismatch(f"mask shape {arr.shape} does not match matrix shape {tuple(shape)}")
    return arr


def is_vnm_valid(mask, cfg: VnmConfig) -> bool:
    """Check the V:N:M structure of a keep-mask.

    Within every V x M block at most four distinct columns may hold kept
    entries and every row may keep at most ``cfg.n`` entries. For ``n > 4``
    (intermediate steps of gradual pruning) the four-column rule cannot apply
    and only the per-row budget is checked.
    """
    mask = as_mask(mask)
    r, k = mask.shape
    if r % cfg.v or k % cfg.m:
        return False
    blocks = mask.reshape(r // cfg.v, cfg.v, k // cfg.m, cfg.m)
    if (blocks.sum(axis=3) > cfg.n).any():
        return False
    if cfg.n <= SELECTED_COLUMNS:
        if (blocks.any(axis=1).sum(axis=2) > SELECTED_COLUMNS).any():
            return False
    return True


def random_vnm_mask(rows: int, cols: int, cfg: VnmConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw a uniformly random saturated V:N:M mask.

    Each block picks four random columns and each row keeps ``cfg.n`` random
    positions among them.
    """
    check_blocking(rows, cols, cfg.v, cfg.m)
    n = min(cfg.n, SELECTED_COLUMNS)
    rb, kb = rows // cfg.v, cols // cfg.m
    cols_sel = np.argsort(rng.random((rb, kb, cfg.m)), axis=-1)[..., :SELECTED_COLUMNS]
    picks = np.argsort(rng.random((rows, kb, SELECTED_COLUMNS)), axis=-1)[..., :n]
    glob = np.take_along_axis(np.repeat(cols_sel, cfg.v, axis=0), picks, axis=-1)
    glob = glob + (np.arange(kb) * cfg.m)[None, :, None]
    mask = np.zeros((rows, cols), dtype=bool)
    mask[np.arange(rows)[:, None, None], glob] = True
    return mask


def round_half(x: np.ndarray) -> np.ndarray:
    """Round float32 values through IEEE half precision."""
    with np.errstate(over="ignore"):
        out = np.asarray(x, dtype=np.float32).astype(np.float16).astype(np.float32)
    if not np.isfinite(out).all():
        raise NonFiniteValue("value out of half-precision range")
    return out


@dataclass(eq=False)
class VnmMatrix:
    """Compressed V:N:M operand.

    ``values`` and ``m_indices`` have shape ``(r, k/m, n)``; ``column_loc``
    has shape ``(r/v, k/m, 4)`` and holds block-local column numbers in
    ``[0, m)``. ``half`` marks values that were rounded through fp16.
    """

    r: int
    k: int
    cfg: VnmConfig
    values: np.ndarray
    m_indices: np.ndarray
    column_loc: np.ndarray
    half: bool = False
    _checked: bool = field(default=False, repr=False)

    def __post_init__(self):
        v, n, m = self.cfg.v, self.cfg.n, self.cfg.m
        try:
            check_blocking(self.r, self.k, v, m)
        except (NonDivisibleRows, NonDivisibleCols) as exc:
            raise ShapeMismatch(str(exc)) from None
        kb = self.k // m
        self.values = np.ascontiguousarray(self.values, dtype=np.float32)
        self.m_indices = np.ascontiguousarray(self.m_indices, dtype=np.uint8)
        self.column_loc = np.ascontiguousarray(self.column_loc, dtype=np.uint16)
        expected = {
            "values": (self.r, kb, n),
            "m_indices": (self.r, kb, n),
            "column_loc": (self.r // v, kb, SELECTED_COLUMNS),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ShapeMismatch(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.r, self.k)

    def validate(self) -> "VnmMatrix":
        """Raise :class:`CorruptMetadata` if the index structures are inconsistent."""
        if self._checked:
            return self
        if self.cfg.n > SELECTED_COLUMNS:
            raise CorruptMetadata(f"n={self.cfg.n} cannot be addressed by 2-bit codes")
        if (self.m_indices >= SELECTED_COLUMNS).any():
            raise CorruptMetadata("m-index code outside [0, 4)")
        if (np.diff(self.m_indices.astype(np.int16), axis=-1) <= 0).any():
            raise CorruptMetadata("m-index codes not strictly increasing within a row group")
        if (self.column_loc >= self.cfg.m).any():
            raise CorruptMetadata("column_loc entry outside the block width")
        if (np.diff(self.column_loc.astype(np.int32), axis=-1) <= 0).any():
            raise CorruptMetadata("column_loc not strictly increasing within a block")
        if not np.isfinite(self.values).all():
            raise CorruptMetadata("stored values contain NaN or Inf")
        self._checked = True
        return self

    def stored_columns(self) -> np.ndarray:
        """Global column index of every stored value, shape ``(r, k/m, n)``."""
        self.validate()
        kb = self.k // self.cfg.m
        loc = np.repeat(self.column_loc.astype(np.int64), self.cfg.v, axis=0)
        cols = np.take_along_axis(loc, self.m_indices.astype(np.int64), axis=-1)
        return cols + (np.arange(kb, dtype=np.int64) * self.cfg.m)[None, :, None]

    def structure_bytes(self) -> dict[str, int]:
        """Serialized size of each structure in the VNM1 container."""
        return {
            "values": self.values.size * (2 if self.half else 4),
            "m_indices": -(-self.m_indices.size // 4),
            "column_loc": self.column_loc.size * 2,
        }


def compress(d, mask, cfg: VnmConfig, half: bool = False) -> VnmMatrix:
    """Compress ``d`` restricted to ``mask`` into the V:N:M layout.

    Blocks with fewer than four used columns pad ``column_loc`` with their
    smallest unused columns; rows with fewer than N kept entries are padded
    with explicit zeros at the smallest free codes.
    """
    d = as_dense(d)
    r, k = d.shape
    validate_config(r, k, cfg)
    mask = as_mask(mask, d.shape)
    if not is_vnm_valid(mask, cfg):
        raise InvalidMask(f"mask is not a valid {cfg} pattern")

    v, n, m = cfg.v, cfg.n, cfg.m
    rb, kb = r // v, k // m
    masked = np.where(mask, d, np.float32(0))
    if half:
        masked = round_half(masked)

    # used columns first, then the smallest unused ones; lower index wins ties
    used = mask.reshape(rb, v, kb, m).any(axis=1)
    col_key = np.where(used, 0, m) + np.arange(m)
    column_loc = np.sort(np.argsort(col_key, axis=-1)[..., :SELECTED_COLUMNS], axis=-1)

    glob = np.repeat(column_loc, v, axis=0) + (np.arange(kb) * m)[None, :, None]
    flat = glob.reshape(r, -1)
    sel_keep = np.take_along_axis(mask, flat, axis=1).reshape(r, kb, SELECTED_COLUMNS)
    sel_vals = np.take_along_axis(masked, flat, axis=1).reshape(r, kb, SELECTED_COLUMNS)

    code_key = np.where(sel_keep, 0, SELECTED_COLUMNS) + np.arange(SELECTED_COLUMNS)
    codes = np.sort(np.argsort(code_key, axis=-1)[..., :n], axis=-1)
    values = np.take_along_axis(sel_vals, codes, axis=-1)

    out = VnmMatrix(r, k, cfg, values, codes, column_loc, half=half)
    out._checked = True
    return out


def decompress(s: VnmMatrix) -> np.ndarray:
    cols = s.stored_columns()
    out = np.zeros((s.r, s.k), dtype=np.float32)
    out[np.arange(s.r)[:, None, None], cols] = s.values
    return out


def mask_of(s: VnmMatrix) -> np.ndarray:
    """Keep-mask of the structurally stored positions (padding included)."""
    cols = s.stored_columns()
    mask = np.zeros((s.r, s.k), dtype=bool)
    mask[np.arange(s.r)[:, None, None], cols] = True
    return mask
