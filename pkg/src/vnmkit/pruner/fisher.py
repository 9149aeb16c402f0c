"""Block-diagonal empirical Fisher and the group saliency scores built on it.

The saliency of pruning a weight set Q is the loss increase predicted by a
quadratic model whose inverse curvature is the (dampened) inverse Fisher::

    rho(Q) = 1/2 * w_Q^T (Finv_QQ)^{-1} w_Q
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from ..errors import LengthMismatch, NoSamples, ShapeMismatch, SingularSubmatrix

DEFAULT_RELATIVE_DAMP = 1e-4


class FisherEstimator:
    """Accumulates gradient outer products on ``size/block_size`` diagonal blocks.

    ``size`` is the number of weights a gradient sample covers (for a weight
    matrix, ``rows * cols`` in row-major order). With ``block_size = M`` every
    block lines up with one row's M-wide group, which is all the pruner reads.

    Not thread-safe: feed one instance from a single thread.
    """

    def __init__(self, size: int, block_size: int, damp: float | None = None):
        if block_size < 1 or size % block_size:
            raise ShapeMismatch(f"block size {block_size} does not divide {size} weights")
        if damp is not None and not damp > 0:
            raise ValueError(f"dampening must be positive, got {damp}")
        self.size = size
        self.block_size = block_size
        self.damp = damp
        self.sample_count = 0
        self.blocks = np.zeros((size // block_size, block_size, block_size))

    @classmethod
    def for_matrix(cls, rows: int, cols: int, m: int, damp: float | None = None) -> "FisherEstimator":
        return cls(rows * cols, m, damp)

    def add_sample(self, grad) -> "FisherEstimator":
        g = np.asarray(grad, dtype=np.float64).ravel()
        if g.size != self.size:
            raise LengthMismatch(f"gradient has {g.size} entries, estimator expects {self.size}")
        gb = g.reshape(-1, self.block_size)
        self.blocks += gb[:, :, None] * gb[:, None, :]
        self.sample_count += 1
        return self

    def add_samples(self, grads) -> "FisherEstimator":
        for g in np.asarray(grads, dtype=np.float64).reshape(-1, self.size):
            self.add_sample(g)
        return self

    def mean_blocks(self) -> np.ndarray:
        if self.sample_count < 1:
            raise NoSamples("no gradient samples accumulated")
        return self.blocks / self.sample_count

    def effective_damp(self) -> float:
        """Explicit dampening, else ``1e-4 * mean(diag F)`` (1.0 if F is zero)."""
        if self.damp is not None:
            return float(self.damp)
        mean_diag = float(np.diagonal(self.mean_blocks(), axis1=1, axis2=2).mean())
        return DEFAULT_RELATIVE_DAMP * mean_diag if mean_diag > 0 else 1.0

    def finalize(self) -> np.ndarray:
        """Inverse dampened Fisher blocks, shape ``(size/B, B, B)``."""
        fisher = self.mean_blocks() + self.effective_damp() * np.eye(self.block_size)
        inv = np.linalg.inv(fisher)
        return 0.5 * (inv + np.swapaxes(inv, 1, 2))


def saliency_exact(w_q, finv_qq) -> float:
    w = np.asarray(w_q, dtype=np.float64).ravel()
    f = np.asarray(finv_qq, dtype=np.float64)
    if w.size == 0:
        return 0.0
    if f.shape != (w.size, w.size):
        raise ShapeMismatch(f"inverse Fisher block {f.shape} does not match {w.size} weights")
    try:
        chol = np.linalg.cholesky(f)
    except np.linalg.LinAlgError:
        raise SingularSubmatrix("inverse Fisher submatrix is not positive definite") from None
    z = np.linalg.solve(chol, w)
    return 0.5 * float(z @ z)


def saliency_pairwise(w, finv_block, q) -> float:
    """Second-order inclusion-exclusion estimate of ``rho(q)``.

    Singleton scores plus, for every pair in ``q``, the correction
    ``rho({i, j}) - rho({i}) - rho({j})``.
    """
    w = np.asarray(w, dtype=np.float64).ravel()
    f = np.asarray(finv_block, dtype=np.float64)
    idx = sorted(int(i) for i in q)
    if idx and (idx[0] < 0 or idx[-1] >= w.size):
        raise ShapeMismatch(f"index set {idx} outside group of {w.size}")
    single = {i: saliency_exact(w[[i]], f[np.ix_([i], [i])]) for i in idx}
    total = sum(single.values())
    for i, j in combinations(idx, 2):
        pair = saliency_exact(w[[i, j]], f[np.ix_([i, j], [i, j])])
        total += pair - single[i] - single[j]
    return total


def pairwise_terms(w: np.ndarray, finv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised singleton scores and pair corrections for a batch of groups.

    ``w`` has shape ``(..., M)`` and ``finv`` ``(..., M, M)``. Returns
    ``(rho1, delta)`` with ``delta[..., i, j] = rho({i,j}) - rho1[i] - rho1[j]``
    and a zero diagonal, so that ``rho(P) = p.rho1 + p^T delta p / 2`` for the
    indicator ``p`` of P.
    """
    diag = np.diagonal(finv, axis1=-2, axis2=-1)
    if (diag <= 0).any():
        raise SingularSubmatrix("non-positive diagonal in inverse Fisher")
    rho1 = 0.5 * w * w / diag
    a = diag[..., :, None]
    c = diag[..., None, :]
    b = finv
    det = a * c - b * b
    off = ~np.eye(w.shape[-1], dtype=bool)
    if (det[..., off] <= 0).any():
        raise SingularSubmatrix("2x2 inverse Fisher submatrix is not positive definite")
    det = np.where(off, det, 1.0)
    wi = w[..., :, None]
    wj = w[..., None, :]
    rho2 = 0.5 * (c * wi * wi - 2.0 * b * wi * wj + a * wj * wj) / det
    delta = np.where(off, rho2 - rho1[..., :, None] - rho1[..., None, :], 0.0)
    return rho1, delta
