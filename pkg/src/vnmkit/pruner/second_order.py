"""Second-order (empirical Fisher) V:N:M mask search.

Rows of a V x M block are scored independently: a row that keeps the set K
pays the saliency of pruning its complement. For every candidate set S of four
columns each row takes its cheapest keep-set inside S, and the block takes the
S with the smallest total. Keep-set scores depend only on K, so each row scores
its keep-sets once and every S reuses them.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .._parallel import ordered_map
from ..core import SELECTED_COLUMNS, VnmConfig, as_dense, as_mask, check_blocking
from ..errors import (
    FisherShapeMismatch,
    InfeasibleNesting,
    SingularSubmatrix,
    UnsupportedPattern,
)
from .fisher import FisherEstimator, pairwise_terms

#: Largest number of combinations enumerated exhaustively.
SEARCH_BOUND = 20_000

MODES = ("exact", "pairwise")


def column_search(m: int) -> str:
    """``"exhaustive"`` when all C(m, 4) column subsets are enumerated, else ``"greedy"``."""
    return "exhaustive" if comb(m, SELECTED_COLUMNS) <= SEARCH_BOUND else "greedy"


@lru_cache(maxsize=None)
def _binom_table(size: int) -> np.ndarray:
    return np.array([[comb(i, j) for j in range(SELECTED_COLUMNS + 2)] for i in range(size + 1)], dtype=np.int64)


def _colex_rank(combos: np.ndarray, m: int) -> np.ndarray:
    """Colexicographic rank of ascending combinations along the last axis."""
    table = _binom_table(m)
    t = combos.shape[-1]
    rank = np.zeros(combos.shape[:-1], dtype=np.int64)
    for i in range(t):
        rank += table[combos[..., i], i + 1]
    return rank


@lru_cache(maxsize=None)
def _all_subsets(m: int) -> np.ndarray:
    return np.array(list(combinations(range(m), SELECTED_COLUMNS)), dtype=np.int64)


@lru_cache(maxsize=None)
def _local_combos(t: int) -> np.ndarray:
    return np.array(list(combinations(range(SELECTED_COLUMNS), t)), dtype=np.int64).reshape(comb(SELECTED_COLUMNS, t), t)


class _RowScorer:
    """Saliency of pruning the complement of a keep-set, for one row group."""

    def __init__(self, w: np.ndarray, finv: np.ndarray, mode: str):
        self.w = w
        self.finv = finv
        self.mode = mode
        self.m = w.size
        if mode == "pairwise":
            self.rho1, self.delta = pairwise_terms(w, finv)

    def __call__(self, keep: np.ndarray) -> np.ndarray:
        keep = np.asarray(keep, dtype=np.int64).reshape(len(keep), -1)
        pruned = np.ones((len(keep), self.m), dtype=bool)
        np.put_along_axis(pruned, keep, False, axis=1)
        if self.mode == "pairwise":
            p = pruned.astype(np.float64)
            return p @ self.rho1 + 0.5 * np.einsum("ki,ij,kj->k", p, self.delta, p)
        q = self.m - keep.shape[1]
        if q == 0:
            return np.zeros(len(keep))
        comp = np.nonzero(pruned)[1].reshape(len(keep), q)
        sub = self.finv[comp[:, :, None], comp[:, None, :]]
        rhs = self.w[comp]
        try:
            x = np.linalg.solve(sub, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise SingularSubmatrix("inverse Fisher submatrix is singular") from None
        return 0.5 * np.einsum("ki,ki->k", rhs, x)


def _greedy_keep(score: _RowScorer, cand: np.ndarray, t: int) -> np.ndarray:
    """Drop candidates one at a time, each time the one whose removal costs least."""
    kept = list(cand)
    while len(kept) > t:
        trial = np.array([kept[:i] + kept[i + 1:] for i in range(len(kept))])
        kept.pop(int(np.argmin(score(trial))))
    return np.array(kept, dtype=np.int64)


def _rowwise_block(scorers, cand, n, strict):
    """Relaxed stage (n > 4): every row keeps its best ``n`` candidates."""
    keeps = []
    for row, score in enumerate(scorers):
        idx = np.flatnonzero(cand[row])
        if strict and idx.size < n:
            raise InfeasibleNesting(f"row offers {idx.size} candidates, {n} required")
        t = min(n, idx.size)
        if comb(idx.size, t) <= SEARCH_BOUND:
            options = np.array(list(combinations(idx, t)), dtype=np.int64).reshape(comb(idx.size, t), t)
            keeps.append(options[int(np.argmin(score(options)))])
        else:
            keeps.append(_greedy_keep(score, idx, t))
    return keeps


def _greedy_columns(scorers, cand, n) -> np.ndarray:
    """Rank columns by the summed singleton saliency of each row's top-n entries."""
    m = cand.shape[1]
    col_score = np.zeros(m)
    for row, score in enumerate(scorers):
        single = 0.5 * score.w ** 2 / np.diagonal(score.finv)
        key = np.where(cand[row], -single, np.inf)
        top = np.argsort(key, kind="stable")[:min(n, int(cand[row].sum()))]
        col_score[top] += single[top]
    return np.sort(np.argsort(-col_score, kind="stable")[:SELECTED_COLUMNS])[None, :]


def _vnm_block(scorers, cand, n, subsets, strict):
    """Four-column stage (n <= 4): pick S, then each row's keep-set inside S."""
    m = cand.shape[1]
    v = len(scorers)
    avail = cand[:, subsets].sum(axis=2)  # (v, C): candidates inside each S
    need = np.minimum(avail, n)
    cost = np.zeros(len(subsets))
    choice = np.zeros((v, len(subsets)), dtype=np.int64)
    for t in np.unique(need):
        local = _local_combos(int(t))
        combos = subsets[:, local]  # (C, L, t)
        ranks = _colex_rank(combos, m)
        for row, score in enumerate(scorers):
            hit = need[row] == t
            if not hit.any():
                continue
            row_ranks = ranks[hit]
            ok = cand[row][combos[hit]].all(axis=-1)
            table = np.full(comb(m, int(t)), np.inf)
            needed, first = np.unique(row_ranks[ok], return_index=True)
            if needed.size:
                table[needed] = score(combos[hit][ok][first])
            row_scores = np.where(ok, table[row_ranks], np.inf)
            cost[hit] += row_scores.min(axis=1)
            choice[row, hit] = row_scores.argmin(axis=1)

    best = int(np.argmin(cost))
    if strict and (need[:, best] < n).any():
        raise InfeasibleNesting("no column subset leaves every row its full budget")
    s = subsets[best]
    return [s[_local_combos(int(need[row, best]))[choice[row, best]]] for row in range(v)]


def _as_inverse_blocks(fisher) -> np.ndarray:
    if isinstance(fisher, FisherEstimator):
        return fisher.finalize()
    return np.asarray(fisher, dtype=np.float64)


def so_prune_vnm(d, fisher, cfg: VnmConfig, mode: str = "exact", prev=None, strict: bool = False) -> np.ndarray:
    """Second-order V:N:M mask minimising the summed saliency of pruned weights.

    ``fisher`` is a :class:`FisherEstimator` or its finalized inverse blocks,
    shape ``(rows*cols/M, M, M)``, one block per row-wise M-group. ``mode``
    selects exact group saliency or the pair-wise approximation. When ``prev``
    is given only its kept positions are candidates, so the result nests in it;
    rows that run short keep what they can unless ``strict`` is set, which
    raises :class:`InfeasibleNesting` instead.

    For ``cfg.n > 4`` the four-column rule is not enforceable and each row
    simply keeps its best ``n`` of M.
    """
    if mode not in MODES:
        raise UnsupportedPattern(f"mode must be one of {MODES}, got {mode!r}")
    d = as_dense(d)
    r, k = d.shape
    v, n, m = cfg.v, cfg.n, cfg.m
    check_blocking(r, k, v, m)
    if m < SELECTED_COLUMNS or n > m:
        raise UnsupportedPattern(f"pattern {cfg} is not prunable")
    finv = _as_inverse_blocks(fisher)
    if finv.shape != (r * k // m, m, m):
        raise FisherShapeMismatch(f"expected inverse Fisher blocks {(r * k // m, m, m)}, got {finv.shape}")
    cand = np.ones((r, k), dtype=bool) if prev is None else as_mask(prev, (r, k))
    if prev is not None and strict and (cand.reshape(r, k // m, m).sum(axis=2) < n).any():
        raise InfeasibleNesting(f"previous mask keeps fewer than {n} entries in some row group")

    rb, kb = r // v, k // m
    w = d.astype(np.float64).reshape(rb, v, kb, m)
    fb = finv.reshape(rb, v, kb, m, m)
    cb = cand.reshape(rb, v, kb, m)
    subsets = _all_subsets(m) if column_search(m) == "exhaustive" else None

    def solve(block):
        i, g = block
        scorers = [_RowScorer(w[i, row, g], fb[i, row, g], mode) for row in range(v)]
        if n > SELECTED_COLUMNS:
            return _rowwise_block(scorers, cb[i, :, g], n, strict)
        subs = subsets if subsets is not None else _greedy_columns(scorers, cb[i, :, g], n)
        return _vnm_block(scorers, cb[i, :, g], n, subs, strict)

    blocks = [(i, g) for i in range(rb) for g in range(kb)]
    mask = np.zeros((r, k), dtype=bool)
    for (i, g), keeps in zip(blocks, ordered_map(solve, blocks)):
        for row, keep in enumerate(keeps):
            mask[i * v + row, g * m + keep] = True
    return mask

