"""Independent reference computations used as test oracles.

Nothing here calls into the code paths it checks: masks are applied
elementwise, products are summed term by term and second-order masks are
found by enumerating every configuration.
"""

from itertools import combinations, product

import numpy as np


def masked(d, mask):
    return np.where(mask, np.asarray(d, dtype=np.float32), np.float32(0))


def dense_product(a, b, c_in=None):
    """Sum over k in ascending order, float64, starting from ``c_in``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    acc = np.zeros((a.shape[0], b.shape[1])) if c_in is None else np.array(c_in, dtype=np.float64)
    for kk in range(a.shape[1]):
        acc += np.outer(a[:, kk], b[kk])
    return acc


def random_spd(rng, size, batch=(), ridge=0.1):
    """Random symmetric positive definite matrices of shape ``batch + (size, size)``."""
    x = rng.standard_normal(tuple(batch) + (size, 2 * size))
    return x @ np.swapaxes(x, -1, -2) / (2 * size) + ridge * np.eye(size)


def rho(w, finv, pruned):
    """Exact group saliency from the definition, via an explicit inverse."""
    idx = list(pruned)
    if not idx:
        return 0.0
    w_q = np.asarray(w, dtype=np.float64)[idx]
    sub = np.asarray(finv, dtype=np.float64)[np.ix_(idx, idx)]
    return 0.5 * float(w_q @ np.linalg.inv(sub) @ w_q)


def brute_force_block(w, finv, n=2):
    """Exhaustive V:N:M search on one V x M block.

    Enumerates every 4-column subset and every per-row keep-n-of-4 pattern
    (C(M,4) * C(4,n)**V configurations) and returns the keep-mask with the
    smallest total pruned saliency; the first optimum in enumeration order
    wins.
    """
    v, m = w.shape
    cache = [{} for _ in range(v)]

    def row_cost(row, keep):
        if keep not in cache[row]:
            pruned = [j for j in range(m) if j not in keep]
            cache[row][keep] = rho(w[row], finv[row], pruned)
        return cache[row][keep]

    best_cost, best = np.inf, None
    for subset in combinations(range(m), 4):
        for patterns in product(combinations(subset, n), repeat=v):
            total = sum(row_cost(row, keep) for row, keep in enumerate(patterns))
            if total < best_cost:
                best_cost, best = total, patterns
    mask = np.zeros((v, m), dtype=bool)
    for row, keep in enumerate(best):
        mask[row, list(keep)] = True
    return mask


def kept_l1(d, mask):
    return float(np.abs(np.asarray(d, dtype=np.float64))[mask].sum())
