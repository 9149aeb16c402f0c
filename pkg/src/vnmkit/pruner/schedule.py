"""Structure-decay scheduling: prune with N decreasing step by step."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from ..core import VnmConfig
from ..errors import InvalidSchedule
from .fisher import FisherEstimator
from .second_order import so_prune_vnm


@dataclass(frozen=True)
class DecaySchedule:
    n0: int
    n_target: int
    beta: int
    steps: tuple[int, ...]


def make_decay_schedule(n0: int, n_target: int, beta: int) -> DecaySchedule:
    """Linear decay ``round(n0 - t*(n0-n_target)/beta)`` for ``t = 0..beta``.

    Halves round up, so the sequence does not depend on banker's rounding.
    """
    if n_target < 2 or n0 <= n_target:
        raise InvalidSchedule(f"need n0 > n_target >= 2, got n0={n0}, n_target={n_target}")
    if beta < 1:
        raise InvalidSchedule(f"beta must be >= 1, got {beta}")
    steps = tuple(math.floor(n0 - t * (n0 - n_target) / beta + 0.5) for t in range(beta + 1))
    return DecaySchedule(n0, n_target, beta, steps)


FisherSource = np.ndarray | FisherEstimator | Sequence | Callable


def _fisher_for_step(provider: FisherSource, step: int, n: int):
    if callable(provider):
        return provider(step, n)
    if isinstance(provider, (np.ndarray, FisherEstimator)):
        return provider
    return provider[step]


def gradual_prune(d, cfg: VnmConfig, schedule: DecaySchedule, fisher_provider: FisherSource,
                  mode: str = "exact") -> list[np.ndarray]:
    """One mask per schedule step, each nested in the previous one.

    ``fisher_provider`` supplies the inverse Fisher for each step: a single
    array or estimator reused throughout, a sequence indexed by step, or a
    callable ``(step, n) -> fisher``. Fine-tuning between steps is the
    caller's business.
    """
    if schedule.steps[-1] != cfg.n:
        raise InvalidSchedule(f"schedule ends at N={schedule.steps[-1]}, config asks for N={cfg.n}")
    if schedule.steps[0] > cfg.m:
        raise InvalidSchedule(f"initial N={schedule.steps[0]} exceeds M={cfg.m}")
    if any(b > a for a, b in zip(schedule.steps, schedule.steps[1:])):
        raise InvalidSchedule("schedule steps must be non-increasing")
    masks: list[np.ndarray] = []
    prev = None
    for step, n in enumerate(schedule.steps):
        fisher = _fisher_for_step(fisher_provider, step, n)
        prev = so_prune_vnm(d, fisher, cfg.with_n(n), mode=mode, prev=prev)
        masks.append(prev)
    return masks
