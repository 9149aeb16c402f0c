"""Energy: the share of absolute weight mass a pruning mask keeps."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

import numpy as np

from .core import VnmConfig, as_dense, as_mask
from .errors import UnrealizableSparsity, VnmError, ZeroDenominator
from .pruner.magnitude import (
    magnitude_prune_unstructured,
    magnitude_prune_vectorwise,
    magnitude_prune_vnm,
)


@dataclass(frozen=True)
class EnergyReport:
    policy: str
    sparsity: float
    energy: float


def energy(d, mask) -> float:
    d = as_dense(d)
    mask = as_mask(mask, d.shape)
    mag = np.abs(d).astype(np.float64)
    total = mag.sum()
    if total == 0:
        raise ZeroDenominator("matrix has no absolute mass")
    return float(mag[mask].sum() / total)


def grid_m(s: float, tol: float = 1e-9) -> int:
    """Block width ``m`` with ``1 - 2/m == s`` (V:2:M sparsity grid)."""
    if not 0 < s < 1:
        raise UnrealizableSparsity(f"sparsity {s} is not of the form 1 - 2/m")
    m = round(2.0 / (1.0 - s))
    if m < 4 or abs(1.0 - 2.0 / m - s) > tol:
        raise UnrealizableSparsity(f"sparsity {s} is not of the form 1 - 2/m with m >= 4")
    return m


def _parse_policy(policy: str) -> tuple[str, int | None]:
    kind, _, arg = policy.partition(":")
    if kind == "unstructured" and not arg:
        return kind, None
    if kind in ("vnm", "vw") and arg.isdigit() and int(arg) > 0:
        return kind, int(arg)
    raise VnmError(f"unknown policy {policy!r}; use 'unstructured', 'vnm:<V>' or 'vw:<l>'")


def policy_mask(d, policy: str, s: float) -> np.ndarray:
    """Mask for one policy: ``unstructured``, ``vnm:<V>`` (V:2:M) or ``vw:<l>``."""
    kind, arg = _parse_policy(policy)
    if kind == "unstructured":
        return magnitude_prune_unstructured(d, s)
    if kind == "vw":
        return magnitude_prune_vectorwise(d, arg, s)
    return magnitude_prune_vnm(d, VnmConfig(arg, 2, grid_m(s)))


def energy_sweep(d, policies, sparsities) -> list[EnergyReport]:
    """Energy of every (policy, sparsity) pair.

    When any V:N:M policy takes part, each sparsity must sit on the
    ``1 - 2/m`` grid and every policy is evaluated at the exact grid value.
    """
    d = as_dense(d)
    policies = list(policies)
    for p in policies:
        _parse_policy(p)
    points = [float(s) for s in sparsities]
    if any(p.startswith("vnm") for p in policies):
        points = [1.0 - 2.0 / grid_m(s) for s in points]
    return [EnergyReport(p, s, energy(d, policy_mask(d, p, s))) for s in points for p in policies]


def reports_to_json(reports) -> str:
    return json.dumps([asdict(r) for r in reports])


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["policy", "sparsity", "energy"])
    for r in reports:
        writer.writerow([r.policy, repr(r.sparsity), repr(r.energy)])
    return buf.getvalue()
