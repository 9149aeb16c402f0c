import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vnmkit import VnmConfig, energy, energy_sweep, magnitude_prune_unstructured, magnitude_prune_vnm
from vnmkit.errors import UnrealizableSparsity, VnmError, ZeroDenominator
from vnmkit.metrics import grid_m, policy_mask, reports_to_csv, reports_to_json


def test_hand_value():
    assert energy([[1, 2, 3, 4]], [[False, False, True, True]]) == pytest.approx(0.7, abs=1e-15)


def test_full_and_empty_masks(rng):
    d = rng.standard_normal((4, 8))
    assert energy(d, np.ones_like(d, dtype=bool)) == 1.0
    assert energy(d, np.zeros_like(d, dtype=bool)) == 0.0


def test_zero_matrix_rejected():
    with pytest.raises(ZeroDenominator):
        energy(np.zeros((2, 4)), np.ones((2, 4), dtype=bool))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_energy_properties(seed, scale):
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((8, 16)).astype(np.float32)
    big = rng.random(d.shape) < 0.6
    small = big & (rng.random(d.shape) < 0.5)
    e_big, e_small = energy(d, big), energy(d, small)
    assert 0.0 <= e_small <= e_big <= 1.0
    kept = int(big.sum())
    top = magnitude_prune_unstructured(d, 1 - kept / d.size)
    assert top.sum() == kept and energy(d, top) >= e_big
    scaled = np.float32(scale) * d
    assert energy(scaled, big) == pytest.approx(e_big, rel=1e-6)


def test_power_of_two_scaling_is_exact(rng):
    d = rng.standard_normal((16, 16)).astype(np.float32)
    mask = rng.random(d.shape) < 0.3
    assert energy(8 * d, mask) == energy(d, mask)


def test_unstructured_dominates_structured_policies(rng):
    d = rng.standard_normal((64, 64)).astype(np.float32)
    for m in (4, 8, 16):
        s = 1 - 2 / m
        un = energy(d, policy_mask(d, "unstructured", s))
        for policy in ("vnm:16", "vnm:64", "vw:8", "vw:1"):
            assert un >= energy(d, policy_mask(d, policy, s))


@pytest.mark.parametrize("s,m", [(0.5, 4), (0.75, 8), (0.875, 16), (0.9, 20), (0.95, 40), (0.98, 100)])
def test_sparsity_grid(s, m):
    assert grid_m(s) == m


@pytest.mark.parametrize("s", [0.0, 0.7, 0.85, 1.0, 0.25])
def test_off_grid_sparsity_rejected(s):
    with pytest.raises(UnrealizableSparsity):
        grid_m(s)


def test_sweep_rejects_off_grid_when_vnm_present(rng):
    d = rng.standard_normal((32, 32))
    with pytest.raises(UnrealizableSparsity):
        energy_sweep(d, ["unstructured", "vnm:32"], [0.7])
    assert len(energy_sweep(d, ["unstructured", "vw:4"], [0.7])) == 2


def test_unknown_policy(rng):
    with pytest.raises(VnmError):
        energy_sweep(rng.standard_normal((8, 8)), ["random"], [0.5])


def test_single_point_sweep_equals_direct_call(rng):
    d = rng.standard_normal((64, 32)).astype(np.float32)
    (rep,) = energy_sweep(d, ["vnm:32"], [0.75])
    assert rep.policy == "vnm:32" and rep.sparsity == 0.75
    assert rep.energy == energy(d, magnitude_prune_vnm(d, VnmConfig(32, 2, 8)))


def test_sweep_order_and_exports(rng):
    d = rng.standard_normal((64, 64)).astype(np.float32)
    reports = energy_sweep(d, ["unstructured", "vnm:64"], [0.5, 0.75])
    assert [(r.policy, r.sparsity) for r in reports] == [
        ("unstructured", 0.5), ("vnm:64", 0.5), ("unstructured", 0.75), ("vnm:64", 0.75)]
    assert json.loads(reports_to_json(reports))[1] == {
        "policy": "vnm:64", "sparsity": 0.5, "energy": reports[1].energy}
    rows = list(csv.reader(io.StringIO(reports_to_csv(reports))))
    assert rows[0] == ["policy", "sparsity", "energy"]
    assert float(rows[3][2]) == reports[2].energy


def test_energy_weakly_decreases_with_v():
    rng = np.random.default_rng(7)
    cols = {32: [], 64: [], 128: []}
    for _ in range(100):
        d = rng.standard_normal((256, 256)).astype(np.float32)
        for v in cols:
            cols[v].append(energy(d, magnitude_prune_vnm(d, VnmConfig(v, 2, 8))))
    means = {v: float(np.mean(e)) for v, e in cols.items()}
    print("mean energy at 2:8 by V:", means)
    assert means[32] >= means[64] >= means[128]
    assert np.mean(np.array(cols[32]) >= np.array(cols[128])) > 0.9
