import json

import numpy as np
import pytest

from vnmkit import containers as io
from vnmkit.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def gen(capsys, path, rows, cols, seed=0):
    assert run(capsys, "gen", "--rows", rows, "--cols", cols, "--seed", seed, "-o", path)[0] == 0


def test_magnitude_prune_summary(tmp_path, capsys):
    w, mask = tmp_path / "w.dmx", tmp_path / "w.msk"
    gen(capsys, w, 128, 128)
    code, out, _ = run(capsys, "prune", "--policy", "magnitude", "--v", 64, "--m", 8, "-i", w, "-o", mask)
    summary = json.loads(out)
    assert code == 0
    assert {k: summary[k] for k in ("policy", "v", "n", "m")} == {"policy": "magnitude", "v": 64, "n": 2, "m": 8}
    assert summary["sparsity"] == 0.75
    assert 0 < summary["energy"] < 1
    assert io.read_mask(mask).sum() == 128 * 16 * 2


def test_second_order_prune_reports_search(tmp_path, capsys):
    w, g, mask = tmp_path / "w.dmx", tmp_path / "g.dmx", tmp_path / "w.msk"
    gen(capsys, w, 4, 128)
    gen(capsys, g, 16, 4 * 128, seed=1)
    code, out, _ = run(capsys, "prune", "--policy", "so-exact", "--v", 2, "--m", 64,
                       "--grads", g, "-i", w, "-o", mask)
    assert code == 0 and json.loads(out)["search"] == "greedy"
    code, out, _ = run(capsys, "prune", "--policy", "so-pairwise", "--v", 2, "--m", 8,
                       "--grads", g, "-i", w, "-o", mask)
    assert code == 0 and json.loads(out)["search"] == "exhaustive"


def test_gradual_prune(tmp_path, capsys):
    w, g, mask = tmp_path / "w.dmx", tmp_path / "g.dmx", tmp_path / "w.msk"
    gen(capsys, w, 4, 32)
    gen(capsys, g, 8, 128, seed=1)
    code, out, _ = run(capsys, "prune", "--policy", "so-exact", "--v", 2, "--m", 16, "--beta", 3,
                       "--grads", g, "-i", w, "-o", mask)
    summary = json.loads(out)
    assert code == 0 and summary["schedule"] == [8, 6, 4, 2]
    assert summary["sparsity"] == 0.875


def test_second_order_without_grads_is_validation_error(tmp_path, capsys):
    w = tmp_path / "w.dmx"
    gen(capsys, w, 4, 16)
    code, out, err = run(capsys, "prune", "--policy", "so-exact", "--v", 2, "--m", 8,
                         "-i", w, "-o", tmp_path / "x.msk")
    assert code == 2 and out == "" and "--grads" in err


def test_compress_decompress_roundtrip(tmp_path, capsys):
    w, mask, s, back = (tmp_path / f for f in ("w.dmx", "w.msk", "w.vnm", "back.dmx"))
    gen(capsys, w, 32, 40)
    run(capsys, "prune", "--v", 32, "--m", 10, "-i", w, "-o", mask)
    assert run(capsys, "compress", "--v", 32, "--m", 10, "--mask", mask, "-i", w, "-o", s)[0] == 0
    assert run(capsys, "decompress", "-i", s, "-o", back)[0] == 0
    d = io.read_dense(w)
    m = io.read_mask(mask)
    assert back.read_bytes() == io.dense_to_bytes(np.where(m, d, 0).astype(np.float32))


def test_inspect_and_cost(tmp_path, capsys):
    w, mask, s = tmp_path / "w.dmx", tmp_path / "w.msk", tmp_path / "w.vnm"
    gen(capsys, w, 32, 40)
    run(capsys, "prune", "--v", 32, "--m", 10, "-i", w, "-o", mask)
    run(capsys, "compress", "--v", 32, "--m", 10, "--mask", mask, "-i", w, "-o", s)
    info = json.loads(run(capsys, "inspect", "-i", s)[1])
    assert info["ideal_speedup"] == 5 and info["sparsity"] == 0.8
    assert (info["r"], info["k"], info["dtype"]) == (32, 40, "real32")
    cost = json.loads(run(capsys, "cost", "--r", 64, "--k", 160, "--c", 32, "--v", 32, "--m", 40)[1])
    assert cost["ideal_speedup"] == 20 and cost["dense_macs"] == 20 * cost["sparse_macs"]


def test_spmm_matches_library(tmp_path, capsys):
    w, mask, s, b, c = (tmp_path / f for f in ("w.dmx", "w.msk", "w.vnm", "b.dmx", "c.dmx"))
    gen(capsys, w, 16, 32)
    gen(capsys, b, 32, 8, seed=3)
    run(capsys, "prune", "--v", 4, "--m", 8, "-i", w, "-o", mask)
    run(capsys, "compress", "--v", 4, "--m", 8, "--mask", mask, "-i", w, "-o", s)
    assert run(capsys, "spmm", "-a", s, "-b", b, "-o", c)[0] == 0
    d = np.where(io.read_mask(mask), io.read_dense(w), 0).astype(np.float64)
    expected = (d @ io.read_dense(b).astype(np.float64)).astype(np.float32)
    np.testing.assert_allclose(io.read_dense(c), expected, rtol=1e-6, atol=1e-6)


def test_energy_sweep_and_csv(tmp_path, capsys):
    w, csv_path = tmp_path / "w.dmx", tmp_path / "e.csv"
    gen(capsys, w, 64, 64)
    code, out, _ = run(capsys, "energy", "-i", w, "--policies", "unstructured,vnm:32,vw:8",
                       "--sparsities", "0.5,0.75", "--csv", csv_path)
    reports = json.loads(out)
    assert code == 0 and len(reports) == 6
    assert csv_path.read_text().splitlines()[0] == "policy,sparsity,energy"
    code, _, err = run(capsys, "energy", "-i", w, "--policies", "vnm:32", "--sparsities", "0.7")
    assert code == 2 and err


@pytest.mark.parametrize("argv,code", [
    (["cost", "--r", 64, "--k", 64, "--c", 8, "--v", 32, "--n", 3, "--m", 8], 2),
    (["cost", "--r", 60, "--k", 64, "--c", 8, "--v", 32, "--m", 8], 2),
    (["inspect", "-i", "missing.vnm"], 3),
])
def test_exit_codes(tmp_path, capsys, monkeypatch, argv, code):
    monkeypatch.chdir(tmp_path)
    got, out, err = run(capsys, *argv)
    assert got == code and out == "" and err.startswith("vnmkit:")


def test_corrupt_container_is_io_error(tmp_path, capsys):
    bad = tmp_path / "bad.vnm"
    bad.write_bytes(b"VNM1\x00\x00")
    assert run(capsys, "inspect", "-i", bad)[0] == 3
    w = tmp_path / "w.dmx"
    gen(capsys, w, 8, 8)
    assert run(capsys, "inspect", "-i", w)[0] == 3  # wrong magic
