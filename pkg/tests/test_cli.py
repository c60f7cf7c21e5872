import csv
import io
import json

import numpy as np
import pytest

from qformat import codebook as C
from qformat import reports
from qformat.cli import main
from qformat.tensorio import read_tensor, write_tensor


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_codebook_list(capsys):
    code, out, _ = run(capsys, "codebook", "list")
    assert code == 0 and out.split() == list(C.BUILTIN_NAMES)


def test_codebook_gen_and_builtin(capsys):
    code, out, _ = run(capsys, "codebook", "gen", "--family", "sf", "--bits", "4", "--nu", "5")
    cb = C.from_json(json.loads(out))
    assert code == 0 and cb.nu == 5.0
    assert max(abs(a - b) for a, b in zip(cb.normalized_values, C.builtin("sf4-nu5").normalized_values)) <= 5e-4
    code, out, _ = run(capsys, "codebook", "builtin", "--name", "nf4")
    assert code == 0 and json.loads(out)["name"] == "nf4"


def test_codebook_errors(capsys):
    code, out, err = run(capsys, "codebook", "builtin", "--name", "int9")
    assert code == 1 and out == "" and "unknown codebook" in err
    code, _, err = run(capsys, "codebook", "gen", "--family", "sf", "--bits", "4")
    assert code == 2 and "--nu" in err
    with pytest.raises(SystemExit):
        main(["codebook", "gen", "--family", "xx", "--bits", "4"])


def test_sample_and_quantize(capsys, tmp_path):
    t = tmp_path / "t.npy"
    code, _, _ = run(capsys, "sample", "--dist", "t", "--nu", "5", "--rows", "8", "--cols", "300",
                     "--seed", "3", "--out", str(t))
    assert code == 0 and read_tensor(t).shape == (8, 300)
    code, _, err = run(capsys, "sample", "--dist", "t", "--rows", "2", "--cols", "2", "--seed", "1",
                       "--out", str(tmp_path / "u.npy"))
    assert code == 2 and "--nu" in err

    r1, r2 = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "quantize", "--tensor", str(t), "--codebook", "sf4-nu5", "--block", "128",
               "--out", str(r1))[0] == 0
    assert run(capsys, "quantize", "--tensor", str(t), "--codebook", "sf4-nu5", "--block", "128",
               "--clip", "mse", "--out", str(r2))[0] == 0
    a = reports.loads_report(r1.read_text())
    b = reports.loads_report(r2.read_text())
    assert a["short_block"] and a["block"] == 128 and b["clip"] == "mse"
    assert b["mse"] <= a["mse"]
    assert sum(a["bin_histogram"]) == 8 * 300


def test_quantize_exact_multiples(capsys, tmp_path):
    # SF4 snapped to a 1/256 grid survives both float32 files and 9-digit JSON exactly
    sf = C.builtin("sf4-nu5")
    cb = C.Codebook.from_raw("sf4-q8", 4, "lookup", (np.round(sf.values * 256) / 256).tolist())
    rng = np.random.default_rng(0)
    x = cb.values[rng.integers(0, 16, size=(4, 64))].astype(np.float32)
    x[:, 0] = 1.0
    p = tmp_path / "m.npy"
    write_tensor(p, x)
    jp = tmp_path / "cb.json"
    with open(jp, "w") as f:
        C.dump(cb, f)
    code, out, _ = run(capsys, "quantize", "--tensor", str(p), "--codebook", str(jp), "--block", "cw")
    rep = reports.loads_report(out)
    assert code == 0 and rep["mse"] == 0.0 and rep["sqnr_db"] is None


def test_quantize_errors(capsys, tmp_path):
    code, _, err = run(capsys, "quantize", "--tensor", str(tmp_path / "nope.npy"), "--codebook", "int4")
    assert code == 1 and err
    p = tmp_path / "d.npy"
    np.save(p, np.ones((2, 2)))
    code, _, err = run(capsys, "quantize", "--tensor", str(p), "--codebook", "int4")
    assert code == 1 and "dtype" in err
    write_tensor(p, np.ones((2, 2)))
    code, _, err = run(capsys, "quantize", "--tensor", str(p), "--codebook", "int4", "--block", "abc")
    assert code == 1 and "block" in err


def test_report_rejects_unknown_fields():
    rep = reports.quantize_report(np.ones((1, 4)), C.builtin("int4"), "cw", "none", "x")
    text = reports.dumps_report({**rep, "surprise": 1})
    with pytest.raises(ValueError, match="unknown"):
        reports.loads_report(text)


def test_profile(capsys, tmp_path):
    d = tmp_path / "tensors"
    d.mkdir()
    rng = np.random.default_rng(1)
    write_tensor(d / "a.npy", rng.standard_t(4, size=(20, 50)))
    write_tensor(d / "b.npy", rng.normal(size=(20, 50)))
    code, out, _ = run(capsys, "profile", "--dir", str(d), "--seed", "0")
    rows = rows_of(out)
    assert code == 0
    assert list(rows[0]) == list(reports.PROFILE_COLUMNS)
    assert [r["tensor"] for r in rows] == ["a", "b", "ALL"]
    empty = tmp_path / "empty"
    empty.mkdir()
    code, _, err = run(capsys, "profile", "--dir", str(empty), "--seed", "0")
    assert code == 1 and "no .npy" in err


def sweep_setup(tmp_path, **extra):
    rng = np.random.default_rng(2)
    write_tensor(tmp_path / "w.npy", rng.standard_t(5, size=(16, 256)))
    cfg = {"tensors": ["w.npy"], "codebooks": ["int4", "sf4-nu5"], "blocks": [64, "cw"],
           "clips": ["none"], "seed": 0, **extra}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_sweep_cross_product_and_composition(capsys, tmp_path):
    cfg = sweep_setup(tmp_path)
    code, out, _ = run(capsys, "sweep", "--config", str(cfg))
    rows = rows_of(out)
    assert code == 0 and len(rows) == 4
    assert [(r["codebook"], r["block"]) for r in rows] == [
        ("int4", "64"), ("int4", "cw"), ("sf4-nu5", "64"), ("sf4-nu5", "cw")]
    code, q, _ = run(capsys, "quantize", "--tensor", str(tmp_path / "w.npy"), "--codebook", "sf4-nu5",
                     "--block", "64")
    assert repr(json.loads(q)["mse"]) == rows[2]["mse"]


def test_sweep_thread_count_does_not_change_output(capsys, tmp_path, monkeypatch):
    cfg = sweep_setup(tmp_path)
    monkeypatch.setenv("QFORMAT_THREADS", "1")
    _, one, _ = run(capsys, "sweep", "--config", str(cfg))
    monkeypatch.setenv("QFORMAT_THREADS", "4")
    _, four, _ = run(capsys, "sweep", "--config", str(cfg))
    assert one == four
    monkeypatch.setenv("QFORMAT_THREADS", "-1")
    code, _, err = run(capsys, "sweep", "--config", str(cfg))
    assert code == 1 and "QFORMAT_THREADS" in err


def test_sweep_config_errors(capsys, tmp_path):
    cfg = sweep_setup(tmp_path, bogus=1)
    code, _, err = run(capsys, "sweep", "--config", str(cfg))
    assert code == 1 and "bogus" in err
    data = json.loads(cfg.read_text())
    del data["bogus"], data["seed"]
    cfg.write_text(json.dumps(data))
    code, _, err = run(capsys, "sweep", "--config", str(cfg))
    assert code == 1 and "seed" in err


def test_pareto_ordering(capsys, tmp_path):
    q = tmp_path / "q.csv"
    q.write_text("format,quality\nint4,1.0\ne2m1,2.0\ne2m1-sp,3.0\ne3m0,1.5\nnf4,9\n")
    code, out, err = run(capsys, "pareto", "--quality", str(q))
    rows = rows_of(out)
    assert code == 0 and "nf4" in err
    assert [r["format"] for r in rows if r["on_front"] == "1"] == ["int4", "e2m1", "e2m1-sp"]
    assert [r["format"] for r in rows] == ["int4", "e2m1", "e3m0", "e2m1-sp"]  # e3m0 is 3.55%, SP 3.57%


def test_pareto_from_sweep_csv(capsys, tmp_path):
    cfg = sweep_setup(tmp_path)
    s = tmp_path / "s.csv"
    run(capsys, "sweep", "--config", str(cfg), "--out", str(s))
    code, out, err = run(capsys, "pareto", "--quality", str(s))
    assert code == 0 and [r["format"] for r in rows_of(out)] == ["int4"]
    assert "sf4-nu5" in err
