import csv
import io
import json

import numpy as np
import pytest

import naive
from prdecomp.cli import CSV_COLUMNS, EXIT_BUDGET, EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from prdecomp.field import ff_make
from prdecomp.formats import dump, load, tensor_from_json, tensor_to_json
from prdecomp.tensor import Tensor, w_tensor


def write_tensor(path, T):
    dump(tensor_to_json(T), str(path))
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(capsys, "gen", "--field", 5, "--dims", "2x2x2", "--seed", 1, "--out", path)[0] == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    T = tensor_from_json(load(a))
    assert T.dims == (2, 2, 2) and T.ctx == ff_make(5)


def test_gen_density_zero(tmp_path, capsys):
    out = tmp_path / "z.json"
    run(capsys, "gen", "--field", "3^2", "--dims", "3x2", "--density", 0, "--out", out)
    T = tensor_from_json(load(out))
    assert T.is_zero() and T.ctx == ff_make(3, 2)


def test_gen_entries_are_uniform(tmp_path, capsys):
    counts = np.zeros(2, dtype=np.int64)
    for seed in range(1250):
        code, out, _ = run(capsys, "gen", "--field", 2, "--dims", "2x2x2", "--seed", seed)
        counts += np.bincount(tensor_from_json(json.loads(out)).data.ravel(), minlength=2)
    assert counts.sum() == 10_000
    chi2 = float(((counts - 5000) ** 2 / 5000).sum())
    assert chi2 < 10.83  # 1 degree of freedom, p = 0.001


def test_ar_examples(tmp_path, capsys):
    code, out, _ = run(capsys, "ar", write_tensor(tmp_path / "z.json", Tensor.zeros(ff_make(3), (2, 2))))
    assert code == EXIT_OK and json.loads(out)["ar"] == 0
    eye = Tensor(ff_make(5), np.eye(3, dtype=np.int64))
    res = json.loads(run(capsys, "ar", write_tensor(tmp_path / "i.json", eye))[1])
    assert res["ar"] == 3 and res["count"] == 1
    res = json.loads(run(capsys, "ar", write_tensor(tmp_path / "w.json", w_tensor(ff_make(2))))[1])
    assert res["count"] == 8 == naive.kernel_count(w_tensor(ff_make(2)).data, 2, 2)


def test_decompose_and_verify(tmp_path, capsys):
    A = Tensor(ff_make(7), np.array([[1, 2, 3], [2, 4, 6], [0, 1, 5]]))
    t = write_tensor(tmp_path / "a.json", A)
    cert = tmp_path / "c.json"
    assert run(capsys, "decompose", t, "--out", cert)[0] == EXIT_OK
    obj = load(cert)
    assert len(obj["terms"]) == 2 == naive.rank_mod_p(A.data.tolist(), 7)
    assert obj["verified"] and obj["tool"] == "prdecomp" and obj["config_hash"]
    code, out, _ = run(capsys, "verify", t, cert)
    assert code == EXIT_OK and json.loads(out)["ok"]

    cut = dict(obj, terms=obj["terms"][:-1])
    dump(cut, str(tmp_path / "cut.json"))
    assert run(capsys, "verify", t, tmp_path / "cut.json")[0] == EXIT_FAILED
    forged = dict(obj, bound=1)
    dump(forged, str(tmp_path / "forged.json"))
    assert run(capsys, "verify", t, tmp_path / "forged.json")[0] == EXIT_FAILED


def test_decompose_w_and_zero(tmp_path, capsys):
    t = write_tensor(tmp_path / "w.json", w_tensor(ff_make(3)))
    code, out, _ = run(capsys, "decompose", t, "--axis", 1)
    obj = json.loads(out)
    assert code == EXIT_OK and obj["axis"] == 1 and len(obj["terms"]) <= obj["bound"] == 6
    assert all(1 <= a <= 3 for term in obj["terms"] for a in term["S"])
    z = write_tensor(tmp_path / "z.json", Tensor.zeros(ff_make(2), (2, 2, 2)))
    code, out, _ = run(capsys, "decompose", z)
    assert code == EXIT_OK and json.loads(out)["terms"] == []


def test_decompose_failure_path(tmp_path, capsys):
    t = write_tensor(tmp_path / "w.json", w_tensor(ff_make(3)))
    code, out, err = run(capsys, "decompose", t, "--max-candidates", 0)
    assert code == EXIT_FAILED and not json.loads(out)["verified"]
    assert "failures" in json.loads(out)["diagnostics"] and "no verified decomposition" in err


def test_probe_reports_candidates(tmp_path, capsys):
    t = write_tensor(tmp_path / "w.json", w_tensor(ff_make(3)))
    code, out, _ = run(capsys, "probe", t, "-E", 2, "--top", 3)
    rep = json.loads(out)
    assert code == EXIT_OK and rep["gr_est"] == 2 and len(rep["candidates"]) == 3


def test_corpus_matrices(capsys):
    code, out, _ = run(capsys, "corpus", "--field", 5, "--dims", "3x3", "--count", 100, "--seed", 4)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and len(rows) == 100
    assert list(rows[0]) == CSV_COLUMNS
    for row in rows:
        assert row["verified"] == "True" and row["cert_terms"] == row["pr"]


def test_corpus_json_and_jobs(tmp_path, capsys):
    rep = tmp_path / "r.json"
    args = ["corpus", "--field", 3, "--dims", "2x2x2", "--count", 6, "--report", rep]
    assert run(capsys, *args, "--jobs", 2)[0] == EXIT_OK
    parallel = load(rep)
    assert run(capsys, *args)[0] == EXIT_OK
    assert load(rep) == parallel and len(parallel["rows"]) == 6
    assert [r["tensor_id"] for r in parallel["rows"]] == [f"t{i:06d}" for i in range(6)]


def test_usage_errors(tmp_path, capsys):
    assert run(capsys, "gen", "--field", 6, "--dims", "2x2")[0] == EXIT_USAGE
    assert run(capsys, "gen", "--field", 5, "--dims", "2xa")[0] == EXIT_USAGE
    assert run(capsys, "gen", "--field", 5, "--dims", "2x2", "--density", 2)[0] == EXIT_USAGE
    assert run(capsys, "ar", tmp_path / "missing.json")[0] == EXIT_USAGE
    t = write_tensor(tmp_path / "w.json", w_tensor(ff_make(3)))
    assert run(capsys, "ar", t, "--axis", 4)[0] == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["nosuchcommand"])
    assert info.value.code == EXIT_USAGE


def test_budget_exit_code(tmp_path, capsys, monkeypatch):
    t = write_tensor(tmp_path / "w.json", w_tensor(ff_make(3)))
    assert run(capsys, "ar", t, "--budget", 1)[0] == EXIT_BUDGET
    monkeypatch.setenv("PRDECOMP_BUDGET", "1")
    assert run(capsys, "ar", t)[0] == EXIT_BUDGET
