import json

import pytest

from hyperfill.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_build_writes_a_filling(tmp_path, capsys):
    path = tmp_path / "f.json"
    code, _, err = _run(capsys, "build", "--space", "cantor:depth=3,scale=0.9", "--levels", "12", "--out", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["alpha"] == 2.0 and doc["tau"] == 1.5
    assert "max degree" in err


@pytest.mark.parametrize("flag", ["--alpha", "--tau"])
def test_parameters_at_one_are_rejected(capsys, flag):
    code, out, _ = _run(capsys, "build", "--space", "cantor:depth=3,scale=0.9", flag, "1")
    assert code == 1
    assert json.loads(out)["error"] == "InvalidParameter"


def test_params_reports_R(capsys):
    code, out, _ = _run(capsys, "params", "--rho", "bbs:theta=0.5,p=2", "--p", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["regime"]["R"]["value"] == pytest.approx(1.442695, abs=1e-6)
    assert doc["prediction"] == "traces exist"


def test_params_with_partition(capsys):
    code, out, _ = _run(capsys, "params", "--rho", "constant:c=2", "--partition", "--max-cells", "10")
    assert code == 0
    doc = json.loads(out)
    _, again, _ = _run(capsys, "params", "--rho", "constant:c=2", "--partition", "--cells", "10")
    assert json.loads(again)["partition"] == doc["partition"]
    assert doc["partition"]["breakpoints"][:3] == pytest.approx([0.0, 0.5, 1.0])
    assert doc["regime"]["zero_trace"] is True


def test_trace_from_a_stored_filling(tmp_path, capsys):
    path = tmp_path / "f.json"
    _run(capsys, "build", "--space", "cantor:depth=3,scale=0.9", "--levels", "12", "--out", str(path))
    csv_path = tmp_path / "samples.csv"
    code, out, _ = _run(capsys, "trace", "--filling", str(path), "--rho", "bbs:theta=0.5,p=2", "--u", "smooth:rate=2",
                        "--xi", "0", "--xi", "3", "--csv", str(csv_path))
    assert code == 0
    doc = json.loads(out)
    assert [t["xi"] for t in doc["traces"]] == [0, 3]
    assert all(t["trace_T"]["status"] == "converged" for t in doc["traces"])
    assert "heights" not in doc["traces"][0]["trace_T"]["rays"][0]
    assert csv_path.read_text().startswith("xi,ray,height,value")


def test_trace_of_example11(capsys):
    code, out, _ = _run(capsys, "trace", "--space", "cantor:depth=3,scale=0.9", "--levels", "12",
                        "--rho", "example11:p=2", "--u", "example11", "--xi", "1")
    assert code == 0
    trace = json.loads(out)["traces"][0]
    assert trace["trace_T"]["status"] == "oscillating"
    assert trace["trace_tilde"]["value"] == 0.0


def test_modulus_witness(capsys):
    code, out, _ = _run(capsys, "modulus", "--rho", "dip:p=2,center=1", "--interval", "0,2")
    assert code == 0
    doc = json.loads(out)
    assert doc["verdict"] == "zero_witness"
    assert len(doc["shells"]) >= 8


def test_unknown_weight_is_a_parse_error(capsys):
    code, out, _ = _run(capsys, "params", "--rho", "gaussian:s=1")
    assert code == 1
    assert json.loads(out)["error"] == "ParseError"


def test_too_shallow_filling_for_the_window(capsys):
    code, out, _ = _run(capsys, "trace", "--space", "cantor:depth=3,scale=0.9", "--levels", "3",
                        "--rho", "bbs:theta=0.5,p=2", "--xi", "0")
    assert code == 1
    assert json.loads(out)["error"] == "InvalidParameter"


def test_verify_single_scenario(capsys):
    code, out, err = _run(capsys, "verify", "--only", "dip-modulus")
    assert code == 0
    assert json.loads(out)["all_agree"] is True
    assert "dip-modulus" in err


def test_params_with_cells(capsys):
    code, out, _ = _run(capsys, "params", "--rho", "bbs:theta=0.5,p=2", "--p", "2", "--alpha", "2",
                        "--tmax", "80", "--cells", "200")
    assert code == 0
    assert json.loads(out)["prediction"] == "traces exist"


@pytest.fixture
def stored_filling(tmp_path, capsys):
    path = tmp_path / "f.json"
    _run(capsys, "build", "--space", "cantor:depth=3,scale=0.9", "--levels", "12", "--out", str(path))
    return str(path)


def test_trace_all_points_at_a_chosen_depth(stored_filling, capsys):
    argv = ["trace", "--filling", stored_filling, "--rho", "bbs:theta=0.5,p=2", "--u", "smooth:rate=2",
            "--xi", "all", "--depth", "8"]
    code, out, _ = _run(capsys, *argv)
    assert code == 0
    doc = json.loads(out)
    assert doc["depth"] == 8
    assert [t["xi"] for t in doc["traces"]] == list(range(8))
    # e^(-2 * 3) is still above the default detector tolerance at height 8
    assert {t["trace_T"]["depth"] for t in doc["traces"]} == {8}
    assert all(t["trace_T"]["status"] != "converged" for t in doc["traces"])
    assert all(len(t["averages"]) == 9 for t in doc["traces"])

    code, out, _ = _run(capsys, *argv, "--tol", "1e-2")
    assert code == 0
    traces = json.loads(out)["traces"]
    assert all(t["trace_T"]["status"] == "converged" for t in traces)
    assert all(t["trace_T"]["value"] == pytest.approx(1.0, abs=1e-2) for t in traces)


@pytest.mark.parametrize("extra, error", [(("--xi", "some"), "ParseError"), (("--xi", "99"), "InvalidParameter"),
                                          (("--depth", "13"), "InvalidParameter")])
def test_trace_rejects_bad_points_and_depths(stored_filling, capsys, extra, error):
    code, out, _ = _run(capsys, "trace", "--filling", stored_filling, "--rho", "bbs:theta=0.5,p=2", *extra)
    assert code == 1
    assert json.loads(out)["error"] == error


def test_tol_reaches_the_verification_detector(monkeypatch, capsys):
    seen = {}

    class Matrix:
        all_agree = True
        rows = []

        def summary(self):
            return []

    def fake_run(cfg, scenarios=None):
        seen["cfg"] = cfg
        return Matrix()

    monkeypatch.setattr("hyperfill.cli.run_verification", fake_run)
    code, _, _ = _run(capsys, "verify", "--only", "constant", "--tol", "5e-4")
    assert code == 0
    assert seen["cfg"].trace.tol == 5e-4
    assert seen["cfg"].scenarios == ["constant"]
