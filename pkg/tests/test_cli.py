import json
import math

import numpy as np
import pytest
from scipy import stats

from dbreg.cli import load_scenarios, main
from dbreg.dataio import SCHEMA, ResultDocument, ingest, read_table
from dbreg.errors import InvalidInput
from dbreg.kernels import SimilarityMatrix


def write(path, arr, header=None, delim=","):
    lines = [delim.join(header)] if header else []
    lines += [delim.join(repr(float(v)) for v in row) for row in np.atleast_2d(arr)]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def dataset(tmp_path, rng):
    n = 60
    X = 1 + rng.standard_normal((n, 2))
    Y = rng.standard_normal((n, 4)) + 0.3 * X[:, :1]
    return write(tmp_path / "x.csv", X), write(tmp_path / "y.tsv", Y, delim="\t")


# --- ingestion -----------------------------------------------------------


def test_ingest_responses(tmp_path, rng):
    x = write(tmp_path / "x.csv", rng.standard_normal((102, 1)))
    y = write(tmp_path / "y.csv", rng.standard_normal((102, 33)))
    source, X, kind = ingest(x, y_path=y)
    assert kind == "responses"
    assert source.shape == (102, 33)
    assert (X.n, X.m) == (102, 1)


def test_ingest_similarity(tmp_path, rng):
    A = rng.standard_normal((5, 5))
    s = write(tmp_path / "s.csv", A @ A.T)
    x = write(tmp_path / "x.csv", rng.standard_normal((5, 1)))
    source, X, kind = ingest(x, similarity_path=s)
    assert kind == "similarity"
    assert isinstance(source, SimilarityMatrix) and source.n == 5


def test_ingest_distance_is_gower_centred(tmp_path, rng):
    pts = rng.standard_normal((6, 2))
    D = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    d = write(tmp_path / "d.csv", D)
    x = write(tmp_path / "x.csv", rng.standard_normal((6, 1)))
    source, _, kind = ingest(x, distance_path=d)
    c = pts - pts.mean(0)
    assert kind == "distance" and source.centered
    np.testing.assert_allclose(source.values, c @ c.T, atol=1e-12)


def test_ingest_dimension_mismatch(tmp_path, rng):
    x = write(tmp_path / "x.csv", rng.standard_normal((101, 1)))
    y = write(tmp_path / "y.csv", rng.standard_normal((102, 3)))
    with pytest.raises(InvalidInput, match="102.*101"):
        ingest(x, y_path=y)


def test_ingest_needs_exactly_one_source(tmp_path, rng):
    x = write(tmp_path / "x.csv", rng.standard_normal((5, 1)))
    with pytest.raises(InvalidInput):
        ingest(x)
    with pytest.raises(InvalidInput):
        ingest(x, y_path=x, similarity_path=x)


def test_header_row_detected(tmp_path):
    p = write(tmp_path / "h.tsv", [[1, 2], [3, 4]], header=["a", "b"], delim="\t")
    np.testing.assert_array_equal(read_table(p), [[1, 2], [3, 4]])


def test_bad_cells_are_located(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3,nan\n")
    with pytest.raises(InvalidInput, match="row 2, column 2"):
        read_table(p)
    p.write_text("1,2\n3,x\n")
    with pytest.raises(InvalidInput, match="row 2, column 2"):
        read_table(p)
    p.write_text("1,2\n3\n")
    with pytest.raises(InvalidInput, match="row 2"):
        read_table(p)


def test_missing_file(tmp_path):
    with pytest.raises(InvalidInput):
        read_table(tmp_path / "nope.csv")


# --- dbreg test ---------------------------------------------------------


def test_cli_test_is_reproducible(dataset, tmp_path, capsys):
    x, y = dataset
    argv = ["test", "--x", x, "--y", y, "--B", 500, "--seed", 42, "--pvalue", "bootstrap,gamma,box"]
    code, first, _ = run(argv, capsys)
    assert code == 0
    code, second, _ = run(argv, capsys)
    assert first == second
    doc = json.loads(first)
    assert doc["schema"] == SCHEMA and doc["seed"] == 42
    assert set(doc["statistics"]) == {"pseudo", "sqrt"}
    assert doc["timings"] == {}
    for mt in ("pseudo", "sqrt"):
        rep = doc["pvalues"][mt]
        assert 0 <= rep["p_bootstrap"] <= 1
        assert rep["reject"]["bootstrap"] == (rep["p_bootstrap"] <= 0.05)


def test_cli_test_writes_tsv(dataset, tmp_path, capsys):
    x, y = dataset
    out = tmp_path / "res.tsv"
    code, stdout, _ = run(["test", "--x", x, "--y", y, "--method", "sqrt", "--B", 200, "--seed", 1,
                           "--out", out], capsys)
    assert code == 0 and stdout == ""
    lines = out.read_text().splitlines()
    assert lines[0].startswith("method\tstatistic")
    assert lines[1].startswith("sqrt\t")
    assert lines[1].split("\t")[5] == "NA"


def test_cli_timings_opt_in(dataset, capsys):
    x, y = dataset
    _, out, _ = run(["test", "--x", x, "--y", y, "--B", 200, "--seed", 1, "--timings"], capsys)
    assert "bootstrap_s" in json.loads(out)["timings"]


def test_cli_gaussian_kernel(dataset, capsys):
    x, y = dataset
    code, out, _ = run(["test", "--x", x, "--y", y, "--kernel", "gaussian:2", "--B", 200, "--seed", 1], capsys)
    assert code == 0
    assert json.loads(out)["config"]["kernel"] == "gaussian:2"


def test_gamma_fit_failure_is_a_warning(tmp_path, capsys):
    r = np.random.default_rng(19)
    X = 1 + r.standard_normal((40, 2))
    Y = r.standard_normal((40, 30))
    x, y = write(tmp_path / "x.csv", X), write(tmp_path / "y.csv", Y)
    code, out, _ = run(["test", "--x", x, "--y", y, "--pvalue", "gamma,box", "--seed", 1], capsys)
    assert code == 0
    doc = json.loads(out)
    assert "GammaFitFailed" in doc["warnings"]
    failed = [mt for mt, rep in doc["pvalues"].items() if rep["p_gamma"] is None]
    assert failed
    for mt in failed:
        assert doc["pvalues"][mt]["fit_diagnostics"]["gamma"]["converged"] is False
        assert doc["pvalues"][mt]["p_box"] is not None


def test_bootstrap_agrees_with_permutation(tmp_path, capsys):
    r = np.random.default_rng(5)
    X = 1 + r.standard_normal((200, 2))
    Y = r.standard_normal((200, 5)) + 0.12 * X[:, :1]
    x, y = write(tmp_path / "x.csv", X), write(tmp_path / "y.csv", Y)
    code, out, _ = run(["test", "--x", x, "--y", y, "--pvalue", "bootstrap,permutation",
                        "--B", 2000, "--seed", 3], capsys)
    assert code == 0
    for rep in json.loads(out)["pvalues"].values():
        assert abs(rep["p_bootstrap"] - rep["p_permutation"]) <= 0.05


def test_result_document_round_trip(dataset, capsys):
    x, y = dataset
    _, out, _ = run(["test", "--x", x, "--y", y, "--B", 200, "--seed", 7], capsys)
    doc = ResultDocument.from_json(out)
    assert doc.to_json() == out


def test_result_document_schema_checked():
    with pytest.raises(InvalidInput):
        ResultDocument.from_json(json.dumps({"schema": "other/9"}))


def test_exit_code_invalid_input(tmp_path, rng, capsys):
    x = write(tmp_path / "x.csv", rng.standard_normal((10, 1)))
    y = write(tmp_path / "y.csv", rng.standard_normal((11, 2)))
    code, out, err = run(["test", "--x", x, "--y", y, "--seed", 1], capsys)
    assert code == 2 and out == ""
    e = json.loads(err)
    assert e["schema"] == SCHEMA and e["error"]["type"] == "InvalidInput"


def test_exit_code_numerical_failure(tmp_path, capsys):
    X = np.column_stack([np.arange(10.0), 2 * np.arange(10.0)])
    x = write(tmp_path / "x.csv", X)
    y = write(tmp_path / "y.csv", np.random.default_rng(0).standard_normal((10, 2)))
    code, _, err = run(["test", "--x", x, "--y", y, "--seed", 1], capsys)
    assert code == 3
    assert json.loads(err)["error"]["type"] == "SingularDesign"


def test_exit_code_not_psd_similarity(tmp_path, capsys):
    s = write(tmp_path / "s.csv", np.diag([1.0, -1.0, 1.0, -1.0, 1.0]))
    x = write(tmp_path / "x.csv", np.arange(5.0)[:, None])
    code, _, err = run(["test", "--x", x, "--similarity", s, "--seed", 1], capsys)
    assert code == 3
    assert json.loads(err)["error"]["type"] == "NotPSD"


def test_bad_kernel_argument(dataset, capsys):
    x, y = dataset
    with pytest.raises(SystemExit) as info:
        main(["test", "--x", x, "--y", y, "--kernel", "gaussian:-1"])
    assert info.value.code == 2


# --- dbreg simulate / bench ----------------------------------------------


def test_simulate_rejects_zero_replicates(tmp_path, capsys):
    sc = tmp_path / "s.toml"
    sc.write_text("replicates = 0\n")
    code, _, err = run(["simulate", "--scenario", sc], capsys)
    assert code == 2 and "replicates" in err


def test_simulate_rejects_unknown_key(tmp_path):
    sc = tmp_path / "s.toml"
    sc.write_text("replicate = 10\n")
    with pytest.raises(InvalidInput, match="replicate"):
        load_scenarios(sc)


def test_scenario_grid_expansion(tmp_path):
    sc = tmp_path / "s.toml"
    sc.write_text(
        "n = 80\nreplicates = 5\nB = 100\n"
        "[[cell]]\nmodel = 'ar1'\ntau = [0.0, 0.4]\n"
        "[[cell]]\nmodel = 'equal'\nrho = 0.8\n"
    )
    specs = load_scenarios(sc)
    assert [(s.model, s.tau, s.rho) for s in specs] == [("ar1", 0.0, 0.3), ("ar1", 0.4, 0.3), ("equal", 0.0, 0.8)]
    assert all(s.n == 80 for s in specs)


def test_simulate_table(tmp_path, capsys):
    sc = tmp_path / "s.toml"
    sc.write_text("n = 60\nreplicates = 8\nB = 100\nseed = 2\ntau = [0.0, 0.6]\n")
    code, out, _ = run(["simulate", "--scenario", sc], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split("\t")[:3] == ["model", "rho", "tau"]
    assert len(lines) == 3
    code, out, _ = run(["simulate", "--scenario", sc, "--format", "json"], capsys)
    rows = json.loads(out)["rows"]
    assert [r["tau"] for r in rows] == [0.0, 0.6]


def test_bench_fields(capsys):
    code, out, _ = run(["bench", "--n", 60, "--B", 200], capsys)
    assert code == 0
    d = json.loads(out)
    assert {"schema", "n", "B", "t_parametric_s", "t_permutation_s", "ratio"} <= set(d)
    assert d["ratio"] == pytest.approx(d["t_permutation_s"] / d["t_parametric_s"])


def test_bench_invalid(capsys):
    code, _, _ = run(["bench", "--n", 10], capsys)
    assert code == 2
