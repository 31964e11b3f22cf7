"""End-to-end tests of the command-line interface."""

import numpy as np
import pytest

from mixedgp.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_matrix(text):
    return np.array([
        [float(v) for v in line.split(",")]
        for line in text.strip().splitlines()
    ])


def test_corr_build_ec(capsys):
    code, out, _ = run_cli(capsys, "corr", "build", "--family", "EC", "--s", "3",
                           "--params", "0.5")
    assert code == 0
    m = parse_matrix(out)
    assert m.shape == (3, 3)
    assert m[0, 1] == 0.5 and m[1, 1] == 1.0


def test_corr_build_lrc_rank(capsys):
    code, out, _ = run_cli(capsys, "corr", "build", "--family", "LRC", "--rank", "2",
                           "--s", "3", "--params", "1.0,2.0")
    assert code == 0
    m = parse_matrix(out)
    assert m[1, 2] == pytest.approx(np.cos(1.0 - 2.0), abs=1e-6)


def test_corr_build_domain_error(capsys):
    code, _, err = run_cli(capsys, "corr", "build", "--family", "EC", "--s", "3",
                           "--params", "1.5")
    assert code == 2
    assert "error" in err


def test_design_generate_and_validate(capsys, tmp_path):
    path = tmp_path / "d.csv"
    code, out, _ = run_cli(capsys, "design", "generate", "--n", "3", "--s", "4",
                           "--q", "2", "--seed", "5", "--out", str(path))
    assert code == 0 and "12 points" in out
    code, out, _ = run_cli(capsys, "design", "validate", str(path))
    assert code == 0 and "valid design" in out


def test_design_validate_rejects_corrupt_file(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("slice,x1\n1,0.1\n1,0.2\n2,0.3\n")
    code, _, err = run_cli(capsys, "design", "validate", str(path))
    assert code == 2
    assert "level counts" in err


def test_design_generate_with_bounds(capsys, tmp_path):
    path = tmp_path / "d.csv"
    code, _, _ = run_cli(capsys, "design", "generate", "--n", "2", "--s", "2",
                         "--q", "2", "--seed", "1", "--bounds=-5,5,0,2",
                         "--out", str(path))
    assert code == 0
    header = path.read_text().splitlines()[0]
    assert header == "slice,x1,x2,px1,px2"


def test_testbed_list(capsys):
    code, out, _ = run_cli(capsys, "testbed", "list")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 14
    assert any("ackley_s4_up13" in line for line in lines)


def test_testbed_positions_prints_table_row(capsys):
    code, out, _ = run_cli(capsys, "testbed", "positions", "--fn", "ackley", "--s", "4")
    assert code == 0
    assert out.strip() == "-32.77, 0.00, 10.92, 32.77"


def test_testbed_corr_counts_negatives(capsys):
    code, out, _ = run_cli(capsys, "testbed", "corr", "--fn", "ackley", "--s", "4",
                           "--upend", "1,3", "--resolution", "100")
    assert code == 0
    m = parse_matrix(out)
    assert m.shape == (4, 4)
    assert int((m[np.triu_indices(4, 1)] < 0).sum()) == 4


def test_bench_validate_config(capsys, tmp_path):
    good = tmp_path / "good.ini"
    good.write_text("[experiment]\nfunctions = ackley_s4\n")
    code, out, _ = run_cli(capsys, "bench", "validate-config", "--config", str(good))
    assert code == 0 and "ok" in out
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nfunctions = nope_s4\n")
    code, _, err = run_cli(capsys, "bench", "validate-config", "--config", str(bad))
    assert code == 1 and "unknown" in err


def test_bench_corr_rmse(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("1.0,1.0\n1.0,1.0\n")
    b.write_text("1.0,-1.0\n-1.0,1.0\n")
    code, out, _ = run_cli(capsys, "bench", "corr-rmse", "--estimated", str(a),
                           "--empirical", str(b))
    assert code == 0
    assert float(out.strip()) == 2.0


def test_bench_q2(capsys, tmp_path):
    data = tmp_path / "preds.csv"
    data.write_text("y_true,y_pred\n1.0,1.0\n2.0,2.0\n3.0,3.0\n")
    code, out, _ = run_cli(capsys, "bench", "q2", "--data", str(data))
    assert code == 0
    assert float(out.strip()) == 1.0


def test_bench_run_and_summarize(capsys, tmp_path):
    config = tmp_path / "study.ini"
    config.write_text(
        "[experiment]\n"
        "functions = ackley_s4\n"
        "n_values = 4\n"
        "families = EC\n"
        "replications = 2\n"
        "base_seed = 3\n"
        "resolution = 30\n"
        "test_size = 40\n"
        "\n[fit]\nn_starts = 3\nmax_evals_per_start = 200\n"
    )
    out_dir = tmp_path / "out"
    code, out, _ = run_cli(capsys, "bench", "run", "--config", str(config),
                           "--out", str(out_dir))
    assert code == 0 and "2 records" in out
    assert (out_dir / "records.csv").exists()
    assert (out_dir / "summary.csv").exists()
    code, out, _ = run_cli(capsys, "bench", "summarize",
                           "--records", str(out_dir / "records.csv"),
                           "--out", str(tmp_path / "resummary.csv"))
    assert code == 0
    text = (tmp_path / "resummary.csv").read_text()
    assert text == (out_dir / "summary.csv").read_text()
