import json

import pytest

from qpathfinder.cli import build_parser, main
from qpathfinder.instances import load_instance, make_instance, write_instance
from qpathfinder.monitor import read_table


@pytest.fixture
def inst_file(tmp_path, running_example):
    path = tmp_path / "inst.json"
    write_instance(running_example, path)
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_and_refuse_overwrite(tmp_path, capsys):
    out = tmp_path / "g.json"
    args = ["generate", "--n", 5, "--capacity", 5, "--seed", 4, "--out", out]
    assert run(args, capsys)[0] == 0
    first = out.read_bytes()
    assert load_instance(out).n_nodes == 6
    code, _, err = run(args, capsys)
    assert code == 1 and err.startswith("error: exists:")
    assert run(args + ["--force"], capsys)[0] == 0
    assert out.read_bytes() == first


def test_generate_invalid_demand_range(tmp_path, capsys):
    code, _, err = run(["generate", "--n", 3, "--capacity", 2, "--demand-range", 1, 3, "--out", tmp_path / "x.json"],
                       capsys)
    assert code == 1 and err.startswith("error:")


def test_solve_quantum_writes_artifacts(tmp_path, inst_file, capsys):
    out = tmp_path / "run"
    code, _, err = run(["solve", "--instance", inst_file, "--optimizer", "nelder-mead", "--max-evals", 150,
                        "--landscape", 2, "--out-dir", out], capsys)
    assert code == 0, err
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "ok"
    assert report["approximation_ratio"] >= 1.0
    header, data = read_table(out / "trace_cluster0.csv")
    assert header[:4] == ["iter", "eval_count", "energy", "best_energy"]
    header, data = read_table(out / "landscape_cluster0.csv")
    assert header == ["a", "b", "energy"] and data.shape == (25, 3)
    assert (out / "projection_cluster0.csv").exists()


def test_solve_classical(tmp_path, inst_file, capsys):
    code, _, _ = run(["solve", "--instance", inst_file, "--algorithm", "classical-exact",
                      "--out-dir", tmp_path / "c"], capsys)
    assert code == 0
    assert json.loads((tmp_path / "c" / "report.json").read_text())["approximation_ratio"] == 1.0


def test_solve_refuses_pruned_path(tmp_path, inst_file, capsys):
    code, _, err = run(["solve", "--instance", inst_file, "--decomposition", "direct-cvrp", "--qubit-cap", 4,
                        "--out-dir", tmp_path / "p"], capsys)
    assert code == 1 and err.startswith("error: pruned:")
    assert not (tmp_path / "p").exists()


def test_recommend_outputs(tmp_path, inst_file, capsys):
    out = tmp_path / "rec"
    code, _, err = run(["recommend", "--instance", inst_file, "--optimizer", "adam", "--penalty", "bounding-box",
                        "--scaling", "exact-width", "--max-evals", 100, "--jobs", 1, "--out-dir", out], capsys)
    assert code == 0, err
    doc = json.loads((out / "recommendation.json").read_text())
    assert doc["ranking"][0]["rank"] == 1
    assert len(doc["reports"]) == 4
    assert "rank" in (out / "recommendation.txt").read_text()


def test_config_file_overrides_defaults(tmp_path, inst_file, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max-evals": 60, "lambda": 1.5, "optimizer": "umda"}))
    args = build_parser().parse_args(["solve", "--instance", str(inst_file), "--out-dir", "x"])
    assert args.lam == 1.2
    from qpathfinder.cli import _parse
    parsed = _parse(build_parser(), ["solve", "--config", str(cfg), "--instance", str(inst_file), "--out-dir", "x"])
    assert parsed.max_evals == 60 and parsed.lam == 1.5 and parsed.optimizer == "umda"
    # explicit flags beat the config file
    parsed = _parse(build_parser(), ["solve", "--config", str(cfg), "--instance", str(inst_file), "--out-dir", "x",
                                     "--max-evals", "70"])
    assert parsed.max_evals == 70


def test_bad_config_exit_code(tmp_path, inst_file, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    code, _, err = run(["solve", "--config", bad, "--instance", inst_file, "--out-dir", tmp_path / "o"], capsys)
    assert code == 2 and err.startswith("error: config:")


def test_landscape_command(tmp_path, inst_file, capsys):
    out = tmp_path / "scan.csv"
    code, _, err = run(["landscape", "--instance", inst_file, "--k", 1, "--out", out], capsys)
    assert code == 0, err
    header, data = read_table(out)
    assert data.shape == (9, 3)
    code, _, err = run(["landscape", "--instance", inst_file, "--cluster", 7, "--out", tmp_path / "n.csv"], capsys)
    assert code == 1 and "out of range" in err


def test_landscape_center_length_checked(tmp_path, inst_file, capsys):
    code, _, err = run(["landscape", "--instance", inst_file, "--center", 0.1, "--out", tmp_path / "c.csv"], capsys)
    assert code == 1 and "--center" in err


def test_missing_instance_file(tmp_path, capsys):
    code, _, err = run(["solve", "--instance", tmp_path / "nope.json", "--out-dir", tmp_path], capsys)
    assert code == 1 and err.startswith("error:")


def test_demand_over_capacity_error_names_node(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"name": "b", "capacity": 2, "depot": 0, "nodes": [
        {"id": 0, "x": 0, "y": 0, "demand": 0}, {"id": 1, "x": 1, "y": 0, "demand": 3}]}))
    code, _, err = run(["solve", "--instance", path, "--out-dir", tmp_path / "o"], capsys)
    assert code == 1 and "node 1" in err


def test_generate_same_seed_identical_files(tmp_path, capsys):
    for name in ("a.txt", "b.txt"):
        assert run(["generate", "--n", 6, "--capacity", 5, "--seed", 42, "--out", tmp_path / name], capsys)[0] == 0
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert load_instance(tmp_path / "a.txt").n_nodes == 7


@pytest.fixture
def single_cluster_file(tmp_path):
    inst = make_instance("four", [(0, 0), (1, 0.2), (1.1, 1), (0.1, 0.9)], [0, 1, 2, 1], 5)
    path = tmp_path / "four.json"
    write_instance(inst, path)
    return path


def test_solve_four_node_quasi_newton_depth_and_qubits(tmp_path, single_cluster_file, capsys):
    out = tmp_path / "qn"
    code, _, err = run(["solve", "--instance", single_cluster_file, "--penalty", "exact-min-search",
                        "--scaling", "exact-width", "--optimizer", "quasi-newton", "--out-dir", out], capsys)
    assert code == 0, err
    sub = json.loads((out / "report.json").read_text())["subproblems"]
    assert len(sub) == 1
    assert sub[0]["depth"] == 5 and sub[0]["qubits"] == 9


def test_solve_umda_report_generated(tmp_path, single_cluster_file, capsys):
    out = tmp_path / "umda"
    code, _, err = run(["solve", "--instance", single_cluster_file, "--optimizer", "umda", "--max-evals", 400,
                        "--out-dir", out], capsys)
    assert code == 0, err
    report = json.loads((out / "report.json").read_text())
    assert report["subproblems"][0]["trace"]["method"] == "umda"


def test_recommend_zero_cap_is_classical_and_reproducible(tmp_path, capsys):
    inst = tmp_path / "six.json"
    assert run(["generate", "--n", 6, "--capacity", 5, "--seed", 42, "--out", inst], capsys)[0] == 0
    texts = []
    for run_dir in ("a", "b"):
        code, _, err = run(["recommend", "--instance", inst, "--qubit-cap", 0, "--jobs", 1,
                            "--out-dir", tmp_path / run_dir], capsys)
        assert code == 0, err
        texts.append((tmp_path / run_dir / "recommendation.json").read_bytes())
    assert texts[0] == texts[1]
    doc = json.loads(texts[0])
    assert len(doc["reports"]) == 2 * 1 * 2 * 2 * 4 + 2
    ok = [r for r in doc["reports"] if r["status"] == "ok"]
    assert {r["path_id"] for r in ok} == {"cluster-first/classical-exact", "cluster-first/classical-heuristic"}
