import json

from irs_cellfree import cli
from irs_cellfree.errors import SolverFailure


def test_complexity_text(capsys):
    assert cli.main(["complexity"]) == 0
    out = capsys.readouterr().out
    assert "2.408E+7" in out and "7.6584E+7" in out and "31.4426%" in out


def test_complexity_json_with_flags(capsys):
    assert cli.main(["complexity", "--json", "--outer", "20"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["overall"] == 48_160_000


def test_run_writes_csv(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n_bs: 2\nn_users: 2\nn_irs: 1\nn_elems: 4\nn_tones: 2\nouter_iters: 2\ncadmm_iters: 50\n")
    out = tmp_path / "o.csv"
    rc = cli.main(["run", "--config", str(cfg), "--experiment", "distance_sweep", "--out", str(out),
                   "--seed", "3", "--trials", "1", "--values", "30", "--baselines", "optimized"])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 2 and lines[1].endswith(",3")


def test_solver_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(spec, config):
        raise SolverFailure("diverged", solver="cadmm", iteration=7)

    monkeypatch.setattr(cli, "run_experiment", boom)
    rc = cli.main(["run", "--experiment", "csi_sweep", "--out", str(tmp_path / "x.csv")])
    assert rc == cli.EXIT_SOLVER
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "solver_failure" and err["context"]["iteration"] == 7


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n_bs: 0\n")
    rc = cli.main(["run", "--config", str(cfg), "--experiment", "csi_sweep", "--out", str(tmp_path / "x.csv")])
    assert rc == cli.EXIT_CONFIG
    assert json.loads(capsys.readouterr().err)["error"] == "config_error"
