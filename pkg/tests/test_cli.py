import json

import pytest
from sqlalchemy import func, select

from latent_composite import __version__
from latent_composite.cli import EXIT_FIT, EXIT_INPUT, EXIT_OK, main
from latent_composite.db import session_factory
from latent_composite.models import ReplicateEstimate


def _analyze(data, out, *extra):
    return main(["analyze", "--data", str(data), "--out", str(out), "--methods", "binary", *extra])


def test_analyze_writes_identical_outputs(trial_csv, tmp_path):
    assert _analyze(trial_csv, tmp_path / "a") == EXIT_OK
    assert _analyze(trial_csv, tmp_path / "b") == EXIT_OK
    for name in ("effects.csv", "analysis.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    text = (tmp_path / "a" / "effects.csv").read_text()
    assert text.startswith(f"# version: {__version__}\n")
    assert "binary,odds-ratio," in text
    report = json.loads((tmp_path / "a" / "analysis.json").read_text())
    assert report["provenance"]["n_patients"] == 400
    assert set(report["component_rates"]) == {"control", "treated"}


def test_analyze_with_config(trial_csv, tmp_path):
    cfg = tmp_path / "analysis.cfg"
    cfg.write_text("theta1 = -3\nw_max = 4\n")
    assert _analyze(trial_csv, tmp_path / "out", "--config", str(cfg)) == EXIT_OK


@pytest.mark.parametrize(
    "argv_tail",
    [
        ["--methods", "binary,probit"],
        ["--config", "missing.cfg"],
    ],
)
def test_analyze_input_errors(trial_csv, tmp_path, argv_tail):
    argv = ["analyze", "--data", str(trial_csv), "--out", str(tmp_path / "o"), *argv_tail]
    assert main(argv) == EXIT_INPUT


def test_bad_data_file(write_csv, tmp_path, capsys):
    path = write_csv("a,0,0.1,0.2,-4.5,-1.0,9,0\n")
    assert _analyze(path, tmp_path / "o") == EXIT_INPUT
    assert "line 2" in capsys.readouterr().err


def test_too_few_patients(write_csv, tmp_path):
    path = write_csv("a,0,0.1,0.2,-4.5,-1.0,2,0\nb,1,0.1,0.2,-4.5,-1.0,2,0\n")
    assert _analyze(path, tmp_path / "o") == EXIT_INPUT


def test_non_converged_fit_exit_code(trial_csv, tmp_path):
    cfg = tmp_path / "analysis.cfg"
    # nobody responds, so the logistic fit separates
    cfg.write_text("theta2 = -50\n")
    assert _analyze(trial_csv, tmp_path / "o", "--config", str(cfg)) == EXIT_FIT


def _simulate(out, *extra):
    return main(
        ["simulate", "--scenario", "treat3", "--nsim", "2", "--seed", "5", "--methods", "binary",
         "--truth-draws", "20000", "--threads", "1", "--out", str(out), *extra]
    )


def test_simulate_is_reproducible(tmp_path):
    assert _simulate(tmp_path / "a") == EXIT_OK
    assert _simulate(tmp_path / "b") == EXIT_OK
    for name in ("replicates.csv", "performance.csv", "precision.csv", "simulation.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = json.loads((tmp_path / "a" / "simulation.json").read_text())
    assert report["provenance"]["scenario"] == "treat3"
    assert report["performance"]["n_sim"] == 2


def test_simulate_stores_run(tmp_path):
    url = f"sqlite:///{tmp_path / 'runs.db'}"
    assert _simulate(tmp_path / "a", "--db", url) == EXIT_OK
    db = session_factory(url)()
    try:
        assert db.scalar(select(func.count()).select_from(ReplicateEstimate)) == 2
    finally:
        db.close()


def test_unknown_scenario(tmp_path, capsys):
    code = main(["simulate", "--scenario", "treat9", "--out", str(tmp_path), "--threads", "1"])
    assert code == EXIT_INPUT
    assert "unknown scenario" in capsys.readouterr().err


def test_bootstrap(trial_csv, tmp_path):
    code = main(["bootstrap", "--data", str(trial_csv), "--out", str(tmp_path / "b"), "--methods", "binary",
                 "--nboot", "15", "--seed", "2", "--threads", "1"])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "b" / "bootstrap.json").read_text())
    assert report["methods"]["binary"]["n_used"] + report["methods"]["binary"]["n_failed"] == 15


def test_gof_rejects_bad_config(trial_csv, tmp_path):
    cfg = tmp_path / "analysis.cfg"
    cfg.write_text("gof_max_nodes = 2\n")
    assert main(["gof", "--data", str(trial_csv), "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_INPUT


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
