"""Command-line surface: subcommands, exit codes, emitted report files."""

import json

import pytest
from conftest import predictor_cmd

from cbobench.cli import _parse_budget, main


def _run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


TINY = [
    "--problems", "jlh2,gkxwc1", "--methods", "ppd_pen,ppd_cei",
    "--trials", "2", "--iters", "2", "--init", "4", "--pool", "50",
    "--seed", "0", "--errata", "corrected",
]


@pytest.fixture(scope="module")
def tiny_store(tmp_path_factory):
    """One finished 2x2x2 run shared by the report tests."""
    out = tmp_path_factory.mktemp("store")
    code = main(["run", *TINY, "--out", str(out)])
    assert code == 0
    return out


# ---------------------------------------------------------------------------
# list / validate


def test_list_shows_problems_and_methods(capsys):
    code, out, _ = _run(["list"], capsys)
    assert code == 0
    assert "problems (17)" in out and "methods (6)" in out
    assert "compression_spring" in out and "ppd_cei_plus" in out


def test_list_subsets(capsys):
    code, out, _ = _run(["list", "problems"], capsys)
    assert code == 0 and "methods (" not in out
    code, out, _ = _run(["list", "methods"], capsys)
    assert code == 0 and "problems (" not in out and "gp_pen" in out


def test_validate_prints_resolved_config(capsys, tmp_path):
    code, out, _ = _run(["validate", *TINY, "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "config_hash = " in out
    assert "scheduled trials = 8" in out
    assert "config OK" in out


def test_validate_rejects_unknown_ids(capsys):
    code, _, err = _run(["validate", "--problems", "jlh2,marslander"], capsys)
    assert code == 2
    assert "config error" in err and "marslander" in err


def test_validate_handshakes_external_predictor(capsys, tmp_path):
    code, out, _ = _run(
        ["validate", *TINY, "--out", str(tmp_path),
         "--predictor-cmd", predictor_cmd("ok")],
        capsys,
    )
    assert code == 0 and "handshake OK" in out


def test_validate_reports_failed_handshake(capsys, tmp_path):
    code, _, err = _run(
        ["validate", *TINY, "--out", str(tmp_path),
         "--predictor-cmd", predictor_cmd("badjson")],
        capsys,
    )
    assert code == 2 and "handshake FAILED" in err


def test_unknown_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# run


def test_run_writes_store_and_resumes(tiny_store, capsys):
    assert (tiny_store / "config.json").exists()
    assert (tiny_store / "manifest.jsonl").exists()
    assert len(list((tiny_store / "traces").glob("*.csv"))) == 8
    # second invocation finds nothing to do and succeeds
    code, out, _ = _run(["run", *TINY, "--out", str(tiny_store)], capsys)
    assert code == 0 and "done=8" in out


def test_run_accepts_config_file_with_flag_overrides(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "problems = jlh2\nmethods = ppd_pen\ntrials = 1\n"
        "iters = 1\ninit = 4\npool = 30\n"
    )
    out_dir = tmp_path / "out"
    code, out, _ = _run(
        ["run", "--config", str(cfg), "--trials", "2", "--out", str(out_dir)],
        capsys,
    )
    assert code == 0
    stored = json.loads((out_dir / "config.json").read_text())
    assert stored["n_trials"] == 2  # flag beat the file
    assert stored["pool_size"] == 30


def test_run_with_bad_config_file_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("velocity = 11\n")
    code, _, err = _run(["run", "--config", str(cfg)], capsys)
    assert code == 2 and "config error" in err


def test_run_reports_partial_failure(tmp_path, capsys):
    # predictor dies after its first reply: trial 0 cannot finish 2 iterations
    code, out, _ = _run(
        ["run", "--problems", "jlh2", "--methods", "ppd_cei",
         "--trials", "1", "--iters", "2", "--init", "4", "--pool", "30",
         "--out", str(tmp_path / "out"),
         "--predictor-cmd", predictor_cmd("die-after-1")],
        capsys,
    )
    assert code == 1
    rows = [
        json.loads(line)
        for line in (tmp_path / "out" / "manifest.jsonl").read_text().splitlines()
    ]
    assert rows[-1]["status"] == "failed"


# ---------------------------------------------------------------------------
# report


def test_report_requires_existing_store(tmp_path, capsys):
    code, _, err = _run(["report", "feasibility", "--out", str(tmp_path / "void")], capsys)
    assert code == 2 and "no store" in err


def test_report_feasibility_files(tiny_store, capsys):
    code, out, _ = _run(["report", "feasibility", "--out", str(tiny_store)], capsys)
    assert code == 0
    csv_path = tiny_store / "reports" / "feasibility.csv"
    assert str(csv_path) in out
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "problem,method,ratio_percent,n_trials"
    assert len(lines) == 1 + 4  # 2 problems x 2 methods
    doc = json.loads((tiny_store / "reports" / "feasibility.json").read_text())
    assert set(doc) == {"jlh2", "gkxwc1"}


def test_report_fixed_iteration_with_budget(tiny_store, capsys):
    code, out, _ = _run(
        ["report", "fixed_iteration", "--budget", "iteration:1", "--out", str(tiny_store)],
        capsys,
    )
    assert code == 0
    doc = json.loads((tiny_store / "reports" / "fixed_iteration__jlh2.json").read_text())
    assert doc["budget"] == 1.0 and doc["budget_kind"] == "iteration"


def test_report_fixed_runtime_fastest(tiny_store, capsys):
    code, _, _ = _run(
        ["report", "fixed_runtime", "--budget", "runtime:fastest", "--out", str(tiny_store)],
        capsys,
    )
    assert code == 0
    doc = json.loads((tiny_store / "reports" / "fixed_runtime__gkxwc1.json").read_text())
    assert doc["budget_kind"] == "runtime"
    assert len(doc["trial_budgets_ms"]) == 2


def test_report_ranking_and_pareto(tiny_store, capsys):
    code, _, _ = _run(["report", "ranking", "--out", str(tiny_store)], capsys)
    assert code == 0
    doc = json.loads((tiny_store / "reports" / "ranking_performance.json").read_text())
    assert set(doc["mean_ranks"]) == {"ppd_pen", "ppd_cei"}

    code, _, _ = _run(["report", "pareto", "--out", str(tiny_store)], capsys)
    assert code == 0
    lines = (tiny_store / "reports" / "pareto.csv").read_text().splitlines()
    assert lines[0] == "problem,method,median_time_ms,median_value,pareto_rank"


def test_report_all_emits_every_kind(tiny_store, capsys):
    code, out, _ = _run(["report", "all", "--out", str(tiny_store)], capsys)
    assert code == 0
    for stem in ("feasibility", "fixed_iteration__jlh2", "fixed_runtime__jlh2",
                 "ranking_performance", "pareto"):
        assert (tiny_store / "reports" / f"{stem}.csv").exists(), stem


def test_report_rejects_ids_not_in_store(tiny_store, capsys):
    code, _, err = _run(
        ["report", "feasibility", "--problems", "ackley10", "--out", str(tiny_store)],
        capsys,
    )
    assert code == 2 and "not in this store" in err


def test_report_refuses_incomplete_slice(tmp_path, capsys):
    from cbobench.harness import ExperimentConfig, ResultStore, run_one_trial

    out = tmp_path / "partial"
    cfg = ExperimentConfig(
        problems=("jlh2",), methods=("ppd_pen", "ppd_cei"), n_trials=1,
        n_init=4, n_iter=1, pool_size=30, out_dir=str(out),
    )
    store = ResultStore(str(out), cfg)
    meta, csv_text = run_one_trial(cfg.to_dict(), "jlh2", "ppd_pen", 0)
    store.write_trial(meta, csv_text)  # ppd_cei cell scheduled but never run
    code, _, err = _run(["report", "feasibility", "--out", str(out)], capsys)
    assert code == 2 and "missing from store" in err


def test_report_bad_budget_is_usage_error(tiny_store, capsys):
    code, _, err = _run(
        ["report", "fixed_iteration", "--budget", "epochs:3", "--out", str(tiny_store)],
        capsys,
    )
    assert code == 2 and "budget" in err


def test_budget_parser_grammar():
    assert _parse_budget(None) == (None, None)
    assert _parse_budget("iteration:5") == ("iteration", 5)
    assert _parse_budget("runtime:fastest") == ("runtime", None)
    assert _parse_budget("runtime:") == ("runtime", None)
    assert _parse_budget("runtime:250.5") == ("runtime", 250.5)
    assert _parse_budget("runtime:inf") == (("runtime", float("inf")))
    with pytest.raises(ValueError):
        _parse_budget("epochs:3")
    with pytest.raises(ValueError):
        _parse_budget("iteration:many")
