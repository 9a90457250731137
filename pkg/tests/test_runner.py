import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pytest

from rmtlab import cli
from rmtlab.runner import (EXPERIMENTS, ConfigParseError, MissingKeyError, RangeError, Report, UnknownKeyError,
                           load_config, parse_config, run_experiment, write_outputs)
from rmtlab.runner.report import at_least, at_most, reported, within

SEMICIRCLE = """\
experiment = "semicircle"
seed = 1

[parameters]
n = 500
replicas = 10
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


# ---------------------------------------------------------------- configs

def test_minimal_semicircle_config(tmp_path):
    cfg = load_config(write(tmp_path, "a.toml", SEMICIRCLE))
    assert cfg.experiment == "semicircle" and cfg.seed == 1
    assert cfg.parameters["n"] == 500 and cfg.parameters["replicas"] == 10
    assert cfg.parameters["bins"] == EXPERIMENTS["semicircle"].params["bins"].default


def test_unknown_parameter_is_named(tmp_path):
    text = SEMICIRCLE + "sigma2_typo = 0.5\n"
    with pytest.raises(UnknownKeyError, match="sigma2_typo"):
        load_config(write(tmp_path, "a.toml", text))


def test_unknown_top_level_key():
    with pytest.raises(UnknownKeyError, match="sede"):
        parse_config({"experiment": "semicircle", "seed": 1, "sede": 2})


def test_negative_eps_is_a_range_error():
    with pytest.raises(RangeError, match="eps"):
        parse_config({"experiment": "containment", "seed": 1, "parameters": {"eps": -1.0}})


def test_missing_seed():
    with pytest.raises(MissingKeyError, match="seed"):
        parse_config({"experiment": "semicircle"})


@pytest.mark.parametrize("raw", [
    {"experiment": "nope", "seed": 1},
    {"experiment": "semicircle", "seed": -1},
    {"experiment": "semicircle", "seed": "1"},
    {"experiment": "semicircle", "seed": 1, "parameters": {"n": "500"}},
    {"experiment": "semicircle", "seed": 1, "parameters": {"n": 0}},
    {"experiment": "dt-moments", "seed": 1, "parameters": {"d0_k": [4, 2]}},
])
def test_invalid_configs(raw):
    from rmtlab.runner import ConfigError
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_parse_error_carries_line(tmp_path):
    bad = 'experiment = "semicircle"\nseed = 1\n[parameters\nn = 5\n'
    with pytest.raises(ConfigParseError) as info:
        load_config(write(tmp_path, "bad.toml", bad))
    assert info.value.line == 3


def test_json_parse_error_carries_line(tmp_path):
    with pytest.raises(ConfigParseError) as info:
        load_config(write(tmp_path, "bad.json", '{\n "seed": 1,\n oops\n}'))
    assert info.value.line == 3


def test_json_and_toml_are_equivalent(tmp_path):
    toml_cfg = load_config(write(tmp_path, "a.toml", SEMICIRCLE))
    raw = {"experiment": "semicircle", "seed": 1, "parameters": {"n": 500, "replicas": 10}}
    json_cfg = load_config(write(tmp_path, "a.json", json.dumps(raw)))
    assert toml_cfg.canonical() == json_cfg.canonical()
    assert toml_cfg.config_hash() == json_cfg.config_hash()


def test_overrides_change_hash_only_for_seed(tmp_path):
    cfg = load_config(write(tmp_path, "a.toml", SEMICIRCLE))
    assert cfg.with_overrides(output_dir=tmp_path).config_hash() == cfg.config_hash()
    assert cfg.with_overrides(seed=2).config_hash() != cfg.config_hash()


def test_every_experiment_has_an_anchor_and_valid_defaults():
    for name, exp in EXPERIMENTS.items():
        assert exp.anchor
        required = {k: None for k, p in exp.params.items() if p.required}
        assert not required, name
        parse_config({"experiment": name, "seed": 0})


# ---------------------------------------------------------------- reports

def test_metric_helpers():
    assert within("a", 1.0, 1.05, 0.1).passed
    assert not within("a", 1.0, 1.2, 0.1).passed
    assert at_most("b", 0, 0).passed and not at_most("b", 1, 0).passed
    assert at_least("c", 95, 95).passed
    assert reported("d", 3.0).passed is None


def test_reported_rows_never_fail():
    rep = Report("x", "anchor", 0, {}, "h", metrics=[reported("trend", -1.0)])
    assert rep.passed


def test_empty_report_is_valid(tmp_path):
    rep = Report("semicircle", "anchor", 1, {}, "hash")
    write_outputs(rep, tmp_path)
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["metrics"] == [] and data["passed"] is True
    assert (tmp_path / "metrics.csv").read_text() == "name,value,target,tolerance,kind,passed\n"


def test_manifest_lists_every_file_with_hashes(tmp_path):
    cfg = parse_config({"experiment": "f-curve", "seed": 3, "parameters": {"points": 50}})
    write_outputs(run_experiment(cfg), tmp_path, plots=True)
    manifest = json.loads((tmp_path / "manifest.json").read_text())["files"]
    on_disk = {str(p.relative_to(tmp_path)) for p in tmp_path.rglob("*") if p.is_file()}
    assert on_disk == {e["path"] for e in manifest} | {"manifest.json"}
    import hashlib
    for e in manifest:
        assert hashlib.sha256((tmp_path / e["path"]).read_bytes()).hexdigest() == e["sha256"]
    assert not list(tmp_path.rglob("*.tmp"))


def test_semicircle_run_is_byte_identical(tmp_path):
    cfg = parse_config({"experiment": "semicircle", "seed": 1, "parameters": {"n": 500, "replicas": 10}})
    a, b = tmp_path / "a", tmp_path / "b"
    write_outputs(run_experiment(cfg), a)
    write_outputs(run_experiment(cfg), b)
    for name in ("metrics.csv", "report.json", "histogram.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = json.loads((a / "manifest.json").read_text())["files"]
    mb = json.loads((b / "manifest.json").read_text())["files"]
    assert [e["sha256"] for e in ma if e["deterministic"]] == [e["sha256"] for e in mb if e["deterministic"]]


def test_results_do_not_depend_on_worker_count():
    cfg = parse_config({"experiment": "freeness", "seed": 5,
                        "parameters": {"n": 60, "replicas": 12, "max_letters": 2}})
    one = run_experiment(cfg, workers=1)
    four = run_experiment(cfg, workers=4)
    assert one.metrics_csv() == four.metrics_csv()


def test_dt_moments_rows_have_targets():
    cfg = parse_config({"experiment": "dt-moments", "seed": 2,
                        "parameters": {"size": 100, "replicas": 5, "queries": [[2, 1]], "d0_size": 50,
                                       "d0_k": [1, 2], "d0_seeds": 2}})
    rep = run_experiment(cfg)
    row = next(r for r in rep.metrics if r.name.startswith("moment_") or "2_1" in r.name)
    assert row.target == pytest.approx(2 / 3) and row.tolerance > 0 and row.passed is not None


def test_containment_row_targets_zero_outside():
    cfg = parse_config({"experiment": "containment", "seed": 2,
                        "parameters": {"n": 200, "runs": 5, "min_clean": 4}})
    rep = run_experiment(cfg)
    names = {r.name: r for r in rep.metrics}
    assert names["max_outside_count"].target == 0
    assert names["clean_runs"].target == 4


def test_brown_grid_emits_heatmap_and_grid(tmp_path):
    cfg = parse_config({"experiment": "brown-grid", "seed": 1,
                        "parameters": {"n": 8, "cells": 48, "fk_trials": 3}})
    rep = run_experiment(cfg)
    write_outputs(rep, tmp_path)
    assert (tmp_path / "grid.csv").read_text().startswith("x,y,mass\n")
    assert (tmp_path / "plots" / "heatmap.svg").read_text().lstrip().startswith("<svg")
    paths = {e["path"] for e in json.loads((tmp_path / "manifest.json").read_text())["files"]}
    assert {"grid.csv", "plots/heatmap.svg"} <= paths


def test_numeric_errors_become_fail_verdicts(monkeypatch):
    from rmtlab.errors import NumericError
    from rmtlab.runner import experiments

    def boom(p, seed, mapper):
        raise NumericError("singular pencil")
    exp = experiments.EXPERIMENTS["f-curve"]
    monkeypatch.setitem(experiments.EXPERIMENTS, "f-curve", experiments.Experiment(exp.name, exp.anchor,
                                                                                      exp.params, boom))
    rep = run_experiment(parse_config({"experiment": "f-curve", "seed": 0}))
    assert not rep.passed and "singular pencil" in rep.error


def test_output_error_names_the_path(tmp_path):
    from rmtlab.runner import OutputError
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OutputError, match="file"):
        write_outputs(Report("x", "a", 0, {}, "h"), blocker / "sub")


# ---------------------------------------------------------------- CLI

def test_cli_run_pass(tmp_path, capsys):
    cfg = write(tmp_path, "f.toml", 'experiment = "f-curve"\nseed = 4\n[parameters]\npoints = 100\n')
    code = cli.main(["run", str(cfg), "--output-dir", str(tmp_path / "out"), "--plots"])
    assert code == 0
    assert capsys.readouterr().out.strip().endswith("PASS")
    assert (tmp_path / "out" / "plots").is_dir()


def test_cli_run_fail(tmp_path):
    text = SEMICIRCLE + "ks_bound = 1e-6\n"
    code = cli.main(["run", str(write(tmp_path, "s.toml", text)), "--output-dir", str(tmp_path / "o")])
    assert code == 1


def test_cli_config_errors(tmp_path, capsys):
    assert cli.main(["run", str(write(tmp_path, "b.toml", SEMICIRCLE + "sigma2_typo = 1\n"))]) == 2
    assert "sigma2_typo" in capsys.readouterr().err
    assert cli.main(["validate", str(tmp_path / "missing.toml")]) == 2
    assert cli.main(["run", str(write(tmp_path, "c.toml", SEMICIRCLE)), "--workers", "0"]) == 2


def test_cli_validate_and_list(tmp_path, capsys):
    assert cli.main(["validate", str(write(tmp_path, "a.toml", SEMICIRCLE))]) == 0
    assert "ok (semicircle" in capsys.readouterr().out
    assert cli.main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in EXPERIMENTS)


def test_cli_seed_override_and_env_workers(tmp_path, monkeypatch):
    cfg = write(tmp_path, "f.toml", 'experiment = "f-curve"\nseed = 4\n[parameters]\npoints = 20\n')
    monkeypatch.setenv("LAB_WORKERS", "2")
    assert cli.main(["run", str(cfg), "--seed", "9", "--output-dir", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["seed"] == 9
    monkeypatch.setenv("LAB_WORKERS", "many")
    assert cli.main(["run", str(cfg), "--output-dir", str(tmp_path / "p")]) == 2


def test_cli_default_output_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = write(tmp_path, "f.toml", 'experiment = "f-curve"\nseed = 4\n[parameters]\npoints = 20\n')
    assert cli.main(["run", str(cfg)]) == 0
    assert (tmp_path / "runs" / "f-curve-seed4" / "report.json").exists()
