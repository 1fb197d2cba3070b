import json

import pytest

from opgraph import library
from opgraph.cli import OutputDir, _design_task, main
from opgraph.config import DESK_SCALE, ConfigError, parse_config
from opgraph.graph import deserialize, serialize
from opgraph.surrogate import reports_from_csv

TINY = """\
seed: 3
output: {out}
problems:
  - id: f1
    dimension: 3
    instances: 3
design:
  runs_per_instance: 2
  candidate_budget: 6
  budget_fe: 60
  population_size: 6
  n_initial: 3
  heldout_runs: 2
compare:
  baselines: [GA, DE, sequential_beamform]
  runs: 2
  population_size: 6
  budget_fe: 60
surrogate:
  train_size: 12
  holdout_size: 6
  runs_per_instance: 1
  population_size: 6
  budget_fe: 30
  epochs: 3
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.yaml"
    p.write_text(TINY.format(out=tmp_path / "out"))
    return p


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config("problems:\n  - id: f1\ndesign:\n  runs_per_instanse: 3\n")
    assert "line 4" in str(info.value)
    assert "runs_per_instanse" in str(info.value)


def test_bad_value_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config("seed: 1\nproblems:\n  - id: f1\n  - id: f42\n")
    assert "line 4" in str(info.value)


def test_malformed_yaml():
    with pytest.raises(ConfigError) as info:
        parse_config("problems: [\n")
    assert "malformed" in str(info.value)
    with pytest.raises(ConfigError):
        parse_config("- 1\n- 2\n")


def test_desk_scale_fills_only_unset_values():
    cfg = parse_config("problems:\n  - id: f1\ndesign:\n  budget_fe: 700\n", desk_scale=True)
    assert cfg.design.budget_fe == 700
    assert cfg.design.candidate_budget == DESK_SCALE["design"]["candidate_budget"]
    full = parse_config("problems:\n  - id: f1\n")
    assert full.design.candidate_budget == 5000
    assert full.config_hash() != cfg.config_hash()


def test_split_sizes():
    cfg = parse_config("problems:\n  - id: f1\n  - id: beamform\n    N: [120, 150, 200, 250, 300, 320, 340, 360, 380, 400]\n")
    d, t = cfg.problems[0].split(0)
    assert (len(d), len(t)) == (2, 1)
    d, t = cfg.problems[1].split(0)
    assert (len(d), len(t)) == (5, 5)
    assert not set(d) & set(t)
    assert [inst.N for inst in cfg.problems[1].build(0)][:2] == [120, 150]


def test_design_settings_reach_the_task():
    cfg = parse_config("problems:\n  - id: f1\ndesign:\n  n_initial: 40\n  validation_top: 2\n")
    task, test = _design_task(cfg.problems[0], cfg, jobs=1)
    assert (task.n_initial, task.validation_top) == (40, 2)
    assert (len(task.instances), len(test)) == (2, 1)


def test_design_twice_is_byte_identical(cfg_path, tmp_path):
    assert main(["design", "--config", str(cfg_path), "--out", str(tmp_path / "a")]) == 0
    assert main(["design", "--config", str(cfg_path), "--out", str(tmp_path / "b")]) == 0
    for name in ("best_graph_f1.txt", "design_trace_f1.csv", "heldout_f1.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    g = deserialize((tmp_path / "a" / "best_graph_f1.txt").read_text())
    assert g.metadata["problem"] == "f1"
    man = json.loads((tmp_path / "a" / "manifest_design.json").read_text())
    assert set(man["files"]) == {"best_graph_f1.txt", "design_trace_f1.csv", "heldout_f1.csv"}


def test_seed_flag_changes_hash(cfg_path, tmp_path):
    main(["design", "--config", str(cfg_path), "--out", str(tmp_path / "a")])
    main(["design", "--config", str(cfg_path), "--out", str(tmp_path / "b"), "--seed", "4"])
    ha = json.loads((tmp_path / "a" / "manifest_design.json").read_text())["config_hash"]
    hb = json.loads((tmp_path / "b" / "manifest_design.json").read_text())["config_hash"]
    assert ha != hb


def test_compare_includes_designed_graph(cfg_path, tmp_path):
    out = tmp_path / "out"
    assert main(["design", "--config", str(cfg_path)]) == 0
    assert main(["compare", "--config", str(cfg_path)]) == 0
    rows = (out / "compare.csv").read_text().splitlines()
    assert rows[0] == "problem,algorithm,mean,std,runs"
    algs = {r.split(",")[1] for r in rows[1:]}
    # the beamforming reference is skipped on a continuous problem
    assert algs == {"designed", "GA", "DE"}


def test_surrogate_command(cfg_path, tmp_path):
    assert main(["surrogate", "--config", str(cfg_path)]) == 0
    reps = reports_from_csv((tmp_path / "out" / "surrogate_report.csv").read_text())
    assert [(r.mode, r.n_train, r.n_holdout) for r in reps] == [("embed", 12, 6), ("raw", 12, 6)]
    assert (tmp_path / "out" / "vgae_f1.json").exists()


def test_failure_leaves_no_partial_files(tmp_path):
    out = tmp_path / "out"
    with pytest.raises(RuntimeError):
        with OutputDir(out) as o:
            o.write("half.csv", "a,b\n")
            raise RuntimeError("boom")
    assert list(out.iterdir()) == []


def test_config_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("problems:\n  - id: f1\nbogus: 1\n")
    assert main(["design", "--config", str(p)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_validate_command(tmp_path, capsys):
    p = tmp_path / "g.txt"
    p.write_text(serialize(library.designed_f9()))
    assert main(["validate", str(p)]) == 0
    assert capsys.readouterr().out.strip() == "valid"
    p.write_text("graph q=1 pathways=v0\nv0 choose choose_traverse\nv1 update update_always\nv0 -> v1\n")
    assert main(["validate", str(p)]) == 1
    p.write_text("graph q=1 pathways=v0\nv0 choose nope\n")
    assert main(["validate", str(p)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_run_command(tmp_path, capsys):
    p = tmp_path / "g.txt"
    p.write_text(serialize(library.designed_f2()))
    trace = tmp_path / "trace.csv"
    assert main(["run", str(p), "--problem", "f1", "--dimension", "3", "--budget", "100",
                 "--population", "10", "--trace", str(trace)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["evaluations_used"] == 100
    assert trace.read_text().startswith("iteration,vertex,fe,best\n")
    p.write_text(serialize(library.beamform_design()))
    assert main(["run", str(p), "--problem", "beamform", "--N", "6", "--budget", "60", "--population", "6"]) == 0


def test_catalog_command(capsys):
    assert main(["catalog", "--kind", "discrete"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 17
