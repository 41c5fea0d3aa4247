import json

from click.testing import CliRunner

from seqbo import Budget, Study, StudyConfig, StudyStore, canonical_history_json, \
    resolve_objective, run
from seqbo.cli import main

from conftest import EIGHT_PARAM_DOC

WAVY = resolve_objective("builtin:wavy2d")

FAST_CONFIG = {
    "n_init": 3,
    "strategy": {"kind": "random", "pool_size": 64},
    "fit": {"restarts": 2},
}


def _write_space(tmp_path, doc=None):
    path = tmp_path / "space.json"
    path.write_text(json.dumps(doc or EIGHT_PARAM_DOC))
    return str(path)


def _write_config(tmp_path, cfg=None):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg or FAST_CONFIG))
    return str(path)


class TestSpaceValidate:
    def test_valid_listing_exits_zero(self, tmp_path):
        result = CliRunner().invoke(main, ["space", "validate", _write_space(tmp_path)])
        assert result.exit_code == 0, result.output
        assert "8 parameters" in result.output

    def test_invalid_listing_exits_two(self, tmp_path):
        bad = [{"name": "a", "type": "num", "lb": 5, "ub": 5}]
        result = CliRunner().invoke(main, ["space", "validate", _write_space(tmp_path, bad)])
        assert result.exit_code == 2

    def test_unparseable_json_exits_two(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        result = CliRunner().invoke(main, ["space", "validate", str(path)])
        assert result.exit_code == 2


class TestStudyLifecycle:
    def test_init_suggest_observe_best(self, tmp_path):
        runner = CliRunner()
        data = str(tmp_path / "data")
        space = _write_space(tmp_path, WAVY.space.to_config())
        cfg = _write_config(tmp_path)

        res = runner.invoke(main, ["study", "init", "--space", space, "--config", cfg,
                                   "--seed", "0", "--data-dir", data])
        assert res.exit_code == 0, res.output
        sid = res.output.strip()

        res = runner.invoke(main, ["study", "suggest", sid, "--q", "1",
                                   "--data-dir", data])
        assert res.exit_code == 0, res.output
        point = json.loads(res.output)[0]

        res = runner.invoke(main, ["study", "observe", sid, "--x", json.dumps(point),
                                   "--y", "0.7", "--data-dir", data])
        assert res.exit_code == 0, res.output

        res = runner.invoke(main, ["study", "best", sid, "--data-dir", data])
        assert res.exit_code == 0
        assert json.loads(res.output)["y"] == 0.7

    def test_observe_nan_exits_two(self, tmp_path):
        runner = CliRunner()
        data = str(tmp_path / "data")
        space = _write_space(tmp_path, WAVY.space.to_config())
        sid = runner.invoke(main, ["study", "init", "--space", space,
                                   "--data-dir", data]).output.strip()
        res = runner.invoke(main, ["study", "observe", sid,
                                   "--x", '{"x1": 0.1, "x2": 0.1}', "--y", "nan",
                                   "--data-dir", data])
        assert res.exit_code == 2

    def test_unknown_study_exits_two(self, tmp_path):
        res = CliRunner().invoke(main, ["study", "best", "missing",
                                        "--data-dir", str(tmp_path / "data")])
        assert res.exit_code == 2

    def test_data_dir_from_environment(self, tmp_path):
        runner = CliRunner()
        data = str(tmp_path / "env-data")
        space = _write_space(tmp_path, WAVY.space.to_config())
        res = runner.invoke(main, ["study", "init", "--space", space],
                            env={"SEQBO_DATA_DIR": data})
        assert res.exit_code == 0, res.output
        assert StudyStore(data).list_ids() == [res.output.strip()]

    def test_slate_prints_rows(self, tmp_path):
        runner = CliRunner()
        data = str(tmp_path / "data")
        space = _write_space(tmp_path, WAVY.space.to_config())
        cfg = _write_config(tmp_path)
        sid = runner.invoke(main, ["study", "init", "--space", space, "--config", cfg,
                                   "--data-dir", data]).output.strip()
        for i in range(3):
            point = json.dumps({"x1": 0.2 * (i + 1), "x2": 0.1})
            res = runner.invoke(main, ["study", "observe", sid, "--x", point,
                                       "--y", str(0.1 * i), "--data-dir", data])
            assert res.exit_code == 0, res.output
        res = runner.invoke(main, ["study", "slate", sid, "--k", "3", "--data-dir", data])
        assert res.exit_code == 0, res.output
        assert len(res.output.strip().splitlines()) == 3

    def test_slate_on_stopped_study_exits_two(self, tmp_path):
        runner = CliRunner()
        data = str(tmp_path / "data")
        res = runner.invoke(main, ["study", "run", "--budget", "4",
                                   "--objective", "builtin:wavy2d", "--seed", "1",
                                   "--config", _write_config(tmp_path),
                                   "--data-dir", data])
        sid = res.output.strip().splitlines()[0]
        res = runner.invoke(main, ["study", "slate", sid, "--data-dir", data])
        assert res.exit_code == 2


class TestStudyRun:
    def test_run_persists_budget_and_matches_library(self, tmp_path):
        runner = CliRunner()
        data = str(tmp_path / "data")
        cfg = dict(FAST_CONFIG, seed=0)
        res = runner.invoke(main, ["study", "run", "--budget", "8",
                                   "--objective", "builtin:wavy2d", "--seed", "0",
                                   "--config", _write_config(tmp_path, cfg),
                                   "--data-dir", data])
        assert res.exit_code == 0, res.output
        sid, best_line = res.output.strip().splitlines()
        persisted = StudyStore(data).get(sid).study
        assert len(persisted.history) == 8
        assert persisted.state == "stopped"

        lib = run(Study(WAVY.space, StudyConfig.from_config(cfg)), WAVY.evaluate,
                  Budget(8))
        assert canonical_history_json(persisted) == canonical_history_json(lib)
        assert json.loads(best_line)["y"] == lib.best("observed")["y"]


class TestBench:
    def test_bench_run_writes_curves(self, tmp_path):
        bench_cfg = {
            "objective": "builtin:wavy2d",
            "methods": ["random"],
            "seeds": [0, 1],
            "budget": 4,
            "n_init": 2,
            "strategy": {"kind": "random", "pool_size": 32},
        }
        cfg_path = tmp_path / "bench.json"
        cfg_path.write_text(json.dumps(bench_cfg))
        out = tmp_path / "curves.csv"
        res = CliRunner().invoke(main, ["bench", "run", str(cfg_path), "--out", str(out)])
        assert res.exit_code == 0, res.output
        assert out.exists()
        assert (tmp_path / "curves_agg.csv").exists()
        assert "random: mean final best" in res.output
