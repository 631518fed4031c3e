import json

import pytest
from fixtures_progs import LEVEL1_SRC, LEVEL_PROGRAMS

import iosynth.cli as cli
from iosynth.catalog import build_split
from iosynth.engine import initial_program
from iosynth.execgate import FakeExecutor


@pytest.fixture
def prime_table(tmp_path):
    """On-disk fake-executor table covering the fixture programs."""
    task = build_split("prime_factorization")
    inputs = [e.input for e in task.visible + task.hidden]
    programs = dict(LEVEL_PROGRAMS)
    programs[initial_program(task)] = lambda n: None
    fake = FakeExecutor.from_callables(programs, inputs)
    path = tmp_path / "table.json"
    fake.save(path)
    return path


@pytest.fixture
def sec2_mock_file(tmp_path):
    from test_engine import sec2_script

    path = tmp_path / "mock.json"
    path.write_text(json.dumps([
        {"hint": s.hint, "response": s.response,
         "prompt_tokens": s.prompt_tokens, "completion_tokens": s.completion_tokens}
        for s in sec2_script()
    ]))
    return path


class TestGen:
    def test_gen_deterministic_hash(self, tmp_path, capsys):
        assert cli.main(["gen", "--out", str(tmp_path / "a")]) == 0
        first = capsys.readouterr().out
        assert cli.main(["gen", "--out", str(tmp_path / "b")]) == 0
        second = capsys.readouterr().out
        hash1 = [l for l in first.splitlines() if "sha256" in l][0]
        hash2 = [l for l in second.splitlines() if "sha256" in l][0]
        assert hash1 == hash2

    def test_gen_unwritable_path_fails(self, tmp_path, capsys):
        # the parent is a regular file, so the output dir cannot be created
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        code = cli.main(["gen", "--out", str(blocker / "x")])
        assert code == 1
        assert "gen failed" in capsys.readouterr().err

    def test_manifest_lists_all_families(self, tmp_path):
        assert cli.main(["gen", "--out", str(tmp_path)]) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        families = set()
        for entry in manifest["tasks"]:
            task = json.loads((tmp_path / f"{entry['id']}.json").read_text())
            families.add(task["family"])
        assert families == {"Arithmetic", "Core", "Sequence", "BitParity",
                            "Newton", "Geometry", "Extra"}


class TestRun:
    def test_solved_fixture_run(self, tmp_path, prime_table, sec2_mock_file, capsys):
        config = {
            "mode": "dio", "islands": 1, "iterations": 4, "stages": 4,
            "seed": 7, "tasks": ["prime_factorization"],
            "mock_script": str(sec2_mock_file),
            "executor": "table", "table_path": str(prime_table),
            "out_dir": str(tmp_path / "out"),
        }
        # fixture script assumes pure exploitation; single island with a single
        # parent makes the sampling mix irrelevant
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(config))
        code = cli.main(["run", "--config", str(cfg_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "pass_rate=1.000" in out
        report = json.loads((tmp_path / "out" / "suite_report.json").read_text())
        assert report["tasks"]["prime_factorization"]["solved"] is True
        assert (tmp_path / "out" / "prime_factorization" / "events.jsonl").is_file()

    def test_ablate_ce_flag(self, tmp_path, prime_table, capsys):
        mock = tmp_path / "mock.json"
        mock.write_text(json.dumps(
            [{"hint": "", "response": "```python\n" + LEVEL1_SRC + "```"}] * 4
        ))
        code = cli.main([
            "run", "--mode", "ablate-ce", "--tasks", "prime_factorization",
            "--mock", str(mock), "--executor", "table", "--table", str(prime_table),
            "--iters", "4", "--islands", "1", "--seed", "3",
            "--out", str(tmp_path / "out"),
        ])
        assert code == 0
        report = json.loads((tmp_path / "out" / "suite_report.json").read_text())
        assert report["config"]["stages"] == 1

    def test_missing_llm_env_exits_2(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("LLM_API_URL", raising=False)
        code = cli.main(["run", "--tasks", "prime_factorization",
                         "--out", str(tmp_path / "out")])
        assert code == 2
        assert "llm unavailable" in capsys.readouterr().err

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"mode": "dio", "bogus_key": 1}))
        assert cli.main(["run", "--config", str(cfg)]) == 1
        assert "unknown config keys" in capsys.readouterr().err

    def test_unknown_task_rejected(self, tmp_path, sec2_mock_file, capsys):
        code = cli.main(["run", "--tasks", "not_a_task",
                         "--mock", str(sec2_mock_file),
                         "--out", str(tmp_path / "out")])
        assert code == 1


class TestTtsMode:
    def test_best_of_n_via_cli(self, tmp_path, prime_table):
        from fixtures_progs import LEVEL2_SRC, LEVEL4_SRC

        mock = tmp_path / "mock.json"
        mock.write_text(json.dumps([
            {"hint": "", "response": "```python\n" + LEVEL2_SRC + "```"},
            {"hint": "", "response": "```python\n" + LEVEL4_SRC + "```"},
        ]))
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({
            "mode": "bon", "n_samples": 2, "tasks": ["prime_factorization"],
            "mock_script": str(mock), "executor": "table",
            "table_path": str(prime_table), "out_dir": str(tmp_path / "out"),
        }))
        assert cli.main(["run", "--config", str(cfg)]) == 0
        report = json.loads((tmp_path / "out" / "suite_report.json").read_text())
        assert report["mode"] == "bon"
        assert report["tasks"]["prime_factorization"]["solved"] is True


class TestAutonomousCommand:
    def test_autonomous_run(self, tmp_path):
        from iosynth.catalog import build_split
        from iosynth.engine import initial_program

        task = build_split("digit_sum")
        program_src = "def f(x):\n    return sum(int(c) for c in str(x))\n"
        proposed = [3, 17, 40, 41, 100, 200, 55, 56, 7, 8]
        fake = FakeExecutor.from_callables(
            {initial_program(task): lambda n: None,
             program_src: lambda n: sum(int(c) for c in str(n))},
            proposed + [e.input for e in task.hidden],
        )
        table = tmp_path / "table.json"
        fake.save(table)

        steps = [{"hint": "", "response": "[3, 17]"},
                 {"hint": "", "response": "```python\n" + program_src + "```"}]
        for proposal in ("[40, 41]", "[100, 200]", "[55, 56]", "[7, 8]"):
            steps.append({"hint": "", "response": proposal})
            steps.append({"hint": "", "response": "no change"})
        mock = tmp_path / "mock.json"
        mock.write_text(json.dumps(steps))

        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({
            "islands": 1, "iterations": 4, "stages": 1, "seed": 3,
            "tasks": ["digit_sum"], "mock_script": str(mock),
            "executor": "table", "table_path": str(table),
            "out_dir": str(tmp_path / "out"),
        }))
        assert cli.main(["autonomous", "--config", str(cfg)]) == 0
        report = json.loads(
            (tmp_path / "out" / "digit_sum" / "report.json").read_text()
        )
        assert report["example_counts"] == [2, 4, 6, 8, 10]
        assert report["solved"] is True


class TestConfigRoundTrip:
    def test_parse_render_identity(self):
        config = cli.load_config(None)
        config["tasks"] = ["a", "b"]
        config["seed"] = 9
        assert cli.parse_config_text(cli.render_config(config)) == config


class TestReport:
    def test_merge_two_runs(self, tmp_path, prime_table, sec2_mock_file, capsys):
        cfg = {
            "mode": "dio", "islands": 1, "iterations": 4, "stages": 4, "seed": 7,
            "tasks": ["prime_factorization"], "mock_script": str(sec2_mock_file),
            "executor": "table", "table_path": str(prime_table),
            "out_dir": str(tmp_path / "out"),
        }
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(cfg))
        assert cli.main(["run", "--config", str(cfg_path)]) == 0
        run_dir = tmp_path / "out" / "prime_factorization"
        code = cli.main(["report", str(run_dir), "--out", str(tmp_path / "merged")])
        assert code == 0
        merged = json.loads((tmp_path / "merged" / "suite_report.json").read_text())
        assert len(merged["tasks"]) == 1

    def test_report_empty_args_fails(self, tmp_path, capsys):
        assert cli.main(["report", "--out", str(tmp_path)]) == 1

    def test_report_malformed_dir_fails(self, tmp_path, capsys):
        assert cli.main(["report", str(tmp_path), "--out", str(tmp_path)]) == 1
