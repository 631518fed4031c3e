"""Operator entry point: benchmark generation, search runs, the autonomous
mode, sampling baselines, and report aggregation.

Runs are driven by a JSON config file; command-line flags override config
values and the effective config is written into the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .catalog import DomainTooSmall, build_catalog, export_benchmark, manifest_hash
from .engine import EngineConfig
from .execgate import BackendUnavailable, FakeExecutor, SubprocessExecutor
from .harness import (
    MODES,
    TTS_VARIANTS,
    load_run_dirs,
    merge_report,
    run_suite,
    run_tts_baselines,
    write_suite_report,
)
from .llm import HttpChatClient, LlmUnavailable, ScriptedMockClient

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INFRA = 2

CONFIG_KEYS = {
    "mode": str,
    "seed": int,
    "islands": int,
    "iterations": int,
    "stages": int,
    "migration_period": int,
    "replay_cap": int,
    "timeout_ms": int,
    "lambda_c": float,
    "lambda_h": float,
    "temperature": float,
    "parallel": bool,
    "workers": int,
    "n_samples": int,
    "tasks": list,
    "families": list,
    "levels": list,
    "out_dir": str,
    "mock_script": str,
    "executor": str,       # "subprocess" | "table"
    "table_path": str,
    "runner_cmd": list,
}

CONFIG_DEFAULTS = {
    "mode": "dio",
    "seed": 0,
    "islands": 3,
    "iterations": 20,
    "stages": 4,
    "migration_period": 5,
    "replay_cap": 4,
    "timeout_ms": 2000,
    "lambda_c": 0.1,
    "lambda_h": 0.1,
    "temperature": 0.8,
    "parallel": False,
    "workers": 1,
    "n_samples": 40,
    "tasks": [],
    "families": [],
    "levels": [],
    "out_dir": "runs",
    "mock_script": "",
    "executor": "subprocess",
    "table_path": "",
    "runner_cmd": [],
}


class ConfigError(ValueError):
    pass


def load_config(path: str | None) -> dict:
    config = dict(CONFIG_DEFAULTS)
    if path:
        data = json.loads(Path(path).read_text())
        unknown = set(data) - set(CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config.update(data)
    return config


def render_config(config: dict) -> str:
    return json.dumps(config, sort_keys=True, indent=1) + "\n"


def parse_config_text(text: str) -> dict:
    data = json.loads(text)
    unknown = set(data) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    config = dict(CONFIG_DEFAULTS)
    config.update(data)
    return config


def engine_config(config: dict) -> EngineConfig:
    return EngineConfig(
        islands=config["islands"],
        total_iterations=config["iterations"],
        stages=config["stages"],
        migration_period=config["migration_period"],
        replay_cap=config["replay_cap"],
        timeout_ms=config["timeout_ms"],
        lambda_c=config["lambda_c"],
        lambda_h=config["lambda_h"],
        temperature=config["temperature"],
        parallel=config["parallel"],
        seed=config["seed"],
    )


def select_tasks(config: dict) -> dict:
    catalog = build_catalog()
    tasks = catalog
    if config["tasks"]:
        missing = set(config["tasks"]) - set(catalog)
        if missing:
            raise ConfigError(f"unknown task ids: {sorted(missing)}")
        tasks = {tid: catalog[tid] for tid in config["tasks"]}
    if config["families"]:
        tasks = {tid: t for tid, t in tasks.items() if t.family in config["families"]}
    if config["levels"]:
        tasks = {tid: t for tid, t in tasks.items() if t.level in config["levels"]}
    if not tasks:
        raise ConfigError("task filters matched nothing")
    return tasks


def make_llm(config: dict):
    if config["mock_script"]:
        return ScriptedMockClient.from_file(config["mock_script"])
    return HttpChatClient.from_env()


def make_executor(config: dict):
    if config["executor"] == "table":
        if not config["table_path"]:
            raise ConfigError("executor 'table' requires table_path")
        return FakeExecutor.load(config["table_path"])
    if config["executor"] == "subprocess":
        return SubprocessExecutor(config["runner_cmd"] or None)
    raise ConfigError(f"unknown executor: {config['executor']}")


def cmd_gen(args) -> int:
    try:
        catalog = build_catalog()
        manifest = export_benchmark(catalog, args.out)
    except (DomainTooSmall, OSError) as exc:
        print(f"gen failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"wrote {len(manifest['tasks'])} tasks to {args.out}")
    print(f"manifest sha256: {manifest_hash(manifest)}")
    return EXIT_OK


def _apply_overrides(config: dict, args) -> dict:
    if args.mode is not None:
        config["mode"] = args.mode
    if args.seed is not None:
        config["seed"] = args.seed
    if args.islands is not None:
        config["islands"] = args.islands
    if args.iters is not None:
        config["iterations"] = args.iters
    if args.stages is not None:
        config["stages"] = args.stages
    if args.out is not None:
        config["out_dir"] = args.out
    if args.mock is not None:
        config["mock_script"] = args.mock
    if args.tasks:
        config["tasks"] = args.tasks.split(",")
    if args.executor:
        config["executor"] = args.executor
    if args.table:
        config["table_path"] = args.table
    return config


def _run_common(args, autonomous: bool) -> int:
    try:
        config = load_config(args.config)
        config = _apply_overrides(config, args)
        tasks = select_tasks(config)
        llm = make_llm(config)
        executor = make_executor(config)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except LlmUnavailable as exc:
        print(f"llm unavailable: {exc}", file=sys.stderr)
        return EXIT_INFRA

    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(render_config(config))

    econfig = engine_config(config)
    mode = config["mode"]
    try:
        if mode in TTS_VARIANTS and not autonomous:
            report = run_tts_baselines(tasks, config["n_samples"], mode, econfig,
                                       llm, executor)
            records = []
        else:
            if mode not in MODES and not autonomous:
                print(f"unknown mode: {mode}", file=sys.stderr)
                return EXIT_FAILURE
            report, records = run_suite(tasks, econfig,
                                        mode if not autonomous else "dio",
                                        llm, executor,
                                        workers=config["workers"],
                                        autonomous=autonomous)
    except (BackendUnavailable, LlmUnavailable) as exc:
        print(f"infrastructure failure: {exc}", file=sys.stderr)
        return EXIT_INFRA

    for record in records:
        record.save(out_dir / record.task_id)
    write_suite_report(report, out_dir)
    solved = report.get("pass_rate", 0.0)
    print(f"suite complete: mode={report['mode']} pass_rate={solved:.3f} "
          f"-> {out_dir / 'suite_report.json'}")
    return EXIT_OK


def cmd_run(args) -> int:
    return _run_common(args, autonomous=False)


def cmd_autonomous(args) -> int:
    return _run_common(args, autonomous=True)


def cmd_report(args) -> int:
    if not args.run_dirs:
        print("no run directories given", file=sys.stderr)
        return EXIT_FAILURE
    try:
        records = load_run_dirs(args.run_dirs)
        report = merge_report(records)
    except (FileNotFoundError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"report failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    write_suite_report(report, args.out)
    print(f"merged {len(records)} runs -> {Path(args.out) / 'suite_report.json'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iosynth")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate and export the benchmark")
    p_gen.add_argument("--out", default="benchmark")
    p_gen.set_defaults(func=cmd_gen)

    def add_run_flags(p):
        p.add_argument("--config", default=None)
        p.add_argument("--mode", default=None,
                       choices=list(MODES) + list(TTS_VARIANTS))
        p.add_argument("--mock", default=None, help="scripted mock LLM json file")
        p.add_argument("--out", default=None)
        p.add_argument("--tasks", default=None, help="comma-separated task ids")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--islands", type=int, default=None)
        p.add_argument("--iters", type=int, default=None)
        p.add_argument("--stages", type=int, default=None)
        p.add_argument("--executor", default=None, choices=["subprocess", "table"])
        p.add_argument("--table", default=None, help="fake-executor table file")

    p_run = sub.add_parser("run", help="run a search suite")
    add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_auto = sub.add_parser("autonomous", help="active-exploration mode")
    add_run_flags(p_auto)
    p_auto.set_defaults(func=cmd_autonomous)

    p_rep = sub.add_parser("report", help="merge run directories into one report")
    p_rep.add_argument("run_dirs", nargs="*")
    p_rep.add_argument("--out", default="report")
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
