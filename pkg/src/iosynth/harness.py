"""Suites, ablations, sampling baselines, and run diagnostics.

Aggregates per-task run records into a suite report: level pass rates (strict
all-pass), mean sample pass ratio, token cost per call, stage-checkpoint curves
with improved/regressed accounting, complexity-trajectory classification, and
the overfitting table (curriculum-perfect but held-out-failed, code length,
copy frequency, incorrect early stops).
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .catalog import Task
from .engine import EngineConfig, run_autonomous, run_task
from .execgate import ExecJob
from .llm import ChatRequest
from .prompts import FullRewrite, ParseFailure, parse_response, render_direct_prompt
from .records import RunRecord
from .scoring import _ws_normalize, fitness, heldout_eval
from .values import serialize

MODES = ("dio", "ablate-ce", "ablate-tpp", "ablate-ef", "flat")
TTS_VARIANTS = ("direct", "bon", "sc")
FLAT_CHECKPOINT_ITERS = (3, 6, 12, 20)

TRAJECTORY_LABELS = ("Stable", "MonotoneDown", "Hump", "MonotoneUp", "Valley", "Mixed")
DEFAULT_EPS_FRAC = 0.1
MIN_COPY_LITERAL = 3


class InvalidSequence(ValueError):
    pass


def apply_mode(config: EngineConfig, mode: str) -> EngineConfig:
    if mode == "dio":
        return config
    if mode == "ablate-ce":
        return replace(config, stages=1)
    if mode == "ablate-tpp":
        return replace(config, include_tpp=False)
    if mode == "ablate-ef":
        return replace(config, include_artifacts=False)
    if mode == "flat":
        return replace(config, stages=1, include_tpp=False, include_artifacts=False,
                       checkpoint_iters=FLAT_CHECKPOINT_ITERS)
    raise ValueError(f"unknown mode: {mode}")


def classify_trajectory(lengths, eps_frac: float = DEFAULT_EPS_FRAC) -> str:
    """Label a per-stage best-program length sequence."""
    if len(lengths) < 2:
        raise InvalidSequence("need at least two checkpoints")
    eps = eps_frac * (sum(lengths) / len(lengths))
    if max(lengths) - min(lengths) <= eps:
        return "Stable"
    diffs = [b - a for a, b in zip(lengths, lengths[1:])]
    if all(d <= 0 for d in diffs):
        return "MonotoneDown"
    if all(d >= 0 for d in diffs):
        return "MonotoneUp"
    signs = [1 if d > 0 else -1 for d in diffs if d != 0]
    flips = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    if flips == 1:
        return "Hump" if signs[0] > 0 else "Valley"
    return "Mixed"


def copy_frequency(source: str, literal_pairs) -> float:
    """Fraction of visible examples whose input or output literal is embedded
    in the final program (same rule as the memorization penalty)."""
    if not literal_pairs:
        return 0.0
    norm_src = _ws_normalize(source)
    hits = 0
    for pair in literal_pairs:
        for lit in pair:
            lit = _ws_normalize(lit)
            if len(lit) >= MIN_COPY_LITERAL and lit in norm_src:
                hits += 1
                break
    return hits / len(literal_pairs)


def _is_overfit(record: RunRecord) -> bool:
    return record.final_visible_accuracy == 1.0 and record.hidden_accuracy < 1.0


def overfit_diagnostics(records: list[RunRecord]) -> list[dict]:
    """Per-family overfitting table plus an 'all' summary row."""
    rows = []
    families = sorted({r.family for r in records})
    for family in families + ["all"]:
        group = [r for r in records if family == "all" or r.family == family]
        solved = [r for r in group if r.solved]
        failed = [r for r in group if not r.solved]
        rows.append({
            "family": family,
            "runs": len(group),
            "solved": len(solved),
            "overfit": sum(1 for r in group if _is_overfit(r)),
            "early_stop_incorrect": sum(
                1 for r in group if r.early_exit and r.hidden_accuracy < 1.0
            ),
            "mean_len_solved": (sum(len(r.final_source) for r in solved) / len(solved))
            if solved else 0.0,
            "mean_len_failed": (sum(len(r.final_source) for r in failed) / len(failed))
            if failed else 0.0,
            "copy_frequency": (
                sum(copy_frequency(r.final_source, r.visible_literals) for r in group)
                / len(group)
            ) if group else 0.0,
        })
    return rows


def _checkpoint_ratio_table(records: list[RunRecord], tasks: dict[str, Task],
                            executor, timeout_ms: int) -> dict[str, list[float]]:
    """Post-hoc hidden-set sample ratios of each record's checkpoint snapshots.

    These are diagnostics computed after search ends; the search itself only
    ever sees one hidden evaluation of the final program.
    """
    table: dict[str, list[float]] = {}
    for record in records:
        task = tasks.get(record.task_id)
        if task is None or not record.checkpoints:
            continue
        ratios = []
        for snap in record.checkpoints:
            report = heldout_eval(snap["source"], task, executor, timeout_ms=timeout_ms)
            ratios.append(report.accuracy)
        table[record.task_id] = ratios
    return table


def _curves_and_changes(table: dict[str, list[float]], labels: list[str]):
    curves, changes = [], []
    if not table:
        return curves, changes
    width = len(labels)
    padded = {}
    for tid, ratios in table.items():
        # a run that stopped early keeps its last best for later checkpoints
        padded[tid] = ratios + [ratios[-1]] * (width - len(ratios)) if ratios else [0.0] * width
    for i, label in enumerate(labels):
        vals = [padded[tid][i] for tid in padded]
        curves.append({"checkpoint": label, "mean_sample_pass_ratio": sum(vals) / len(vals)})
        improved = regressed = unchanged = 0
        for tid in padded:
            prev = padded[tid][i - 1] if i else 0.0
            cur = padded[tid][i]
            if cur > prev:
                improved += 1
            elif cur < prev:
                regressed += 1
            else:
                unchanged += 1
        changes.append({"checkpoint": label, "improved": improved,
                        "regressed": regressed, "unchanged": unchanged})
    return curves, changes


def _aggregate(records: list[RunRecord], mode: str, config: EngineConfig | None,
               curves=None, changes=None, errors=None) -> dict:
    levels = sorted({r.level for r in records})
    per_level = {}
    for level in levels:
        group = [r for r in records if r.level == level]
        per_level[level] = sum(r.solved for r in group) / len(group)
    total_tokens = sum(r.tokens["prompt"] + r.tokens["completion"] for r in records)
    total_calls = sum(r.tokens["calls"] for r in records)
    trajectories = {}
    for r in records:
        lengths = [b["source_len"] for b in r.stage_bests]
        if len(lengths) >= 2:
            trajectories[r.task_id] = classify_trajectory(lengths)
    return {
        "mode": mode,
        "config": config.to_dict() if config else {},
        "tasks": {
            r.task_id: {
                "family": r.family,
                "level": r.level,
                "solved": r.solved,
                "hidden_accuracy": r.hidden_accuracy,
                "visible_accuracy": r.final_visible_accuracy,
                "final_source_len": len(r.final_source),
                "tokens": r.tokens,
            }
            for r in records
        },
        "pass_rate": sum(r.solved for r in records) / len(records) if records else 0.0,
        "per_level_pass_rate": per_level,
        "mean_sample_pass_ratio": (
            sum(r.hidden_accuracy for r in records) / len(records) if records else 0.0
        ),
        "token_per_iter": total_tokens / total_calls if total_calls else 0.0,
        "checkpoint_curves": curves or [],
        "checkpoint_changes": changes or [],
        "trajectories": trajectories,
        "trajectory_counts": {
            label: sum(1 for v in trajectories.values() if v == label)
            for label in TRAJECTORY_LABELS
        },
        "overfit_table": overfit_diagnostics(records),
        "errors": errors or {},
    }


def run_suite(tasks: dict[str, Task], config: EngineConfig, mode: str, llm, executor,
              workers: int = 1, autonomous: bool = False) -> tuple[dict, list[RunRecord]]:
    """Run every task under a mode and aggregate the suite metrics."""
    config = apply_mode(config, mode)
    ordered = [tasks[tid] for tid in sorted(tasks)]
    records: list[RunRecord] = []
    errors: dict[str, str] = {}

    def one(task: Task) -> RunRecord:
        if autonomous:
            return run_autonomous(task, config, llm, executor)
        return run_task(task, config, llm, executor, mode=mode)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {task.id: pool.submit(one, task) for task in ordered}
        for tid, fut in futures.items():
            try:
                records.append(fut.result())
            except Exception as exc:  # per-task failure; suite continues
                errors[tid] = f"{type(exc).__name__}: {exc}"
    else:
        for task in ordered:
            try:
                records.append(one(task))
            except Exception as exc:
                errors[task.id] = f"{type(exc).__name__}: {exc}"

    labels = []
    for r in records:
        for snap in r.checkpoints:
            if snap["label"] not in labels:
                labels.append(snap["label"])
    ratio_table = _checkpoint_ratio_table(records, tasks, executor, config.timeout_ms)
    curves, changes = _curves_and_changes(ratio_table, labels)
    report = _aggregate(records, ("autonomous" if autonomous else mode), config,
                        curves, changes, errors)
    return report, records


# --- test-time-scaling baselines -------------------------------------------------

def _tts_one_task(task: Task, n: int, variant: str, config: EngineConfig, llm,
                  executor) -> dict:
    prompt = render_direct_prompt(task.function_name, task.visible)
    sources = []
    for _ in range(n):
        resp = llm.complete(ChatRequest.user(prompt, temperature=config.temperature,
                                             max_tokens=config.max_tokens),
                            bucket="tts")
        parsed = parse_response(resp.content)
        if isinstance(parsed, FullRewrite):
            sources.append(parsed.source)
        elif isinstance(parsed, ParseFailure):
            sources.append("")  # unrunnable sample scores zero
        else:
            sources.append("")
    fits = [
        fitness(src, task.visible, executor, function_name=task.function_name,
                timeout_ms=config.timeout_ms) if src else 0.0
        for src in sources
    ]
    if variant == "sc":
        winner_idx = _self_consistency_winner(task, sources, fits, executor, config)
    else:  # direct (n=1) and best-of-n share the argmax rule
        winner_idx = max(range(n), key=lambda i: (fits[i], -i))
    winner = sources[winner_idx]
    hidden = heldout_eval(winner, task, executor, timeout_ms=config.timeout_ms)
    return {
        "family": task.family,
        "level": task.level,
        "n_samples": n,
        "winner_index": winner_idx,
        "winner_fitness": fits[winner_idx],
        "sample_fitness": fits,
        "hidden_accuracy": hidden.accuracy,
        "solved": hidden.total > 0 and hidden.accuracy == 1.0,
    }


def _self_consistency_winner(task: Task, sources, fits, executor,
                             config: EngineConfig) -> int:
    """Vote over visible-behavior equivalence classes; largest class wins."""
    signatures = []
    for src in sources:
        if not src:
            signatures.append(("<unparsed>",))
            continue
        job = ExecJob(src, task.function_name,
                      cases=tuple(e.input for e in task.visible),
                      timeout_ms=config.timeout_ms)
        result = executor.execute(job)
        signatures.append(tuple(
            serialize(o.value) if o.status == "ok" else o.status
            for o in result.per_case
        ))
    groups: dict[tuple, list[int]] = {}
    for i, sig in enumerate(signatures):
        groups.setdefault(sig, []).append(i)
    best_group = max(groups.values(),
                     key=lambda idxs: (len(idxs), max(fits[i] for i in idxs),
                                       -min(idxs)))
    return best_group[0]


def run_tts_baselines(tasks: dict[str, Task], n: int, variant: str,
                      config: EngineConfig, llm, executor) -> dict:
    if n < 1:
        raise ValueError("n must be >= 1")
    if variant not in TTS_VARIANTS:
        raise ValueError(f"unknown variant: {variant}")
    if variant == "direct":
        n = 1
    results, errors = {}, {}
    for tid in sorted(tasks):
        try:
            results[tid] = _tts_one_task(tasks[tid], n, variant, config, llm, executor)
        except Exception as exc:
            errors[tid] = f"{type(exc).__name__}: {exc}"
    levels = sorted({r["level"] for r in results.values()})
    return {
        "mode": variant,
        "n": n,
        "tasks": results,
        "pass_rate": (sum(r["solved"] for r in results.values()) / len(results))
        if results else 0.0,
        "per_level_pass_rate": {
            level: (lambda grp: sum(r["solved"] for r in grp) / len(grp))(
                [r for r in results.values() if r["level"] == level]
            )
            for level in levels
        },
        "mean_sample_pass_ratio": (
            sum(r["hidden_accuracy"] for r in results.values()) / len(results)
        ) if results else 0.0,
        "errors": errors,
    }


# --- report merging and export ----------------------------------------------------

def load_run_dirs(run_dirs: list[str | Path]) -> list[RunRecord]:
    records = []
    for d in run_dirs:
        d = Path(d)
        if not (d / "report.json").is_file():
            raise FileNotFoundError(f"not a run directory: {d}")
        records.append(RunRecord.load(d))
    return records


def merge_report(records: list[RunRecord]) -> dict:
    """Aggregate previously saved run records (no re-execution; no curves)."""
    if not records:
        raise ValueError("no records to merge")
    mode = records[0].mode
    return _aggregate(records, mode, None)


def write_suite_report(report: dict, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "suite_report.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=1) + "\n")
    if "trajectory_counts" in report:
        _write_csv(out / "trajectory_table.csv",
                   ["label", "runs"],
                   [[label, count] for label, count in report["trajectory_counts"].items()])
    if "overfit_table" in report:
        _write_csv(out / "overfit_table.csv",
                   ["family", "runs", "solved", "overfit", "early_stop_incorrect",
                    "mean_len_solved", "mean_len_failed", "copy_frequency"],
                   [[row["family"], row["runs"], row["solved"], row["overfit"],
                     row["early_stop_incorrect"], row["mean_len_solved"],
                     row["mean_len_failed"], row["copy_frequency"]]
                    for row in report["overfit_table"]])
    return path


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
