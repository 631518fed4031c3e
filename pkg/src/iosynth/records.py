"""Run records: the per-task event log and final report, persisted as a run
directory (candidates/<id>.src, events.jsonl, report.json).

Serialization is canonical (sorted keys, no wall-clock fields) so identical
searches produce byte-identical artifacts regardless of scheduling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class RunRecord:
    task_id: str
    family: str
    level: str
    mode: str
    config: dict
    plan: dict
    events: list = field(default_factory=list)
    stage_bests: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)
    candidates: dict = field(default_factory=dict)   # id -> source
    visible_literals: list = field(default_factory=list)
    solved: bool = False
    hidden_accuracy: float = 0.0
    hidden_eval_count: int = 0
    early_exit: bool = False
    final_source: str = ""
    final_visible_accuracy: float = 0.0
    tokens: dict = field(default_factory=lambda: {"prompt": 0, "completion": 0, "calls": 0})
    prompt_template_hash: str = ""
    example_counts: list = field(default_factory=list)  # autonomous mode only

    def events_jsonl(self) -> str:
        return "".join(canonical_json(e) + "\n" for e in self.events)

    def report_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "family": self.family,
            "level": self.level,
            "mode": self.mode,
            "config": self.config,
            "plan": self.plan,
            "stage_bests": self.stage_bests,
            "checkpoints": self.checkpoints,
            "visible_literals": self.visible_literals,
            "solved": self.solved,
            "hidden_accuracy": self.hidden_accuracy,
            "hidden_eval_count": self.hidden_eval_count,
            "early_exit": self.early_exit,
            "final_source": self.final_source,
            "final_visible_accuracy": self.final_visible_accuracy,
            "tokens": self.tokens,
            "prompt_template_hash": self.prompt_template_hash,
            "example_counts": self.example_counts,
        }

    def save(self, run_dir: str | Path) -> Path:
        root = Path(run_dir)
        (root / "candidates").mkdir(parents=True, exist_ok=True)
        for cid, source in self.candidates.items():
            (root / "candidates" / f"{cid}.src").write_text(source)
        (root / "events.jsonl").write_text(self.events_jsonl())
        (root / "report.json").write_text(
            json.dumps(self.report_dict(), sort_keys=True, indent=1) + "\n"
        )
        return root

    @classmethod
    def load(cls, run_dir: str | Path) -> "RunRecord":
        root = Path(run_dir)
        report = json.loads((root / "report.json").read_text())
        events = [
            json.loads(line)
            for line in (root / "events.jsonl").read_text().splitlines()
            if line.strip()
        ]
        candidates = {}
        cand_dir = root / "candidates"
        if cand_dir.is_dir():
            for f in sorted(cand_dir.glob("*.src")):
                candidates[f.stem] = f.read_text()
        rec = cls(
            task_id=report["task_id"],
            family=report["family"],
            level=report["level"],
            mode=report["mode"],
            config=report["config"],
            plan=report["plan"],
            events=events,
            stage_bests=report["stage_bests"],
            checkpoints=report["checkpoints"],
            candidates=candidates,
            visible_literals=report["visible_literals"],
            solved=report["solved"],
            hidden_accuracy=report["hidden_accuracy"],
            hidden_eval_count=report["hidden_eval_count"],
            early_exit=report["early_exit"],
            final_source=report["final_source"],
            final_visible_accuracy=report["final_visible_accuracy"],
            tokens=report["tokens"],
            prompt_template_hash=report["prompt_template_hash"],
            example_counts=report.get("example_counts", []),
        )
        return rec
