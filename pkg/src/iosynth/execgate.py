"""Execution of candidate guest programs on batches of inputs.

Two interchangeable backends sit behind one job/result contract: a subprocess
backend that speaks newline-delimited JSON to the guest runner (one process
per job, hard-killed on overrun), and a table-driven fake that lets the engine
and its tests run without any runner installed.
"""

from __future__ import annotations

import hashlib
import json
import re
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .values import Value, from_tagged, serialize, to_tagged

DEFAULT_TIMEOUT_MS = 2000
DEFAULT_MEMORY_CAP_MB = 256

OK = "ok"
ERROR = "error"
TIMEOUT = "timeout"


class BackendUnavailable(RuntimeError):
    """The runner process cannot start or violates the wire protocol."""


@dataclass(frozen=True)
class CaseOutcome:
    status: str                  # "ok" | "error" | "timeout"
    value: Value = None
    message: str = ""

    @classmethod
    def ok(cls, value: Value) -> "CaseOutcome":
        return cls(OK, value=value)

    @classmethod
    def guest_error(cls, message: str) -> "CaseOutcome":
        return cls(ERROR, message=message)

    @classmethod
    def timeout(cls) -> "CaseOutcome":
        return cls(TIMEOUT)

    def to_dict(self) -> dict:
        if self.status == OK:
            return {"status": OK, "value": to_tagged(self.value)}
        if self.status == ERROR:
            return {"status": ERROR, "message": self.message}
        return {"status": TIMEOUT}

    @classmethod
    def from_dict(cls, d: dict) -> "CaseOutcome":
        status = d.get("status")
        if status == OK:
            return cls.ok(from_tagged(d["value"]))
        if status == ERROR:
            return cls.guest_error(str(d.get("message", "")))
        if status == TIMEOUT:
            return cls.timeout()
        raise BackendUnavailable(f"malformed case outcome: {d!r}")


@dataclass(frozen=True)
class ExecJob:
    program_source: str
    function_name: str
    cases: tuple
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    memory_cap_mb: int = DEFAULT_MEMORY_CAP_MB

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if not self.cases:
            raise ValueError("cases must be nonempty")


@dataclass(frozen=True)
class ExecResult:
    per_case: tuple[CaseOutcome, ...]
    wall_time_ms: int


_COMMENT_RE = re.compile(r"(?m)#[^\n]*$")


def normalize_source(source: str) -> str:
    """Strip '#' comments and collapse whitespace runs; basis for novelty hashing.

    Comment stripping is lexical and may eat '#' inside string literals; that
    only makes the novelty check slightly stricter, never unsound.
    """
    return " ".join(_COMMENT_RE.sub("", source).split())


def source_fingerprint(source: str) -> str:
    return hashlib.sha256(normalize_source(source).encode()).hexdigest()


def _check_cardinality(job: ExecJob, outcomes: list[CaseOutcome]) -> None:
    if len(outcomes) != len(job.cases):
        raise BackendUnavailable(
            f"backend returned {len(outcomes)} outcomes for {len(job.cases)} cases"
        )


class FakeExecutor:
    """Answers jobs from a (source fingerprint, input) table; no guest code runs."""

    def __init__(self, table: dict[tuple[str, str], CaseOutcome]):
        self.table = dict(table)

    @classmethod
    def from_callables(cls, programs: dict[str, Callable[[Value], Value]],
                       inputs: list[Value]) -> "FakeExecutor":
        """Tabulate outcomes by applying a host-side stand-in for each program."""
        table = {}
        for source, fn in programs.items():
            h = source_fingerprint(source)
            for v in inputs:
                try:
                    table[(h, serialize(v))] = CaseOutcome.ok(fn(v))
                except Exception as exc:  # tabulated guest failure
                    table[(h, serialize(v))] = CaseOutcome.guest_error(
                        f"{type(exc).__name__}: {exc}"
                    )
        return cls(table)

    def execute(self, job: ExecJob) -> ExecResult:
        h = source_fingerprint(job.program_source)
        outcomes = [
            self.table.get((h, serialize(v)), CaseOutcome.guest_error("untabulated"))
            for v in job.cases
        ]
        _check_cardinality(job, outcomes)
        return ExecResult(tuple(outcomes), wall_time_ms=0)

    def save(self, path: str | Path) -> None:
        rows = [
            {"source_sha256": h, "input": json.loads(key), "outcome": out.to_dict()}
            for (h, key), out in sorted(self.table.items())
        ]
        Path(path).write_text(json.dumps({"entries": rows}, sort_keys=True, indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "FakeExecutor":
        data = json.loads(Path(path).read_text())
        table = {}
        for row in data["entries"]:
            key = (row["source_sha256"], json.dumps(row["input"], separators=(",", ":"), sort_keys=True))
            table[key] = CaseOutcome.from_dict(row["outcome"])
        return cls(table)


def default_runner_cmd() -> list[str]:
    return [sys.executable, "-m", "guestrun"]


def _limit_memory(cap_mb: int):
    def apply():
        try:
            import resource

            cap = cap_mb << 20
            resource.setrlimit(resource.RLIMIT_AS, (cap, cap))
        except Exception:
            pass  # best-effort only

    return apply


class SubprocessExecutor:
    """One runner process per job, speaking one JSON request/response pair."""

    def __init__(self, cmd: list[str] | None = None):
        self.cmd = list(cmd) if cmd else default_runner_cmd()

    def execute(self, job: ExecJob) -> ExecResult:
        request = json.dumps({
            "source": job.program_source,
            "fn": job.function_name,
            "cases": [to_tagged(v) for v in job.cases],
            "timeout_ms": job.timeout_ms,
        })
        # generous backstop: the runner enforces the per-case watchdog itself
        deadline_s = (job.timeout_ms * len(job.cases)) / 1000 + 10.0
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                self.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                preexec_fn=_limit_memory(job.memory_cap_mb) if sys.platform != "win32" else None,
            )
        except OSError as exc:
            raise BackendUnavailable(f"cannot start runner {self.cmd}: {exc}") from exc
        try:
            out, _ = proc.communicate(request + "\n", timeout=deadline_s)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
            wall = int((time.monotonic() - start) * 1000)
            return ExecResult(tuple(CaseOutcome.timeout() for _ in job.cases), wall)
        wall = int((time.monotonic() - start) * 1000)
        line = out.strip().splitlines()[-1] if out.strip() else ""
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BackendUnavailable(f"malformed runner response: {line[:200]!r}") from exc
        if "fatal" in payload:
            raise BackendUnavailable(f"runner fatal: {payload['fatal']}")
        outcomes = [CaseOutcome.from_dict(d) for d in payload.get("results", [])]
        _check_cardinality(job, outcomes)
        return ExecResult(tuple(outcomes), wall)
