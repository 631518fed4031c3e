"""Fitness, stage-level selection score, and structured failure artifacts.

The selection total is visible-slice accuracy minus weighted penalties for
program complexity (lexeme count, capped) and for memorization (fraction of
examples whose input or output literal is embedded in the source).  Guest
errors and timeouts score as incorrect; evolution must rank broken candidates.
"""

from __future__ import annotations

from dataclasses import dataclass

from .catalog import Task
from .curriculum import StageSlice
from .execgate import ExecJob, ExecResult
from .values import literal_form, values_equal

FLOAT_TOL = 1e-6
DEFAULT_LAMBDA_C = 0.1
DEFAULT_LAMBDA_H = 0.1
LEXEME_CAP = 512
MIN_LITERAL_LEN = 3
MAX_FAILURE_ARTIFACTS = 3

ORIGIN_CURRENT = "current"
ORIGIN_REPLAY = "replay"


@dataclass(frozen=True)
class StageScore:
    acc_curr: float
    omega_comp: float
    omega_hard: float
    lambda_c: float = DEFAULT_LAMBDA_C
    lambda_h: float = DEFAULT_LAMBDA_H

    @property
    def total(self) -> float:
        return self.acc_curr - self.lambda_c * self.omega_comp - self.lambda_h * self.omega_hard

    def to_dict(self) -> dict:
        return {
            "acc_curr": self.acc_curr,
            "omega_comp": self.omega_comp,
            "omega_hard": self.omega_hard,
            "lambda_c": self.lambda_c,
            "lambda_h": self.lambda_h,
            "total": self.total,
        }


@dataclass(frozen=True)
class FailureArtifact:
    origin: str          # "current" | "replay"
    input: object
    expected: object
    got: object          # CaseOutcome
    note: str

    def render(self) -> str:
        if self.got.status == "ok":
            got = literal_form(self.got.value)
        elif self.got.status == "timeout":
            got = "<timeout>"
        else:
            got = f"<error: {self.got.message}>"
        return (f"input={literal_form(self.input)} "
                f"expected={literal_form(self.expected)} got={got}")


@dataclass(frozen=True)
class EvalReport:
    correct: int
    total: int
    accuracy: float
    wall_time_ms: int
    failures: tuple[FailureArtifact, ...] = ()

    @classmethod
    def empty(cls) -> "EvalReport":
        return cls(correct=0, total=0, accuracy=0.0, wall_time_ms=0)


def _evaluate(source: str, function_name: str, examples, executor, timeout_ms: int,
              origin: str) -> EvalReport:
    if not examples:
        return EvalReport.empty()
    job = ExecJob(source, function_name, cases=tuple(e.input for e in examples),
                  timeout_ms=timeout_ms)
    result: ExecResult = executor.execute(job)
    correct = 0
    failures = []
    for example, outcome in zip(examples, result.per_case):
        if outcome.status == "ok" and values_equal(outcome.value, example.output, FLOAT_TOL):
            correct += 1
            continue
        if len(failures) < MAX_FAILURE_ARTIFACTS:
            note = {"ok": "wrong output", "error": "guest error", "timeout": "timed out"}[outcome.status]
            failures.append(FailureArtifact(origin, example.input, example.output, outcome, note))
    return EvalReport(
        correct=correct,
        total=len(examples),
        accuracy=correct / len(examples),
        wall_time_ms=result.wall_time_ms,
        failures=tuple(failures),
    )


def fitness(source: str, examples, executor, function_name: str = "f",
            timeout_ms: int = 2000) -> float:
    """Fraction of examples reproduced exactly (floats within tolerance)."""
    if not examples:
        raise ValueError("examples must be nonempty")
    return _evaluate(source, function_name, examples, executor, timeout_ms,
                     ORIGIN_CURRENT).accuracy


def _strip_comments(source: str) -> str:
    out = []
    quote = None
    i = 0
    while i < len(source):
        c = source[i]
        if quote:
            out.append(c)
            if c == "\\" and i + 1 < len(source):
                out.append(source[i + 1])
                i += 2
                continue
            if c == quote:
                quote = None
        elif c in ("'", '"'):
            quote = c
            out.append(c)
        elif c == "#":
            while i < len(source) and source[i] != "\n":
                i += 1
            continue
        else:
            out.append(c)
        i += 1
    return "".join(out)


def count_lexemes(source: str) -> int:
    """Maximal identifier/number runs count as one lexeme, every other
    non-space character as one."""
    text = _strip_comments(source)
    count = 0
    in_word = False
    for c in text:
        if c.isalnum() or c == "_":
            if not in_word:
                count += 1
                in_word = True
        else:
            in_word = False
            if not c.isspace():
                count += 1
    return count


def omega_comp(source: str) -> float:
    return min(1.0, count_lexemes(source) / LEXEME_CAP)


def _ws_normalize(text: str) -> str:
    return " ".join(text.split())


def omega_hard(source: str, examples) -> float:
    """Fraction of examples whose input or output literal (>= 3 chars,
    whitespace-normalized) occurs verbatim in the source."""
    if not examples:
        return 0.0
    norm_src = _ws_normalize(source)
    hits = 0
    for e in examples:
        for lit in (literal_form(e.input), literal_form(e.output)):
            lit = _ws_normalize(lit)
            if len(lit) >= MIN_LITERAL_LEN and lit in norm_src:
                hits += 1
                break
    return hits / len(examples)


def stage_score(source: str, slice_: StageSlice, executor, lambda_c: float = DEFAULT_LAMBDA_C,
                lambda_h: float = DEFAULT_LAMBDA_H, function_name: str = "f",
                timeout_ms: int = 2000) -> tuple[StageScore, EvalReport, EvalReport]:
    """Score a candidate on a curriculum slice.

    Replay accuracy never enters the total; the replay report exists to feed
    regression evidence back into mutation prompts.
    """
    current = _evaluate(source, function_name, slice_.current, executor, timeout_ms,
                        ORIGIN_CURRENT)
    replay = _evaluate(source, function_name, slice_.replay, executor, timeout_ms,
                       ORIGIN_REPLAY)
    score = StageScore(
        acc_curr=current.accuracy,
        omega_comp=omega_comp(source),
        omega_hard=omega_hard(source, slice_.current),
        lambda_c=lambda_c,
        lambda_h=lambda_h,
    )
    return score, current, replay


def heldout_eval(source: str, task: Task, executor, timeout_ms: int = 2000) -> EvalReport:
    """Single final evaluation over the hidden set; never reachable from prompts."""
    return _evaluate(source, task.function_name, task.hidden, executor, timeout_ms,
                     ORIGIN_CURRENT)


def is_solved(report: EvalReport) -> bool:
    return report.total > 0 and report.accuracy == 1.0
