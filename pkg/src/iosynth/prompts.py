"""Mutation prompt construction and SEARCH/REPLACE diff handling.

Prompts are rendered deterministically from a versioned template asset whose
hash is recorded in every run record.  The transformation ladder is presented
verbatim and in a fixed order; phase guidance follows the classic
red/green/refactor split keyed on the parent's current-slice accuracy.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from string import Template

from .curriculum import StageSlice
from .scoring import FailureArtifact, StageScore
from .values import literal_form

PHASE_RED = "red"
PHASE_GREEN = "green"
PHASE_REFACTOR = "refactor"

MAX_FEEDBACK_BUNDLES = 3   # the candidate itself plus up to two ancestors
MAX_BUNDLE_ARTIFACTS = 3

TRANSFORMATION_LADDER = (
    "nil->constant",
    "constant->scalar",
    "statement->statements",
    "unconditional->if",
    "scalar->array",
    "if->while",
    "expression->function",
)

_PHASE_GUIDANCE = {
    PHASE_RED: ("Most in-scope examples still fail. Make the smallest edit that turns "
                "at least one failing example green; stay as low on the ladder as possible."),
    PHASE_GREEN: ("Part of the behavior is captured. You may add branches, collections, "
                  "or loops, but only where a simpler construct cannot explain the examples."),
    PHASE_REFACTOR: ("Every in-scope example passes. Simplify the program: remove "
                     "unnecessary structure and any case-specific logic without changing "
                     "behavior."),
}

ANTI_HARDCODE_TEXT = (
    "Hard rules: never compare the input against literal example values, never embed "
    "a lookup table of the examples, and never add logic tied to one specific example. "
    "The function must implement a general rule that extends beyond the examples shown."
)

_TEMPLATE_TEXT = resources.files("iosynth.assets").joinpath("mutation_prompt.txt").read_text()
PROMPT_TEMPLATE_HASH = hashlib.sha256(_TEMPLATE_TEXT.encode()).hexdigest()
_TEMPLATE = Template(_TEMPLATE_TEXT)


@dataclass(frozen=True)
class PromptContext:
    function_name: str
    slice: StageSlice
    stage_count: int
    parent_source: str
    parent_score: StageScore
    best_sources: tuple[str, ...]
    inspiration_source: str
    feedback_chain: tuple[tuple[FailureArtifact, ...], ...] = ()
    feedback_scores: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if len(self.feedback_chain) > MAX_FEEDBACK_BUNDLES:
            raise ValueError("feedback chain too deep")
        if any(len(b) > MAX_BUNDLE_ARTIFACTS for b in self.feedback_chain):
            raise ValueError("feedback bundle too large")


def select_phase(parent_score: StageScore) -> str:
    acc = parent_score.acc_curr
    if acc < 0.5:
        return PHASE_RED
    if acc < 1.0:
        return PHASE_GREEN
    return PHASE_REFACTOR


def _examples_block(slice_: StageSlice, function_name: str) -> str:
    delta_keys = {id(e) for e in slice_.delta}
    delta_serialized = {literal_form(e.input) + "|" + literal_form(e.output)
                        for e in slice_.delta}
    lines = []
    for e in slice_.current:
        marker = ""
        key = literal_form(e.input) + "|" + literal_form(e.output)
        if id(e) in delta_keys or key in delta_serialized:
            marker = "   [NEW]"
        lines.append(f"{function_name}({literal_form(e.input)}) = {literal_form(e.output)}{marker}")
    return "\n".join(lines)


def _best_block(best_sources: tuple[str, ...]) -> str:
    parts = []
    for i, src in enumerate(best_sources, 1):
        parts.append(f"Best #{i}:\n```python\n{src.rstrip()}\n```")
    return "\n".join(parts)


def _feedback_block(ctx: PromptContext, include_artifacts: bool) -> str:
    if not include_artifacts:
        lines = []
        for i, (cur_acc, rep_acc) in enumerate(ctx.feedback_scores):
            who = "current program" if i == 0 else f"ancestor {i}"
            lines.append(f"{who}: slice accuracy {cur_acc:.3f}, replay accuracy {rep_acc:.3f}")
        return "\n".join(lines) if lines else "(no feedback available)"
    if not ctx.feedback_chain or all(not b for b in ctx.feedback_chain):
        return "(no failures recorded)"
    lines = []
    for i, bundle in enumerate(ctx.feedback_chain):
        if not bundle:
            continue
        who = "Current program failures" if i == 0 else f"Inherited from ancestor {i}"
        lines.append(f"{who}:")
        for artifact in bundle:
            origin = " (replay regression)" if artifact.origin == "replay" else ""
            lines.append(f"- {artifact.render()}{origin}")
    return "\n".join(lines)


def _guidance_block(phase: str, include_tpp: bool) -> str:
    # the anti-hardcoding rules survive the transformation-ladder ablation
    parts = []
    if include_tpp:
        ladder = "\n".join(f"{i}. {t}" for i, t in enumerate(TRANSFORMATION_LADDER, 1))
        parts.append(
            "## Transformation ladder\n"
            "Prefer the earliest transformation that can explain the evidence, "
            "in this exact order:\n"
            f"{ladder}\n"
            f"{_PHASE_GUIDANCE[phase]}\n"
        )
    parts.append(f"## Hard rules\n{ANTI_HARDCODE_TEXT}\n")
    return "\n".join(parts)


def render_prompt(ctx: PromptContext, include_tpp: bool = True,
                  include_artifacts: bool = True) -> str:
    phase = select_phase(ctx.parent_score)
    return _TEMPLATE.substitute(
        function_name=ctx.function_name,
        stage_index=ctx.slice.index,
        stage_count=ctx.stage_count,
        examples_block=_examples_block(ctx.slice, ctx.function_name),
        parent_source=ctx.parent_source.rstrip(),
        best_block=_best_block(ctx.best_sources),
        inspiration_source=ctx.inspiration_source.rstrip(),
        feedback_block=_feedback_block(ctx, include_artifacts),
        guidance_block=_guidance_block(phase, include_tpp),
    )


# --- diff parsing and application ----------------------------------------------

@dataclass(frozen=True)
class DiffBlock:
    search: str
    replace: str


@dataclass(frozen=True)
class FullRewrite:
    source: str


@dataclass(frozen=True)
class ParseFailure:
    reason: str


_FENCE_RE = re.compile(r"```[a-zA-Z0-9_+-]*\n(.*?)```", re.DOTALL)

SEARCH_MARK = "<<<<<<< SEARCH"
DIVIDER_MARK = "======="
REPLACE_MARK = ">>>>>>> REPLACE"


def parse_response(text: str):
    """Extract SEARCH/REPLACE blocks; fall back to a lone fenced program."""
    blocks = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        if lines[i].strip() != SEARCH_MARK:
            i += 1
            continue
        search_lines, replace_lines = [], []
        j = i + 1
        while j < len(lines) and lines[j].strip() != DIVIDER_MARK:
            search_lines.append(lines[j])
            j += 1
        if j == len(lines):
            break
        j += 1
        while j < len(lines) and lines[j].strip() != REPLACE_MARK:
            replace_lines.append(lines[j])
            j += 1
        if j == len(lines):
            break
        search = "\n".join(search_lines)
        replace = "\n".join(replace_lines)
        if search and search != replace:
            blocks.append(DiffBlock(search, replace))
        i = j + 1
    if blocks:
        return blocks
    fences = _FENCE_RE.findall(text)
    if len(fences) == 1 and fences[0].strip():
        return FullRewrite(fences[0])
    return ParseFailure("no SEARCH/REPLACE block and no single fenced program")


def render_direct_prompt(function_name: str, examples) -> str:
    """One-shot synthesis prompt used by the sampling baselines."""
    lines = "\n".join(
        f"{function_name}({literal_form(e.input)}) = {literal_form(e.output)}"
        for e in examples
    )
    return (
        "Write a single Python function that reproduces the following input/output "
        "behavior. There is no description; infer the general rule from the examples "
        "and do not hard-code them.\n\n"
        f"{lines}\n\n"
        f"Reply with one fenced code block containing only `def {function_name}(...):`."
    )


# --- autonomous-mode input proposals --------------------------------------------

def render_proposal_prompt(function_name: str, domain_desc: str,
                           known_inputs: list, k: int) -> str:
    known = "\n".join(f"- {literal_form(v)}" for v in known_inputs) or "(none yet)"
    return (
        "You are probing a black-box function to learn its behavior. Propose new "
        f"inputs to query; their outputs will be revealed to you afterwards.\n\n"
        f"Input domain (machine description): {domain_desc}\n"
        f"Inputs already queried:\n{known}\n\n"
        f"Propose exactly {k} NEW inputs, each different from every input above. "
        "Prefer inputs that discriminate between competing hypotheses (boundaries, "
        "repetitions, extremes). Reply with a single JSON array of the inputs and "
        "nothing else, e.g. [3, 17]."
    )


def parse_proposed_inputs(text: str):
    """First JSON array found in the response, or None."""
    fences = _FENCE_RE.findall(text)
    sources = fences + [text]
    for chunk in sources:
        start = chunk.find("[")
        while start != -1:
            depth = 0
            for i in range(start, len(chunk)):
                if chunk[i] == "[":
                    depth += 1
                elif chunk[i] == "]":
                    depth -= 1
                    if depth == 0:
                        try:
                            import json

                            parsed = json.loads(chunk[start : i + 1])
                            if isinstance(parsed, list):
                                return parsed
                        except ValueError:
                            pass
                        break
            start = chunk.find("[", start + 1)
    return None


NO_MATCH = "no_match"
AMBIGUOUS_MATCH = "ambiguous_match"


class DiffApplyError(ValueError):
    def __init__(self, kind: str, block_index: int):
        super().__init__(f"{kind} at block {block_index}")
        self.kind = kind
        self.block_index = block_index


def apply_diffs(source: str, blocks: list[DiffBlock]) -> str:
    """Apply blocks sequentially; each search must occur exactly once."""
    if not blocks:
        raise ValueError("blocks must be nonempty")
    for idx, block in enumerate(blocks):
        n = source.count(block.search)
        if n == 0:
            raise DiffApplyError(NO_MATCH, idx)
        if n > 1:
            raise DiffApplyError(AMBIGUOUS_MATCH, idx)
        source = source.replace(block.search, block.replace, 1)
    return source
