import random

import pytest
from fixtures_progs import LEVEL3_SRC, SEC2_PAIRS

from iosynth.catalog import build_split
from iosynth.curriculum import StageSlice, build_plan
from iosynth.execgate import CaseOutcome
from iosynth.prompts import (
    AMBIGUOUS_MATCH,
    NO_MATCH,
    TRANSFORMATION_LADDER,
    DiffApplyError,
    DiffBlock,
    FullRewrite,
    ParseFailure,
    PromptContext,
    apply_diffs,
    parse_response,
    render_prompt,
    select_phase,
)
from iosynth.scoring import FailureArtifact, StageScore
from iosynth.values import literal_form


def score(acc):
    return StageScore(acc_curr=acc, omega_comp=0.0, omega_hard=0.0)


def make_ctx(slice_, parent_src="def f(n):\n    return []\n", acc=0.0, chain=()):
    return PromptContext(
        function_name="f",
        slice=slice_,
        stage_count=4,
        parent_source=parent_src,
        parent_score=score(acc),
        best_sources=(parent_src, parent_src),
        inspiration_source=parent_src,
        feedback_chain=chain,
        feedback_scores=((acc, 1.0),),
    )


@pytest.fixture
def sec2_slice():
    return StageSlice(index=2, current=tuple(SEC2_PAIRS[:4]),
                      delta=(SEC2_PAIRS[3],), replay=(SEC2_PAIRS[0],))


class TestSelectPhase:
    def test_red_below_half(self):
        assert select_phase(score(0.125)) == "red"

    def test_green_midband(self):
        assert select_phase(score(0.5)) == "green"
        assert select_phase(score(0.75)) == "green"

    def test_refactor_at_one(self):
        assert select_phase(score(1.0)) == "refactor"


class TestRenderPrompt:
    def test_new_marker_on_delta(self):
        pairs = SEC2_PAIRS[:6]
        sl = StageSlice(index=3, current=tuple(pairs),
                        delta=(pairs[5],), replay=())
        text = render_prompt(make_ctx(sl))
        line = [ln for ln in text.splitlines() if "f(8)" in ln][0]
        assert "[NEW]" in line
        line1 = [ln for ln in text.splitlines() if "f(1)" in ln][0]
        assert "[NEW]" not in line1

    def test_deterministic(self, sec2_slice):
        ctx = make_ctx(sec2_slice)
        assert render_prompt(ctx) == render_prompt(ctx)

    def test_ladder_order_verbatim(self, sec2_slice):
        text = render_prompt(make_ctx(sec2_slice))
        positions = [text.index(t) for t in TRANSFORMATION_LADDER]
        assert positions == sorted(positions)

    def test_refactor_phase_has_simplify_not_add(self, sec2_slice):
        text = render_prompt(make_ctx(sec2_slice, acc=1.0))
        assert "Simplify" in text
        assert "may add branches" not in text

    def test_green_phase_allows_structure(self, sec2_slice):
        text = render_prompt(make_ctx(sec2_slice, acc=0.75))
        assert "may add branches" in text

    def test_tpp_ablation_removes_ladder_keeps_hard_rules(self, sec2_slice):
        text = render_prompt(make_ctx(sec2_slice), include_tpp=False)
        for t in TRANSFORMATION_LADDER:
            assert t not in text
        assert "Simplify" not in text and "may add branches" not in text
        assert "lookup table" in text  # anti-hardcoding is not part of the ladder

    def test_anti_hardcoding_present_by_default(self, sec2_slice):
        text = render_prompt(make_ctx(sec2_slice))
        assert "lookup table" in text
        assert "general rule" in text

    def test_feedback_artifacts_rendered(self, sec2_slice):
        artifact = FailureArtifact(
            origin="current", input=4, expected=[2, 2],
            got=CaseOutcome.ok([4]), note="wrong output",
        )
        text = render_prompt(make_ctx(sec2_slice, chain=((artifact,),)))
        assert "input=4" in text and "expected=[2, 2]" in text and "got=[4]" in text

    def test_ef_ablation_scalar_only(self, sec2_slice):
        artifact = FailureArtifact(
            origin="current", input=4, expected=[2, 2],
            got=CaseOutcome.ok([4]), note="wrong output",
        )
        text = render_prompt(make_ctx(sec2_slice, acc=0.25, chain=((artifact,),)),
                             include_artifacts=False)
        assert "expected=" not in text
        assert "accuracy 0.250" in text

    def test_chain_depth_enforced(self, sec2_slice):
        with pytest.raises(ValueError):
            make_ctx(sec2_slice, chain=((), (), (), ()))

    def test_static_hidden_firewall(self):
        # prompt construction has no code path that can touch a task's hidden
        # examples: it never references tasks or hidden fields at all
        import iosynth.prompts as prompts_mod
        from pathlib import Path

        source = Path(prompts_mod.__file__).read_text()
        assert "hidden" not in source
        assert "Task" not in source.replace("StageSlice", "")

    def test_no_hidden_literals_for_catalog_task(self):
        task = build_split("prime_factorization")
        plan = build_plan(task.visible, 4, seed=0)
        hidden_literals = {literal_form(e.input) for e in task.hidden}
        hidden_literals |= {literal_form(e.output) for e in task.hidden
                            if len(literal_form(e.output)) >= 3}
        for sl in plan.stages:
            text = render_prompt(make_ctx(sl))
            for lit in hidden_literals:
                token = f"f({lit})"
                assert token not in text


class TestParseResponse:
    def test_single_block(self):
        text = (
            "Here is the change:\n"
            "<<<<<<< SEARCH\n"
            "    return []\n"
            "=======\n"
            "    return [n]\n"
            ">>>>>>> REPLACE\n"
        )
        blocks = parse_response(text)
        assert blocks == [DiffBlock("    return []", "    return [n]")]

    def test_multiple_blocks(self):
        text = (
            "<<<<<<< SEARCH\na\n=======\nb\n>>>>>>> REPLACE\n"
            "text between\n"
            "<<<<<<< SEARCH\nc\n=======\nd\n>>>>>>> REPLACE\n"
        )
        assert parse_response(text) == [DiffBlock("a", "b"), DiffBlock("c", "d")]

    def test_fenced_fallback(self):
        text = "No diff, full program:\n```python\ndef f(n):\n    return [n]\n```\n"
        out = parse_response(text)
        assert isinstance(out, FullRewrite)
        assert "return [n]" in out.source

    def test_prose_is_parse_failure(self):
        assert isinstance(parse_response("I cannot help with that."), ParseFailure)

    def test_two_fences_is_parse_failure(self):
        text = "```python\na\n```\nand\n```python\nb\n```"
        assert isinstance(parse_response(text), ParseFailure)

    def test_degenerate_block_ignored(self):
        text = "<<<<<<< SEARCH\nsame\n=======\nsame\n>>>>>>> REPLACE\n"
        assert isinstance(parse_response(text), ParseFailure)

    def test_unterminated_block_ignored(self):
        text = "<<<<<<< SEARCH\nfoo\n=======\nbar\n"
        assert isinstance(parse_response(text), ParseFailure)

    def test_multiline_block_content_exact(self):
        text = (
            "<<<<<<< SEARCH\n"
            "    if n % 2 == 0:\n"
            "        factors.append(2)\n"
            "=======\n"
            "    while n % 2 == 0:\n"
            "        factors.append(2)\n"
            ">>>>>>> REPLACE\n"
        )
        [block] = parse_response(text)
        assert block.search == "    if n % 2 == 0:\n        factors.append(2)"


class TestApplyDiffs:
    def test_level3_to_level4_shape(self):
        # the canonical conditional->loop transformation
        out = apply_diffs(LEVEL3_SRC, [DiffBlock("    if n % 2 == 0:", "    while n % 2 == 0:")])
        assert "while n % 2 == 0:" in out
        assert out.count("if") == 1  # only the n > 1 guard remains

    def test_no_match(self):
        with pytest.raises(DiffApplyError) as e:
            apply_diffs("abc", [DiffBlock("zzz", "yyy")])
        assert e.value.kind == NO_MATCH and e.value.block_index == 0

    def test_ambiguous_match(self):
        with pytest.raises(DiffApplyError) as e:
            apply_diffs("x = 1\nx = 1\n", [DiffBlock("x = 1", "x = 2")])
        assert e.value.kind == AMBIGUOUS_MATCH

    def test_sequential_application(self):
        out = apply_diffs("a b c", [DiffBlock("a", "x"), DiffBlock("x b", "y")])
        assert out == "y c"

    def test_error_index_points_at_failing_block(self):
        with pytest.raises(DiffApplyError) as e:
            apply_diffs("a b", [DiffBlock("a", "q"), DiffBlock("a", "r")])
        assert e.value.block_index == 1

    def test_empty_blocks_rejected(self):
        with pytest.raises(ValueError):
            apply_diffs("abc", [])

    def test_round_trip_property(self):
        rng = random.Random(7)
        for trial in range(200):
            n_lines = rng.randrange(3, 12)
            lines = [f"line_{trial}_{i}_{rng.randrange(10**6)}" for i in range(n_lines)]
            source = "\n".join(lines)
            k = rng.randrange(1, min(4, n_lines) + 1)
            picked = random.Random(trial).sample(range(n_lines), k)
            blocks = [
                DiffBlock(lines[i], f"repl_{trial}_{i}_{rng.randrange(10**6)}")
                for i in picked
            ]
            patched = apply_diffs(source, blocks)
            reverse = [DiffBlock(b.replace, b.search) for b in reversed(blocks)]
            assert apply_diffs(patched, reverse) == source
