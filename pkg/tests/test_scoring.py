import random

import pytest
from fixtures_progs import (
    LEVEL4_SRC,
    LEVEL_PROGRAMS,
    SEC2_INPUTS,
    SEC2_PAIRS,
    level4_fn,
    make_lookup_fn,
    make_lookup_source,
)

from iosynth.catalog import build_split
from iosynth.curriculum import StageSlice
from iosynth.execgate import FakeExecutor
from iosynth.scoring import (
    EvalReport,
    StageScore,
    count_lexemes,
    fitness,
    heldout_eval,
    is_solved,
    omega_comp,
    omega_hard,
    stage_score,
)


@pytest.fixture
def sec2_executor():
    return FakeExecutor.from_callables(LEVEL_PROGRAMS, SEC2_INPUTS)


class TestFitness:
    def test_level4_is_perfect(self, sec2_executor):
        assert fitness(LEVEL4_SRC, SEC2_PAIRS, sec2_executor) == 1.0

    def test_constant_program_scores_one_eighth(self, sec2_executor):
        from fixtures_progs import LEVEL1_SRC

        assert fitness(LEVEL1_SRC, SEC2_PAIRS, sec2_executor) == 0.125

    def test_load_failure_scores_zero(self):
        assert fitness("not even python", SEC2_PAIRS, FakeExecutor({})) == 0.0

    def test_engine_fitness_equals_brute_force_loop(self, sec2_executor):
        from iosynth.values import values_equal

        for src, fn in LEVEL_PROGRAMS.items():
            manual = sum(
                values_equal(fn(e.input), e.output, 1e-6) for e in SEC2_PAIRS
            ) / len(SEC2_PAIRS)
            assert fitness(src, SEC2_PAIRS, sec2_executor) == manual

    def test_empty_examples_rejected(self, sec2_executor):
        with pytest.raises(ValueError):
            fitness(LEVEL4_SRC, [], sec2_executor)


class TestOmegaComp:
    def test_empty_source(self):
        assert omega_comp("") == 0.0

    def test_clamped_at_one(self):
        src = " ".join(f"v{i}" for i in range(512))
        assert omega_comp(src) == 1.0
        assert omega_comp(src + " " + src) == 1.0

    def test_level4_lexeme_count(self):
        # hand-lexed: 6+4+3+6+8+6+6+4+2 per line
        assert count_lexemes(LEVEL4_SRC) == 45
        assert omega_comp(LEVEL4_SRC) == 45 / 512

    def test_comments_ignored(self):
        assert count_lexemes("x = 1  # a comment with words") == 3

    def test_hash_inside_string_kept(self):
        assert count_lexemes("s = '#'") == 5  # s, =, quote, #, quote


class TestOmegaHard:
    def test_lookup_table_mostly_embedded(self):
        src = make_lookup_source(SEC2_PAIRS)
        assert omega_hard(src, SEC2_PAIRS) > 0.5

    def test_general_loop_has_no_overlap(self):
        assert omega_hard(LEVEL4_SRC, SEC2_PAIRS) == 0.0

    def test_single_literal_source(self):
        assert omega_hard("[2, 3, 5]", SEC2_PAIRS) == 1 / 8

    def test_short_literals_exempt(self):
        # "[]" and scalar inputs are shorter than 3 characters
        assert omega_hard("return []", [SEC2_PAIRS[0]]) == 0.0

    def test_empty_examples(self):
        assert omega_hard("anything", []) == 0.0

    def test_monotone_in_examples(self):
        src = make_lookup_source(SEC2_PAIRS[:4])
        a = omega_hard(src, SEC2_PAIRS[:4])
        b = omega_hard(src, SEC2_PAIRS[:4] + SEC2_PAIRS[4:])
        assert a * 4 >= b * 8 - 4  # adding examples never adds more hits than examples

    def test_whitespace_normalization(self):
        assert omega_hard("x = [2,  2, 3]", [SEC2_PAIRS[6]]) == 1.0


class TestStageScoreIdentity:
    def test_substitution_examples(self):
        s = StageScore(acc_curr=1.0, omega_comp=0.2, omega_hard=0.0)
        assert s.total == 1.0 - 0.1 * 0.2 - 0.1 * 0.0
        assert abs(s.total - 0.98) < 1e-12
        s2 = StageScore(acc_curr=0.5, omega_comp=1.0, omega_hard=1.0)
        assert abs(s2.total - 0.30) < 1e-12

    def test_randomized_identity_exact(self):
        rng = random.Random(99)
        for _ in range(1000):
            acc, oc, oh = rng.random(), rng.random(), rng.random()
            lc, lh = rng.random(), rng.random()
            s = StageScore(acc, oc, oh, lc, lh)
            assert s.total == acc - lc * oc - lh * oh

    def test_defaults(self):
        s = StageScore(1.0, 0.0, 0.0)
        assert s.lambda_c == 0.1 and s.lambda_h == 0.1

    def test_monotonicity(self):
        base = StageScore(0.5, 0.3, 0.2)
        assert StageScore(0.6, 0.3, 0.2).total > base.total
        assert StageScore(0.5, 0.4, 0.2).total < base.total
        assert StageScore(0.5, 0.3, 0.3).total < base.total


class TestStageScoring:
    def _slice(self, current, replay=(), index=1):
        return StageSlice(index=index, current=tuple(current), delta=tuple(current),
                          replay=tuple(replay))

    def test_empty_replay_report(self, sec2_executor):
        sl = self._slice(SEC2_PAIRS[:4])
        _, _, replay = stage_score(LEVEL4_SRC, sl, sec2_executor)
        assert replay.total == 0 and replay.accuracy == 0.0

    def test_failure_artifacts_capped_and_tagged(self, sec2_executor):
        from fixtures_progs import LEVEL1_SRC

        sl = self._slice(SEC2_PAIRS, replay=SEC2_PAIRS[:2], index=2)
        _, current, replay = stage_score(LEVEL1_SRC, sl, sec2_executor)
        assert len(current.failures) == 3
        assert all(a.origin == "current" for a in current.failures)
        assert all(a.origin == "replay" for a in replay.failures)
        assert all(a.got.status != "ok" or a.got.value != a.expected
                   for a in current.failures)

    def test_score_composes_accuracy_and_penalties(self, sec2_executor):
        sl = self._slice(SEC2_PAIRS)
        score, current, _ = stage_score(LEVEL4_SRC, sl, sec2_executor)
        assert score.acc_curr == current.accuracy == 1.0
        assert score.omega_comp == omega_comp(LEVEL4_SRC)
        assert score.omega_hard == omega_hard(LEVEL4_SRC, SEC2_PAIRS)
        assert score.total == 1.0 - 0.1 * score.omega_comp


@pytest.fixture(scope="module")
def task():
    return build_split("prime_factorization")


class TestHeldout:

    def test_oracle_equivalent_program_solves(self, task):
        inputs = [e.input for e in task.visible + task.hidden]
        executor = FakeExecutor.from_callables({LEVEL4_SRC: level4_fn}, inputs)
        report = heldout_eval(LEVEL4_SRC, task, executor)
        assert report.accuracy == 1.0
        assert is_solved(report)

    def test_lookup_program_fails_hidden(self, task):
        src = make_lookup_source(task.visible)
        fn = make_lookup_fn(task.visible)
        inputs = [e.input for e in task.visible + task.hidden]
        executor = FakeExecutor.from_callables({src: fn}, inputs)
        assert fitness(src, task.visible, executor) == 1.0
        report = heldout_eval(src, task, executor)
        assert report.accuracy < 1.0
        assert not is_solved(report)

    def test_partial_accuracy_arithmetic(self):
        report = EvalReport(correct=12, total=15, accuracy=12 / 15, wall_time_ms=0)
        assert report.accuracy == 0.8
