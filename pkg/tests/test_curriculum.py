import pytest

from iosynth.catalog import Example, build_catalog
from iosynth.curriculum import InvalidStageCount, build_plan, difficulty_key
from iosynth.values import serialize


def ex(i, o):
    return Example(i, o)


class TestDifficultyKey:
    def test_list_pair(self):
        assert difficulty_key(ex([1], [1])) == (4, 4, "[1]")

    def test_scalar_to_empty_list(self):
        # Int 1 is one node at depth 1, [] is one node at depth 2
        assert difficulty_key(ex(1, [])) == (2, 3, "1")

    def test_easy_pair_sorts_first(self):
        easy = ex(1, [])
        hard = ex(30, [2, 3, 5])
        assert difficulty_key(easy) < difficulty_key(hard)
        plan = build_plan([hard, easy], stage_count=1, seed=0)
        assert plan.stages[0].current[0] is easy


class TestBuildPlan:
    @pytest.fixture
    def visible(self):
        return [ex(i, list(range(i % 4))) for i in range(8)]

    def test_slice_sizes_8_over_4(self, visible):
        plan = build_plan(visible, stage_count=4, seed=1)
        assert [len(s.current) for s in plan.stages] == [2, 4, 6, 8]

    def test_single_stage_degenerate(self, visible):
        plan = build_plan(visible, stage_count=1, seed=1)
        assert len(plan.stages) == 1
        assert len(plan.stages[0].current) == 8
        assert plan.stages[0].replay == ()
        assert len(plan.stages[0].delta) == 8

    def test_deterministic(self, visible):
        a = build_plan(visible, stage_count=4, seed=9)
        b = build_plan(visible, stage_count=4, seed=9)
        assert a == b

    def test_nesting(self, visible):
        plan = build_plan(visible, stage_count=4, seed=2)
        for prev, cur in zip(plan.stages, plan.stages[1:]):
            prev_keys = [serialize(e.input) for e in prev.current]
            cur_keys = [serialize(e.input) for e in cur.current]
            assert cur_keys[: len(prev_keys)] == prev_keys
            assert len(cur_keys) > len(prev_keys)

    def test_deltas_partition_visible(self, visible):
        plan = build_plan(visible, stage_count=4, seed=3)
        seen = []
        for s in plan.stages:
            seen.extend(serialize(e.input) for e in s.delta)
        assert sorted(seen) == sorted(serialize(e.input) for e in visible)
        assert len(set(seen)) == len(seen)

    def test_replay_drawn_from_previous_stage(self, visible):
        plan = build_plan(visible, stage_count=4, replay_cap=3, seed=4)
        assert plan.stages[0].replay == ()
        for k, s in enumerate(plan.stages[1:], start=1):
            prev_keys = {serialize(e.input) for e in plan.stages[k - 1].current}
            delta_keys = {serialize(e.input) for e in s.delta}
            assert len(s.replay) == min(3, len(plan.stages[k - 1].current))
            for e in s.replay:
                assert serialize(e.input) in prev_keys
                assert serialize(e.input) not in delta_keys

    def test_sort_is_permutation(self, visible):
        plan = build_plan(visible, stage_count=4, seed=5)
        assert sorted(plan.order) == list(range(8))
        full = plan.stages[-1].current
        assert sorted(serialize(e.input) for e in full) == sorted(
            serialize(e.input) for e in visible
        )

    def test_monotone_difficulty_along_order(self, visible):
        plan = build_plan(visible, stage_count=2, seed=6)
        keys = [difficulty_key(e) for e in plan.stages[-1].current]
        assert keys == sorted(keys)

    def test_invalid_stage_count(self, visible):
        with pytest.raises(InvalidStageCount):
            build_plan(visible, stage_count=0)
        with pytest.raises(InvalidStageCount):
            build_plan(visible, stage_count=9)


class TestCatalogWide:
    def test_all_tasks_stage_properties(self):
        for task in build_catalog().values():
            plan = build_plan(task.visible, stage_count=4, seed=0)
            assert [len(s.current) for s in plan.stages] == [2, 4, 6, 8]
            keys = [difficulty_key(e) for e in plan.stages[-1].current]
            assert keys == sorted(keys)
