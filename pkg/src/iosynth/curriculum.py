"""Easy-to-hard ordering of visible examples and nested stage slices.

Examples are stable-sorted by a structural difficulty key; stage s exposes the
first ceil(n*s/S) of them.  Each stage also carries the newly revealed delta
and a seeded replay sample drawn from the previous stage's slice.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .catalog import Example
from .domains import sample_without_replacement
from .values import literal_form, size_and_depth

DEFAULT_STAGES = 4
DEFAULT_REPLAY_CAP = 4


class InvalidStageCount(ValueError):
    pass


@dataclass(frozen=True)
class StageSlice:
    index: int
    current: tuple[Example, ...]
    delta: tuple[Example, ...]
    replay: tuple[Example, ...]


@dataclass(frozen=True)
class CurriculumPlan:
    stages: tuple[StageSlice, ...]
    order: tuple[int, ...]        # permutation of the original visible indices
    replay_indices: tuple[tuple[int, ...], ...]  # positions in the sorted order
    seed: int

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    def to_dict(self) -> dict:
        return {
            "order": list(self.order),
            "slice_sizes": [len(s.current) for s in self.stages],
            "replay_indices": [list(r) for r in self.replay_indices],
            "seed": self.seed,
        }


def difficulty_key(e: Example) -> tuple[int, int, str]:
    """Total structural size, total depth, then the input literal as tiebreak."""
    in_size, in_depth = size_and_depth(e.input)
    out_size, out_depth = size_and_depth(e.output)
    return (in_size + out_size, in_depth + out_depth, literal_form(e.input))


def build_plan(visible: list[Example] | tuple[Example, ...], stage_count: int = DEFAULT_STAGES,
               replay_cap: int = DEFAULT_REPLAY_CAP, seed: int = 0) -> CurriculumPlan:
    n = len(visible)
    if not 1 <= stage_count <= n:
        raise InvalidStageCount(f"stage count {stage_count} not in [1, {n}]")

    order = sorted(range(n), key=lambda i: difficulty_key(visible[i]))
    ranked = [visible[i] for i in order]

    rng = random.Random(f"curriculum/{seed}")
    stages: list[StageSlice] = []
    replay_indices: list[tuple[int, ...]] = []
    prev_size = 0
    for s in range(1, stage_count + 1):
        size = math.ceil(n * s / stage_count)
        current = tuple(ranked[:size])
        delta = tuple(ranked[prev_size:size])
        if prev_size:
            picks = sample_without_replacement(rng, list(range(prev_size)),
                                               min(replay_cap, prev_size))
        else:
            picks = []
        stages.append(StageSlice(
            index=s,
            current=current,
            delta=delta,
            replay=tuple(ranked[i] for i in picks),
        ))
        replay_indices.append(tuple(picks))
        prev_size = size

    return CurriculumPlan(tuple(stages), tuple(order), tuple(replay_indices), seed)
