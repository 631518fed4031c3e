"""Island-based evolutionary search across curriculum stages.

Each iteration performs one mutation per island: sample a parent, assemble a
prompt context, ask the LLM for a SEARCH/REPLACE diff, execute and score the
child, and insert it back if novel and competitive.  Stage hand-off reseeds
every island with the previous stage's best program; periodic migration moves
island bests around a fixed ring.  Per-island RNG streams are derived from the
run seed, so serial and parallel schedules produce identical records.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .catalog import Example, Task
from .curriculum import StageSlice, build_plan
from .domains import coerce_to_shape
from .execgate import source_fingerprint
from .llm import ChatRequest, LlmUnavailable, MalformedResponse
from .oracles import get_spec
from .prompts import (
    PROMPT_TEMPLATE_HASH,
    DiffApplyError,
    FullRewrite,
    ParseFailure,
    PromptContext,
    apply_diffs,
    parse_response,
    render_proposal_prompt,
    parse_proposed_inputs,
    render_prompt,
)
from .records import RunRecord
from .scoring import EvalReport, StageScore, heldout_eval, stage_score
from .values import serialize

POPULATION_CAP = 16

INSERTED = "inserted"
DUPLICATE_REJECTED = "duplicate"
OUTCOMPETED_REJECTED = "outcompeted"

AUTONOMOUS_INITIAL_EXAMPLES = 2
AUTONOMOUS_GROWTH = 2
PROPOSAL_RETRIES = 3


@dataclass(frozen=True)
class EngineConfig:
    islands: int = 3
    total_iterations: int = 20
    stages: int = 4
    migration_period: int = 5
    sampling_mix: tuple[float, float, float] = (0.2, 0.4, 0.4)
    lambda_c: float = 0.1
    lambda_h: float = 0.1
    timeout_ms: int = 2000
    seed: int = 0
    population_cap: int = POPULATION_CAP
    replay_cap: int = 4
    temperature: float = 0.8
    max_tokens: int = 2048
    include_tpp: bool = True
    include_artifacts: bool = True
    parallel: bool = False
    checkpoint_iters: tuple[int, ...] = ()
    autonomous_max_iterations: int = 50
    autonomous_streak: int = 5

    def __post_init__(self):
        p = self.sampling_mix
        if len(p) != 3 or any(x < 0 for x in p) or abs(sum(p) - 1.0) > 1e-9:
            raise ValueError(f"sampling_mix must be 3 nonnegative probs summing to 1: {p}")
        if self.total_iterations < self.stages:
            raise ValueError("total_iterations must be >= stages")
        if self.islands < 1:
            raise ValueError("need at least one island")

    def to_dict(self) -> dict:
        return {
            "islands": self.islands,
            "total_iterations": self.total_iterations,
            "stages": self.stages,
            "migration_period": self.migration_period,
            "sampling_mix": list(self.sampling_mix),
            "lambda_c": self.lambda_c,
            "lambda_h": self.lambda_h,
            "timeout_ms": self.timeout_ms,
            "seed": self.seed,
            "population_cap": self.population_cap,
            "replay_cap": self.replay_cap,
            "temperature": self.temperature,
            "include_tpp": self.include_tpp,
            "include_artifacts": self.include_artifacts,
            "checkpoint_iters": list(self.checkpoint_iters),
        }


@dataclass
class Candidate:
    id: str
    source: str
    source_hash: str
    island: int
    stage: int
    parent_id: str | None
    score: StageScore
    current_report: EvalReport
    replay_report: EvalReport
    created_iter: int


@dataclass
class Island:
    index: int
    rng: random.Random
    population: list[Candidate] = field(default_factory=list)


def _best_key(c: Candidate, position: int) -> tuple:
    # ties: higher total, then shorter source, then earlier creation, then position
    return (-c.score.total, len(c.source), c.created_iter, position)


def best_of(population: list[Candidate]) -> Candidate:
    indexed = list(enumerate(population))
    return min(indexed, key=lambda pair: _best_key(pair[1], pair[0]))[1]


def sample_parent(island: Island, mix: tuple[float, float, float],
                  rng: random.Random) -> Candidate:
    """Mixture of uniform exploration, best-exploitation and softmax weighting."""
    population = island.population
    if not population:
        raise ValueError("island population is empty")
    p_random, p_best, _ = mix
    r = rng.random()
    if r < p_random:
        return population[rng.randrange(len(population))]
    if r < p_random + p_best:
        return best_of(population)
    totals = [c.score.total for c in population]
    peak = max(totals)
    weights = [math.exp(t - peak) for t in totals]
    target = rng.random() * sum(weights)
    acc = 0.0
    for c, w in zip(population, weights):
        acc += w
        if target <= acc:
            return c
    return population[-1]


def build_context_members(parent: Candidate, island: Island,
                          rng: random.Random) -> tuple[list[Candidate], Candidate]:
    """Two best island members (excluding the parent when possible) plus one
    uniformly sampled inspiration; degenerate populations reuse members."""
    population = island.population
    ranked = [c for _, c in sorted(enumerate(population),
                                   key=lambda pair: _best_key(pair[1], pair[0]))]
    others = [c for c in ranked if c.id != parent.id]
    best_two = others[:2]
    while len(best_two) < 2:
        best_two.append(ranked[min(len(best_two), len(ranked) - 1)])
    chosen = {parent.id} | {c.id for c in best_two}
    pool = [c for c in population if c.id not in chosen]
    if pool:
        inspiration = pool[rng.randrange(len(pool))]
    else:
        inspiration = population[rng.randrange(len(population))]
    return best_two, inspiration


def insert_child(island: Island, child: Candidate,
                 cap: int = POPULATION_CAP) -> str:
    """Novelty by source hash; at capacity the child must beat the worst member."""
    if any(c.source_hash == child.source_hash for c in island.population):
        return DUPLICATE_REJECTED
    if len(island.population) < cap:
        island.population.append(child)
        return INSERTED
    worst_idx = min(range(len(island.population)),
                    key=lambda i: (island.population[i].score.total, -i))
    if child.score.total > island.population[worst_idx].score.total:
        island.population.pop(worst_idx)
        island.population.append(child)
        return INSERTED
    return OUTCOMPETED_REJECTED


def migrate(islands: list[Island], iteration: int, cap: int) -> list[dict]:
    """Offer each island's best to the next island in a fixed ring."""
    if len(islands) < 2:
        return []
    bests = [best_of(isl.population) for isl in islands]
    moves = []
    for i, src in enumerate(bests):
        dst = islands[(i + 1) % len(islands)]
        clone = replace(
            src,
            id=f"mig{iteration}-{i}to{dst.index}",
            island=dst.index,
            parent_id=src.id,
            created_iter=iteration,
        )
        outcome = insert_child(dst, clone, cap)
        moves.append({"from": i, "to": dst.index, "source_id": src.id,
                      "clone_id": clone.id, "outcome": outcome})
    return moves


def initial_program(task: Task) -> str:
    names = ["x"] if task.arity == 1 else list("abcd")[: task.arity]
    return f"def {task.function_name}({', '.join(names)}):\n    pass\n"


def _artifact_bundle(c: Candidate) -> tuple:
    merged = tuple(c.current_report.failures) + tuple(c.replay_report.failures)
    return merged[:3]


def _feedback_chain(parent: Candidate, lineage: dict[str, Candidate]):
    bundles, scores = [], []
    node: Candidate | None = parent
    for _ in range(3):  # the parent plus up to two ancestors
        if node is None:
            break
        bundles.append(_artifact_bundle(node))
        scores.append((node.current_report.accuracy, node.replay_report.accuracy))
        node = lineage.get(node.parent_id) if node.parent_id else None
    return tuple(bundles), tuple(scores)


@dataclass
class StageOutcome:
    best: Candidate
    events: list[dict]
    all_candidates: dict[str, str]
    snapshots: list[dict]
    early_exit: bool
    iterations_used: int


def _evaluate_child(source: str, slice_: StageSlice, config: EngineConfig,
                    executor, function_name: str):
    return stage_score(source, slice_, executor, config.lambda_c, config.lambda_h,
                       function_name=function_name, timeout_ms=config.timeout_ms)


def run_stage(task: Task, slice_: StageSlice, seed_program: str, config: EngineConfig,
              llm, executor, budget: int, *, iter_offset: int = 0, is_final: bool = False,
              stage_count: int | None = None) -> StageOutcome:
    """Evolve one curriculum stage; returns the global best candidate."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    stage = slice_.index
    stage_count = stage_count or config.stages
    fn = task.function_name

    seed_score, seed_cur, seed_rep = _evaluate_child(seed_program, slice_, config,
                                                     executor, fn)
    islands = []
    lineage: dict[str, Candidate] = {}
    all_candidates: dict[str, str] = {}
    seed_hash = source_fingerprint(seed_program)
    for i in range(config.islands):
        cand = Candidate(
            id=f"s{stage}i{i}seed",
            source=seed_program,
            source_hash=seed_hash,
            island=i,
            stage=stage,
            parent_id=None,
            score=seed_score,
            current_report=seed_cur,
            replay_report=seed_rep,
            created_iter=iter_offset,
        )
        rng = random.Random(f"{config.seed}/stage{stage}/island{i}")
        islands.append(Island(index=i, rng=rng, population=[cand]))
        lineage[cand.id] = cand
        all_candidates[cand.id] = seed_program

    events: list[dict] = []
    snapshots: list[dict] = []
    early = False
    child_counter = [0] * config.islands
    iterations_used = 0

    for local_iter in range(1, budget + 1):
        global_iter = iter_offset + local_iter
        iterations_used = local_iter

        # phase 1 (serial, deterministic order): prompt, LLM, diff application
        pending = []
        for isl in islands:
            parent = sample_parent(isl, config.sampling_mix, isl.rng)
            best_two, inspiration = build_context_members(parent, isl, isl.rng)
            chain, chain_scores = _feedback_chain(parent, lineage)
            ctx = PromptContext(
                function_name=fn,
                slice=slice_,
                stage_count=stage_count,
                parent_source=parent.source,
                parent_score=parent.score,
                best_sources=tuple(c.source for c in best_two),
                inspiration_source=inspiration.source,
                feedback_chain=chain,
                feedback_scores=chain_scores,
            )
            prompt = render_prompt(ctx, include_tpp=config.include_tpp,
                                   include_artifacts=config.include_artifacts)
            base_event = {
                "iter": global_iter, "stage": stage, "island": isl.index,
                "parent_id": parent.id, "child_id": None,
                "prompt_tokens": 0, "completion_tokens": 0,
            }
            try:
                resp = llm.complete(
                    ChatRequest.user(prompt, temperature=config.temperature,
                                     max_tokens=config.max_tokens),
                    bucket=f"iter{global_iter}",
                )
            except (LlmUnavailable, MalformedResponse) as exc:
                events.append({**base_event, "outcome": "llm_error",
                               "detail": type(exc).__name__})
                continue
            base_event["prompt_tokens"] = resp.prompt_tokens
            base_event["completion_tokens"] = resp.completion_tokens
            parsed = parse_response(resp.content)
            if isinstance(parsed, ParseFailure):
                events.append({**base_event, "outcome": "parse_failure"})
                continue
            if isinstance(parsed, FullRewrite):
                child_source = parsed.source
            else:
                try:
                    child_source = apply_diffs(parent.source, parsed)
                except DiffApplyError as exc:
                    events.append({**base_event, "outcome": "diff_error",
                                   "detail": exc.kind})
                    continue
            pending.append((isl, parent, child_source, base_event))

        # phase 2 (optionally parallel): execution and scoring
        if config.parallel and len(pending) > 1:
            with ThreadPoolExecutor(max_workers=len(pending)) as pool:
                scored = list(pool.map(
                    lambda item: _evaluate_child(item[2], slice_, config, executor, fn),
                    pending,
                ))
        else:
            scored = [_evaluate_child(item[2], slice_, config, executor, fn)
                      for item in pending]

        # phase 3 (serial): insertion and event emission
        for (isl, parent, child_source, base_event), (score, cur, rep) in zip(pending, scored):
            child_counter[isl.index] += 1
            child = Candidate(
                id=f"s{stage}i{isl.index}c{child_counter[isl.index]}",
                source=child_source,
                source_hash=source_fingerprint(child_source),
                island=isl.index,
                stage=stage,
                parent_id=parent.id,
                score=score,
                current_report=cur,
                replay_report=rep,
                created_iter=global_iter,
            )
            lineage[child.id] = child
            all_candidates[child.id] = child.source
            outcome = insert_child(isl, child, config.population_cap)
            events.append({
                **base_event,
                "child_id": child.id,
                "outcome": outcome,
                "acc_curr": score.acc_curr,
                "omega_comp": score.omega_comp,
                "omega_hard": score.omega_hard,
                "total": score.total,
            })

        if config.migration_period > 0 and global_iter % config.migration_period == 0:
            for move in migrate(islands, global_iter, config.population_cap):
                clone_id = move["clone_id"]
                if move["outcome"] == INSERTED:
                    src = all_candidates[move["source_id"]]
                    all_candidates[clone_id] = src
                    dst = islands[move["to"]]
                    lineage[clone_id] = dst.population[-1]

        if config.checkpoint_iters and global_iter in config.checkpoint_iters:
            snap_best = best_of([c for isl in islands for c in isl.population])
            snapshots.append({"label": f"iter{global_iter}", "iter": global_iter,
                              "candidate_id": snap_best.id, "source": snap_best.source})

        if is_final and any(c.score.acc_curr == 1.0
                            for isl in islands for c in isl.population):
            early = True
            break

    best = best_of([c for isl in islands for c in isl.population])
    return StageOutcome(best=best, events=events, all_candidates=all_candidates,
                        snapshots=snapshots, early_exit=early,
                        iterations_used=iterations_used)


def split_budget(total: int, stages: int) -> list[int]:
    base, rem = divmod(total, stages)
    # leftover iterations go to the later stages, which face the fullest slices
    return [base + (1 if s >= stages - rem else 0) for s in range(stages)]


def _collect_tokens(events: list[dict]) -> dict:
    prompt = sum(e.get("prompt_tokens", 0) for e in events)
    completion = sum(e.get("completion_tokens", 0) for e in events)
    calls = sum(1 for e in events if e.get("outcome") != "llm_error")
    return {"prompt": prompt, "completion": completion, "calls": calls}


def run_task(task: Task, config: EngineConfig, llm, executor,
             mode: str = "dio") -> RunRecord:
    """Full curriculum run: chain stage bests, then one hidden evaluation."""
    from .values import literal_form

    plan = build_plan(task.visible, config.stages, config.replay_cap, config.seed)
    budgets = split_budget(config.total_iterations, config.stages)

    record = RunRecord(
        task_id=task.id, family=task.family, level=task.level, mode=mode,
        config=config.to_dict(), plan=plan.to_dict(),
        prompt_template_hash=PROMPT_TEMPLATE_HASH,
        visible_literals=[[literal_form(e.input), literal_form(e.output)]
                          for e in task.visible],
    )

    source = initial_program(task)
    iter_offset = 0
    final_best = None
    for s, slice_ in enumerate(plan.stages, 1):
        outcome = run_stage(
            task, slice_, source, config, llm, executor, budgets[s - 1],
            iter_offset=iter_offset, is_final=(s == config.stages),
            stage_count=config.stages,
        )
        record.events.extend(outcome.events)
        record.candidates.update(outcome.all_candidates)
        record.checkpoints.extend(outcome.snapshots)
        best = outcome.best
        record.stage_bests.append({
            "stage": s,
            "candidate_id": best.id,
            "acc_curr": best.score.acc_curr,
            "total": best.score.total,
            "source_len": len(best.source),
            "source": best.source,
        })
        if not config.checkpoint_iters:
            record.checkpoints.append({"label": f"stage{s}", "iter": iter_offset
                                       + outcome.iterations_used,
                                       "candidate_id": best.id, "source": best.source})
        record.early_exit = outcome.early_exit
        source = best.source
        final_best = best
        iter_offset += budgets[s - 1]

    hidden = heldout_eval(final_best.source, task, executor,
                          timeout_ms=config.timeout_ms)
    record.hidden_eval_count = 1
    record.hidden_accuracy = hidden.accuracy
    record.solved = hidden.total > 0 and hidden.accuracy == 1.0
    record.final_source = final_best.source
    record.final_visible_accuracy = final_best.score.acc_curr
    record.tokens = _collect_tokens(record.events)
    return record


# --- autonomous discovery --------------------------------------------------------

def _propose_inputs(task: Task, k: int, existing: list, llm, rng: random.Random,
                    config: EngineConfig) -> tuple[list, int]:
    """Ask the LLM for k new domain-valid inputs; fall back to seeded samples."""
    spec = get_spec(task.oracle_id)
    existing_keys = {serialize(v) for v in existing}
    accepted: list = []
    llm_calls = 0
    for _ in range(PROPOSAL_RETRIES):
        need = k - len(accepted)
        if need <= 0:
            break
        prompt = render_proposal_prompt(
            task.function_name, str(spec.domain.to_dict()), existing + accepted, need
        )
        try:
            resp = llm.complete(ChatRequest.user(prompt, temperature=config.temperature),
                                bucket="proposal")
            llm_calls += 1
        except (LlmUnavailable, MalformedResponse):
            break
        raw = parse_proposed_inputs(resp.content)
        if raw is None:
            continue
        for item in raw:
            if len(accepted) >= k:
                break
            try:
                v = coerce_to_shape(spec.domain.shape, item)
            except Exception:
                continue
            try:
                key = serialize(v)
            except Exception:
                continue
            if key in existing_keys or not spec.admits(v):
                continue
            existing_keys.add(key)
            accepted.append(v)
    while len(accepted) < k:
        v = spec.sample(rng)
        key = serialize(v)
        if key in existing_keys:
            continue
        existing_keys.add(key)
        accepted.append(v)
    return accepted, llm_calls


def run_autonomous(task: Task, config: EngineConfig, llm, executor) -> RunRecord:
    """Active-exploration mode: the agent builds its own example set by querying
    the ground-truth oracle, growing it by two whenever everything passes."""
    from .oracles import oracle_eval
    from .values import literal_form

    spec = get_spec(task.oracle_id)
    rng = random.Random(f"{config.seed}/autonomous")
    record = RunRecord(
        task_id=task.id, family=task.family, level=task.level, mode="autonomous",
        config=config.to_dict(), plan={},
        prompt_template_hash=PROMPT_TEMPLATE_HASH,
    )

    inputs, _ = _propose_inputs(task, AUTONOMOUS_INITIAL_EXAMPLES, [], llm, rng, config)
    examples = [Example(v, oracle_eval(task.oracle_id, v)) for v in inputs]

    fn = task.function_name
    source = initial_program(task)
    seed_slice = StageSlice(index=1, current=tuple(examples), delta=tuple(examples),
                            replay=())
    seed_score, seed_cur, seed_rep = _evaluate_child(source, seed_slice, config,
                                                     executor, fn)
    islands = []
    lineage: dict[str, Candidate] = {}
    seed_hash = source_fingerprint(source)
    for i in range(config.islands):
        cand = Candidate(f"a-i{i}seed", source, seed_hash, i, 1, None,
                         seed_score, seed_cur, seed_rep, 0)
        islands.append(Island(index=i, rng=random.Random(f"{config.seed}/auto/island{i}"),
                              population=[cand]))
        lineage[cand.id] = cand
        record.candidates[cand.id] = source

    streak = 0
    child_counter = [0] * config.islands
    new_delta = tuple(examples)
    for iteration in range(1, config.autonomous_max_iterations + 1):
        slice_ = StageSlice(index=1, current=tuple(examples), delta=new_delta, replay=())
        record.example_counts.append(len(examples))

        for isl in islands:
            parent = sample_parent(isl, config.sampling_mix, isl.rng)
            best_two, inspiration = build_context_members(parent, isl, isl.rng)
            chain, chain_scores = _feedback_chain(parent, lineage)
            ctx = PromptContext(
                function_name=fn, slice=slice_, stage_count=1,
                parent_source=parent.source, parent_score=parent.score,
                best_sources=tuple(c.source for c in best_two),
                inspiration_source=inspiration.source,
                feedback_chain=chain, feedback_scores=chain_scores,
            )
            prompt = render_prompt(ctx, include_tpp=config.include_tpp,
                                   include_artifacts=config.include_artifacts)
            base_event = {"iter": iteration, "stage": 1, "island": isl.index,
                          "parent_id": parent.id, "child_id": None,
                          "prompt_tokens": 0, "completion_tokens": 0,
                          "examples": len(examples)}
            try:
                resp = llm.complete(ChatRequest.user(prompt, temperature=config.temperature),
                                    bucket=f"iter{iteration}")
            except (LlmUnavailable, MalformedResponse) as exc:
                record.events.append({**base_event, "outcome": "llm_error",
                                      "detail": type(exc).__name__})
                continue
            base_event["prompt_tokens"] = resp.prompt_tokens
            base_event["completion_tokens"] = resp.completion_tokens
            parsed = parse_response(resp.content)
            if isinstance(parsed, ParseFailure):
                record.events.append({**base_event, "outcome": "parse_failure"})
                continue
            if isinstance(parsed, FullRewrite):
                child_source = parsed.source
            else:
                try:
                    child_source = apply_diffs(parent.source, parsed)
                except DiffApplyError as exc:
                    record.events.append({**base_event, "outcome": "diff_error",
                                          "detail": exc.kind})
                    continue
            score, cur, rep = _evaluate_child(child_source, slice_, config, executor, fn)
            child_counter[isl.index] += 1
            child = Candidate(
                id=f"a-i{isl.index}c{child_counter[isl.index]}",
                source=child_source, source_hash=source_fingerprint(child_source),
                island=isl.index, stage=1, parent_id=parent.id, score=score,
                current_report=cur, replay_report=rep, created_iter=iteration,
            )
            lineage[child.id] = child
            record.candidates[child.id] = child_source
            outcome = insert_child(isl, child, config.population_cap)
            record.events.append({**base_event, "child_id": child.id,
                                  "outcome": outcome, "acc_curr": score.acc_curr,
                                  "omega_comp": score.omega_comp,
                                  "omega_hard": score.omega_hard,
                                  "total": score.total})

        new_delta = ()
        best = best_of([c for isl in islands for c in isl.population])
        if best.score.acc_curr == 1.0:
            streak += 1
            if streak >= config.autonomous_streak:
                record.early_exit = True
                break
            new_inputs, _ = _propose_inputs(task, AUTONOMOUS_GROWTH,
                                            [e.input for e in examples], llm, rng, config)
            added = [Example(v, oracle_eval(task.oracle_id, v)) for v in new_inputs]
            examples.extend(added)
            new_delta = tuple(added)
            # re-score the whole population against the grown example set
            grown = StageSlice(index=1, current=tuple(examples), delta=new_delta,
                               replay=())
            for isl in islands:
                for i, cand in enumerate(isl.population):
                    score, cur, rep = _evaluate_child(cand.source, grown, config,
                                                      executor, fn)
                    isl.population[i] = replace(cand, score=score,
                                                current_report=cur, replay_report=rep)
                    lineage[cand.id] = isl.population[i]
        else:
            streak = 0

    final_best = best_of([c for isl in islands for c in isl.population])
    hidden = heldout_eval(final_best.source, task, executor, timeout_ms=config.timeout_ms)
    record.hidden_eval_count = 1
    record.hidden_accuracy = hidden.accuracy
    record.solved = hidden.total > 0 and hidden.accuracy == 1.0
    record.final_source = final_best.source
    record.final_visible_accuracy = final_best.score.acc_curr
    record.visible_literals = [[literal_form(e.input), literal_form(e.output)]
                               for e in examples]
    record.tokens = _collect_tokens(record.events)
    return record
