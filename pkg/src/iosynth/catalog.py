"""Benchmark construction: seeded example generation and train/test splits.

Visible sets are generated with seed 42 and hidden sets with seed 999, from
oversampled pools deduplicated by input; any hidden input already present in
the training pool is dropped, and short sets are topped up with backup seeds
(43, 44, ... for training; 1000, 1001, ... for test).
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .domains import InputDomain
from .oracles import REGISTRY, OracleSpec, get_spec
from .values import Value, from_tagged, serialize, to_tagged

GENERATOR_VERSION = "1"

VISIBLE_COUNT = 8
HIDDEN_COUNT = 15
TRAIN_SEED = 42
TEST_SEED = 999
OVERSAMPLE = 4
MAX_BACKUP_SEEDS = 20


class DomainTooSmall(ValueError):
    """The domain cannot yield the requested number of distinct inputs."""


@dataclass(frozen=True)
class Example:
    input: Value
    output: Value

    def key(self) -> str:
        return serialize(self.input)


@dataclass(frozen=True)
class Task:
    id: str
    family: str
    level: str
    oracle_id: str
    function_name: str
    arity: int
    domain: InputDomain
    visible: tuple[Example, ...]
    hidden: tuple[Example, ...]


def generate_examples(spec: OracleSpec, seed: int, count: int,
                      best_effort: bool = False) -> list[Example]:
    """Canonical edge cases first, then seeded distinct random draws.

    With best_effort, a domain smaller than `count` yields what it has instead
    of raising; split construction uses this for its oversampled pools.
    """
    if count < len(spec.edge_cases):
        raise ValueError(f"count {count} below edge-case count {len(spec.edge_cases)}")
    rng = random.Random(seed)
    inputs: list[Value] = list(spec.edge_cases)
    seen = {serialize(v) for v in inputs}
    attempts = 0
    while len(inputs) < count:
        attempts += 1
        if attempts > 200 * count:
            if best_effort:
                break
            raise DomainTooSmall(f"{spec.oracle_id}: cannot draw {count} distinct inputs")
        v = spec.sample(rng)
        k = serialize(v)
        if k in seen:
            continue
        seen.add(k)
        inputs.append(v)
    return [Example(v, spec.fn(v)) for v in inputs]


def _top_up(spec: OracleSpec, pool: list[Example], want: int, first_backup_seed: int,
            excluded: set[str]) -> list[Example]:
    keys = {e.key() for e in pool}
    out = list(pool)
    seed = first_backup_seed
    while len(out) < want:
        if seed >= first_backup_seed + MAX_BACKUP_SEEDS:
            if spec.small_domain:
                break
            raise DomainTooSmall(f"{spec.oracle_id}: cannot reach {want} disjoint examples")
        extra = generate_examples(spec, seed, want * OVERSAMPLE, best_effort=True)
        for e in extra:
            k = e.key()
            if k in keys or k in excluded:
                continue
            keys.add(k)
            out.append(e)
            if len(out) == want:
                break
        seed += 1
    return out


def build_split(oracle_id: str) -> Task:
    """Deterministic 8-visible / 15-hidden split with input disjointness."""
    spec = get_spec(oracle_id)
    train_pool = generate_examples(spec, TRAIN_SEED, VISIBLE_COUNT * OVERSAMPLE,
                                   best_effort=True)
    test_pool = generate_examples(spec, TEST_SEED, HIDDEN_COUNT * OVERSAMPLE,
                                  best_effort=True)

    train_keys = {e.key() for e in train_pool}
    test_pool = [e for e in test_pool if e.key() not in train_keys]

    visible = train_pool[:VISIBLE_COUNT]
    hidden = test_pool[:HIDDEN_COUNT]
    if len(visible) < VISIBLE_COUNT:
        visible = _top_up(spec, visible, VISIBLE_COUNT, TRAIN_SEED + 1, set())
    if len(hidden) < HIDDEN_COUNT:
        hidden = _top_up(spec, hidden, HIDDEN_COUNT, TEST_SEED + 1,
                         {e.key() for e in visible})

    return Task(
        id=oracle_id,
        family=spec.family,
        level=spec.level,
        oracle_id=oracle_id,
        function_name="f",
        arity=spec.arity,
        domain=spec.domain,
        visible=tuple(visible),
        hidden=tuple(hidden),
    )


def build_catalog() -> dict[str, Task]:
    return {oid: build_split(oid) for oid in sorted(REGISTRY)}


# --- file schema --------------------------------------------------------------

def _example_to_dict(e: Example) -> dict:
    return {"input": to_tagged(e.input), "output": to_tagged(e.output)}


def _example_from_dict(d: dict) -> Example:
    return Example(from_tagged(d["input"]), from_tagged(d["output"]))


def task_to_dict(task: Task) -> dict:
    return {
        "id": task.id,
        "family": task.family,
        "level": task.level,
        "oracle_id": task.oracle_id,
        "function_name": task.function_name,
        "arity": task.arity,
        "domain": task.domain.to_dict(),
        "visible": [_example_to_dict(e) for e in task.visible],
        "hidden": [_example_to_dict(e) for e in task.hidden],
    }


def task_from_dict(d: dict) -> Task:
    return Task(
        id=d["id"],
        family=d["family"],
        level=d["level"],
        oracle_id=d["oracle_id"],
        function_name=d["function_name"],
        arity=d["arity"],
        domain=InputDomain.from_dict(d["domain"]),
        visible=tuple(_example_from_dict(e) for e in d["visible"]),
        hidden=tuple(_example_from_dict(e) for e in d["hidden"]),
    )


def _dump(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=1) + "\n").encode()


def export_benchmark(catalog: dict[str, Task], out_dir: str | Path) -> dict:
    """Write one JSON file per task plus a manifest with content hashes."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for tid in sorted(catalog):
        data = _dump(task_to_dict(catalog[tid]))
        (out / f"{tid}.json").write_bytes(data)
        entries.append({"id": tid, "sha256": hashlib.sha256(data).hexdigest()})
    manifest = {"tasks": entries, "generator_version": GENERATOR_VERSION}
    (out / "manifest.json").write_bytes(_dump(manifest))
    return manifest


def manifest_hash(manifest: dict) -> str:
    return hashlib.sha256(_dump(manifest)).hexdigest()


def load_task(path: str | Path) -> Task:
    return task_from_dict(json.loads(Path(path).read_text()))


def load_benchmark(in_dir: str | Path) -> dict[str, Task]:
    manifest = json.loads((Path(in_dir) / "manifest.json").read_text())
    return {e["id"]: load_task(Path(in_dir) / f"{e['id']}.json") for e in manifest["tasks"]}
