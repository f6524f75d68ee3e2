"""Deterministic synthetic temporal-KG generator with a controllable
recurrence rate, used as the desk-scale testbed for the copy mechanism."""

from __future__ import annotations

import dataclasses

import numpy as np

from .data import SnapshotSequence


class CapacityError(ValueError):
    """More distinct facts demanded per snapshot than the id space holds."""


@dataclasses.dataclass
class SynthConfig:
    num_entities: int = 100
    num_relations: int = 5
    num_snapshots: int = 20
    facts_per_snapshot: int = 200
    recurrence: float = 0.5  # per-fact probability of copying from history
    seed: int = 0
    fixed_objects: bool = False  # each (s, p) pair keeps one object forever

    def __post_init__(self):
        for name in ("num_entities", "num_relations", "num_snapshots",
                     "facts_per_snapshot"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.recurrence <= 1.0:
            raise ValueError(f"recurrence must lie in [0, 1], got {self.recurrence}")
        capacity = self.num_entities ** 2 * self.num_relations
        if self.facts_per_snapshot > capacity:
            raise CapacityError(
                f"{self.facts_per_snapshot} facts per snapshot exceed the "
                f"{capacity} distinct (s, p, o) combinations available")


def generate(config: SynthConfig) -> tuple[SnapshotSequence, float]:
    """Generate a snapshot sequence and report its realized fact repeat rate.

    The first snapshot is fully fresh. Afterwards each drawn fact copies,
    with probability ``recurrence``, a uniformly chosen historical (s, p)
    pair together with one of that pair's historical objects (uniformly;
    membership is binary, mirroring the vocabulary semantics); otherwise a
    fresh uniform (s, p, o) is drawn. ``fixed_objects`` pins every pair to
    the object of its first occurrence, making recurrence deterministic per
    pair. Snapshots are deduplicated; the repeat rate is the fraction of
    kept facts (after the first snapshot) whose triple already occurred.
    """
    rng = np.random.default_rng(config.seed)
    n, r = config.num_entities, config.num_relations

    pair_objects: dict[tuple[int, int], list[int]] = {}  # history before this snapshot
    pair_list: list[tuple[int, int]] = []
    pinned: dict[tuple[int, int], int] = {}
    seen: set[tuple[int, int, int]] = set()

    snapshots = []
    repeats = 0
    probed = 0
    for k in range(config.num_snapshots):
        drawn: set[tuple[int, int, int]] = set()
        for _ in range(config.facts_per_snapshot):
            if k > 0 and rng.random() < config.recurrence:
                pair = pair_list[rng.integers(len(pair_list))]
                objs = pair_objects[pair]
                fact = (*pair, objs[rng.integers(len(objs))])
            else:
                pair = (int(rng.integers(n)), int(rng.integers(r)))
                if config.fixed_objects:
                    obj = pinned.setdefault(pair, int(rng.integers(n)))
                else:
                    obj = int(rng.integers(n))
                fact = (*pair, obj)
            drawn.add(fact)
        facts = np.array(sorted(drawn), dtype=np.int64).reshape(-1, 3)
        snapshots.append(facts)
        if k > 0:
            probed += len(facts)
            repeats += sum(tuple(row) in seen for row in facts.tolist())
        for s, p, o in facts.tolist():
            seen.add((s, p, o))
            bucket = pair_objects.get((s, p))
            if bucket is None:
                pair_objects[(s, p)] = [o]
                pair_list.append((s, p))
            elif o not in bucket:
                bucket.append(o)
    rate = repeats / probed if probed else 0.0
    return SnapshotSequence(snapshots), rate
