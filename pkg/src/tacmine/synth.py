"""Synthetic benchmark data: random rallies with planted, logged tactics.

Sequences are uniform noise; each planted tactic is overwritten into a fixed
fraction of them at random windows.  Later embeddings may clobber earlier
ones, so the log keeps only placements that still match afterwards.  Winners
are biased per tactic (alternating strong/weak) to give win-rate displays
signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraints import (Constraint, DeleteTactic, ExpandTactic,
                          FeatureImportance, IndexRange, LengthRange,
                          MergeTactics, SpecifyFeature, SplitByFeature,
                          TrimTactic)
from .model import (Dataset, Feature, FeatureSchema, Rally, Tactic, Usage,
                    match_at)

WIN_BIAS = 0.4


@dataclass(frozen=True)
class SynthParams:
    n_sequences: int = 500
    sequence_length: int = 10
    n_features: int = 3
    n_tactics: int = 25
    values_per_feature: int = 10
    embed_fraction: float = 0.10
    tactic_length: int = 3
    tactic_nonnull: int = 7
    seed: int = 1

    def check(self) -> None:
        if self.n_sequences < 1 or self.sequence_length < 1:
            raise ValueError("need at least one sequence with one hit")
        if self.n_features < 1 or self.values_per_feature < 2:
            raise ValueError("need k >= 1 features with >= 2 values")
        if self.n_tactics < 0:
            raise ValueError("n_tactics must be >= 0")
        if not 0.0 < self.embed_fraction <= 1.0:
            raise ValueError("embed_fraction must be in (0, 1]")
        if self.tactic_length > self.sequence_length:
            raise ValueError("tactic longer than sequence")
        if not 1 <= self.tactic_nonnull <= self.tactic_length * self.n_features:
            raise ValueError("tactic_nonnull outside [1, length * k]")


def _random_tactic(rng: np.random.Generator, p: SynthParams, tid: int) -> Tactic:
    k, length = p.n_features, p.tactic_length
    while True:
        positions = rng.choice(length * k, size=p.tactic_nonnull, replace=False)
        events = [[None] * k for _ in range(length)]
        for pos in positions:
            events[pos // k][pos % k] = int(rng.integers(p.values_per_feature))
        if any(v is not None for v in events[0]) and \
           any(v is not None for v in events[-1]):
            return Tactic(tid, tuple(tuple(e) for e in events))


def generate(p: SynthParams) -> tuple[Dataset, list[Tactic], dict[int, list[Usage]]]:
    """Dataset plus planted tactics and the (validity-filtered) embedding log."""
    p.check()
    rng = np.random.default_rng(p.seed)
    k = p.n_features

    planted: list[Tactic] = []
    seen_events: set[tuple] = set()
    for i in range(p.n_tactics):
        for _ in range(1000):
            t = _random_tactic(rng, p, i + 1)
            if t.events not in seen_events:
                break
        seen_events.add(t.events)
        planted.append(t)

    values = rng.integers(p.values_per_feature,
                          size=(p.n_sequences, p.sequence_length, k))
    raw_log: list[tuple[int, int, int]] = []  # (tactic idx, sequence, start)
    owner = [-1] * p.n_sequences
    embed_count = math.ceil(p.embed_fraction * p.n_sequences)
    for i, t in enumerate(planted):
        rows = rng.choice(p.n_sequences, size=embed_count, replace=False)
        for row in rows:
            start = int(rng.integers(p.sequence_length - p.tactic_length + 1)) + 1
            for off, ev in enumerate(t.events):
                for f, v in enumerate(ev):
                    if v is not None:
                        values[row, start - 1 + off, f] = v
            raw_log.append((i, int(row), start))
            owner[int(row)] = i

    servers = rng.integers(2, size=p.n_sequences)
    noise_wins = rng.random(p.n_sequences)
    rallies = []
    for row in range(p.n_sequences):
        if owner[row] >= 0:
            bias = WIN_BIAS if owner[row] % 2 == 0 else -WIN_BIAS
            focal_wins = noise_wins[row] < 0.5 + bias
        else:
            focal_wins = noise_wins[row] < 0.5
        winner = 0 if focal_wins else 1
        events = tuple(tuple(int(v) for v in values[row, pos])
                       for pos in range(p.sequence_length))
        rallies.append(Rally(row + 1, int(servers[row]), winner, events))

    schema = FeatureSchema(tuple(
        Feature(f"f{f + 1}", tuple(f"v{v + 1}" for v in range(p.values_per_feature)))
        for f in range(k)))
    dataset = Dataset(schema, tuple(rallies), focal_player=0)

    log: dict[int, list[Usage]] = {t.id: [] for t in planted}
    for i, row, start in raw_log:
        if match_at(planted[i], dataset.rallies[row], start):
            log[planted[i].id].append(Usage(row + 1, start))
    for usages in log.values():
        usages.sort(key=lambda u: (u.rally_id, u.start))
    return dataset, planted, log


def generate_constraint_suite(planted: list[Tactic],
                              log: dict[int, list[Usage]] | None = None,
                              seed: int = 1) -> list[Constraint]:
    """4 non-conflicting global + 30 local constraints over planted tactics."""
    if not planted:
        raise ValueError("need at least one planted tactic")
    rng = np.random.default_rng(seed)
    k = len(planted[0].events[0])

    starts = [u.start for usages in (log or {}).values() for u in usages]
    lo = min(starts) if starts else 1
    hi = max(starts) if starts else None
    lengths = [len(t.events) for t in planted]
    suite: list[Constraint] = [
        IndexRange(lo, hi),
        LengthRange(min(lengths), max(lengths)),
        FeatureImportance(0, 0.5),
        FeatureImportance(k - 1 if k > 1 else 0, -0.5),
    ]

    ids = [t.id for t in planted]
    by_id = {t.id: t for t in planted}

    def pick() -> int:
        return ids[int(rng.integers(len(ids)))]

    def pick_with_null() -> tuple[int, int]:
        # (tactic id, feature with at least one null slot); falls back to the
        # first feature when every slot is concrete.
        for _ in range(100):
            tid = pick()
            t = by_id[tid]
            nulls = [f for f in range(k)
                     if any(ev[f] is None for ev in t.events)]
            if nulls:
                return tid, nulls[int(rng.integers(len(nulls)))]
        return ids[0], 0

    for _ in range(5):
        tid, f = pick_with_null()
        suite.append(SplitByFeature((tid,), f))
    for _ in range(5):
        tid, f = pick_with_null()
        suite.append(SpecifyFeature((tid,), (f,)))
    for _ in range(5):
        a = pick()
        b = pick()
        while len(ids) > 1 and b == a:
            b = pick()
        suite.append(MergeTactics(tuple(sorted((a, b)))))
    for i in range(5):
        suite.append(ExpandTactic(pick(), "back" if i % 2 == 0 else "front", 1))
    for i in range(5):
        suite.append(TrimTactic(pick(), "back" if i % 2 == 0 else "front", 1))
    for _ in range(5):
        suite.append(DeleteTactic((pick(),)))
    return suite
