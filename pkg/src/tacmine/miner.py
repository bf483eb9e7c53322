"""Initial tactic mining: random pairwise combination plus greedy MDL selection.

Candidates grow from single observed values upward.  Each iteration samples
frequent pool members, combines pairs at a sampled whole-event alignment
(overlay on overlap, concatenation beyond it) and keeps a combination only
when it strictly shortens the starred description length.  Single values act
purely as building blocks and never appear in the output set.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Sequence

from .cover import (CoverState, DatasetIndex, MetricParams, cover,
                    shared_index)
from .model import Dataset, Tactic, TacticSet, non_null_count


# Consecutive no-change iterations before mining is considered converged.
# Candidates are sampled, so a single dry iteration proves nothing; admissions
# routinely resume after long dry stretches while rare pair draws come up.
STALL_PATIENCE = 40

# Most draws are duplicates of already-seen combinations once the pool
# saturates; cap redraws at this multiple of the candidate budget.
_DRAW_CAP_FACTOR = 20


@dataclass(frozen=True)
class MinerConfig:
    seed: int = 1
    max_iterations: int = 200
    candidates_per_iteration: int = 200
    max_tactic_length: int = 8

    def check(self) -> None:
        for name in ("seed", "max_iterations", "candidates_per_iteration",
                     "max_tactic_length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def combine_events(a: tuple, b: tuple, offset: int) -> tuple | None:
    """Slot-wise union of two patterns with b shifted by `offset` whole events.

    Valid offsets run from -len(b)+1 (b ends on a's first event) to len(a)
    (b starts right after a), so the union is always contiguous.  Returns None
    when two concrete slots disagree.
    """
    k = len(a[0])
    lo = min(0, offset)
    hi = max(len(a), offset + len(b))
    out = []
    for pos in range(lo, hi):
        slots = []
        for f in range(k):
            va = a[pos][f] if 0 <= pos < len(a) else None
            vb = b[pos - offset][f] if 0 <= pos - offset < len(b) else None
            if va is not None and vb is not None and va != vb:
                return None
            slots.append(va if va is not None else vb)
        out.append(tuple(slots))
    return tuple(out)


def single_value_seeds(index: DatasetIndex) -> list[tuple]:
    """One-event, one-slot patterns for every (feature, value) present in d."""
    cached = getattr(index, "_seed_events", None)
    if cached is not None:
        return cached
    k = index.k
    seeds: list[tuple] = []
    for f in range(index.k):
        observed = sorted({int(v) for v in index.values[:, :, f].ravel() if v >= 0})
        for v in observed:
            ev = tuple(v if g == f else None for g in range(k))
            seeds.append((ev,))
    index._seed_events = seeds  # type: ignore[attr-defined]
    return seeds


def generate_candidates(tactics: Sequence[Tactic], d: Dataset, rng: random.Random,
                        config: MinerConfig | None = None, *,
                        index: DatasetIndex | None = None,
                        member_weights: dict[int, int] | None = None,
                        next_id: int | None = None) -> list[Tactic]:
    """Sample pair combinations until candidates_per_iteration novel ones exist.

    The pool is the current set plus the implicit single-value seeds; pairs
    are drawn proportional to current frequency (accepted cover frequency for
    members, occurrence count for seeds).  Over-long, conflicting, duplicate
    and zero-match combinations are discarded and redrawn, up to a fixed
    multiple of the budget, so the output may still be shorter than it.
    """
    config = config or MinerConfig()
    if index is None:
        index = shared_index(d)
    seeds = single_value_seeds(index)
    pool = [t.events for t in tactics] + seeds
    weights: list[int] = []
    for t in tactics:
        if member_weights is not None:
            weights.append(max(0, member_weights.get(t.id, 0)))
        else:
            weights.append(index.match_count(t.events))
    weights.extend(index.match_count(ev) for ev in seeds)
    total = sum(weights)
    if total <= 0 or not pool:
        return []
    cum: list[int] = []
    running = 0
    for w in weights:
        running += w
        cum.append(running)

    if next_id is None:
        next_id = max((t.id for t in tactics), default=0) + 1
    existing = {t.events for t in tactics}
    seen: set[tuple] = set()
    out: list[Tactic] = []
    population = range(len(pool))
    budget = config.candidates_per_iteration
    for _ in range(_DRAW_CAP_FACTOR * budget):
        if len(out) >= budget:
            break
        ia, ib = rng.choices(population, cum_weights=cum, k=2)
        a, b = pool[ia], pool[ib]
        offset = rng.randrange(-len(b) + 1, len(a) + 1)
        merged = combine_events(a, b, offset)
        if merged is None or len(merged) > config.max_tactic_length:
            continue
        if merged in existing or merged in seen:
            continue
        if index.match_count(merged) == 0:
            continue
        seen.add(merged)
        out.append(Tactic(next_id, merged))
        next_id += 1
    return out


def _optimize(state: CoverState, candidates: Sequence[Tactic]) -> bool:
    """Admit strictly-improving candidates into the cover state, in order.

    After each admission, members whose accepted frequency moved are removed
    when dropping them does not lengthen the description.  Pinned tactics are
    never removed.  Returns whether the state changed.
    """
    changed = False
    for ct in candidates:
        plan = state.try_add(ct)
        if not plan.dl < state.dl:
            continue
        prev_freq = state.freq
        state.commit(plan)
        changed = True
        suspects = sorted(
            tid for tid, info in state.info.items()
            if tid != ct.id and not info.tactic.pinned
            and state.freq.get(tid, 0) != prev_freq.get(tid, 0))
        for tid in suspects:
            rm = state.try_remove(tid)
            if rm.dl <= state.dl:
                state.commit(rm)
    return changed


def optimize(d: Dataset, tactics: Sequence[Tactic], candidates: Sequence[Tactic],
             params: MetricParams | None = None, *,
             index: DatasetIndex | None = None) -> list[Tactic]:
    """Greedily admit candidates that strictly shorten the description length.

    After each admission, members whose contribution the newcomer eroded are
    removed when dropping them does not lengthen the description.  Pinned
    tactics are never removed.
    """
    params = params or MetricParams()
    if index is None:
        index = shared_index(d)
    state = CoverState(index, tactics, params)
    _optimize(state, candidates)
    return state.tactics


def _exhaustive_sweep(state: CoverState) -> None:
    """Drop members (ascending id) while removal does not lengthen the code."""
    while True:
        removed = False
        for tid in sorted(state.info):
            if tid not in state.info or state.info[tid].tactic.pinned:
                continue
            rm = state.try_remove(tid)
            if rm.dl <= state.dl:
                state.commit(rm)
                removed = True
        if not removed:
            return


def _admission_bound(mc: int, slots: int, params: MetricParams,
                     wmax: float) -> float:
    """Upper bound on the description-length gain from admitting a candidate.

    Each accepted usage costs at least alpha and newly covers at most `slots`
    slots at weight beta * wmax, and there are at most `mc` usages.  A bound
    below 1 (the set-size term) cannot pay for admission.
    """
    return mc * (params.beta * wmax * slots - params.alpha)


def mine_initial(d: Dataset, params: MetricParams | None = None,
                 config: MinerConfig | None = None,
                 pinned: Sequence[Tactic] = (),
                 warm: Sequence[Tactic] = ()) -> TacticSet:
    """Mine a tactic set from scratch (plus optional protected pinned tactics).

    `warm` tactics are offered as ordinary candidates before the first
    iteration: whichever still pay for themselves under `params` survive and
    seed the pool.  Without them a re-mine under a harsher metric would have
    to rebuild every pattern from single values, and intermediate fragments
    that the final pattern needs may no longer be admissible on their own.

    Deterministic for a fixed config seed.  Terminates at the iteration budget
    or once STALL_PATIENCE consecutive iterations change nothing, then sweeps
    until no removal can shorten the description length.
    """
    params = params or MetricParams()
    params.check()
    config = config or MinerConfig()
    config.check()
    index = shared_index(d)
    rng = random.Random(config.seed)

    members: list[Tactic] = [t if t.pinned else replace(t, pinned=True)
                             for t in pinned]
    next_id = max((t.id for t in members), default=0) + 1
    state = CoverState(index, members, params)
    wmax = 1.0 + max((max(0.0, v) for v in params.importance.values()),
                     default=0.0)

    member_ids = {t.id for t in members}
    warm_cands = sorted((replace(t, pinned=False) for t in warm
                         if t.id not in member_ids), key=lambda t: t.id)
    if warm_cands:
        next_id = max(next_id, max(t.id for t in warm_cands) + 1)
        _optimize(state, warm_cands)

    stalled = 0
    for _ in range(config.max_iterations):
        current = state.tactics
        candidates = generate_candidates(
            current, d, rng, config, index=index,
            member_weights=state.freq, next_id=next_id)
        if candidates:
            next_id = max(c.id for c in candidates) + 1
        candidates = [
            c for c in candidates
            if _admission_bound(index.match_count(c.events),
                                non_null_count(c.events), params, wmax) > 1.0]
        changed = _optimize(state, candidates)
        stalled = 0 if changed else stalled + 1
        if stalled >= STALL_PATIENCE:
            break

    _exhaustive_sweep(state)
    current = sorted(state.tactics, key=lambda t: t.id)
    result = cover(d, current, index)
    return TacticSet(tuple(current), result.usages)
