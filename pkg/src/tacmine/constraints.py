"""User constraints: global metric knobs and local tactic adjustments.

Global constraints compile into MetricParams and trigger a full re-mine.
Local constraints expand into minimal modification candidates whose values
come only from contexts actually observed at the target tactic's placements;
the fine-tuning optimizer then decides which candidates enter the set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product
from typing import Sequence, Union

from .cover import CoverState, DatasetIndex, MetricParams, shared_index
from .miner import MinerConfig, mine_initial
from .model import (Dataset, Tactic, TacticSet, non_null_count,
                    normalize_events)


@dataclass(frozen=True)
class IndexRange:
    lo: int
    hi: int | None


@dataclass(frozen=True)
class LengthRange:
    lo: int
    hi: int | None


@dataclass(frozen=True)
class FeatureImportance:
    feature: int
    value: float


@dataclass(frozen=True)
class SplitByFeature:
    tactic_ids: tuple[int, ...]
    feature: int


@dataclass(frozen=True)
class SpecifyFeature:
    tactic_ids: tuple[int, ...]
    features: tuple[int, ...]


@dataclass(frozen=True)
class MergeTactics:
    tactic_ids: tuple[int, ...]


@dataclass(frozen=True)
class ExpandTactic:
    tactic_id: int
    direction: str  # "front" | "back"
    hits: int = 1


@dataclass(frozen=True)
class TrimTactic:
    tactic_id: int
    direction: str
    hits: int = 1


@dataclass(frozen=True)
class DeleteTactic:
    tactic_ids: tuple[int, ...]


GlobalConstraint = Union[IndexRange, LengthRange, FeatureImportance]
LocalConstraint = Union[SplitByFeature, SpecifyFeature, MergeTactics,
                        ExpandTactic, TrimTactic, DeleteTactic]
Constraint = Union[GlobalConstraint, LocalConstraint]


def is_global(c: Constraint) -> bool:
    return isinstance(c, (IndexRange, LengthRange, FeatureImportance))


def target_ids(c: LocalConstraint) -> tuple[int, ...]:
    if isinstance(c, (SplitByFeature, SpecifyFeature, MergeTactics, DeleteTactic)):
        return tuple(c.tactic_ids)
    return (c.tactic_id,)


class ConstraintError(ValueError):
    """Invalid or conflicting constraint input."""

    def __init__(self, message: str, *, code: str = "VALIDATION"):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Modification:
    """One atomic pattern edit: (action, event offset, feature, value).

    `add` fills a null slot, or appends/prepends a fresh single-value event
    when the offset lies one past either boundary.  `remove` nulls a concrete
    slot; `replace` swaps one concrete value for another.
    """

    action: str  # "add" | "remove" | "replace"
    event: int
    feature: int
    value: int | None = None


def apply_modification(events: tuple, mod: Modification) -> tuple:
    k = len(events[0])
    if mod.action == "add" and mod.event == len(events):
        if mod.value is None:
            raise ValueError("add needs a value")
        return events + (tuple(mod.value if f == mod.feature else None
                               for f in range(k)),)
    if mod.action == "add" and mod.event == -1:
        if mod.value is None:
            raise ValueError("add needs a value")
        return (tuple(mod.value if f == mod.feature else None
                      for f in range(k)),) + events
    if not 0 <= mod.event < len(events):
        raise ValueError(f"event offset {mod.event} out of range")
    ev = list(events[mod.event])
    slot = ev[mod.feature]
    if mod.action == "add":
        if slot is not None:
            raise ValueError("add target slot is not null")
        ev[mod.feature] = mod.value
    elif mod.action == "remove":
        if slot is None:
            raise ValueError("remove target slot is already null")
        ev[mod.feature] = None
    elif mod.action == "replace":
        if slot is None or mod.value is None:
            raise ValueError("replace needs a concrete slot and value")
        ev[mod.feature] = mod.value
    else:
        raise ValueError(f"unknown action {mod.action!r}")
    return events[:mod.event] + (tuple(ev),) + events[mod.event + 1:]


@dataclass(frozen=True)
class FineTuneResult:
    """Candidates at minimal modification depth, or a reason for none."""

    candidates: tuple[Tactic, ...]
    modifications: tuple[tuple[Modification, ...], ...]
    reason: str | None = None


def compile_global(constraints: Sequence[GlobalConstraint],
                   base: MetricParams | None = None) -> MetricParams:
    """Fold global constraints into MetricParams.

    Importance entries on the same feature override left to right; two
    differing range constraints on the same knob in one batch conflict.
    """
    base = base or MetricParams()
    index_range = base.index_range
    length_range = base.length_range
    importance = dict(base.importance)
    seen_index: IndexRange | None = None
    seen_length: LengthRange | None = None
    for c in constraints:
        if isinstance(c, IndexRange):
            if seen_index is not None and (seen_index.lo, seen_index.hi) != (c.lo, c.hi):
                raise ConstraintError(
                    f"conflicting index ranges {seen_index} and {c}")
            seen_index = c
            index_range = (c.lo, c.hi)
        elif isinstance(c, LengthRange):
            if seen_length is not None and (seen_length.lo, seen_length.hi) != (c.lo, c.hi):
                raise ConstraintError(
                    f"conflicting length ranges {seen_length} and {c}")
            seen_length = c
            length_range = (c.lo, c.hi)
        elif isinstance(c, FeatureImportance):
            importance[c.feature] = c.value
        else:
            raise ConstraintError(f"{type(c).__name__} is not a global constraint")
    params = replace(base, index_range=index_range, length_range=length_range,
                     importance=importance)
    try:
        params.check()
    except ValueError as exc:
        raise ConstraintError(str(exc)) from None
    return params


def remine(d: Dataset, params: MetricParams, config: MinerConfig,
           pinned: Sequence[Tactic] = (),
           warm: Sequence[Tactic] = ()) -> TacticSet:
    """Full re-mine under new global constraints; pinned tactics survive.

    Passing the outgoing tactic set as `warm` keeps still-profitable members
    without protecting them, so a remine refines rather than forgets.
    """
    return mine_initial(d, params, config, pinned=pinned, warm=warm)


# ---------------------------------------------------------------------------
# Fine-tuning candidate generation.  Values are drawn only from contexts
# observed at the target tactic's placements, never from the whole alphabet.

def _usage_values(index: DatasetIndex, t: Tactic):
    """Pairs of (rally position, 1-based start) for every placement of t."""
    ridx, starts = index.matches(t.events)
    return list(zip(ridx, starts))


def _gen_split(c: SplitByFeature, targets: Sequence[Tactic], index: DatasetIndex,
               next_id: int) -> FineTuneResult:
    f = c.feature
    any_null = False
    any_pair = False
    cands: list[Tactic] = []
    mods: list[tuple[Modification, ...]] = []
    for t in sorted(targets, key=lambda t: t.id):
        null_events = [e for e, ev in enumerate(t.events) if ev[f] is None]
        if not null_events:
            continue
        any_null = True
        counts: dict[tuple[int, int], int] = {}
        for r, s in _usage_values(index, t):
            for e in null_events:
                v = int(index.values[r, s - 1 + e, f])
                counts[(e, v)] = counts.get((e, v), 0) + 1
        survivors = sorted((e, v) for (e, v), n in counts.items() if n >= 2)
        if len({v for _, v in survivors}) < 2:
            continue
        any_pair = True
        for e, v in survivors:
            mod = Modification("add", e, f, v)
            cands.append(Tactic(next_id, apply_modification(t.events, mod)))
            next_id += 1
            mods.append((mod,))
    if cands:
        return FineTuneResult(tuple(cands), tuple(mods))
    if not any_null:
        return FineTuneResult((), (), "target feature has no null slot to split on")
    if not any_pair:
        return FineTuneResult((), (), "fewer than two distinct values observed "
                                      "at the target feature")
    return FineTuneResult((), (), "no candidates")


def _gen_specify(c: SpecifyFeature, targets: Sequence[Tactic],
                 index: DatasetIndex, next_id: int) -> FineTuneResult:
    cands: list[Tactic] = []
    mods: list[tuple[Modification, ...]] = []
    any_slot = False
    for t in sorted(targets, key=lambda t: t.id):
        slots = [(e, f) for e in range(len(t.events)) for f in c.features
                 if t.events[e][f] is None]
        if not slots:
            continue
        any_slot = True
        combos: dict[tuple[int, ...], int] = {}
        for r, s in _usage_values(index, t):
            key = tuple(int(index.values[r, s - 1 + e, f]) for e, f in slots)
            combos[key] = combos.get(key, 0) + 1
        for combo in sorted(combos):
            seq = tuple(Modification("add", e, f, v)
                        for (e, f), v in zip(slots, combo))
            events = t.events
            for mod in seq:
                events = apply_modification(events, mod)
            cands.append(Tactic(next_id, events))
            next_id += 1
            mods.append(seq)
    if cands:
        return FineTuneResult(tuple(cands), tuple(mods))
    if not any_slot:
        return FineTuneResult((), (), "target features are already specified")
    return FineTuneResult((), (), "target tactic has no placements to draw "
                                  "values from")


def _best_overlap(a: tuple, b: tuple) -> tuple[int, int]:
    """(offset, agreement count) maximizing shared concrete slots; ties pick
    the smaller offset."""
    best_off = -len(b) + 1
    best_score = -1
    for o in range(-len(b) + 1, len(a)):
        lo, hi = max(0, o), min(len(a), o + len(b))
        score = 0
        for pos in range(lo, hi):
            for f in range(len(a[0])):
                va, vb = a[pos][f], b[pos - o][f]
                if va is not None and va == vb:
                    score += 1
        if score > best_score:
            best_off, best_score = o, score
    return best_off, best_score


def _sup_events(a: tuple, b: tuple) -> tuple | None:
    """Common-value super-pattern over the best-overlap window, or None."""
    o, score = _best_overlap(a, b)
    if score <= 0:
        return None
    lo, hi = max(0, o), min(len(a), o + len(b))
    events = []
    for pos in range(lo, hi):
        ev = []
        for f in range(len(a[0])):
            va, vb = a[pos][f], b[pos - o][f]
            ev.append(va if (va is not None and va == vb) else None)
        events.append(tuple(ev))
    merged = normalize_events(events)
    return merged or None


def _gen_merge(c: MergeTactics, targets: Sequence[Tactic], index: DatasetIndex,
               next_id: int) -> FineTuneResult:
    members = sorted(targets, key=lambda t: t.id)
    acc = members[0].events
    for t in members[1:]:
        nxt = _sup_events(acc, t.events)
        if nxt is None:
            return FineTuneResult((), (), "members share no common values")
        acc = nxt
    candidate = Tactic(next_id, acc)
    # Record the edits that take the first member to the merged pattern.
    o, _ = _best_overlap(members[0].events, acc)
    seq: list[Modification] = []
    for e, ev in enumerate(members[0].events):
        for f, v in enumerate(ev):
            if v is None:
                continue
            pos = e - o
            kept = 0 <= pos < len(acc) and acc[pos][f] == v
            if not kept:
                seq.append(Modification("remove", e, f))
    return FineTuneResult((candidate,), (tuple(seq),))


def _gen_expand(c: ExpandTactic, targets: Sequence[Tactic], index: DatasetIndex,
                next_id: int) -> FineTuneResult:
    t = targets[0]
    span = len(t.events)
    h = c.hits
    k = index.k
    if c.direction not in ("front", "back"):
        raise ConstraintError(f"unknown direction {c.direction!r}")
    if h < 1:
        raise ConstraintError("hits must be positive")
    combos: dict[tuple, int] = {}
    for r, s in _usage_values(index, t):
        if c.direction == "back":
            base = s - 1 + span
            if base + h > int(index.lengths[r]):
                continue
            context = [index.values[r, base + i] for i in range(h)]
        else:
            if s - 1 - h < 0:
                continue
            context = [index.values[r, s - 1 - h + i] for i in range(h)]
        for choice in product(range(k), repeat=h):
            key = (choice, tuple(int(context[i][choice[i]]) for i in range(h)))
            combos[key] = combos.get(key, 0) + 1
    if not combos:
        return FineTuneResult((), (), "no placements with room to expand")
    cands: list[Tactic] = []
    mods: list[tuple[Modification, ...]] = []
    for (choice, values) in sorted(combos):
        new_events = tuple(tuple(values[i] if f == choice[i] else None
                                 for f in range(k)) for i in range(h))
        if c.direction == "back":
            events = t.events + new_events
            seq = tuple(Modification("add", span + i, choice[i], values[i])
                        for i in range(h))
        else:
            events = new_events + t.events
            # Prepends apply innermost-first so each lands at offset -1.
            seq = tuple(Modification("add", -1, choice[i], values[i])
                        for i in reversed(range(h)))
        cands.append(Tactic(next_id, events))
        next_id += 1
        mods.append(seq)
    return FineTuneResult(tuple(cands), tuple(mods))


def _gen_trim(c: TrimTactic, targets: Sequence[Tactic], index: DatasetIndex,
              next_id: int) -> FineTuneResult:
    t = targets[0]
    if c.direction not in ("front", "back"):
        raise ConstraintError(f"unknown direction {c.direction!r}")
    if c.hits < 1:
        raise ConstraintError("hits must be positive")
    if c.hits >= len(t.events):
        return FineTuneResult((), (), "trim would remove every event")
    if c.direction == "back":
        kept = t.events[:len(t.events) - c.hits]
        dropped = range(len(t.events) - c.hits, len(t.events))
    else:
        kept = t.events[c.hits:]
        dropped = range(0, c.hits)
    seq = tuple(Modification("remove", e, f)
                for e in dropped for f, v in enumerate(t.events[e])
                if v is not None)
    merged = normalize_events(kept)
    if not merged:
        return FineTuneResult((), (), "nothing concrete left after trim")
    return FineTuneResult((Tactic(next_id, merged),), (seq,))


def generate_fine_tuning(c: LocalConstraint, targets: Sequence[Tactic],
                         d: Dataset, *, index: DatasetIndex | None = None,
                         next_id: int | None = None) -> FineTuneResult:
    """Minimal-depth adjustment candidates for a local constraint.

    Every candidate is reachable from a target by the recorded modification
    sequence, has at least one placement in d, and no strictly shorter
    modification sequence satisfies the constraint.
    """
    if is_global(c):
        raise ConstraintError(f"{type(c).__name__} is not a local constraint")
    if not targets and not isinstance(c, DeleteTactic):
        raise ConstraintError("local constraint needs at least one target")
    if index is None:
        index = shared_index(d)
    if next_id is None:
        next_id = max((t.id for t in targets), default=0) + 1
    if isinstance(c, DeleteTactic):
        return FineTuneResult((), ())
    if isinstance(c, SplitByFeature):
        return _gen_split(c, targets, index, next_id)
    if isinstance(c, SpecifyFeature):
        return _gen_specify(c, targets, index, next_id)
    if isinstance(c, MergeTactics):
        if len(targets) < 2:
            raise ConstraintError("merge needs at least two tactics")
        return _gen_merge(c, targets, index, next_id)
    if isinstance(c, ExpandTactic):
        return _gen_expand(c, targets, index, next_id)
    if isinstance(c, TrimTactic):
        return _gen_trim(c, targets, index, next_id)
    raise ConstraintError(f"unhandled constraint {type(c).__name__}")


def fine_tune_optimize(d: Dataset, tactics: Sequence[Tactic],
                       adjust_ids: Sequence[int], candidates: Sequence[Tactic],
                       params: MetricParams, *,
                       index: DatasetIndex | None = None) -> list[Tactic]:
    """Rebuild the set around an adjustment: drop the adjusted tactics, then
    admit candidates in frequency order.

    A candidate enters when it shortens the starred description length, or
    unconditionally when no candidate has made it in yet, so a non-empty
    candidate list always contributes at least one tactic.  Sweeps touch only
    previously admitted candidates; the rest of the set stays as it is.
    """
    if index is None:
        index = shared_index(d)
    adj = set(adjust_ids)
    cand_ids = {t.id for t in candidates}
    state = CoverState(index, [t for t in tactics if t.id not in adj], params)

    def fewer_nulls(t: Tactic) -> int:
        return len(t.events) * index.k - non_null_count(t.events)

    order = sorted(candidates,
                   key=lambda t: (-index.match_count(t.events), fewer_nulls(t), t.id))
    for ct in order:
        plan = state.try_add(ct)
        have_candidate = any(tid in cand_ids for tid in state.info)
        if not (plan.dl < state.dl or not have_candidate):
            continue
        state.commit(plan)
        admitted = sorted(tid for tid in state.info
                          if tid in cand_ids and tid != ct.id)
        for tid in admitted:
            rm = state.try_remove(tid)
            if rm.dl <= state.dl:
                state.commit(rm)
    return state.tactics
