"""Greedy non-overlapping cover and the count-based description length.

The cover assigns tactic placements to rallies so that no hit position is
claimed twice; everything a tactic does not explain stays behind as residual
single values.  The description length rewards tactic sets that explain many
slots with few, frequent patterns, and the starred variant folds user
constraints in as soft penalties.  With no constraints active the starred
length equals the plain one exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .model import (Dataset, Tactic, TacticSet, Usage, non_null_count,
                    non_null_per_feature)

# Priority encoding bit widths; see _priority().  Tactic ids and rally
# lengths must stay below 2**20, far beyond any real data.
_TID_BITS = 20
_START_BITS = 20


@dataclass(frozen=True)
class MetricParams:
    """Weights plus compiled global constraints for the starred metric.

    index_range / length_range are inclusive (lo, hi) bounds; hi may be None
    for "unbounded".  importance maps feature id -> value in [-1, 1].
    """

    alpha: float = 1.0
    beta: float = 1.0
    index_range: tuple[int, int | None] | None = None
    length_range: tuple[int, int | None] | None = None
    importance: Mapping[int, float] = field(default_factory=dict)

    def check(self) -> None:
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        for rng, label in ((self.index_range, "index_range"),
                           (self.length_range, "length_range")):
            if rng is None:
                continue
            lo, hi = rng
            if lo < 1 or (hi is not None and hi < lo):
                raise ValueError(f"bad {label}: {rng}")
        for fid, value in self.importance.items():
            if not -1.0 <= value <= 1.0:
                raise ValueError(f"importance for feature {fid} outside [-1, 1]")


@dataclass(frozen=True)
class CoverResult:
    """Accepted usages per tactic plus what remains unexplained.

    residual_counts maps rally id -> per-feature counts of slots not covered
    by any non-null tactic slot.  Covered non-null slots + residual slots
    always equals the total slot count of the dataset.
    """

    usages: tuple[tuple[Usage, ...], ...]
    freq: tuple[int, ...]
    residual_counts: dict[int, tuple[int, ...]]
    covered_slots: int


@dataclass(frozen=True)
class TacticStats:
    freq: int
    win_rate: float | None
    importance: float
    index_histogram: dict[int, tuple[int, int]]  # start -> (wins, losses)


class DatasetIndex:
    """Array-backed view of a dataset with cached per-tactic match tables.

    Matching and covering run thousands of times during mining; this keeps
    them out of pure-Python hot loops.  The index never mutates the dataset.
    """

    def __init__(self, d: Dataset):
        self.dataset = d
        self.k = d.schema.k
        self.n = len(d.rallies)
        self.lengths = np.array([len(r.events) for r in d.rallies], dtype=np.int64)
        self.max_len = int(self.lengths.max()) if self.n else 0
        self.values = np.full((self.n, self.max_len, self.k), -1, dtype=np.int16)
        for i, r in enumerate(d.rallies):
            for p, ev in enumerate(r.events):
                self.values[i, p, :] = ev
        self.rally_ids = [r.id for r in d.rallies]
        self.focal_win = [r.winner == d.focal_player for r in d.rallies]
        self.slots_per_feature = int(self.lengths.sum())
        self._match_cache: dict[tuple, tuple[list[int], list[int]]] = {}

    def matches(self, events: tuple) -> tuple[list[int], list[int]]:
        """(rally positions, 1-based starts) of every placement of the pattern."""
        cached = self._match_cache.get(events)
        if cached is not None:
            return cached
        span = len(events)
        windows = self.max_len - span + 1
        if windows <= 0 or self.n == 0:
            result: tuple[list[int], list[int]] = ([], [])
            self._match_cache[events] = result
            return result
        ok = self.lengths[:, None] >= (np.arange(windows)[None, :] + span)
        for off, ev in enumerate(events):
            for f, slot in enumerate(ev):
                if slot is not None:
                    ok &= self.values[:, off:off + windows, f] == slot
        ridx, s0 = np.nonzero(ok)
        result = (ridx.tolist(), (s0 + 1).tolist())
        self._match_cache[events] = result
        return result

    def match_count(self, events: tuple) -> int:
        return len(self.matches(events)[0])


def _priority(non_null: int, span: int, tid: int) -> int:
    # Smaller sorts first: more non-null slots, then longer, then (start, id);
    # the start field is added separately by the caller.
    return (((1 << 10) - non_null) << (_TID_BITS + _START_BITS + 10)) | \
           (((1 << 10) - span) << (_TID_BITS + _START_BITS)) | tid


@dataclass
class _CoverCounters:
    """Everything the metric needs, without building Usage objects."""

    m: int
    freq: list[int]
    out_of_range: list[int]
    spans: list[int]
    covered_per_feature: list[int]
    accepted: list[tuple[int, int, int]]  # (tactic idx, rally idx, start)


def _greedy_cover(index: DatasetIndex, tactics: Sequence[Tactic],
                  index_range: tuple[int, int | None] | None,
                  collect: bool) -> _CoverCounters:
    m = len(tactics)
    freq = [0] * m
    out_of_range = [0] * m
    spans = [len(t.events) for t in tactics]
    covered_per_feature = [0] * index.k
    accepted: list[tuple[int, int, int]] = []
    counters = _CoverCounters(m, freq, out_of_range, spans, covered_per_feature,
                              accepted)
    if m == 0 or index.n == 0:
        return counters

    all_ridx: list[np.ndarray] = []
    all_prio: list[np.ndarray] = []
    all_start: list[np.ndarray] = []
    all_tidx: list[np.ndarray] = []
    for i, t in enumerate(tactics):
        ridx, starts = index.matches(t.events)
        if not ridx:
            continue
        starts_arr = np.asarray(starts, dtype=np.int64)
        base = _priority(non_null_count(t.events), spans[i], t.id)
        all_ridx.append(np.asarray(ridx, dtype=np.int64))
        all_prio.append(base + (starts_arr << _TID_BITS))
        all_start.append(starts_arr)
        all_tidx.append(np.full(len(starts), i, dtype=np.int64))
    if not all_ridx:
        return counters

    ridx = np.concatenate(all_ridx)
    prio = np.concatenate(all_prio)
    start = np.concatenate(all_start)
    tidx = np.concatenate(all_tidx)
    order = np.lexsort((prio, ridx))

    ridx_l = ridx[order].tolist()
    start_l = start[order].tolist()
    tidx_l = tidx[order].tolist()

    lo_idx: int | None = None
    hi_idx: int | None = None
    if index_range is not None:
        lo_idx, hi_idx = index_range

    occupancy = [0] * index.n
    for r, s, ti in zip(ridx_l, start_l, tidx_l):
        mask = ((1 << spans[ti]) - 1) << s
        if occupancy[r] & mask:
            continue
        occupancy[r] |= mask
        freq[ti] += 1
        if lo_idx is not None and (s < lo_idx or (hi_idx is not None and s > hi_idx)):
            out_of_range[ti] += 1
        if collect:
            accepted.append((ti, r, s))
    for ti in range(m):
        if freq[ti]:
            nf = non_null_per_feature(tactics[ti].events, index.k)
            for f in range(index.k):
                covered_per_feature[f] += freq[ti] * nf[f]
    return counters


def cover(d: Dataset, tactics: Sequence[Tactic],
          index: DatasetIndex | None = None) -> CoverResult:
    """Greedy per-rally cover: highest-priority placements win, no overlaps.

    Priority is (more non-null slots, longer span, lower start, lower tactic
    id).  The result is a pure function of the inputs.
    """
    if index is None:
        index = shared_index(d)
    counters = _greedy_cover(index, tactics, None, collect=True)

    per_tactic: list[list[Usage]] = [[] for _ in tactics]
    residual = np.repeat(index.lengths[:, None], index.k, axis=1).astype(np.int64)
    nn_features = [non_null_per_feature(t.events, index.k) for t in tactics]
    for ti, r, s in counters.accepted:
        per_tactic[ti].append(Usage(index.rally_ids[r], s))
        for f in range(index.k):
            residual[r, f] -= nn_features[ti][f]
    for lst in per_tactic:
        lst.sort(key=lambda u: (u.rally_id, u.start))
    residual_counts = {index.rally_ids[r]: tuple(int(v) for v in residual[r])
                       for r in range(index.n)}
    covered = int(sum(counters.covered_per_feature))
    return CoverResult(tuple(tuple(lst) for lst in per_tactic),
                       tuple(counters.freq), residual_counts, covered)


def _length_flag(span: int, length_range: tuple[int, int | None] | None) -> int:
    if length_range is None:
        return 0
    lo, hi = length_range
    return 1 if (span < lo or (hi is not None and span > hi)) else 0


def _dl_terms(m: int, freqs: Sequence[int], out_of_range: Sequence[int],
              spans: Sequence[int], residual_per_feature: Sequence[int],
              params: MetricParams) -> float:
    total = float(m)
    has_idx = params.index_range is not None
    for i in range(m):
        f = freqs[i]
        if f == 0:
            continue
        idx_con = (out_of_range[i] / f) if has_idx else 0.0
        len_con = _length_flag(spans[i], params.length_range)
        total += params.alpha * f * (1.0 + idx_con + len_con)
    for fid, residual in enumerate(residual_per_feature):
        weight = 1.0 + float(params.importance.get(fid, 0.0))
        total += params.beta * residual * weight
    return total


def description_length(c: CoverResult, tactics: Sequence[Tactic],
                       params: MetricParams) -> float:
    """Starred description length of an existing cover."""
    if not c.residual_counts:
        k = 0
        residual_per_feature: list[int] = []
    else:
        k = len(next(iter(c.residual_counts.values())))
        residual_per_feature = [0] * k
        for counts in c.residual_counts.values():
            for f in range(k):
                residual_per_feature[f] += counts[f]
    out_of_range = [0] * len(tactics)
    if params.index_range is not None:
        lo, hi = params.index_range
        for i, usages in enumerate(c.usages):
            out_of_range[i] = sum(
                1 for u in usages if u.start < lo or (hi is not None and u.start > hi))
    spans = [len(t.events) for t in tactics]
    return _dl_terms(len(tactics), list(c.freq), out_of_range, spans,
                     residual_per_feature, params)


def evaluate_set(index: DatasetIndex, tactics: Sequence[Tactic],
                 params: MetricParams) -> tuple[float, list[int]]:
    """Starred description length plus accepted frequencies, in one cover pass.

    This is the miner's and the fine-tuner's inner loop; it shares the exact
    greedy cover with cover() but skips building Usage objects.
    """
    counters = _greedy_cover(index, tactics, params.index_range, collect=False)
    residual_per_feature = [index.slots_per_feature - c
                            for c in counters.covered_per_feature]
    dl = _dl_terms(counters.m, counters.freq, counters.out_of_range,
                   counters.spans, residual_per_feature, params)
    return dl, counters.freq


def set_description_length(d: Dataset, tactics: Sequence[Tactic],
                           params: MetricParams,
                           index: DatasetIndex | None = None) -> float:
    """Cover + starred description length in one step."""
    if index is None:
        index = shared_index(d)
    return evaluate_set(index, tactics, params)[0]


class _TacticInfo:
    """Per-tactic cached arrays for incremental covering."""

    __slots__ = ("tactic", "span", "non_null", "nnpf", "rmap")

    def __init__(self, index: DatasetIndex, t: Tactic):
        self.tactic = t
        self.span = len(t.events)
        self.non_null = non_null_count(t.events)
        self.nnpf = non_null_per_feature(t.events, index.k)
        base = _priority(self.non_null, self.span, t.id)
        ridx, starts = index.matches(t.events)
        self.rmap: dict[int, list[tuple[int, int, int, int]]] = {}
        for r, s in zip(ridx, starts):
            entry = (base + (s << _TID_BITS), t.id, s, self.span)
            self.rmap.setdefault(r, []).append(entry)


class CoverState:
    """Greedy cover maintained incrementally under add/remove trials.

    The greedy acceptance is rally-separable: priorities and conflicts never
    cross rally boundaries, so admitting or removing one tactic only disturbs
    rallies where that tactic has matches (for adds) or accepted usages (for
    removals).  try_add/try_remove recompute exactly those rallies and return
    the would-be description length; commit applies a returned plan.  Results
    are bit-identical to evaluate_set on the same tactic list.
    """

    def __init__(self, index: DatasetIndex, tactics: Sequence[Tactic],
                 params: MetricParams):
        self.index = index
        self.params = params
        self.info: dict[int, _TacticInfo] = {}
        self.rmatch: dict[int, list[tuple[int, int, int, int]]] = {}
        self.contrib: dict[int, tuple[dict[int, int], dict[int, int]]] = {}
        self.freq: dict[int, int] = {}
        self.oor: dict[int, int] = {}
        for t in tactics:
            info = _TacticInfo(index, t)
            self.info[t.id] = info
            for r, entries in info.rmap.items():
                self.rmatch.setdefault(r, []).extend(entries)
        for r, entries in self.rmatch.items():
            entries.sort()
            fd, od = self._accept(entries)
            self.contrib[r] = (fd, od)
            for tid, f in fd.items():
                self.freq[tid] = self.freq.get(tid, 0) + f
            for tid, o in od.items():
                self.oor[tid] = self.oor.get(tid, 0) + o
        self.dl = self._dl(list(self.info.values()), self.freq, self.oor)

    @property
    def tactics(self) -> list[Tactic]:
        return [info.tactic for info in self.info.values()]

    def _accept(self, entries: list[tuple[int, int, int, int]],
                ) -> tuple[dict[int, int], dict[int, int]]:
        rng = self.params.index_range
        lo, hi = rng if rng is not None else (None, None)
        occ = 0
        fd: dict[int, int] = {}
        od: dict[int, int] = {}
        for _, tid, start, span in entries:
            mask = ((1 << span) - 1) << start
            if occ & mask:
                continue
            occ |= mask
            fd[tid] = fd.get(tid, 0) + 1
            if lo is not None and (start < lo or (hi is not None and start > hi)):
                od[tid] = od.get(tid, 0) + 1
        return fd, od

    def _dl(self, infos: Sequence[_TacticInfo], freq: dict[int, int],
            oor: dict[int, int]) -> float:
        p = self.params
        total = float(len(infos))
        has_idx = p.index_range is not None
        covered = [0] * self.index.k
        for info in infos:
            f = freq.get(info.tactic.id, 0)
            if not f:
                continue
            idx_con = (oor.get(info.tactic.id, 0) / f) if has_idx else 0.0
            len_con = _length_flag(info.span, p.length_range)
            total += p.alpha * f * (1.0 + idx_con + len_con)
            for g in range(self.index.k):
                covered[g] += f * info.nnpf[g]
        for g in range(self.index.k):
            weight = 1.0 + float(p.importance.get(g, 0.0))
            total += p.beta * (self.index.slots_per_feature - covered[g]) * weight
        return total

    def _retally(self, affected: Sequence[int],
                 new_contribs: dict[int, tuple[dict[int, int], dict[int, int]]],
                 ) -> tuple[dict[int, int], dict[int, int]]:
        freq2 = dict(self.freq)
        oor2 = dict(self.oor)
        for r in affected:
            old_fd, old_od = self.contrib.get(r, ({}, {}))
            for tid, f in old_fd.items():
                freq2[tid] -= f
            for tid, o in old_od.items():
                oor2[tid] -= o
            fd, od = new_contribs[r]
            for tid, f in fd.items():
                freq2[tid] = freq2.get(tid, 0) + f
            for tid, o in od.items():
                oor2[tid] = oor2.get(tid, 0) + o
        return freq2, oor2

    def try_add(self, t: Tactic) -> "CoverPlan":
        if t.id in self.info:
            raise ValueError(f"tactic id {t.id} already present")
        info = _TacticInfo(self.index, t)
        new_contribs = {}
        for r, entries in info.rmap.items():
            merged = sorted(self.rmatch.get(r, []) + entries)
            new_contribs[r] = self._accept(merged)
        freq2, oor2 = self._retally(list(info.rmap), new_contribs)
        dl = self._dl(list(self.info.values()) + [info], freq2, oor2)
        return CoverPlan("add", info, new_contribs, freq2, oor2, dl)

    def try_remove(self, tactic_id: int) -> "CoverPlan":
        info = self.info[tactic_id]
        affected = [r for r in info.rmap
                    if self.contrib.get(r, ({}, {}))[0].get(tactic_id)]
        new_contribs = {}
        for r in affected:
            entries = [e for e in self.rmatch[r] if e[1] != tactic_id]
            new_contribs[r] = self._accept(entries)
        freq2, oor2 = self._retally(affected, new_contribs)
        freq2.pop(tactic_id, None)
        oor2.pop(tactic_id, None)
        remaining = [i for i in self.info.values() if i.tactic.id != tactic_id]
        dl = self._dl(remaining, freq2, oor2)
        return CoverPlan("remove", info, new_contribs, freq2, oor2, dl)

    def commit(self, plan: "CoverPlan") -> None:
        tid = plan.info.tactic.id
        if plan.action == "add":
            self.info[tid] = plan.info
            for r, entries in plan.info.rmap.items():
                if r in self.rmatch:
                    merged = self.rmatch[r] + entries
                    merged.sort()
                    self.rmatch[r] = merged
                else:
                    self.rmatch[r] = sorted(entries)
        else:
            del self.info[tid]
            for r in plan.info.rmap:
                remaining = [e for e in self.rmatch[r] if e[1] != tid]
                if remaining:
                    self.rmatch[r] = remaining
                else:
                    del self.rmatch[r]
                    self.contrib.pop(r, None)
        for r, c in plan.contribs.items():
            self.contrib[r] = c
        self.freq = plan.freq
        self.oor = plan.oor
        self.dl = plan.dl


@dataclass(frozen=True)
class CoverPlan:
    """Outcome of a CoverState trial, ready to commit."""

    action: str
    info: _TacticInfo
    contribs: dict[int, tuple[dict[int, int], dict[int, int]]]
    freq: dict[int, int]
    oor: dict[int, int]
    dl: float


_INDEX_CACHE: list[DatasetIndex] = []


def shared_index(d: Dataset) -> DatasetIndex:
    """Memoized DatasetIndex per dataset instance (identity-keyed)."""
    for idx in _INDEX_CACHE:
        if idx.dataset is d:
            return idx
    idx = DatasetIndex(d)
    _INDEX_CACHE.append(idx)
    if len(_INDEX_CACHE) > 4:
        _INDEX_CACHE.pop(0)
    return idx


def score_and_importance(d: Dataset, ts: TacticSet,
                         params: MetricParams) -> tuple[float, list[float]]:
    """Score of the set against the empty model plus per-tactic importance.

    score = L(empty) - L(T); importance(t) = L(T - t) - L(T), so larger means
    the set gets worse without the tactic.
    """
    index = shared_index(d)
    empty = set_description_length(d, (), params, index)
    full = set_description_length(d, ts.tactics, params, index)
    importances = []
    for i in range(len(ts.tactics)):
        rest = ts.tactics[:i] + ts.tactics[i + 1:]
        importances.append(set_description_length(d, rest, params, index) - full)
    return empty - full, importances


def tactic_stats(d: Dataset, c: CoverResult, ts: TacticSet, tactic_id: int,
                 importance: float = 0.0) -> TacticStats:
    """Frequency, focal win rate and start-index histogram for one tactic."""
    pos = ts.ids.index(tactic_id)
    usages = c.usages[pos]
    wins_by = {r.id: r.winner == d.focal_player for r in d.rallies}
    histogram: dict[int, tuple[int, int]] = {}
    wins = 0
    for u in usages:
        won = wins_by[u.rally_id]
        w, l = histogram.get(u.start, (0, 0))
        histogram[u.start] = (w + 1, l) if won else (w, l + 1)
        if won:
            wins += 1
    freq = len(usages)
    win_rate = (wins / freq) if freq else None
    return TacticStats(freq, win_rate, importance, dict(sorted(histogram.items())))
