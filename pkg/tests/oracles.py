"""Reference implementations the package is checked against.

Everything here favours clarity over speed: plain tuples, dicts, recursion
and exhaustive search.  Nothing shares data structures or helpers with the
package beyond its public value types.
"""

from __future__ import annotations

import math
from functools import lru_cache

from tacmine.constraints import Modification, apply_modification
from tacmine.model import normalize_events


# -- matching ---------------------------------------------------------------

def matches_at(events, rally_events, start0) -> bool:
    if start0 < 0 or start0 + len(events) > len(rally_events):
        return False
    for e, pattern_event in enumerate(events):
        for f, v in enumerate(pattern_event):
            if v is not None and rally_events[start0 + e][f] != v:
                return False
    return True


def all_matches(events, rally_events) -> list[int]:
    """0-based start offsets of every placement in one rally."""
    return [s for s in range(len(rally_events) - len(events) + 1)
            if matches_at(events, rally_events, s)]


def match_count(dataset, events) -> int:
    return sum(len(all_matches(events, r.events)) for r in dataset.rallies)


# -- covering ---------------------------------------------------------------

def priority_key(tactic, start0):
    """More concrete values, then longer, then earlier, then lower id."""
    nn = sum(v is not None for ev in tactic.events for v in ev)
    return (-nn, -len(tactic.events), start0, tactic.id)


def ref_cover(dataset, tactics) -> list[list[tuple[int, int]]]:
    """Greedy per-rally cover; usages as (rally_id, 1-based start) lists."""
    slot = {t.id: i for i, t in enumerate(tactics)}
    usages: list[list[tuple[int, int]]] = [[] for _ in tactics]
    for rally in dataset.rallies:
        cands = []
        for t in tactics:
            for s in all_matches(t.events, rally.events):
                cands.append((priority_key(t, s), t, s))
        cands.sort(key=lambda c: c[0])
        taken: set[int] = set()
        for _, t, s in cands:
            hits = set(range(s, s + len(t.events)))
            if hits & taken:
                continue
            taken |= hits
            usages[slot[t.id]].append((rally.id, s + 1))
    return usages


def exhaustive_rally_cover(cands):
    """All-subsets reference for one rally.

    cands: list of (key, tid, start0, span).  Among every maximal
    non-overlapping subset, returns the one whose sorted key tuple is
    lexicographically smallest, as a set of (tid, start0).
    """
    n = len(cands)
    occ = [((1 << span) - 1) << s for _, _, s, span in cands]
    best_sig = None
    best = None
    for mask in range(1 << n):
        used = 0
        ok = True
        for i in range(n):
            if not mask >> i & 1:
                continue
            if used & occ[i]:
                ok = False
                break
            used |= occ[i]
        if not ok:
            continue
        if any(not mask >> i & 1 and not occ[i] & used for i in range(n)):
            continue  # not maximal
        sig = tuple(sorted(cands[i][0] for i in range(n) if mask >> i & 1))
        if best_sig is None or sig < best_sig:
            best_sig = sig
            best = {(cands[i][1], cands[i][2]) for i in range(n) if mask >> i & 1}
    return best if best is not None else set()


def exhaustive_cover(dataset, tactics) -> dict[int, set[tuple[int, int]]]:
    """tactic id -> accepted (rally_id, 1-based start), via per-rally
    enumeration.  Overlap never crosses rallies, so this is exact."""
    out: dict[int, set[tuple[int, int]]] = {t.id: set() for t in tactics}
    for rally in dataset.rallies:
        cands = []
        for t in tactics:
            for s in all_matches(t.events, rally.events):
                cands.append((priority_key(t, s), t.id, s, len(t.events)))
        for tid, s in exhaustive_rally_cover(cands):
            out[tid].add((rally.id, s + 1))
    return out


# -- description length -----------------------------------------------------

def ref_dl(dataset, tactics, params) -> float:
    """Starred description length from first principles.

    Term shapes and accumulation order deliberately mirror the defining
    formula so that, given equal integer frequencies, the result is
    bit-identical to the package's evaluation.
    """
    usages = ref_cover(dataset, tactics)
    k = dataset.schema.k
    total = float(len(tactics))
    covered = [0] * k
    for t, us in zip(tactics, usages):
        f = len(us)
        if f == 0:
            continue
        idx_con = 0.0
        if params.index_range is not None:
            lo, hi = params.index_range
            oor = sum(1 for _, s in us
                      if s < lo or (hi is not None and s > hi))
            idx_con = oor / f
        len_con = 0
        if params.length_range is not None:
            lo, hi = params.length_range
            if len(t.events) < lo or (hi is not None and len(t.events) > hi):
                len_con = 1
        total += params.alpha * f * (1.0 + idx_con + len_con)
        for ev in t.events:
            for g, v in enumerate(ev):
                if v is not None:
                    covered[g] += f
    slots = sum(len(r.events) for r in dataset.rallies)
    for g in range(k):
        weight = 1.0 + float(params.importance.get(g, 0.0))
        total += params.beta * (slots - covered[g]) * weight
    return total


# -- fine-tuning step simulator ---------------------------------------------

def ref_fine_tune(dataset, tactics, adjust_ids, candidates, params):
    """Independent replay of the fine-tuning optimizer.

    Admission order: match count desc, fewer nulls, id.  A candidate enters
    when it shortens the description or when none has entered yet; after
    each entry, previously entered candidates leave (ascending id) while
    that does not lengthen the description.
    """
    adj = set(adjust_ids)
    cand_ids = {t.id for t in candidates}
    current = [t for t in tactics if t.id not in adj]
    cur_dl = ref_dl(dataset, current, params)

    def order(t):
        nulls = sum(v is None for ev in t.events for v in ev)
        return (-match_count(dataset, t.events), nulls, t.id)

    for ct in sorted(candidates, key=order):
        trial = current + [ct]
        dl = ref_dl(dataset, trial, params)
        if not (dl < cur_dl or not any(t.id in cand_ids for t in current)):
            continue
        current, cur_dl = trial, dl
        for tid in sorted(t.id for t in current
                          if t.id in cand_ids and t.id != ct.id):
            rest = [t for t in current if t.id != tid]
            rm_dl = ref_dl(dataset, rest, params)
            if rm_dl <= cur_dl:
                current, cur_dl = rest, rm_dl
    return current


# -- edit distance ----------------------------------------------------------

def ref_distance(a_events, b_events) -> float:
    """Recursive normalized event edit distance; memoized, no tables."""
    k = len(a_events[0])

    def sub(i, j):
        d = 0.0
        for f in range(k):
            va, vb = a_events[i][f], b_events[j][f]
            if va is None and vb is None:
                continue
            if va is None or vb is None:
                d += 0.5
            elif va != vb:
                d += 1.0
        return d / k

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a_events):
            return float(len(b_events) - j)
        if j == len(b_events):
            return float(len(a_events) - i)
        return min(go(i + 1, j) + 1.0,
                   go(i, j + 1) + 1.0,
                   go(i + 1, j + 1) + sub(i, j))

    result = go(0, 0) / max(len(a_events), len(b_events))
    go.cache_clear()
    return result


# -- principal axis ---------------------------------------------------------

def first_pc(rows, iterations=2000) -> list[float]:
    """First principal axis of centered rows, by power iteration on the
    covariance matrix.  Sign is arbitrary."""
    n, d = len(rows), len(rows[0])
    mean = [sum(r[f] for r in rows) / n for f in range(d)]
    x = [[r[f] - mean[f] for f in range(d)] for r in rows]
    cov = [[sum(xi[p] * xi[q] for xi in x) for q in range(d)] for p in range(d)]
    v = [1.0 / math.sqrt(d)] * d
    for _ in range(iterations):
        w = [sum(cov[p][q] * v[q] for q in range(d)) for p in range(d)]
        norm = math.sqrt(sum(c * c for c in w))
        if norm == 0.0:
            return v
        v = [c / norm for c in w]
    return v


# -- modification search ----------------------------------------------------

def generalizes(p_events, t_events) -> bool:
    """p matches at every position t matches: p aligns inside t with every
    concrete slot agreeing."""
    lp, lt = len(p_events), len(t_events)
    if lp > lt:
        return False
    for o in range(lt - lp + 1):
        if all(v is None or v == t_events[o + e][f]
               for e, ev in enumerate(p_events) for f, v in enumerate(ev)):
            return True
    return False


def single_modifications(events, k, values_per_feature):
    mods = []
    for e in range(-1, len(events) + 1):
        for f in range(k):
            for v in range(values_per_feature):
                mods.append(Modification("add", e, f, v))
    for e in range(len(events)):
        for f in range(k):
            mods.append(Modification("remove", e, f))
            for v in range(values_per_feature):
                mods.append(Modification("replace", e, f, v))
    return mods


def reachable(events, depth, k, values_per_feature) -> set[tuple]:
    """Every raw pattern reachable with at most `depth` modifications.

    Patterns are not normalized; normalize before judging satisfaction so
    boundary events emptied by removes count as dropped.
    """
    seen = {events}
    frontier = {events}
    for _ in range(depth):
        grown = set()
        for ev in frontier:
            for mod in single_modifications(ev, k, values_per_feature):
                try:
                    out = apply_modification(ev, mod)
                except ValueError:
                    continue
                if out not in seen:
                    seen.add(out)
                    grown.add(out)
        frontier = grown
    return seen
