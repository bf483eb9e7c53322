"""Interactive sessions: snapshots, previews, versioned apply and undo.

A preview never mutates the session.  Applying installs the previewed set and
pushes a full snapshot, so undo restores the exact prior state.  A version
counter guards against applying a diff that was previewed against older
state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from .constraints import (Constraint, ConstraintError, DeleteTactic,
                          FeatureImportance, FineTuneResult, IndexRange,
                          LengthRange, compile_global, fine_tune_optimize,
                          generate_fine_tuning, is_global, remine, target_ids)
from .cover import (MetricParams, TacticStats, cover, evaluate_set,
                    score_and_importance, shared_index, tactic_stats)
from .miner import MinerConfig, mine_initial
from .model import Dataset, Tactic, TacticSet
from .projection import (BasisSet, ProjectionModel, default_basis,
                         fit_projection)


class SessionError(ValueError):
    def __init__(self, message: str, *, code: str):
        super().__init__(message)
        self.code = code


class StaleVersionError(SessionError):
    def __init__(self, expected: int, actual: int):
        super().__init__(
            f"preview was taken at version {expected}, session is at {actual}",
            code="STALE_VERSION")
        self.expected = expected
        self.actual = actual


@dataclass(frozen=True)
class Snapshot:
    tactics: tuple[Tactic, ...]
    global_constraints: tuple[Constraint, ...]
    next_tactic_id: int
    version: int


@dataclass(frozen=True)
class AdjustmentDiff:
    """Result of previewing a constraint against a session state.

    removed/added describe the visible change; new_tactics and new_globals
    carry the full would-be state so apply() needs no recomputation.  An
    empty diff (reason set) applies as a no-op history entry.
    """

    constraint: Constraint
    removed: tuple[int, ...]
    added: tuple[Tactic, ...]
    old_score: float
    new_score: float
    added_stats: dict[int, TacticStats]
    new_tactics: tuple[Tactic, ...]
    new_globals: tuple[Constraint, ...]
    new_next_id: int
    base_version: int
    reason: str | None = None


@dataclass
class HistoryEntry:
    constraint: Constraint
    removed: tuple[int, ...]
    added_ids: tuple[int, ...]
    old_score: float
    new_score: float
    snapshot: Snapshot


class Session:
    """Mutable interactive state over one dataset."""

    def __init__(self, session_id: str, dataset: Dataset,
                 base_params: MetricParams | None = None,
                 config: MinerConfig | None = None):
        self.id = session_id
        self.dataset = dataset
        self.base_params = base_params or MetricParams()
        self.base_params.check()
        self.config = config or MinerConfig()
        self.config.check()
        self.global_constraints: list[Constraint] = []
        self.tactics: tuple[Tactic, ...] = ()
        self.next_tactic_id = 1
        self.version = 0
        self.history: list[HistoryEntry] = []
        self.projection: ProjectionModel | None = None
        self.mined = False

    # -- derived state ------------------------------------------------------

    @property
    def params(self) -> MetricParams:
        return compile_global(self.global_constraints, self.base_params)

    def tactic_set(self) -> TacticSet:
        result = cover(self.dataset, self.tactics)
        return TacticSet(self.tactics, result.usages)

    def score(self, tactics: Sequence[Tactic] | None = None,
              params: MetricParams | None = None) -> float:
        params = params or self.params
        index = shared_index(self.dataset)
        empty, _ = evaluate_set(index, (), params)
        full, _ = evaluate_set(index, tuple(tactics if tactics is not None
                                            else self.tactics), params)
        return empty - full

    def stats(self) -> dict[int, TacticStats]:
        ts = self.tactic_set()
        result = cover(self.dataset, self.tactics)
        _, importances = score_and_importance(self.dataset, ts, self.params)
        return {t.id: tactic_stats(self.dataset, result, ts, t.id, importances[i])
                for i, t in enumerate(ts.tactics)}

    # -- lifecycle ----------------------------------------------------------

    def initial_mine(self) -> None:
        ts = mine_initial(self.dataset, self.params, self.config)
        self.tactics = ts.tactics
        self.next_tactic_id = max((t.id for t in ts.tactics), default=0) + 1
        basis = default_basis(ts, self.dataset.schema.k) if ts.tactics else None
        self.projection = (fit_projection(ts, basis, self.dataset.schema.k)
                           if basis else None)
        self.mined = True
        self.version += 1

    def adopt(self, tactics: Sequence[Tactic]) -> None:
        """Install an externally produced tactic set instead of mining one."""
        self.tactics = tuple(tactics)
        self.next_tactic_id = max((t.id for t in self.tactics), default=0) + 1
        ts = self.tactic_set()
        basis = default_basis(ts, self.dataset.schema.k) if ts.tactics else None
        self.projection = (fit_projection(ts, basis, self.dataset.schema.k)
                           if basis else None)
        self.mined = True
        self.version += 1

    def reset_projection(self) -> None:
        """Explicit refit; never happens implicitly."""
        ts = self.tactic_set()
        if ts.tactics:
            basis = default_basis(ts, self.dataset.schema.k)
            self.projection = fit_projection(ts, basis, self.dataset.schema.k)

    def pin(self, tactic_id: int, pinned: bool = True) -> None:
        found = False
        updated = []
        for t in self.tactics:
            if t.id == tactic_id:
                updated.append(replace(t, pinned=pinned))
                found = True
            else:
                updated.append(t)
        if not found:
            raise SessionError(f"no tactic {tactic_id}", code="VALIDATION")
        self.tactics = tuple(updated)
        self.version += 1

    # -- preview / apply / undo ---------------------------------------------

    def _merged_globals(self, c: Constraint) -> list[Constraint]:
        kept = []
        for old in self.global_constraints:
            if isinstance(c, IndexRange) and isinstance(old, IndexRange):
                continue
            if isinstance(c, LengthRange) and isinstance(old, LengthRange):
                continue
            if isinstance(c, FeatureImportance) and \
                    isinstance(old, FeatureImportance) and old.feature == c.feature:
                continue
            kept.append(old)
        return kept + [c]

    def _preview_global(self, c: Constraint) -> AdjustmentDiff:
        new_globals = self._merged_globals(c)
        new_params = compile_global(new_globals, self.base_params)
        pinned = [t for t in self.tactics if t.pinned]
        mined = remine(self.dataset, new_params, self.config, pinned,
                       warm=self.tactics)

        # Re-found patterns keep their ids so the UI can track them across
        # the remine; genuinely new ones draw fresh ids.
        by_events = {t.events: t for t in self.tactics}
        next_id = self.next_tactic_id
        new_tactics: list[Tactic] = []
        added: list[Tactic] = []
        for t in mined.tactics:
            old = by_events.get(t.events)
            if old is not None:
                new_tactics.append(replace(t, id=old.id, pinned=old.pinned))
            else:
                fresh = replace(t, id=next_id)
                next_id += 1
                new_tactics.append(fresh)
                added.append(fresh)
        new_tactics.sort(key=lambda t: t.id)
        new_events = {t.events for t in new_tactics}
        removed = tuple(t.id for t in self.tactics if t.events not in new_events)
        return self._finish_diff(c, removed, tuple(added), tuple(new_tactics),
                                 tuple(new_globals), next_id, new_params)

    def _preview_local(self, c: Constraint) -> AdjustmentDiff:
        ids = target_ids(c)
        by_id = {t.id: t for t in self.tactics}
        missing = [i for i in ids if i not in by_id]
        if missing:
            raise SessionError(f"unknown tactic id {missing[0]}",
                               code="VALIDATION")
        targets = [by_id[i] for i in ids]
        params = self.params
        gen: FineTuneResult = generate_fine_tuning(
            c, targets, self.dataset, next_id=self.next_tactic_id)
        if not gen.candidates and not isinstance(c, DeleteTactic):
            score = self.score()
            return AdjustmentDiff(
                constraint=c, removed=(), added=(), old_score=score,
                new_score=score, added_stats={}, new_tactics=self.tactics,
                new_globals=tuple(self.global_constraints),
                new_next_id=self.next_tactic_id, base_version=self.version,
                reason=gen.reason or "no candidates")
        next_id = max([t.id for t in gen.candidates], default=self.next_tactic_id - 1) + 1
        result = fine_tune_optimize(self.dataset, self.tactics, ids,
                                    gen.candidates, params)
        result.sort(key=lambda t: t.id)
        current_ids = {t.id for t in self.tactics}
        removed = tuple(i for i in dict.fromkeys(ids) if i in current_ids)
        added = tuple(t for t in result if t.id not in current_ids)
        return self._finish_diff(c, removed, added, tuple(result),
                                 tuple(self.global_constraints), next_id,
                                 params)

    def _finish_diff(self, c: Constraint, removed: tuple[int, ...],
                     added: tuple[Tactic, ...], new_tactics: tuple[Tactic, ...],
                     new_globals: tuple[Constraint, ...], next_id: int,
                     new_params: MetricParams) -> AdjustmentDiff:
        old_score = self.score()
        new_score = self.score(new_tactics, new_params)
        added_stats: dict[int, TacticStats] = {}
        if added:
            result = cover(self.dataset, new_tactics)
            index = shared_index(self.dataset)
            full, _ = evaluate_set(index, new_tactics, new_params)
            for t in added:
                rest = tuple(x for x in new_tactics if x.id != t.id)
                without, _ = evaluate_set(index, rest, new_params)
                added_stats[t.id] = tactic_stats(
                    self.dataset, result, TacticSet(new_tactics, result.usages),
                    t.id, without - full)
        return AdjustmentDiff(
            constraint=c, removed=removed, added=added, old_score=old_score,
            new_score=new_score, added_stats=added_stats,
            new_tactics=new_tactics, new_globals=new_globals,
            new_next_id=next_id, base_version=self.version)

    def preview(self, c: Constraint) -> AdjustmentDiff:
        if is_global(c):
            return self._preview_global(c)
        return self._preview_local(c)

    def apply(self, diff: AdjustmentDiff) -> None:
        if diff.base_version != self.version:
            raise StaleVersionError(diff.base_version, self.version)
        snapshot = Snapshot(self.tactics, tuple(self.global_constraints),
                            self.next_tactic_id, self.version)
        self.history.append(HistoryEntry(
            diff.constraint, diff.removed, tuple(t.id for t in diff.added),
            diff.old_score, diff.new_score, snapshot))
        self.tactics = diff.new_tactics
        self.global_constraints = list(diff.new_globals)
        self.next_tactic_id = diff.new_next_id
        self.version += 1

    def undo(self) -> HistoryEntry:
        if not self.history:
            raise SessionError("nothing to undo", code="VALIDATION")
        entry = self.history.pop()
        self.tactics = entry.snapshot.tactics
        self.global_constraints = list(entry.snapshot.global_constraints)
        self.next_tactic_id = entry.snapshot.next_tactic_id
        self.version += 1
        return entry

    def handle_suggestion(self, text: str, selected_ids: tuple[int, ...] = ()) -> tuple:
        """Parse a free-text suggestion and preview it: (parsed, diff)."""
        from .nlp import context_from_session, parse
        parsed = parse(text, context_from_session(self, selected_ids))
        return parsed, self.preview(parsed.constraint)
