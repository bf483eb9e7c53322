"""Data model for multivariate rally sequences and value-nullable tactic patterns.

A rally is an ordered list of hits and every hit carries exactly one
categorical value per schema feature.  A tactic is a pattern over consecutive
hits in which a slot may be None, meaning "any value".  Nulls appear only in
patterns; raw hit data is always fully concrete.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

# One slot per feature.  Hits hold value ids, pattern events may hold None.
HitEvent = "tuple[int, ...]"
PatternEvent = "tuple[int | None, ...]"


class ValidationError(ValueError):
    """Raised when raw input violates the data model.

    Carries enough context (offending rally id / field) for callers to build
    machine-readable error payloads.
    """

    def __init__(self, message: str, *, rally_id: int | None = None,
                 where: str | None = None):
        super().__init__(message)
        self.message = message
        self.rally_id = rally_id
        self.where = where


@dataclass(frozen=True)
class Feature:
    name: str
    values: tuple[str, ...]


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered categorical features shared by all hits of a dataset."""

    features: tuple[Feature, ...]

    @property
    def k(self) -> int:
        return len(self.features)

    def feature_id(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(name)

    def value_id(self, fid: int, name: str) -> int:
        try:
            return self.features[fid].values.index(name)
        except ValueError:
            raise KeyError(name) from None

    def check(self) -> None:
        if not self.features:
            raise ValidationError("schema needs at least one feature", where="schema")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate feature names", where="schema")
        for f in self.features:
            if len(f.values) < 2:
                raise ValidationError(
                    f"feature {f.name!r} needs at least two values", where="schema")
            if len(set(f.values)) != len(f.values):
                raise ValidationError(
                    f"duplicate values in feature {f.name!r}", where="schema")


def schema_of(pairs: Sequence[tuple[str, Sequence[str]]]) -> FeatureSchema:
    """Build a schema from (name, values) pairs.  Convenience for tests and tools."""
    s = FeatureSchema(tuple(Feature(n, tuple(v)) for n, v in pairs))
    s.check()
    return s


@dataclass(frozen=True)
class Rally:
    id: int
    server: int
    winner: int
    events: tuple[HitEvent, ...]  # type: ignore[valid-type]


@dataclass(frozen=True)
class Dataset:
    schema: FeatureSchema
    rallies: tuple[Rally, ...]
    focal_player: int = 0

    def rally(self, rally_id: int) -> Rally:
        for r in self.rallies:
            if r.id == rally_id:
                return r
        raise KeyError(rally_id)

    @property
    def total_slots(self) -> int:
        return sum(len(r.events) for r in self.rallies) * self.schema.k


@dataclass(frozen=True)
class Tactic:
    """A consecutive, value-nullable pattern over rally hits.

    Invariants enforced on construction: at least one non-null slot overall,
    uniform slot count per event, and no all-null boundary event.
    """

    id: int
    events: tuple[PatternEvent, ...]  # type: ignore[valid-type]
    pinned: bool = False

    def __post_init__(self) -> None:
        if not self.events:
            raise ValidationError("tactic needs at least one event")
        widths = {len(e) for e in self.events}
        if len(widths) != 1:
            raise ValidationError("tactic events disagree on slot count")
        if non_null_count(self.events) == 0:
            raise ValidationError("tactic needs at least one non-null slot")
        for boundary in (self.events[0], self.events[-1]):
            if all(v is None for v in boundary):
                raise ValidationError("tactic boundary event is all-null")

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class Usage:
    """One placement of a tactic: 1-based start index inside a rally."""

    rally_id: int
    start: int


@dataclass(frozen=True)
class TacticSet:
    tactics: tuple[Tactic, ...]
    usages: tuple[tuple[Usage, ...], ...] = ()

    def __post_init__(self) -> None:
        ids = [t.id for t in self.tactics]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate tactic ids in set")
        if self.usages and len(self.usages) != len(self.tactics):
            raise ValidationError("usages not parallel to tactics")

    def by_id(self, tactic_id: int) -> Tactic:
        for t in self.tactics:
            if t.id == tactic_id:
                return t
        raise KeyError(tactic_id)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(t.id for t in self.tactics)


def non_null_count(events: Iterable[Sequence]) -> int:
    return sum(1 for e in events for v in e if v is not None)


def non_null_per_feature(events: Sequence[Sequence], k: int) -> tuple[int, ...]:
    counts = [0] * k
    for e in events:
        for f, v in enumerate(e):
            if v is not None:
                counts[f] += 1
    return tuple(counts)


def normalize_events(events: Sequence[Sequence]) -> tuple:
    """Strip all-null boundary events; may return an empty tuple."""
    evs = list(tuple(e) for e in events)
    while evs and all(v is None for v in evs[0]):
        evs.pop(0)
    while evs and all(v is None for v in evs[-1]):
        evs.pop()
    return tuple(evs)


def match_at(t: Tactic, r: Rally, start: int) -> bool:
    """True iff t's events align with consecutive hits of r beginning at `start`.

    `start` is 1-based.  A null slot matches anything; a concrete slot must
    equal the hit value.  Out-of-range starts simply fail.
    """
    if start < 1 or start + len(t.events) - 1 > len(r.events):
        return False
    for off, pattern_event in enumerate(t.events):
        hit = r.events[start - 1 + off]
        for f, slot in enumerate(pattern_event):
            if slot is not None and hit[f] != slot:
                return False
    return True


def enumerate_matches(t: Tactic, d: Dataset) -> list[Usage]:
    """All placements of t in d, sorted by (rally_id, start)."""
    out: list[Usage] = []
    span = len(t.events)
    for r in d.rallies:
        for s in range(1, len(r.events) - span + 2):
            if match_at(t, r, s):
                out.append(Usage(r.id, s))
    out.sort(key=lambda u: (u.rally_id, u.start))
    return out


def validate_dataset(doc: dict, *, focal_player: int | None = None) -> Dataset:
    """Turn a raw dataset document into a typed Dataset, or raise ValidationError.

    The document layout matches the on-disk format: feature schema with value
    names, rallies with events as arrays of value names.
    """
    try:
        raw_features = doc["schema"]["features"]
    except (KeyError, TypeError):
        raise ValidationError("missing schema.features", where="schema") from None
    features = []
    for rf in raw_features:
        try:
            features.append(Feature(str(rf["name"]), tuple(str(v) for v in rf["values"])))
        except (KeyError, TypeError):
            raise ValidationError("malformed feature entry", where="schema") from None
    schema = FeatureSchema(tuple(features))
    schema.check()

    focal = doc.get("focal_player", 0) if focal_player is None else focal_player
    if focal not in (0, 1):
        raise ValidationError("focal_player must be 0 or 1", where="focal_player")

    rallies = []
    seen_ids: set[int] = set()
    for rr in doc.get("rallies", ()):
        try:
            rid = int(rr["id"])
            server = int(rr["server"])
            winner = int(rr["winner"])
            raw_events = rr["events"]
        except (KeyError, TypeError, ValueError):
            raise ValidationError("malformed rally entry", where="rallies") from None
        if rid in seen_ids:
            raise ValidationError(f"duplicate rally id {rid}", rally_id=rid)
        seen_ids.add(rid)
        if server not in (0, 1) or winner not in (0, 1):
            raise ValidationError(
                f"rally {rid}: server/winner must be 0 or 1", rally_id=rid)
        if not raw_events:
            raise ValidationError(f"rally {rid} has no events", rally_id=rid)
        events = []
        for pos, ev in enumerate(raw_events, start=1):
            if len(ev) != schema.k:
                raise ValidationError(
                    f"rally {rid} hit {pos}: expected {schema.k} values, got {len(ev)}",
                    rally_id=rid)
            slots = []
            for fid, name in enumerate(ev):
                if name is None:
                    raise ValidationError(
                        f"rally {rid} hit {pos}: null value in raw data", rally_id=rid)
                try:
                    slots.append(schema.value_id(fid, str(name)))
                except KeyError:
                    raise ValidationError(
                        f"rally {rid} hit {pos}: unknown value {name!r} "
                        f"for feature {schema.features[fid].name!r}",
                        rally_id=rid) from None
            events.append(tuple(slots))
        rallies.append(Rally(rid, server, winner, tuple(events)))

    return Dataset(schema, tuple(rallies), focal)
