"""Semantic polar projection of tactics.

Angle comes from the two features a tactic constrains most (sector by the
primary, rank-based subdivision by the secondary), radius from a frozen 1-D
principal component over similarity to a fixed basis.  The model never moves
once fitted, so untouched tactics keep their position through adjustments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cover import TacticStats
from .model import Tactic, TacticSet, non_null_per_feature

RADIUS_MIN = 0.15
RADIUS_MAX = 1.0
DEFAULT_BASIS_SIZE = 10


def _event_cost(a: tuple, b: tuple) -> float:
    k = len(a)
    disagree = 0.0
    for f in range(k):
        va, vb = a[f], b[f]
        if va is None and vb is None:
            continue
        if va is None or vb is None:
            disagree += 0.5
        elif va != vb:
            disagree += 1.0
    return disagree / k


def tactic_distance(t1: Tactic, t2: Tactic) -> float:
    """Normalized event-level edit distance in [0, 1].

    Substitution costs the fraction of disagreeing slots (a concrete value
    against a null counts half); insert/delete cost one event.  The total is
    divided by the longer tactic's length.
    """
    a, b = t1.events, t2.events
    n, m = len(a), len(b)
    prev = [float(j) for j in range(m + 1)]
    for i in range(1, n + 1):
        cur = [float(i)] + [0.0] * m
        for j in range(1, m + 1):
            cur[j] = min(prev[j] + 1.0,
                         cur[j - 1] + 1.0,
                         prev[j - 1] + _event_cost(a[i - 1], b[j - 1]))
        prev = cur
    return prev[m] / max(n, m)


@dataclass(frozen=True)
class BasisSet:
    tactics: tuple[Tactic, ...]
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.tactics) < 2:
            raise ValueError("basis needs at least two tactics")
        if len(self.names) != len(self.tactics):
            raise ValueError("names not parallel to tactics")

    @property
    def size(self) -> int:
        return len(self.tactics)


def default_basis(initial: TacticSet, k: int,
                  size: int = DEFAULT_BASIS_SIZE) -> BasisSet:
    """Procedural basis drawn from the initial set: shortest, longest, the
    most specialized pattern per feature, then highest-frequency fillers."""
    tactics = list(initial.tactics)
    if not tactics:
        raise ValueError("cannot build a basis from an empty set")
    freqs = {t.id: len(initial.usages[i]) if initial.usages else 0
             for i, t in enumerate(tactics)}
    picks: list[tuple[str, Tactic]] = []

    def push(name: str, t: Tactic) -> None:
        if all(p.events != t.events for _, p in picks):
            picks.append((name, t))

    push("shortest", min(tactics, key=lambda t: (len(t.events), t.id)))
    push("longest", max(tactics, key=lambda t: (len(t.events), -t.id)))
    for f in range(k):
        best = max(tactics,
                   key=lambda t: (non_null_per_feature(t.events, k)[f], -t.id))
        push(f"feature-{f}", best)
    by_freq = sorted(tactics, key=lambda t: (-freqs[t.id], t.id))
    for t in by_freq:
        if len(picks) >= size:
            break
        push(f"frequent-{t.id}", t)
    # Pad by repeating the most frequent pattern when the set is very small.
    while len(picks) < 2:
        picks.append((f"pad-{len(picks)}", by_freq[0]))
    basis_tactics = tuple(Tactic(i + 1, t.events) for i, (_, t) in enumerate(picks))
    names = tuple(name for name, _ in picks)
    return BasisSet(basis_tactics, names)


def similarity_vector(t: Tactic, basis: BasisSet) -> np.ndarray:
    """Unit-norm vector of (1 - distance) to each basis tactic.

    An all-zero raw vector falls back to the uniform unit vector so the
    projection stays defined.
    """
    raw = np.array([1.0 - tactic_distance(t, b) for b in basis.tactics])
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:
        return np.full(basis.size, 1.0 / math.sqrt(basis.size))
    return raw / norm


@dataclass(frozen=True)
class ProjectionModel:
    """Frozen projection state: basis, PCA axis and radius calibration."""

    basis: BasisSet
    center: tuple[float, ...]
    axis: tuple[float, ...]
    radius_bounds: tuple[float, float]
    k: int


@dataclass(frozen=True)
class ProjectedPoint:
    tactic_id: int
    angle: float
    radius: float
    size: float
    win_rate: float | None


def fit_projection(initial: TacticSet, basis: BasisSet, k: int) -> ProjectionModel:
    """Fit the frozen 1-D PCA over the initial set's similarity vectors.

    The axis sign is fixed so the highest-frequency tactic projects to a
    non-negative coordinate; with fewer than two distinct vectors the axis
    falls back to the first basis dimension.
    """
    if not initial.tactics:
        raise ValueError("cannot fit a projection on an empty set")
    vectors = np.stack([similarity_vector(t, basis) for t in initial.tactics])
    center = vectors.mean(axis=0)
    centered = vectors - center

    distinct = np.unique(np.round(vectors, 12), axis=0)
    if len(distinct) < 2:
        axis = np.zeros(basis.size)
        axis[0] = 1.0
    else:
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        axis = vt[0]

    freqs = [len(initial.usages[i]) if initial.usages else 0
             for i in range(len(initial.tactics))]
    top = min(range(len(initial.tactics)),
              key=lambda i: (-freqs[i], initial.tactics[i].id))
    if float(centered[top] @ axis) < 0.0:
        axis = -axis

    coords = centered @ axis
    bounds = (float(coords.min()), float(coords.max()))
    return ProjectionModel(basis, tuple(float(v) for v in center),
                           tuple(float(v) for v in axis), bounds, k)


def _angle(events: tuple, k: int) -> float:
    counts = non_null_per_feature(events, k)
    primary = min(range(k), key=lambda f: (-counts[f], f))
    sector = 2.0 * math.pi / k
    start = primary * sector
    if k == 1:
        return start + sector / 2.0
    remaining = [f for f in range(k) if f != primary]
    secondary = min(remaining, key=lambda f: (-counts[f], f))
    rank = remaining.index(secondary)
    return start + (rank + 0.5) * sector / (k - 1)


def project(model: ProjectionModel, t: Tactic, stats: TacticStats,
            size_channel: str = "freq") -> ProjectedPoint:
    """Polar placement of one tactic; pure in (model, tactic, stats)."""
    vec = similarity_vector(t, model.basis)
    coord = float((vec - np.asarray(model.center)) @ np.asarray(model.axis))
    lo, hi = model.radius_bounds
    if hi > lo:
        unit = (coord - lo) / (hi - lo)
    else:
        unit = 0.5
    unit = min(1.0, max(0.0, unit))
    radius = RADIUS_MIN + unit * (RADIUS_MAX - RADIUS_MIN)
    if size_channel == "freq":
        size = float(stats.freq)
    elif size_channel == "importance":
        size = float(stats.importance)
    else:
        raise ValueError(f"unknown size channel {size_channel!r}")
    return ProjectedPoint(t.id, _angle(t.events, model.k), radius, size,
                          stats.win_rate)
