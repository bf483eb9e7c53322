import random

import pytest

import oracles
from builders import make_dataset, observed_tactic, random_tactic
from tacmine.cover import (CoverState, DatasetIndex, MetricParams, cover,
                           description_length, evaluate_set,
                           score_and_importance, set_description_length,
                           shared_index, tactic_stats)
from tacmine.model import Tactic, TacticSet


def _random_params(rng: random.Random, k: int) -> MetricParams:
    imp = {}
    if rng.random() < 0.5:
        imp[rng.randrange(k)] = rng.choice([-1.0, -0.5, 0.5, 1.0])
    return MetricParams(
        alpha=rng.choice([0.25, 0.5, 1.0]),
        beta=rng.choice([0.25, 0.5, 1.0]),
        index_range=rng.choice([None, (1, 2), (2, None), (1, 3)]),
        length_range=rng.choice([None, (1, 1), (2, None), (1, 2)]),
        importance=imp,
    )


def _tactics(rng, d, n, k, values) -> list[Tactic]:
    out = []
    for i in range(n):
        if rng.random() < 0.7:
            out.append(observed_tactic(rng, d, i + 1, rng.randint(1, 3)))
        else:
            out.append(random_tactic(rng, i + 1, rng.randint(1, 3), k, values))
    return out


def test_metric_params_check():
    with pytest.raises(ValueError):
        MetricParams(alpha=0.0).check()
    with pytest.raises(ValueError):
        MetricParams(beta=-1.0).check()
    with pytest.raises(ValueError):
        MetricParams(index_range=(0, 2)).check()
    with pytest.raises(ValueError):
        MetricParams(index_range=(3, 2)).check()
    with pytest.raises(ValueError):
        MetricParams(importance={0: 1.5}).check()
    MetricParams(index_range=(1, None), importance={0: -1.0}).check()


def test_index_matches_and_counts():
    rng = random.Random(3)
    d = make_dataset(rng, n_rallies=6, max_len=6, k=2, values=3)
    index = DatasetIndex(d)
    assert index.slots_per_feature == sum(len(r.events) for r in d.rallies)
    for _ in range(30):
        t = random_tactic(rng, 1, rng.randint(1, 3), 2, 3)
        ridx, starts = index.matches(t.events)
        want = [(i, s + 1) for i, r in enumerate(d.rallies)
                for s in oracles.all_matches(t.events, r.events)]
        assert list(zip(ridx, starts)) == want
        assert index.match_count(t.events) == len(want)


def test_cover_against_exhaustive_enumeration():
    rng = random.Random(11)
    for trial in range(25):
        d = make_dataset(rng, n_rallies=rng.randint(2, 8), max_len=4,
                         k=2, values=rng.randint(2, 3))
        tactics = _tactics(rng, d, rng.randint(1, 3), 2, 3)
        result = cover(d, tactics)
        got = {t.id: {(u.rally_id, u.start) for u in result.usages[i]}
               for i, t in enumerate(tactics)}
        want = oracles.exhaustive_cover(d, tactics)
        assert got == want, f"trial {trial}"


def test_cover_accounting():
    rng = random.Random(5)
    for _ in range(20):
        d = make_dataset(rng, n_rallies=6, max_len=5, k=2, values=3)
        tactics = _tactics(rng, d, 3, 2, 3)
        result = cover(d, tactics)
        # freq mirrors usage list lengths
        assert list(result.freq) == [len(u) for u in result.usages]
        # covered + residual slots account for every slot exactly once
        residual = sum(sum(c) for c in result.residual_counts.values())
        assert result.covered_slots + residual == d.total_slots
        # no two usages overlap within a rally
        for rally in d.rallies:
            occupied = set()
            for i, t in enumerate(tactics):
                for u in result.usages[i]:
                    if u.rally_id != rally.id:
                        continue
                    hits = set(range(u.start, u.start + len(t.events)))
                    assert not hits & occupied
                    occupied |= hits


def test_description_length_against_reference():
    rng = random.Random(17)
    for _ in range(40):
        d = make_dataset(rng, n_rallies=6, max_len=5, k=2, values=3)
        tactics = _tactics(rng, d, rng.randint(0, 3), 2, 3)
        params = _random_params(rng, 2)
        index = shared_index(d)
        dl, freq = evaluate_set(index, tactics, params)
        assert dl == oracles.ref_dl(d, tactics, params)
        assert freq == [len(us) for us in oracles.ref_cover(d, tactics)]
        # the three evaluation entry points agree
        assert set_description_length(d, tactics, params) == dl
        assert description_length(cover(d, tactics), tactics, params) == dl


def test_unstarred_identity_with_default_params():
    rng = random.Random(23)
    for _ in range(30):
        d = make_dataset(rng, n_rallies=5, max_len=5, k=2, values=3)
        tactics = _tactics(rng, d, rng.randint(1, 3), 2, 3)
        params = MetricParams()
        dl = set_description_length(d, tactics, params)
        usages = oracles.ref_cover(d, tactics)
        plain = float(len(tactics))
        for us in usages:
            plain += params.alpha * len(us)
        covered = [0] * 2
        for t, us in zip(tactics, usages):
            for ev in t.events:
                for g, v in enumerate(ev):
                    if v is not None:
                        covered[g] += len(us)
        slots = sum(len(r.events) for r in d.rallies)
        for g in range(2):
            plain += params.beta * (slots - covered[g])
        assert dl == plain


def test_empty_set_description_length():
    rng = random.Random(2)
    d = make_dataset(rng, n_rallies=4, max_len=4, k=2, values=3)
    slots = sum(len(r.events) for r in d.rallies)
    assert set_description_length(d, (), MetricParams()) == 2 * slots
    assert set_description_length(
        d, (), MetricParams(beta=0.5, importance={1: -1.0})) == 0.5 * slots


def test_cover_state_matches_batch_evaluation():
    """Incremental add/remove/commit tracks evaluate_set bit for bit."""
    rng = random.Random(31)
    for trial in range(30):
        k = rng.randint(1, 3)
        values = rng.randint(2, 4)
        d = make_dataset(rng, n_rallies=rng.randint(3, 8), max_len=6,
                         k=k, values=values)
        params = _random_params(rng, k)
        index = shared_index(d)
        members: list[Tactic] = []
        state = CoverState(index, members, params)
        next_id = 1
        for _ in range(25):
            if members and rng.random() < 0.35:
                victim = rng.choice(members)
                plan = state.try_remove(victim.id)
                want, _ = evaluate_set(
                    index, [t for t in members if t.id != victim.id], params)
                assert plan.dl == want, f"trial {trial}"
                if rng.random() < 0.6:
                    state.commit(plan)
                    members = [t for t in members if t.id != victim.id]
            else:
                try:
                    ct = observed_tactic(rng, d, next_id, rng.randint(1, 3))
                except ValueError:
                    continue
                next_id += 1
                plan = state.try_add(ct)
                want, _ = evaluate_set(index, members + [ct], params)
                assert plan.dl == want, f"trial {trial}"
                if rng.random() < 0.6:
                    state.commit(plan)
                    members = members + [ct]
            cur, freqs = evaluate_set(index, members, params)
            assert state.dl == cur
            assert [state.freq.get(t.id, 0) for t in members] == freqs


def test_cover_state_rejects_duplicate_id():
    rng = random.Random(41)
    d = make_dataset(rng, n_rallies=3, max_len=4, k=2, values=3)
    t = observed_tactic(rng, d, 1, 1)
    state = CoverState(shared_index(d), [t], MetricParams())
    with pytest.raises(ValueError):
        state.try_add(Tactic(1, ((0, None),)))


def test_score_and_importance():
    rng = random.Random(43)
    d = make_dataset(rng, n_rallies=6, max_len=5, k=2, values=3)
    tactics = [observed_tactic(rng, d, i + 1, 2) for i in range(3)]
    ts = TacticSet(tuple(tactics))
    params = MetricParams()
    score, importances = score_and_importance(d, ts, params)
    empty = set_description_length(d, (), params)
    full = set_description_length(d, tactics, params)
    assert score == empty - full
    for i in range(3):
        rest = tactics[:i] + tactics[i + 1:]
        assert importances[i] == set_description_length(d, rest, params) - full


def test_tactic_stats():
    rng = random.Random(47)
    d = make_dataset(rng, n_rallies=8, max_len=5, k=2, values=2)
    t = observed_tactic(rng, d, 1, 1, null_rate=0.3)
    ts_cover = cover(d, [t])
    ts = TacticSet((t,), ts_cover.usages)
    stats = tactic_stats(d, ts_cover, ts, 1, importance=2.5)
    assert stats.freq == len(ts_cover.usages[0])
    assert stats.importance == 2.5
    wins = sum(w for w, _ in stats.index_histogram.values())
    losses = sum(l for _, l in stats.index_histogram.values())
    assert wins + losses == stats.freq
    if stats.freq:
        assert stats.win_rate == wins / stats.freq
    else:
        assert stats.win_rate is None
    by_rally = {r.id: r for r in d.rallies}
    expect_wins = sum(1 for u in ts_cover.usages[0]
                      if by_rally[u.rally_id].winner == d.focal_player)
    assert wins == expect_wins


def test_shared_index_caches_per_dataset():
    rng = random.Random(53)
    d = make_dataset(rng, n_rallies=3, max_len=4, k=2, values=3)
    assert shared_index(d) is shared_index(d)
    d2 = make_dataset(rng, n_rallies=3, max_len=4, k=2, values=3)
    assert shared_index(d2) is not shared_index(d)
