import json
import os
from importlib import resources

import pytest

from tacmine.constraints import (DeleteTactic, ExpandTactic,
                                 FeatureImportance, IndexRange, LengthRange,
                                 MergeTactics, SpecifyFeature, SplitByFeature,
                                 TrimTactic)
from tacmine.nlp import ParseError, SuggestionContext, load_bank, parse

CTX = SuggestionContext(
    tactic_ids=(1, 2, 3, 4, 5, 6),
    feature_names=("ball position", "ball height"),
    typical_length=3,
    serve_window=4)

ALL_VARIANTS = {"IndexRange", "LengthRange", "FeatureImportance",
                "SplitByFeature", "SpecifyFeature", "MergeTactics",
                "ExpandTactic", "TrimTactic", "DeleteTactic"}


def test_bank_covers_every_constraint_variant():
    bank = load_bank()
    assert {t.variant for t in bank.templates} == ALL_VARIANTS


def test_every_canonical_parses_to_its_own_variant():
    bank = load_bank()
    for t in bank.templates:
        parsed = parse(t.canonical, CTX)
        assert type(parsed.constraint).__name__ == t.variant, t.canonical
        assert parsed.confidence >= bank.threshold


# One utterance per constraint variant, checked for exact slot values.
CANONICAL = [
    ("analyze serving tactics", IndexRange(1, 4)),
    ("analyzing longer tactics", LengthRange(4, None)),
    ("pay more attention to ball position", FeatureImportance(0, 0.5)),
    ("split tactic 3 based on ball position", SplitByFeature((3,), 0)),
    ("ball height is important for tactic 2", SpecifyFeature((2,), (1,))),
    ("merge tactic 4 and tactic 5", MergeTactics((4, 5))),
    ("expand tactic 1 with follow-up hits", ExpandTactic(1, "back", 1)),
    ("trim the last hit of tactic 2", TrimTactic(2, "back", 1)),
    ("delete tactic 6", DeleteTactic((6,))),
]


@pytest.mark.parametrize("text,expected", CANONICAL,
                         ids=[type(c).__name__ for _, c in CANONICAL])
def test_canonical_utterances_parse_exactly(text, expected):
    parsed = parse(text, CTX)
    assert parsed.constraint == expected
    assert parsed.raw_text == text


PARAPHRASES = [
    # index ranges
    ("look at tactics that start between hit 2 and hit 5", IndexRange(2, 5)),
    ("restrict to tactics starting in the first 3 hits", IndexRange(1, 3)),
    ("examine the service tactics", IndexRange(1, 4)),
    # length ranges
    ("focus on tactics with 4 or more hits", LengthRange(4, None)),
    ("look at shorter tactics", LengthRange(1, 2)),
    ("keep tactics with at most 3 strokes", LengthRange(1, 3)),
    # feature importance
    ("ball position matters a lot", FeatureImportance(0, 0.5)),
    ("pay less attention to ball height", FeatureImportance(1, -0.5)),
    ("disregard ball position", FeatureImportance(0, -0.5)),
    # split
    ("divide tactic 2 by ball height", SplitByFeature((2,), 1)),
    ("separate tactic 1 by ball position", SplitByFeature((1,), 0)),
    ("partition tactic 3 by ball height", SplitByFeature((3,), 1)),
    # specify
    ("specify ball position for tactic 2", SpecifyFeature((2,), (0,))),
    ("ball position is important for tactic 3", SpecifyFeature((3,), (0,))),
    ("ball height matters for tactic 4", SpecifyFeature((4,), (1,))),
    # merge
    ("combine tactics 1 and 2", MergeTactics((1, 2))),
    ("merge tactics 2 and 3 together", MergeTactics((2, 3))),
    ("combine tactic 1 with tactic 3", MergeTactics((1, 3))),
    # expand
    ("expand tactic 2 with 1 follow-up hit", ExpandTactic(2, "back", 1)),
    ("extend tactic 3 with the preceding hit", ExpandTactic(3, "front", 1)),
    ("lengthen tactic 2 with the next hit", ExpandTactic(2, "back", 1)),
    # trim
    ("remove the last hit of tactic 3", TrimTactic(3, "back", 1)),
    ("cut the first hit of tactic 2", TrimTactic(2, "front", 1)),
    ("trim the first 2 hits of tactic 1", TrimTactic(1, "front", 2)),
    # delete
    ("drop tactic 5", DeleteTactic((5,))),
    ("remove tactic 4", DeleteTactic((4,))),
    ("forget tactic 1", DeleteTactic((1,))),
]


def test_paraphrase_suite_accuracy():
    assert len(PARAPHRASES) == 27
    correct = 0
    misses = []
    for text, expected in PARAPHRASES:
        try:
            parsed = parse(text, CTX)
        except ParseError as err:
            misses.append((text, str(err)))
            continue
        if parsed.constraint == expected:
            correct += 1
        else:
            misses.append((text, parsed.constraint))
    assert correct / len(PARAPHRASES) >= 0.80, misses


def test_parse_is_deterministic():
    a = parse("merge tactic 4 and tactic 5", CTX)
    b = parse("merge tactic 4 and tactic 5", CTX)
    assert a == b


def test_slot_spans_are_disjoint():
    for text, _ in CANONICAL:
        parsed = parse(text, CTX)
        spans = [span for group in parsed.slot_spans.values()
                 for span in group]
        for i, (lo1, hi1) in enumerate(spans):
            assert lo1 < hi1
            for lo2, hi2 in spans[i + 1:]:
                assert hi1 <= lo2 or hi2 <= lo1


def test_unparsed_lists_three_nearest():
    bank = load_bank()
    canonicals = {t.canonical for t in bank.templates}
    with pytest.raises(ParseError) as err:
        parse("make everything rainbow colored please", CTX)
    assert err.value.code == "UNPARSED"
    assert len(err.value.nearest) == 3
    assert set(err.value.nearest) <= canonicals


def test_unknown_tactic_is_rejected():
    with pytest.raises(ParseError) as err:
        parse("delete tactic 99", CTX)
    assert err.value.code == "VALIDATION"
    assert "99" in str(err.value)


def test_unknown_feature_is_rejected():
    with pytest.raises(ParseError) as err:
        parse("split tactic 3 by racket speed", CTX)
    assert err.value.code == "VALIDATION"
    assert "racket speed" in str(err.value)


def test_selection_resolves_through_context():
    ctx = SuggestionContext(tactic_ids=(1, 2, 3, 4),
                            feature_names=CTX.feature_names,
                            selected_ids=(2, 3))
    parsed = parse("merge the selected tactics", ctx)
    assert parsed.constraint == MergeTactics((2, 3))
    with pytest.raises(ParseError) as err:
        parse("merge the selected tactics", CTX)
    assert err.value.code == "VALIDATION"


def test_serve_window_comes_from_context():
    ctx = SuggestionContext(tactic_ids=(1,), feature_names=CTX.feature_names,
                            serve_window=6)
    parsed = parse("analyze the serving tactics", ctx)
    assert parsed.constraint == IndexRange(1, 6)


def test_bank_reloads_when_file_changes(tmp_path):
    doc = json.loads(resources.files("tacmine")
                     .joinpath("templates.json").read_text())
    path = tmp_path / "bank.json"
    path.write_text(json.dumps(doc))
    first = load_bank(str(path))
    again = load_bank(str(path))
    assert again is first
    doc["threshold"] = 0.93
    path.write_text(json.dumps(doc))
    stat = path.stat()
    os.utime(path, (stat.st_atime, stat.st_mtime + 10))
    reloaded = load_bank(str(path))
    assert reloaded.threshold == 0.93
