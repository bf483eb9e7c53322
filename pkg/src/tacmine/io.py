"""Versioned JSON file formats: datasets, tactic sets, ground truth,
constraint scripts.

Events serialize as arrays of value names (null for wildcard slots) so files
stay readable without the schema's integer ids.  Loading a saved dataset
yields an identical Dataset value.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence

from . import constraints as con
from .cover import MetricParams
from .model import (Dataset, FeatureSchema, Tactic, TacticSet, Usage,
                    ValidationError, validate_dataset)

DATASET_FORMAT = "tacmine-dataset"
TACTIC_SET_FORMAT = "tacmine-tactic-set"
GROUND_TRUTH_FORMAT = "tacmine-ground-truth"
FORMAT_VERSION = 1


def _check_header(doc: dict, expected: str) -> None:
    if doc.get("format") != expected:
        raise ValidationError(f"not a {expected} file", where="format")
    if doc.get("version") != FORMAT_VERSION:
        raise ValidationError(f"unsupported version {doc.get('version')!r}",
                              where="version")


def _dump(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _load(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- datasets ---------------------------------------------------------------

def dataset_to_doc(d: Dataset) -> dict:
    return {
        "format": DATASET_FORMAT,
        "version": FORMAT_VERSION,
        "schema": {"features": [{"name": f.name, "values": list(f.values)}
                                for f in d.schema.features]},
        "focal_player": d.focal_player,
        "rallies": [{
            "id": r.id,
            "server": r.server,
            "winner": r.winner,
            "events": [[d.schema.features[f].values[v] for f, v in enumerate(ev)]
                       for ev in r.events],
        } for r in d.rallies],
    }


def save_dataset(d: Dataset, path: str | Path) -> None:
    _dump(dataset_to_doc(d), path)


def load_dataset(path: str | Path) -> Dataset:
    doc = _load(path)
    _check_header(doc, DATASET_FORMAT)
    return validate_dataset(doc)


# -- tactics ----------------------------------------------------------------

def tactic_to_doc(t: Tactic, schema: FeatureSchema) -> dict:
    return {
        "id": t.id,
        "pinned": t.pinned,
        "events": [[None if v is None else schema.features[f].values[v]
                    for f, v in enumerate(ev)] for ev in t.events],
    }


def tactic_from_doc(doc: dict, schema: FeatureSchema) -> Tactic:
    events = []
    for ev in doc["events"]:
        if len(ev) != schema.k:
            raise ValidationError("tactic event width disagrees with schema")
        slots = []
        for f, name in enumerate(ev):
            if name is None:
                slots.append(None)
            else:
                try:
                    slots.append(schema.value_id(f, str(name)))
                except KeyError:
                    raise ValidationError(
                        f"unknown value {name!r} for feature "
                        f"{schema.features[f].name!r}") from None
        events.append(tuple(slots))
    return Tactic(int(doc["id"]), tuple(events), bool(doc.get("pinned", False)))


def tactic_set_to_doc(ts: TacticSet, schema: FeatureSchema,
                      score: float | None = None,
                      params: MetricParams | None = None) -> dict:
    doc: dict[str, Any] = {
        "format": TACTIC_SET_FORMAT,
        "version": FORMAT_VERSION,
        "tactics": [tactic_to_doc(t, schema) for t in ts.tactics],
    }
    if ts.usages:
        doc["usages"] = {str(t.id): [[u.rally_id, u.start] for u in us]
                         for t, us in zip(ts.tactics, ts.usages)}
    if score is not None:
        doc["score"] = score
    if params is not None:
        doc["params"] = params_to_doc(params)
    return doc


def save_tactic_set(ts: TacticSet, schema: FeatureSchema, path: str | Path,
                    score: float | None = None,
                    params: MetricParams | None = None) -> None:
    _dump(tactic_set_to_doc(ts, schema, score, params), path)


def load_tactic_set(path: str | Path, schema: FeatureSchema,
                    ) -> tuple[TacticSet, float | None]:
    doc = _load(path)
    _check_header(doc, TACTIC_SET_FORMAT)
    tactics = tuple(tactic_from_doc(td, schema) for td in doc["tactics"])
    usages: tuple = ()
    if "usages" in doc:
        usages = tuple(tuple(Usage(int(r), int(s)) for r, s in
                             doc["usages"].get(str(t.id), []))
                       for t in tactics)
    return TacticSet(tactics, usages), doc.get("score")


# -- ground truth -----------------------------------------------------------

def ground_truth_to_doc(planted: Sequence[Tactic], log: dict[int, list[Usage]],
                        schema: FeatureSchema) -> dict:
    return {
        "format": GROUND_TRUTH_FORMAT,
        "version": FORMAT_VERSION,
        "planted": [tactic_to_doc(t, schema) for t in planted],
        "embeddings": {str(tid): [[u.rally_id, u.start] for u in usages]
                       for tid, usages in log.items()},
    }


def save_ground_truth(planted: Sequence[Tactic], log: dict[int, list[Usage]],
                      schema: FeatureSchema, path: str | Path) -> None:
    _dump(ground_truth_to_doc(planted, log, schema), path)


def load_ground_truth(path: str | Path, schema: FeatureSchema,
                      ) -> tuple[list[Tactic], dict[int, list[Usage]]]:
    doc = _load(path)
    _check_header(doc, GROUND_TRUTH_FORMAT)
    planted = [tactic_from_doc(td, schema) for td in doc["planted"]]
    log = {int(tid): [Usage(int(r), int(s)) for r, s in entries]
           for tid, entries in doc.get("embeddings", {}).items()}
    return planted, log


# -- metric params ----------------------------------------------------------

def params_to_doc(p: MetricParams) -> dict:
    return {
        "alpha": p.alpha,
        "beta": p.beta,
        "index_range": list(p.index_range) if p.index_range else None,
        "length_range": list(p.length_range) if p.length_range else None,
        "importance": {str(f): v for f, v in sorted(p.importance.items())},
    }


def params_from_doc(doc: dict) -> MetricParams:
    def pair(value):
        return None if value is None else (value[0], value[1])

    return MetricParams(
        alpha=float(doc.get("alpha", 1.0)),
        beta=float(doc.get("beta", 1.0)),
        index_range=pair(doc.get("index_range")),
        length_range=pair(doc.get("length_range")),
        importance={int(f): float(v)
                    for f, v in doc.get("importance", {}).items()},
    )


# -- constraints ------------------------------------------------------------

_SIMPLE_FIELDS = {
    "IndexRange": ("lo", "hi"),
    "LengthRange": ("lo", "hi"),
    "FeatureImportance": ("feature", "value"),
    "SplitByFeature": ("tactic_ids", "feature"),
    "SpecifyFeature": ("tactic_ids", "features"),
    "MergeTactics": ("tactic_ids",),
    "ExpandTactic": ("tactic_id", "direction", "hits"),
    "TrimTactic": ("tactic_id", "direction", "hits"),
    "DeleteTactic": ("tactic_ids",),
}

_TUPLE_FIELDS = {"tactic_ids", "features"}


def constraint_to_doc(c: con.Constraint) -> dict:
    name = type(c).__name__
    if name not in _SIMPLE_FIELDS:
        raise ValidationError(f"unknown constraint type {name}")
    doc: dict[str, Any] = {"type": name}
    for field_name in _SIMPLE_FIELDS[name]:
        value = getattr(c, field_name)
        doc[field_name] = list(value) if field_name in _TUPLE_FIELDS else value
    return doc


def constraint_from_doc(doc: dict) -> con.Constraint:
    name = doc.get("type")
    cls = getattr(con, name, None)
    if name not in _SIMPLE_FIELDS or cls is None:
        raise ValidationError(f"unknown constraint type {name!r}")
    kwargs = {}
    for field_name in _SIMPLE_FIELDS[name]:
        if field_name not in doc:
            if field_name == "hits":
                continue
            raise ValidationError(f"constraint {name} missing field {field_name}")
        value = doc[field_name]
        kwargs[field_name] = tuple(value) if field_name in _TUPLE_FIELDS else value
    return cls(**kwargs)


def load_constraint_script(path: str | Path) -> list[con.Constraint]:
    """One serialized constraint per non-empty line."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        out.append(constraint_from_doc(json.loads(line)))
    return out


def save_constraint_script(cs: Sequence[con.Constraint], path: str | Path) -> None:
    lines = [json.dumps(constraint_to_doc(c)) for c in cs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
