"""Project file: one JSON document with a schema version.

Raw inputs (profile, catalog log, GSI rows, templates, datasets) are the
source of truth. Derived artifacts (matrix, reports, advice) are cached in the
file and can always be rebuilt with :func:`project.rebuild_derived`.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import jsonschema

from . import serialize as ser
from .project import IterationRecord, ProjectState, StoredDataset, StoredReport

SCHEMA_VERSION = "1"


class PersistenceError(Exception):
    pass


class IoFailure(PersistenceError):
    pass


class SchemaViolation(PersistenceError):
    def __init__(self, location: str, message: str):
        self.location = location
        self.message = message
        super().__init__(f"schema violation at {location or '<root>'}: {message}")


class UnsupportedVersion(PersistenceError):
    pass


_LIKERT = {"type": "integer", "minimum": 0, "maximum": 4}
_TEXT = {"type": "string"}
_ID = {"type": "string", "pattern": r"^[A-Za-z0-9_-]+\.H[0-9]+$"}
_RATIONAL = {"type": "string", "pattern": r"^-?[0-9]+/[0-9]+$"}
_NUMBER = {"anyOf": [{"type": "null"}, {"type": "number"}, _RATIONAL]}
_STAGE_STATUS = {"enum": ["NotStarted", "InProgress", "Complete"]}


def _obj(props: dict, required=None) -> dict:
    return {"type": "object", "properties": props,
            "required": list(props) if required is None else required}


def _arr(items: dict, **kw) -> dict:
    return {"type": "array", "items": items, **kw}


_HEURISTIC = _obj({
    "id": _ID, "name": _TEXT, "statement": _TEXT, "isi": _LIKERT,
    "origin": _obj({"kind": {"enum": ["Found", "KeptAfterDedup", "MergedFrom",
                                      "GeneralizedFrom", "SplitFrom"]}}),
    "status": {"enum": ["Denormalized", "Normalized", "Selected", "Discarded"]},
})

_RATE = _obj({"name": _TEXT, "value": _NUMBER, "numerator": _NUMBER,
              "denominator": _NUMBER, "reason": {"type": ["string", "null"]}})

_MATRIX = _arr(_obj({"heuristic": _ID, "isi": _LIKERT, "gsi_uc": _RATIONAL, "gsi_pd": _RATIONAL,
                     "gsi_ld": _RATIONAL, "gsi_up": _RATIONAL, "fsi": _RATIONAL}))

PROJECT_SCHEMA = _obj({
    "schema_version": {"type": "string"},
    "profile": _obj({
        "domain_name": _TEXT,
        "keywords": _arr(_TEXT),
        "items": _arr(_obj({"kind": {"enum": ["UC", "LD", "PD", "UP"]}, "label": _TEXT,
                            "initial_specificity": _LIKERT})),
    }),
    "stage_status": _arr(_STAGE_STATUS, minItems=8, maxItems=8),
    "iteration": {"type": "integer", "minimum": 1},
    "outcome": {"enum": ["Ongoing", "ExitedAtStage2", "Validated"]},
    "catalog": _obj({
        "heuristics": _arr(_HEURISTIC),
        "baseline": _arr(_HEURISTIC),
        "conflicts": _arr(_obj({"id": _TEXT, "kind": {"enum": ["Duplication", "Overlap"]},
                                "members": _arr(_ID), "note": _TEXT})),
        "actions": _arr(_obj({"type": {"enum": ["KeepOneDiscardRest", "MergeReformulate",
                                                "GroupUnderGeneral", "SplitIntoSeveral",
                                                "ReviseIsi"]},
                              "rationale": _TEXT}, required=["type", "rationale"])),
        "certified": {"type": "boolean"},
        "selection": _arr(_ID),
    }),
    "gsi_tables": _arr(_obj({"heuristic": _ID, "kind": {"enum": ["UC", "LD", "PD", "UP"]},
                             "scores": {"type": "object", "additionalProperties": _LIKERT}})),
    "matrix": {"anyOf": [{"type": "null"}, _MATRIX]},
    "threshold": {"anyOf": [{"type": "null"}, _RATIONAL]},
    "templates": _arr({"type": "object", "required": ["heuristic"]}),
    "datasets": _arr(_obj({
        "iteration": {"type": "integer", "minimum": 1},
        "dataset": _obj({
            "case_study": _TEXT,
            "domain_heuristics": _arr(_ID),
            "control_heuristics": _arr(_TEXT),
            "problems": _arr(_obj({
                "id": _TEXT, "description": _TEXT,
                "classification": {"enum": ["Common", "DomainOnly", "ControlOnly"]},
                "domain_heuristic": {"anyOf": [{"type": "null"}, _ID]},
                "control_heuristic": {"type": ["string", "null"]},
                "severity": _LIKERT,
                "control_specificity": {"anyOf": [{"type": "null"}, _LIKERT]},
            })),
        }),
    })),
    "reports": _arr(_obj({
        "dataset_index": {"type": "integer", "minimum": 0},
        "iteration": {"type": "integer", "minimum": 1},
        "matrix": {"anyOf": [{"type": "null"}, _MATRIX]},
        "report": _obj({"case_study": _TEXT, "rates": _arr(_RATE, minItems=6, maxItems=6)},
                       required=["case_study", "rates"]),
        "advice": _obj({"verdict": {"enum": ["NoRefinementSignaled", "RefinementSuggested"]}},
                       required=["verdict"]),
    })),
    "history": _arr(_obj({
        "iteration": {"type": "integer", "minimum": 1},
        "stage_status": _arr(_STAGE_STATUS, minItems=8, maxItems=8),
        "target_stage": {"type": "integer", "minimum": 1, "maximum": 7},
        "reason": _TEXT,
        "advised_stages": _arr({"type": "integer"}),
        "overridden": {"type": "boolean"},
    })),
})


def to_document(state: ProjectState) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "profile": ser.enc_profile(state.profile),
        "stage_status": [s.value for s in state.stage_status],
        "iteration": state.iteration,
        "outcome": state.outcome.value,
        "catalog": ser.enc_catalog(state.catalog),
        "gsi_tables": [ser.enc_gsi(t) for t in state.gsi_tables],
        "matrix": None if state.matrix is None else ser.enc_matrix(state.matrix),
        "threshold": None if state.threshold is None else ser.enc_num(state.threshold),
        "templates": [ser.enc_template(t) for t in state.templates],
        "datasets": [{"iteration": d.iteration, "dataset": ser.enc_dataset(d.dataset)}
                     for d in state.datasets],
        "reports": [
            {"dataset_index": r.dataset_index, "iteration": r.iteration,
             "matrix": None if r.matrix is None else ser.enc_matrix(r.matrix),
             "report": ser.enc_report(r.report), "advice": ser.enc_advice(r.advice)}
            for r in state.reports
        ],
        "history": [
            {"iteration": h.iteration, "stage_status": [s.value for s in h.stage_status],
             "target_stage": h.target_stage, "reason": h.reason,
             "advised_stages": list(h.advised_stages), "overridden": h.overridden}
            for h in state.history
        ],
    }


def from_document(doc) -> ProjectState:
    if not isinstance(doc, dict):
        raise SchemaViolation("", "project document must be a JSON object")
    version = doc.get("schema_version")
    if version is None:
        raise SchemaViolation("schema_version", "missing field 'schema_version'")
    if version != SCHEMA_VERSION:
        raise UnsupportedVersion(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION!r})")
    error = jsonschema.exceptions.best_match(
        jsonschema.Draft202012Validator(PROJECT_SCHEMA).iter_errors(doc)
    )
    if error is not None:
        raise SchemaViolation("/".join(str(p) for p in error.absolute_path), error.message)
    path = ser._Path()
    try:
        return _decode(doc, path)
    except ser.DecodeError as exc:
        raise SchemaViolation(exc.location, exc.message) from exc


def _decode(doc: dict, path) -> ProjectState:
    with path.at("profile"):
        profile = ser.dec_profile(doc["profile"], path)
    with path.at("catalog"):
        catalog = ser.dec_catalog(doc["catalog"], path)

    def each(key, fn):
        out = []
        for n, raw in enumerate(doc[key]):
            with path.at(key, n):
                out.append(fn(raw))
        return tuple(out)

    def dataset(raw):
        with path.at("dataset"):
            return StoredDataset(raw["iteration"], ser.dec_dataset(raw["dataset"], path))

    def report(raw):
        matrix = None if raw["matrix"] is None else ser.dec_matrix(raw["matrix"])
        return StoredReport(raw["dataset_index"], raw["iteration"], matrix,
                            ser.dec_report(raw["report"]), ser.dec_advice(raw["advice"]))

    def record(raw):
        return IterationRecord(raw["iteration"], tuple(raw["stage_status"]), raw["target_stage"],
                               raw["reason"], tuple(raw["advised_stages"]), raw["overridden"])

    datasets = each("datasets", dataset)
    reports = each("reports", report)
    for n, r in enumerate(reports):
        if r.dataset_index >= len(datasets):
            raise ser.DecodeError(f"reports/{n}/dataset_index", "refers to a missing dataset")
    with path.at("matrix"):
        matrix = None if doc["matrix"] is None else ser.dec_matrix(doc["matrix"])
    with path.at("threshold"):
        threshold = None if doc["threshold"] is None else ser.dec_fraction(doc["threshold"])
    with path.at("stage_status"):
        return ProjectState(
            profile=profile,
            stage_status=tuple(doc["stage_status"]),
            iteration=doc["iteration"],
            catalog=catalog,
            gsi_tables=each("gsi_tables", ser.dec_gsi),
            matrix=matrix,
            threshold=threshold,
            templates=each("templates", ser.dec_template),
            datasets=datasets,
            reports=reports,
            outcome=doc["outcome"],
            history=each("history", record),
        )


def dumps(state: ProjectState) -> str:
    return json.dumps(to_document(state), ensure_ascii=False, indent=2) + "\n"


def save_project(state: ProjectState, path) -> None:
    """Write atomically: a crash mid-write never leaves a truncated project file."""
    p = Path(path)
    payload = dumps(state)
    tmp_path: Path | None = None
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile("w", encoding="utf-8", delete=False,
                                         dir=str(p.parent), prefix=f".{p.name}.",
                                         suffix=".tmp") as fh:
            tmp_path = Path(fh.name)
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_path, p)
    except OSError as exc:
        raise IoFailure(f"cannot write {p}: {exc}") from exc
    finally:
        if tmp_path is not None and tmp_path.exists():
            tmp_path.unlink()


def load_project(path) -> ProjectState:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {p}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("", f"not valid JSON: {exc}") from exc
    return from_document(doc)
