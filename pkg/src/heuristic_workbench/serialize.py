"""Plain-data encoding of every workbench value.

Rationals are written as ``"numerator/denominator"`` strings, ints stay ints
and the only floats (standard deviations) are written as JSON numbers, which
Python round-trips exactly. ``canonical_json`` gives a byte-stable rendering
used for equality checks.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from fractions import Fraction

from . import rational
from .advisor import Indicator, IndicatorCheck, RefinementAdvice, TriggeredRule, Verdict
from .indicators import IndicatorReport, Rate
from .model import (
    ConflictKind,
    ConflictNote,
    DimensionItem,
    DimensionKind,
    DomainProfile,
    EvaluationDataset,
    Found,
    GeneralizedFrom,
    GroupUnderGeneral,
    Heuristic,
    HeuristicCatalog,
    HeuristicId,
    KeepOneDiscardRest,
    KeptAfterDedup,
    MergedFrom,
    MergeReformulate,
    ProblemRecord,
    ReviseIsi,
    SplitFrom,
    SplitIntoSeveral,
)
from .specificity import GsiTable, MatrixRow, SpecificityMatrix
from .templates import Example, HeuristicTemplate


class DecodeError(ValueError):
    """A value could not be decoded; ``location`` is a '/'-joined path into the document."""

    def __init__(self, location: str, message: str):
        self.location = location
        self.message = message
        super().__init__(f"{location or '<root>'}: {message}")


class _Path:
    def __init__(self) -> None:
        self.parts: list[str] = []

    @contextmanager
    def at(self, *parts):
        self.parts.extend(str(p) for p in parts)
        try:
            yield
        except DecodeError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise DecodeError("/".join(self.parts), _describe(exc)) from exc
        finally:
            del self.parts[len(self.parts) - len(parts):]


def _describe(exc: Exception) -> str:
    if isinstance(exc, KeyError):
        return f"missing field {exc.args[0]!r}"
    return str(exc)


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


# numbers


def enc_num(x):
    if x is None or isinstance(x, float):
        return x
    if isinstance(x, Fraction):
        return rational.to_text(x)
    return int(x)


def dec_num(x):
    if x is None or isinstance(x, float):
        return x
    if isinstance(x, str):
        return rational.from_text(x)
    if isinstance(x, bool) or not isinstance(x, int):
        raise ValueError(f"expected a number, got {x!r}")
    return x


def dec_fraction(x) -> Fraction:
    if not isinstance(x, str):
        raise ValueError(f"expected 'numerator/denominator' string, got {x!r}")
    return rational.from_text(x)


# profile and heuristics


def enc_profile(p: DomainProfile) -> dict:
    return {
        "domain_name": p.domain_name,
        "keywords": list(p.keywords),
        "items": [
            {"kind": i.kind.value, "label": i.label, "initial_specificity": int(i.initial_specificity)}
            for i in p.items
        ],
    }


def dec_profile(d: dict, path: _Path | None = None) -> DomainProfile:
    path = path or _Path()
    items = []
    for n, raw in enumerate(d["items"]):
        with path.at("items", n):
            items.append(DimensionItem(DimensionKind(raw["kind"]), raw["label"], raw["initial_specificity"]))
    return DomainProfile(d["domain_name"], tuple(d["keywords"]), tuple(items))


def enc_origin(o) -> dict:
    if isinstance(o, (MergedFrom, GeneralizedFrom)):
        return {"kind": type(o).__name__, "sources": [str(s) for s in o.sources]}
    if isinstance(o, SplitFrom):
        return {"kind": "SplitFrom", "source": str(o.source)}
    return {"kind": type(o).__name__}


def dec_origin(d: dict):
    kind = d["kind"]
    if kind == "Found":
        return Found()
    if kind == "KeptAfterDedup":
        return KeptAfterDedup()
    if kind in ("MergedFrom", "GeneralizedFrom"):
        cls = MergedFrom if kind == "MergedFrom" else GeneralizedFrom
        return cls(tuple(HeuristicId.parse(s) for s in d["sources"]))
    if kind == "SplitFrom":
        return SplitFrom(HeuristicId.parse(d["source"]))
    raise ValueError(f"unknown origin kind {kind!r}")


def enc_heuristic(h: Heuristic) -> dict:
    return {
        "id": str(h.id),
        "name": h.name,
        "statement": h.statement,
        "isi": int(h.isi),
        "origin": enc_origin(h.origin),
        "status": h.status.value,
    }


def dec_heuristic(d: dict) -> Heuristic:
    return Heuristic(
        id=HeuristicId.parse(d["id"]),
        name=d["name"],
        statement=d["statement"],
        isi=d["isi"],
        origin=dec_origin(d["origin"]),
        status=d["status"],
    )


def enc_action(a) -> dict:
    if isinstance(a, KeepOneDiscardRest):
        body = {"kept": str(a.kept), "discarded": [str(x) for x in a.discarded]}
    elif isinstance(a, (MergeReformulate, GroupUnderGeneral)):
        body = {"inputs": [str(x) for x in a.inputs], "new_heuristic": enc_heuristic(a.new_heuristic)}
    elif isinstance(a, SplitIntoSeveral):
        body = {"input": str(a.input), "new_heuristics": [enc_heuristic(h) for h in a.new_heuristics]}
    elif isinstance(a, ReviseIsi):
        return {"type": "ReviseIsi", "heuristic": str(a.heuristic), "isi": int(a.isi),
                "rationale": a.rationale}
    else:
        raise TypeError(f"cannot encode {a!r}")
    return {"type": type(a).__name__, **body, "rationale": a.rationale, "resolves": a.resolves}


def dec_action(d: dict):
    kind = d["type"]
    ids = lambda xs: tuple(HeuristicId.parse(x) for x in xs)  # noqa: E731
    if kind == "KeepOneDiscardRest":
        return KeepOneDiscardRest(HeuristicId.parse(d["kept"]), ids(d["discarded"]),
                                  d["rationale"], d["resolves"])
    if kind in ("MergeReformulate", "GroupUnderGeneral"):
        cls = MergeReformulate if kind == "MergeReformulate" else GroupUnderGeneral
        return cls(ids(d["inputs"]), dec_heuristic(d["new_heuristic"]), d["rationale"], d["resolves"])
    if kind == "SplitIntoSeveral":
        return SplitIntoSeveral(HeuristicId.parse(d["input"]),
                                tuple(dec_heuristic(h) for h in d["new_heuristics"]),
                                d["rationale"], d["resolves"])
    if kind == "ReviseIsi":
        return ReviseIsi(HeuristicId.parse(d["heuristic"]), d["isi"], d["rationale"])
    raise ValueError(f"unknown action type {kind!r}")


def enc_catalog(c: HeuristicCatalog) -> dict:
    return {
        "heuristics": [enc_heuristic(h) for h in c.heuristics],
        "baseline": [enc_heuristic(h) for h in c.baseline],
        "conflicts": [
            {"id": n.id, "kind": n.kind.value, "members": [str(m) for m in n.members], "note": n.note}
            for n in c.conflicts
        ],
        "actions": [enc_action(a) for a in c.actions],
        "certified": c.certified,
        "selection": [str(h) for h in c.selection],
    }


def dec_catalog(d: dict, path: _Path | None = None) -> HeuristicCatalog:
    path = path or _Path()

    def each(key, fn):
        out = []
        for n, raw in enumerate(d[key]):
            with path.at(key, n):
                out.append(fn(raw))
        return tuple(out)

    return HeuristicCatalog(
        heuristics=each("heuristics", dec_heuristic),
        baseline=each("baseline", dec_heuristic),
        conflicts=each("conflicts", lambda n: ConflictNote(
            n["id"], ConflictKind(n["kind"]), tuple(HeuristicId.parse(m) for m in n["members"]), n["note"])),
        actions=each("actions", dec_action),
        certified=d["certified"],
        selection=each("selection", HeuristicId.parse),
    )


# specificity


def enc_gsi(t: GsiTable) -> dict:
    return {"heuristic": str(t.heuristic), "kind": t.kind.value,
            "scores": {label: int(v) for label, v in t.scores.items()}}


def dec_gsi(d: dict) -> GsiTable:
    return GsiTable(HeuristicId.parse(d["heuristic"]), DimensionKind(d["kind"]), dict(d["scores"]))


def enc_matrix(m: SpecificityMatrix) -> list:
    return [
        {"heuristic": str(r.heuristic), "isi": int(r.isi),
         "gsi_uc": enc_num(r.gsi_uc), "gsi_pd": enc_num(r.gsi_pd),
         "gsi_ld": enc_num(r.gsi_ld), "gsi_up": enc_num(r.gsi_up), "fsi": enc_num(r.fsi)}
        for r in m.rows
    ]


def dec_matrix(rows: list) -> SpecificityMatrix:
    return SpecificityMatrix(tuple(
        MatrixRow(HeuristicId.parse(r["heuristic"]), r["isi"],
                  dec_fraction(r["gsi_uc"]), dec_fraction(r["gsi_pd"]),
                  dec_fraction(r["gsi_ld"]), dec_fraction(r["gsi_up"]), dec_fraction(r["fsi"]))
        for r in rows
    ))


# templates


def enc_template(t: HeuristicTemplate) -> dict:
    return {
        "heuristic": str(t.heuristic),
        "name": t.name,
        "description": t.description,
        "examples": [{"kind": e.kind.value, "text": e.text} for e in t.examples],
        "benefits": t.benefits,
        "problems": t.problems,
        "application_context": t.application_context,
        "related_heuristics": [str(r) for r in t.related_heuristics],
        "checklist": list(t.checklist),
    }


def dec_template(d: dict) -> HeuristicTemplate:
    return HeuristicTemplate(
        heuristic=HeuristicId.parse(d["heuristic"]),
        name=d.get("name", ""),
        description=d.get("description", ""),
        examples=tuple(Example(e["kind"], e["text"]) for e in d.get("examples", [])),
        benefits=d.get("benefits", ""),
        problems=d.get("problems", ""),
        application_context=d.get("application_context", ""),
        related_heuristics=tuple(HeuristicId.parse(r) for r in d.get("related_heuristics", [])),
        checklist=tuple(d.get("checklist", [])),
    )


# evaluation data


def enc_problem(p: ProblemRecord) -> dict:
    return {
        "id": p.id,
        "description": p.description,
        "classification": p.classification.value,
        "domain_heuristic": str(p.domain_attribution) if p.domain_attribution else None,
        "control_heuristic": p.control_attribution,
        "severity": int(p.severity),
        "control_specificity": None if p.control_specificity is None else int(p.control_specificity),
    }


def dec_problem(d: dict) -> ProblemRecord:
    return ProblemRecord(
        id=d["id"],
        description=d["description"],
        classification=d["classification"],
        severity=d["severity"],
        domain_attribution=HeuristicId.parse(d["domain_heuristic"]) if d["domain_heuristic"] else None,
        control_attribution=d["control_heuristic"],
        control_specificity=d["control_specificity"],
    )


def enc_dataset(ds: EvaluationDataset) -> dict:
    return {
        "case_study": ds.case_study,
        "domain_heuristics": [str(h) for h in ds.domain_heuristics],
        "control_heuristics": list(ds.control_heuristics),
        "problems": [enc_problem(p) for p in ds.problems],
    }


def dec_dataset(d: dict, path: _Path | None = None) -> EvaluationDataset:
    path = path or _Path()
    problems = []
    for n, raw in enumerate(d["problems"]):
        with path.at("problems", n):
            problems.append(dec_problem(raw))
    return EvaluationDataset(
        case_study=d["case_study"],
        domain_heuristics=tuple(HeuristicId.parse(h) for h in d["domain_heuristics"]),
        control_heuristics=tuple(d["control_heuristics"]),
        problems=tuple(problems),
    )


# reports and advice


def enc_rate(r: Rate) -> dict:
    return {"name": r.name, "value": enc_num(r.value), "numerator": enc_num(r.numerator),
            "denominator": enc_num(r.denominator), "reason": r.reason}


def dec_rate(d: dict) -> Rate:
    return Rate(d["name"], dec_num(d["value"]), dec_num(d["numerator"]),
                dec_num(d["denominator"]), d["reason"])


def enc_report(r: IndicatorReport) -> dict:
    return {
        "case_study": r.case_study,
        "rates": [enc_rate(x) for x in r.rates()],
        "variance_domain": enc_num(r.variance_domain),
        "variance_control": enc_num(r.variance_control),
        "counts": {"common": r.n_common, "domain_only": r.n_domain_only,
                   "control_only": r.n_control_only},
        "domain_counts": [[str(h), n] for h, n in r.domain_counts],
        "control_counts": [[h, n] for h, n in r.control_counts],
    }


def dec_report(d: dict) -> IndicatorReport:
    rates = {x["name"]: dec_rate(x) for x in d["rates"]}
    return IndicatorReport(
        case_study=d["case_study"],
        phi=rates["phi"], phi_star=rates["phi_star"], delta=rates["delta"],
        lambda_=rates["lambda"], lambda_star=rates["lambda_star"], epsilon=rates["epsilon"],
        variance_domain=dec_fraction(d["variance_domain"]),
        variance_control=dec_fraction(d["variance_control"]),
        n_common=d["counts"]["common"],
        n_domain_only=d["counts"]["domain_only"],
        n_control_only=d["counts"]["control_only"],
        domain_counts=tuple((HeuristicId.parse(h), n) for h, n in d["domain_counts"]),
        control_counts=tuple((h, n) for h, n in d["control_counts"]),
    )


def enc_advice(a: RefinementAdvice) -> dict:
    return {
        "case_study": a.case_study,
        "verdict": a.verdict.value,
        "checks": [
            {"indicator": c.indicator.value, "rate": c.rate, "value": enc_num(c.value),
             "approximate": c.approximate, "reason": c.reason}
            for c in a.checks
        ],
        "triggered": [
            {"indicator": t.indicator.value, "value": enc_num(t.value), "approximate": t.approximate,
             "hypotheses": list(t.hypotheses), "revisit_stages": list(t.revisit_stages)}
            for t in a.triggered
        ],
        "counts": [[k, v] for k, v in a.counts],
    }


def dec_advice(d: dict) -> RefinementAdvice:
    return RefinementAdvice(
        case_study=d["case_study"],
        checks=tuple(
            IndicatorCheck(Indicator(c["indicator"]), c["rate"], dec_num(c["value"]),
                           c["approximate"], c["reason"])
            for c in d["checks"]
        ),
        triggered=tuple(
            TriggeredRule(Indicator(t["indicator"]), dec_num(t["value"]), t["approximate"],
                          tuple(t["hypotheses"]), tuple(t["revisit_stages"]))
            for t in d["triggered"]
        ),
        verdict=Verdict(d["verdict"]),
        counts=tuple((k, v) for k, v in d["counts"]),
    )

