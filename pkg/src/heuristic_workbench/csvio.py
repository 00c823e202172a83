"""CSV ingestion (heuristics, problems, dimension items, GSI rows) and chart export.

Files are UTF-8 with a required header row and RFC-4180 quoting; CRLF and LF
line endings are both accepted. Errors name the 1-based file line and column.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable

from .indicators import INDICATOR_ORDER, IndicatorReport
from .model import (
    NIELSEN_HEURISTICS,
    Classification,
    DimensionItem,
    DimensionKind,
    EvaluationDataset,
    Heuristic,
    HeuristicId,
    ProblemRecord,
    shape_violations,
)
from .rational import decimal4
from .specificity import GsiTable

HEURISTIC_COLUMNS = ("set_id", "index", "name", "statement", "isi")
PROBLEM_COLUMNS = (
    "id", "description", "classification", "domain_heuristic",
    "control_heuristic", "severity", "control_specificity",
)
PROFILE_COLUMNS = ("kind", "label", "specificity")
GSI_COLUMNS = ("heuristic", "kind", "label", "score")
CHART_COLUMNS = ("case", "indicator", "value", "available")


class CsvImportError(ValueError):
    pass


class MalformedRow(CsvImportError):
    def __init__(self, line: int, column: str, reason: str):
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"line {line}, column {column}: {reason}")


class DuplicateId(CsvImportError):
    def __init__(self, line: int, ident: str):
        self.line = line
        self.ident = ident
        super().__init__(f"line {line}: duplicate id {ident}")


class NothingToExport(ValueError):
    pass


def _rows(source, columns: tuple[str, ...]):
    """Yield (line number, row dict) after checking the header."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8-sig") as fh:
            yield from _rows(io.StringIO(fh.read()), columns)
        return
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MalformedRow(1, "header", "file is empty") from None
    if sorted(header) != sorted(columns):
        missing = [c for c in columns if c not in header]
        extra = [c for c in header if c not in columns]
        detail = []
        if missing:
            detail.append("missing " + ", ".join(missing))
        if extra:
            detail.append("unexpected " + ", ".join(extra))
        raise MalformedRow(1, "header", "; ".join(detail) or "duplicate columns")
    start = reader.line_num + 1
    for values in reader:
        line = start
        start = reader.line_num + 1
        if not any(v.strip() for v in values):
            continue
        if len(values) != len(header):
            raise MalformedRow(line, "*", f"expected {len(header)} fields, got {len(values)}")
        yield line, dict(zip(header, values))


def _likert(line: int, column: str, text: str) -> int:
    try:
        value = int(text.strip())
    except ValueError:
        raise MalformedRow(line, column, f"not an integer: {text!r}") from None
    if not 0 <= value <= 4:
        raise MalformedRow(line, column, f"Likert value {value} out of range 0..4")
    return value


def _required(line: int, row: dict, column: str) -> str:
    value = row[column].strip()
    if not value:
        raise MalformedRow(line, column, "value required")
    return value


def import_heuristics_csv(source) -> list[Heuristic]:
    out: list[Heuristic] = []
    seen: set[HeuristicId] = set()
    for line, row in _rows(source, HEURISTIC_COLUMNS):
        set_id = _required(line, row, "set_id")
        try:
            index = int(_required(line, row, "index"))
            hid = HeuristicId(set_id, index)
        except ValueError as exc:
            raise MalformedRow(line, "index", str(exc)) from None
        if hid in seen:
            raise DuplicateId(line, str(hid))
        seen.add(hid)
        out.append(Heuristic(
            id=hid,
            name=_required(line, row, "name"),
            statement=_required(line, row, "statement"),
            isi=_likert(line, "isi", row["isi"]),
        ))
    return out


def _single_attribution(line: int, column: str, text: str) -> str | None:
    text = text.strip()
    if not text:
        return None
    if any(sep in text for sep in (";", ",", "|", " ")):
        raise MalformedRow(line, column, "a problem is attributed to exactly one heuristic")
    return text


def import_problems_csv(source, *, case_study: str, domain_heuristics: Iterable[HeuristicId],
                        control_heuristics: Iterable[str] = tuple(NIELSEN_HEURISTICS)) -> EvaluationDataset:
    domain = tuple(domain_heuristics)
    control = tuple(control_heuristics)
    known_domain, known_control = set(domain), set(control)
    problems: list[ProblemRecord] = []
    seen: set[str] = set()
    for line, row in _rows(source, PROBLEM_COLUMNS):
        pid = _required(line, row, "id")
        if pid in seen:
            raise DuplicateId(line, pid)
        seen.add(pid)
        try:
            classification = Classification.parse(row["classification"])
        except ValueError as exc:
            raise MalformedRow(line, "classification", str(exc)) from None

        d_text = _single_attribution(line, "domain_heuristic", row["domain_heuristic"])
        domain_attr = None
        if d_text is not None:
            try:
                domain_attr = HeuristicId.parse(d_text)
            except ValueError as exc:
                raise MalformedRow(line, "domain_heuristic", str(exc)) from None
            if domain_attr not in known_domain:
                raise MalformedRow(line, "domain_heuristic", f"{domain_attr} is not a domain heuristic of this evaluation")
        control_attr = _single_attribution(line, "control_heuristic", row["control_heuristic"])
        if control_attr is not None and control_attr not in known_control:
            raise MalformedRow(line, "control_heuristic", f"{control_attr} is not a control heuristic")
        spec_text = row["control_specificity"].strip()
        specificity = _likert(line, "control_specificity", spec_text) if spec_text else None

        record_kwargs = dict(
            id=pid,
            description=_required(line, row, "description"),
            classification=classification,
            severity=_likert(line, "severity", row["severity"]),
            domain_attribution=domain_attr,
            control_attribution=control_attr,
            control_specificity=specificity,
        )
        shape = shape_violations(classification, domain_attr, control_attr, specificity)
        if shape:
            raise MalformedRow(line, *shape[0])
        problems.append(ProblemRecord(**record_kwargs))
    return EvaluationDataset(case_study=case_study, domain_heuristics=domain,
                             control_heuristics=control, problems=tuple(problems))


def import_profile_csv(source) -> list[DimensionItem]:
    out = []
    seen: set[tuple[DimensionKind, str]] = set()
    for line, row in _rows(source, PROFILE_COLUMNS):
        try:
            kind = DimensionKind(row["kind"].strip().upper())
        except ValueError:
            raise MalformedRow(line, "kind", f"unknown dimension {row['kind']!r} (UC, LD, PD, UP)") from None
        label = _required(line, row, "label")
        key = (kind, label.casefold())
        if key in seen:
            raise DuplicateId(line, f"{kind.value}:{label}")
        seen.add(key)
        out.append(DimensionItem(kind, label, _likert(line, "specificity", row["specificity"])))
    return out


def import_gsi_csv(source) -> list[GsiTable]:
    grouped: dict[tuple[HeuristicId, DimensionKind], dict[str, int]] = {}
    for line, row in _rows(source, GSI_COLUMNS):
        try:
            hid = HeuristicId.parse(row["heuristic"])
        except ValueError as exc:
            raise MalformedRow(line, "heuristic", str(exc)) from None
        try:
            kind = DimensionKind(row["kind"].strip().upper())
        except ValueError:
            raise MalformedRow(line, "kind", f"unknown dimension {row['kind']!r}") from None
        label = _required(line, row, "label")
        scores = grouped.setdefault((hid, kind), {})
        if label in scores:
            raise DuplicateId(line, f"{hid} {kind.value}:{label}")
        scores[label] = _likert(line, "score", row["score"])
    return [GsiTable(h, k, s) for (h, k), s in grouped.items()]


def chart_rows(reports: Iterable[IndicatorReport]) -> list[tuple[str, str, str, str]]:
    reports = list(reports)
    if not reports:
        raise NothingToExport("no indicator reports to export")
    cases = [r.case_study for r in reports]
    if len(set(cases)) != len(cases):
        raise ValueError("one report per case study expected")
    rows = []
    for report in sorted(reports, key=lambda r: r.case_study):
        for name in INDICATOR_ORDER:
            rate = report.rate(name)
            value = "" if rate.value is None else decimal4(rate.value)
            rows.append((report.case_study, name, value, "true" if rate.available else "false"))
    return rows


def export_chart_data(reports: Iterable[IndicatorReport]) -> str:
    """CSV text for plotting indicators against the reference value 1."""
    buf = io.StringIO()
    buf.write("# reference_value=1\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CHART_COLUMNS)
    writer.writerows(chart_rows(reports))
    return buf.getvalue()
