"""Command-line surface: ``hwb <command> ...`` against one project file.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 I/O error.
Mutating commands hold an exclusive lock on ``<project>.lock`` while they run.
"""

from __future__ import annotations

import argparse
import contextlib
import fcntl
import json
import sys
from pathlib import Path

from . import csvio
from . import normalization as norm
from . import project as proj
from . import serialize as ser
from .advisor import RefinementAdvice
from .indicators import INDICATOR_ORDER, SYMBOLS, IndicatorReport
from .model import (
    NIELSEN_HEURISTICS,
    ConflictKind,
    ConflictNote,
    DimensionItem,
    DimensionKind,
    Found,
    GeneralizedFrom,
    GroupUnderGeneral,
    Heuristic,
    HeuristicId,
    KeepOneDiscardRest,
    KeptAfterDedup,
    MergedFrom,
    MergeReformulate,
    SplitFrom,
    SplitIntoSeveral,
    Status,
)
from .persistence import IoFailure, PersistenceError, load_project, save_project
from .rational import decimal4, parse_threshold
from .specificity import MATRIX_COLUMNS, GsiTable
from .templates import lint_template, render_template, validate_template

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_IO = 3

DEFAULT_PROJECT = "workbench.json"


class UsageError(Exception):
    pass


# helpers


@contextlib.contextmanager
def _locked(path: Path):
    lock_path = path.with_name(path.name + ".lock")
    try:
        lock_path.parent.mkdir(parents=True, exist_ok=True)
        fh = open(lock_path, "a")
    except OSError as exc:
        raise IoFailure(f"cannot open lock file {lock_path}: {exc}") from exc
    with fh:
        fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh.fileno(), fcntl.LOCK_UN)


def _load(args) -> proj.ProjectState:
    path = Path(args.project)
    if not path.exists():
        raise IoFailure(f"no project file at {path} (run 'hwb init' first)")
    return load_project(path)


def _hid(text: str) -> HeuristicId:
    try:
        return HeuristicId.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _kind(text: str) -> DimensionKind:
    try:
        return DimensionKind(text.strip().upper())
    except ValueError:
        raise UsageError(f"unknown dimension {text!r} (UC, LD, PD, UP)") from None


def _table(headers, rows) -> str:
    rows = [[str(c) for c in r] for r in rows]
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(headers)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()  # noqa: E731
    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(r) for r in rows)
    return "\n".join(out)


def _origin_text(origin) -> str:
    if isinstance(origin, Found):
        return "found"
    if isinstance(origin, KeptAfterDedup):
        return "kept after dedup"
    if isinstance(origin, MergedFrom):
        return "merged from " + ", ".join(map(str, origin.sources))
    if isinstance(origin, GeneralizedFrom):
        return "generalizes " + ", ".join(map(str, origin.sources))
    if isinstance(origin, SplitFrom):
        return f"split from {origin.source}"
    return "?"


def _value_text(value) -> str:
    return "-" if value is None else decimal4(value)


# commands


def cmd_init(args) -> int:
    path = Path(args.project)
    if path.exists() and not args.force:
        print(f"error: {path} already exists (use --force to overwrite)", file=sys.stderr)
        return EXIT_INVALID
    state = proj.new_project(args.name, args.keyword or ())
    save_project(state, path)
    print(f"created project {args.name!r} in {path}")
    return EXIT_OK


def cmd_keyword_add(state, args):
    state = proj.add_keywords(state, *args.keywords)
    print("keywords: " + ", ".join(state.profile.keywords))
    return state


def cmd_dimension_add(state, args):
    item = DimensionItem(_kind(args.kind), args.label, args.specificity)
    state = proj.add_dimension_item(state, item)
    print(f"added {item.kind.value} item {item.label!r}")
    return state


def cmd_dimension_import(state, args):
    items = csvio.import_profile_csv(args.csv)
    for item in items:
        state = proj.add_dimension_item(state, item)
    print(f"imported {len(items)} dimension item(s)")
    return state


def cmd_dimension_list(state, args) -> int:
    rows = [(i.kind.value, i.label, int(i.initial_specificity)) for i in state.profile.items]
    print(_table(("kind", "label", "specificity"), rows))
    missing = state.profile.missing_kinds()
    if missing:
        print("missing dimensions: " + ", ".join(k.value for k in missing))
    return EXIT_OK


def cmd_heuristic_import(state, args):
    heuristics = csvio.import_heuristics_csv(args.csv)
    state = proj.add_heuristics(state, heuristics)
    print(f"imported {len(heuristics)} heuristic(s)")
    return state


def cmd_heuristic_list(state, args) -> int:
    rows = []
    for h in state.catalog.heuristics:
        if h.status is Status.DISCARDED and not args.all:
            continue
        rows.append((h.id, h.status.value, int(h.isi), _origin_text(h.origin), h.name))
    print(_table(("id", "status", "isi", "origin", "name"), rows))
    return EXIT_OK


def cmd_isi_set(state, args):
    state = proj.set_isi(state, _hid(args.heuristic), args.isi, args.rationale or "")
    print(f"ISI of {args.heuristic} set to {args.isi}")
    return state


def _scores(pairs: list[str]) -> dict[str, int]:
    scores = {}
    for pair in pairs:
        label, sep, value = pair.rpartition("=")
        if not sep or not label:
            raise UsageError(f"expected LABEL=SCORE, got {pair!r}")
        try:
            scores[label] = int(value)
        except ValueError:
            raise UsageError(f"score must be an integer in {pair!r}") from None
    return scores


def cmd_gsi_set(state, args):
    table = GsiTable(_hid(args.heuristic), _kind(args.kind), _scores(args.scores))
    state = proj.set_gsi(state, table)
    print(f"GSI row {table.heuristic} {table.kind.value} recorded")
    return state


def cmd_gsi_import(state, args):
    tables = csvio.import_gsi_csv(args.csv)
    for table in tables:
        state = proj.set_gsi(state, table)
    print(f"imported {len(tables)} GSI row(s)")
    return state


def cmd_matrix_build(state, args):
    try:
        threshold = parse_threshold(args.threshold)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"invalid threshold {args.threshold!r}") from None
    state = proj.prioritize(state, threshold)
    _print_matrix(state)
    return state


def _print_matrix(state) -> None:
    selected = set(state.catalog.selection)
    rows = []
    for r in state.matrix.rows:
        rows.append((r.heuristic, int(r.isi), *(decimal4(r.gsi(k)) for k in MATRIX_COLUMNS),
                     decimal4(r.fsi), "yes" if r.heuristic in selected else ""))
    headers = ("heuristic", "ISI", *(f"GSI_{k.value}" for k in MATRIX_COLUMNS), "FSI", "selected")
    print(_table(headers, rows))
    if state.threshold is not None:
        print(f"threshold: {decimal4(state.threshold)}; selected {len(selected)} of {len(rows)}")


def cmd_matrix_show(state, args) -> int:
    if state.matrix is None:
        print("error: no specificity matrix built yet", file=sys.stderr)
        return EXIT_INVALID
    _print_matrix(state)
    return EXIT_OK


def cmd_normalize_declare(state, args):
    note = ConflictNote(args.conflict, ConflictKind(args.kind.capitalize()),
                        tuple(_hid(m) for m in args.members), args.note or "")
    state = proj.declare_conflict(state, note)
    print(f"declared {note.kind.value.lower()} {note.id}: " + ", ".join(map(str, note.members)))
    return state


def _new_heuristic(catalog, name: str, statement: str, isi: int, offset: int = 0) -> Heuristic:
    return Heuristic(norm.next_new_id(catalog, offset), name, statement, isi)


def cmd_normalize_apply(state, args):
    catalog = state.catalog
    if args.strategy == "keep":
        action = KeepOneDiscardRest(_hid(args.keep), tuple(_hid(d) for d in args.discard),
                                    args.rationale, args.conflict)
    elif args.strategy in ("merge", "group"):
        cls = MergeReformulate if args.strategy == "merge" else GroupUnderGeneral
        new = _new_heuristic(catalog, args.name, args.statement, args.isi)
        action = cls(tuple(_hid(i) for i in args.inputs), new, args.rationale, args.conflict)
    else:
        parts = []
        for n, (name, statement, isi) in enumerate(args.part):
            try:
                isi = int(isi)
            except ValueError:
                raise UsageError(f"ISI must be an integer, got {isi!r}") from None
            parts.append(_new_heuristic(catalog, name, statement, isi, n))
        action = SplitIntoSeveral(_hid(args.input), tuple(parts), args.rationale, args.conflict)
    state = proj.apply_normalization(state, action)
    created = {h.id for h in state.catalog.heuristics} - set(catalog.ids())
    print(f"applied {type(action).__name__} resolving {args.conflict}")
    for hid in sorted(created):
        print(f"  new heuristic {hid}")
    return state


def cmd_normalize_status(state, args) -> int:
    catalog = state.catalog
    status = norm.check_normalized(catalog)
    resolved = catalog.resolved_conflicts()
    rows = [(c.id, c.kind.value, ", ".join(map(str, c.members)),
             "resolved" if c.id in resolved else "open") for c in catalog.conflicts]
    print(_table(("conflict", "kind", "members", "state"), rows))
    print(f"actions logged: {len(catalog.actions)}")
    print("normalized: " + ("yes" if status.normalized else "no"))
    print("certified: " + ("yes" if catalog.certified else "no"))
    return EXIT_OK if status.normalized else EXIT_INVALID


def cmd_template_set(state, args):
    try:
        raw = json.loads(Path(args.file).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {args.file}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{args.file} is not valid JSON: {exc}") from None
    try:
        template = ser.dec_template(raw)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{args.file}: malformed template ({exc})") from None
    violations = validate_template(template, state.catalog)
    if violations:
        for v in violations:
            print(f"invalid: {v}", file=sys.stderr)
        raise ValueError(f"template for {template.heuristic} rejected")
    state = proj.set_template(state, template)
    for warning in lint_template(template):
        print(f"warning: {warning}")
    print(f"template for {template.heuristic} stored")
    return state


def cmd_template_validate(state, args) -> int:
    targets = [_hid(args.heuristic)] if args.heuristic else list(state.catalog.selection)
    failed = False
    for hid in targets:
        t = state.template_for(hid)
        if t is None:
            print(f"{hid}: no template")
            failed = True
            continue
        violations = validate_template(t, state.catalog)
        if violations:
            failed = True
            for v in violations:
                print(f"{hid}: {v}")
        else:
            print(f"{hid}: ok")
        for warning in lint_template(t):
            print(f"{hid}: warning: {warning}")
    return EXIT_INVALID if failed else EXIT_OK


def cmd_template_render(state, args) -> int:
    hid = _hid(args.heuristic)
    t = state.template_for(hid)
    if t is None:
        print(f"error: no template for {hid}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(render_template(t, state.catalog))
    return EXIT_OK


def cmd_eval_import(state, args):
    control = tuple(args.control.split(",")) if args.control else tuple(NIELSEN_HEURISTICS)
    dataset = csvio.import_problems_csv(args.csv, case_study=args.case,
                                        domain_heuristics=state.catalog.selection,
                                        control_heuristics=control)
    state = proj.add_dataset(state, dataset)
    print(f"imported {len(dataset.problems)} problem(s) for case {args.case!r}")
    return state


def _reports(state, case: str | None) -> list[proj.StoredReport]:
    stored = state.current_reports()
    if not stored:
        # Reports are stored when stage 7 completes; before that show a preview.
        stored = proj.compute_reports(state)
    if case is not None:
        stored = [r for r in stored if r.report.case_study == case]
        if not stored:
            raise ValueError(f"no report for case study {case!r}")
    return sorted(stored, key=lambda r: r.report.case_study)


def _print_report(report: IndicatorReport) -> None:
    print(f"case: {report.case_study}")
    rows = []
    for name in INDICATOR_ORDER:
        rate = report.rate(name)
        rows.append((SYMBOLS[name], name, _value_text(rate.value), _value_text(rate.numerator),
                     _value_text(rate.denominator), "yes" if rate.available else f"no ({rate.reason})"))
    print(_table(("symbol", "rate", "value", "numerator", "denominator", "available"), rows))
    print("counts: " + ", ".join(f"{k}={v}" for k, v in report.counts().items()))
    print(f"variance: domain={decimal4(report.variance_domain)} control={decimal4(report.variance_control)}")


def cmd_indicators(state, args) -> int:
    stored = _reports(state, args.case)
    if not stored:
        print("error: no evaluation dataset in this iteration", file=sys.stderr)
        return EXIT_INVALID
    for n, r in enumerate(stored):
        if n:
            print()
        _print_report(r.report)
    return EXIT_OK


def _print_advice(advice: RefinementAdvice) -> None:
    print(f"case: {advice.case_study}")
    print(f"verdict: {advice.verdict.value}")
    rows = []
    for c in advice.checks:
        state = "triggered" if c.below_one else ("not available" if not c.available else "ok")
        note = " (approximate)" if c.approximate else ""
        rows.append((c.indicator.value, c.rate + note, _value_text(c.value), state))
    print(_table(("indicator", "rate", "value", "result"), rows))
    for t in advice.triggered:
        note = ", approximate" if t.approximate else ""
        print(f"{t.indicator.value} = {_value_text(t.value)}{note}: revisit stages "
              + ", ".join(map(str, t.revisit_stages)))
        for h in t.hypotheses:
            print(f"  - {h}")
    print("counts: " + ", ".join(f"{k}={v}" for k, v in advice.counts))


def cmd_advise(state, args) -> int:
    stored = _reports(state, args.case)
    if not stored:
        print("error: no evaluation dataset in this iteration", file=sys.stderr)
        return EXIT_INVALID
    for n, r in enumerate(stored):
        if n:
            print()
        _print_advice(r.advice)
    return EXIT_OK


def cmd_loopback(state, args):
    state = proj.loop_back(state, args.stage, args.reason)
    record = state.history[-1]
    note = " (override)" if record.overridden else ""
    print(f"iteration {state.iteration}: stage {args.stage} reopened{note}")
    return state


def cmd_export_chart(state, args) -> int:
    reports = [r.report for r in _reports(state, None)]
    if not reports:
        raise csvio.NothingToExport("no indicator reports to export")
    text = csvio.export_chart_data(reports)
    if args.output:
        try:
            Path(args.output).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot write {args.output}: {exc}") from exc
        print(f"wrote {len(reports) * len(INDICATOR_ORDER)} row(s) to {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_status(state, args) -> int:
    print(f"project: {state.profile.domain_name}")
    print(f"iteration: {state.iteration}")
    print(f"outcome: {state.outcome.value}")
    rows = [(s, proj.STAGE_NAMES[s], state.status(s).value) for s in proj.STAGES]
    print(_table(("stage", "name", "status"), rows))
    live = state.catalog.live()
    print(f"heuristics: {len(live)} live, {len(state.catalog.selection)} selected")
    print(f"datasets this iteration: {len(state.current_datasets())}")
    advised = proj.advised_stages(state)
    if state.current_reports():
        print("advised stages: " + (", ".join(map(str, advised)) or "none"))
    for h in state.history:
        tag = "override" if h.overridden else "advised"
        print(f"iteration {h.iteration} looped back to stage {h.target_stage} ({tag}): {h.reason}")
    return EXIT_OK


def cmd_stage_complete(state, args):
    state = proj.advance_stage(state, args.stage, exit_early=args.exit_early)
    print(f"stage {args.stage} complete")
    if state.outcome is not proj.Outcome.ONGOING:
        print(f"outcome: {state.outcome.value}")
    elif args.stage == 7:
        for r in state.current_reports():
            print(f"{r.report.case_study}: {r.advice.verdict.value}")
    return state


# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hwb", description="Usability heuristic development workbench")
    parser.add_argument("-p", "--project", default=DEFAULT_PROJECT, help="project file (default: %(default)s)")
    sub = parser.add_subparsers(dest="command", required=True)

    def group(name: str, help: str):
        p = sub.add_parser(name, help=help)
        return p.add_subparsers(dest="subcommand", required=True)

    def command(parent, name: str, fn, help: str, *, mutates: bool):
        p = parent.add_parser(name, help=help)
        p.set_defaults(fn=fn, mutates=mutates)
        return p

    p = sub.add_parser("init", help="create a new project file")
    p.add_argument("name", help="domain name")
    p.add_argument("--keyword", action="append", help="search keyword (repeatable)")
    p.add_argument("--force", action="store_true", help="overwrite an existing project file")
    p.set_defaults(fn=cmd_init, mutates=None)

    g = group("keyword", "search keywords (stage 1)")
    p = command(g, "add", cmd_keyword_add, "record search keywords", mutates=True)
    p.add_argument("keywords", nargs="+")

    g = group("dimension", "characteristic dimensions (stage 1)")
    p = command(g, "add", cmd_dimension_add, "add one dimension item", mutates=True)
    p.add_argument("kind", help="UC, LD, PD or UP")
    p.add_argument("label")
    p.add_argument("specificity", type=int, help="initial specificity 0..4")
    p = command(g, "import", cmd_dimension_import, "import items from CSV (kind,label,specificity)", mutates=True)
    p.add_argument("csv")
    command(g, "list", cmd_dimension_list, "list dimension items", mutates=False)

    g = group("heuristic", "candidate heuristics (stage 2)")
    p = command(g, "import", cmd_heuristic_import, "import heuristics from CSV", mutates=True)
    p.add_argument("csv")
    p = command(g, "list", cmd_heuristic_list, "list the catalog", mutates=False)
    p.add_argument("--all", action="store_true", help="include discarded heuristics")

    g = group("isi", "initial specificity (stage 3)")
    p = command(g, "set", cmd_isi_set, "assign or revise an ISI", mutates=True)
    p.add_argument("heuristic")
    p.add_argument("isi", type=int)
    p.add_argument("--rationale")

    g = group("normalize", "duplication and overlap (stage 4)")
    p = command(g, "declare", cmd_normalize_declare, "declare a conflict", mutates=True)
    p.add_argument("conflict", help="conflict id")
    p.add_argument("members", nargs="+")
    p.add_argument("--kind", choices=("duplication", "overlap"), required=True)
    p.add_argument("--note")
    p = command(g, "apply", cmd_normalize_apply, "resolve a conflict", mutates=True)
    strategies = p.add_subparsers(dest="strategy", required=True)
    s = strategies.add_parser("keep", help="keep one heuristic, discard the rest")
    s.add_argument("--keep", required=True)
    s.add_argument("--discard", nargs="+", required=True)
    for name, help in (("merge", "merge and reformulate into a new heuristic"),
                       ("group", "group under a new general heuristic")):
        s = strategies.add_parser(name, help=help)
        s.add_argument("--inputs", nargs="+", required=True)
        s.add_argument("--name", required=True)
        s.add_argument("--statement", required=True)
        s.add_argument("--isi", type=int, required=True)
    s = strategies.add_parser("split", help="split one heuristic into several")
    s.add_argument("--input", required=True)
    s.add_argument("--part", nargs=3, action="append", required=True,
                   metavar=("NAME", "STATEMENT", "ISI"))
    for s in strategies.choices.values():
        s.add_argument("--conflict", required=True, help="conflict id this resolves")
        s.add_argument("--rationale", required=True)
    command(g, "status", cmd_normalize_status, "show conflicts and whether normalization is done", mutates=False)

    g = group("gsi", "per-dimension specificity scores (stage 5)")
    p = command(g, "set", cmd_gsi_set, "record one GSI row", mutates=True)
    p.add_argument("heuristic")
    p.add_argument("kind", help="UC, LD, PD or UP")
    p.add_argument("scores", nargs="+", metavar="LABEL=SCORE")
    p = command(g, "import", cmd_gsi_import, "import rows from CSV (heuristic,kind,label,score)", mutates=True)
    p.add_argument("csv")

    g = group("matrix", "specificity matrix (stage 5)")
    p = command(g, "build", cmd_matrix_build, "build the matrix and select heuristics", mutates=True)
    p.add_argument("--threshold", required=True, help="minimum FSI, e.g. 1, 0.75 or 3/4")
    command(g, "show", cmd_matrix_show, "print the matrix", mutates=False)

    g = group("template", "detailed descriptions (stage 6)")
    p = command(g, "set", cmd_template_set, "store a template from a JSON file", mutates=True)
    p.add_argument("file")
    p = command(g, "validate", cmd_template_validate, "check templates", mutates=False)
    p.add_argument("heuristic", nargs="?")
    p = command(g, "render", cmd_template_render, "print a template as text", mutates=False)
    p.add_argument("heuristic")

    g = group("eval", "evaluation data (stage 7)")
    p = command(g, "import", cmd_eval_import, "import problems from CSV", mutates=True)
    p.add_argument("csv")
    p.add_argument("--case", required=True, help="case study name")
    p.add_argument("--control", help="comma-separated control heuristic tokens (default N1..N10)")

    p = sub.add_parser("indicators", help="print quality indicators")
    p.add_argument("--case")
    p.set_defaults(fn=cmd_indicators, mutates=False)
    p = sub.add_parser("advise", help="print refinement advice")
    p.add_argument("--case")
    p.set_defaults(fn=cmd_advise, mutates=False)
    p = sub.add_parser("loopback", help="reopen a stage in a new iteration")
    p.add_argument("stage", type=int)
    p.add_argument("--reason", help="required when the stage was not advised")
    p.set_defaults(fn=cmd_loopback, mutates=True)

    g = group("export", "export data")
    p = command(g, "chart", cmd_export_chart, "indicator values as CSV for plotting", mutates=False)
    p.add_argument("-o", "--output")

    p = sub.add_parser("status", help="show stage progress")
    p.set_defaults(fn=cmd_status, mutates=False)

    g = group("stage", "stage transitions")
    p = command(g, "complete", cmd_stage_complete, "mark a stage complete", mutates=True)
    p.add_argument("stage", type=int)
    p.add_argument("--exit-early", action="store_true",
                   help="stage 2 only: an already validated heuristic set was found")
    return parser


def _run(args) -> int:
    path = Path(args.project)
    if args.mutates is None:
        with _locked(path):
            return args.fn(args)
    if not args.mutates:
        return args.fn(_load(args), args)
    with _locked(path):
        before = _load(args)
        after = args.fn(before, args)
        if after is not before:
            save_project(after, path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _run(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IoFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PersistenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
