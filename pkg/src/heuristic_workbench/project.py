"""Eight-stage project lifecycle with early exit and refinement loop-back.

Stages:
    1 search for specific information     5 heuristic prioritization
    2 search for usability heuristics     6 detailed description
    3 heuristic specificity (ISI)         7 validation
    4 heuristic normalization             8 refinement

Every edit belongs to one stage and is only accepted while that stage is the
one being worked on. Completed stages are reopened only by :func:`loop_back`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

from . import normalization as norm
from .advisor import RefinementAdvice, advise
from .indicators import IndicatorReport, build_report
from .model import (
    ConflictNote,
    DimensionItem,
    DomainProfile,
    EvaluationDataset,
    Heuristic,
    HeuristicCatalog,
    HeuristicId,
    ReviseIsi,
    Status,
    validate_dataset,
)
from .specificity import GsiTable, SpecificityMatrix, build_matrix, select_heuristics
from .templates import HeuristicTemplate, validate_template

STAGES = (1, 2, 3, 4, 5, 6, 7, 8)

STAGE_NAMES = {
    1: "Search for specific information",
    2: "Search for usability heuristics",
    3: "Heuristic specificity",
    4: "Heuristic normalization",
    5: "Heuristic prioritization",
    6: "Detailed description of heuristics",
    7: "Validation",
    8: "Refinement",
}


class StageStatus(str, Enum):
    NOT_STARTED = "NotStarted"
    IN_PROGRESS = "InProgress"
    COMPLETE = "Complete"


class Outcome(str, Enum):
    ONGOING = "Ongoing"
    EXITED_AT_STAGE2 = "ExitedAtStage2"
    VALIDATED = "Validated"


class WorkflowError(ValueError):
    pass


class PrerequisiteMissing(WorkflowError):
    def __init__(self, stage: int, what: str):
        self.stage = stage
        self.what = what
        super().__init__(f"stage {stage}: {what}")


class StageLocked(WorkflowError):
    pass


class NoAdviceYet(WorkflowError):
    pass


class InvalidTarget(WorkflowError):
    pass


class DuplicateId(WorkflowError):
    pass


@dataclass(frozen=True)
class StoredDataset:
    iteration: int
    dataset: EvaluationDataset


@dataclass(frozen=True)
class StoredReport:
    """A report plus the matrix it was computed against, so it stays recomputable."""

    dataset_index: int
    iteration: int
    matrix: SpecificityMatrix | None
    report: IndicatorReport
    advice: RefinementAdvice


@dataclass(frozen=True)
class IterationRecord:
    """What an iteration looked like when the researcher looped back out of it."""

    iteration: int
    stage_status: tuple[StageStatus, ...]
    target_stage: int
    reason: str
    advised_stages: tuple[int, ...]
    overridden: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "stage_status", tuple(StageStatus(s) for s in self.stage_status))
        object.__setattr__(self, "advised_stages", tuple(self.advised_stages))


@dataclass(frozen=True)
class ProjectState:
    profile: DomainProfile
    stage_status: tuple[StageStatus, ...] = (StageStatus.IN_PROGRESS,) + (StageStatus.NOT_STARTED,) * 7
    iteration: int = 1
    catalog: HeuristicCatalog = field(default_factory=HeuristicCatalog)
    gsi_tables: tuple[GsiTable, ...] = ()
    matrix: SpecificityMatrix | None = None
    threshold: Fraction | None = None
    templates: tuple[HeuristicTemplate, ...] = ()
    datasets: tuple[StoredDataset, ...] = ()
    reports: tuple[StoredReport, ...] = ()
    outcome: Outcome = Outcome.ONGOING
    history: tuple[IterationRecord, ...] = ()

    def __post_init__(self) -> None:
        status = tuple(StageStatus(s) for s in self.stage_status)
        if len(status) != 8:
            raise ValueError("stage_status must have exactly 8 entries")
        object.__setattr__(self, "stage_status", status)
        object.__setattr__(self, "outcome", Outcome(self.outcome))
        for name in ("gsi_tables", "templates", "datasets", "reports", "history"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def status(self, stage: int) -> StageStatus:
        return self.stage_status[stage - 1]

    def is_complete(self, stage: int) -> bool:
        return self.status(stage) is StageStatus.COMPLETE

    @property
    def current_stage(self) -> int | None:
        """First stage that is not complete, or None when all eight are."""
        for s in STAGES:
            if not self.is_complete(s):
                return s
        return None

    def template_for(self, hid: HeuristicId) -> HeuristicTemplate | None:
        for t in self.templates:
            if t.heuristic == hid:
                return t
        return None

    def current_datasets(self) -> list[tuple[int, EvaluationDataset]]:
        return [(n, d.dataset) for n, d in enumerate(self.datasets) if d.iteration == self.iteration]

    def current_reports(self) -> list[StoredReport]:
        return [r for r in self.reports if r.iteration == self.iteration]


def new_project(domain_name: str, keywords=()) -> ProjectState:
    return ProjectState(profile=DomainProfile(domain_name, tuple(keywords)))


def _with_status(state: ProjectState, stage: int, status: StageStatus) -> ProjectState:
    statuses = list(state.stage_status)
    statuses[stage - 1] = status
    return replace(state, stage_status=tuple(statuses))


def _editing(state: ProjectState, stage: int) -> ProjectState:
    """Guard for artifact edits belonging to ``stage``; marks it InProgress."""
    if state.outcome is not Outcome.ONGOING:
        raise StageLocked(f"project is closed ({state.outcome.value})")
    if state.is_complete(stage):
        raise StageLocked(f"stage {stage} is complete; loop back to reopen it")
    for s in range(1, stage):
        if not state.is_complete(s):
            raise PrerequisiteMissing(stage, f"stage {s} is not complete")
    if state.status(stage) is StageStatus.NOT_STARTED:
        state = _with_status(state, stage, StageStatus.IN_PROGRESS)
    return state


# Stage 1


def add_keywords(state: ProjectState, *keywords: str) -> ProjectState:
    state = _editing(state, 1)
    return replace(state, profile=state.profile.with_keywords(*keywords))


def add_dimension_item(state: ProjectState, item: DimensionItem) -> ProjectState:
    state = _editing(state, 1)
    return replace(state, profile=state.profile.with_item(item))


# Stage 2


def add_heuristics(state: ProjectState, heuristics) -> ProjectState:
    state = _editing(state, 2)
    catalog = state.catalog
    existing = set(catalog.ids())
    new = []
    for h in heuristics:
        if h.id in existing:
            raise DuplicateId(f"heuristic {h.id} already in catalog")
        existing.add(h.id)
        new.append(h)
    # Replay keeps heuristic order identical to a from-scratch rebuild even when
    # normalization actions already exist (after a loop-back to stage 2).
    catalog = norm.replay(replace(catalog, baseline=catalog.baseline + tuple(new)))
    return replace(state, catalog=catalog)


# Stages 3-4


def set_isi(state: ProjectState, hid: HeuristicId, isi: int, rationale: str = "") -> ProjectState:
    """Assign an ISI in Stage 3, or record a revision while Stage 4 is open."""
    stage = 3 if not state.is_complete(3) else 4
    state = _editing(state, stage)
    catalog = state.catalog
    if catalog.actions or state.is_complete(3):
        entry = ReviseIsi(hid, isi, rationale or "ISI revised during normalization")
        catalog = norm.apply_action(catalog, entry)
    else:
        catalog = norm.set_baseline_isi(catalog, hid, isi)
    return replace(state, catalog=catalog)


def declare_conflict(state: ProjectState, note: ConflictNote) -> ProjectState:
    state = _editing(state, 4)
    return replace(state, catalog=norm.declare_conflict(state.catalog, note))


def apply_normalization(state: ProjectState, action) -> ProjectState:
    state = _editing(state, 4)
    return replace(state, catalog=norm.apply_action(state.catalog, action))


# Stage 5


def set_gsi(state: ProjectState, table: GsiTable) -> ProjectState:
    state = _editing(state, 5)
    h = state.catalog.get(table.heuristic)
    if h is None:
        raise norm.UnknownId(f"unknown heuristic {table.heuristic}")
    if h.status is Status.DISCARDED:
        raise norm.AlreadyDiscarded(f"{table.heuristic} is discarded")
    table.check_against(state.profile)
    kept = tuple(t for t in state.gsi_tables
                 if (t.heuristic, t.kind) != (table.heuristic, table.kind))
    return replace(state, gsi_tables=kept + (table,), matrix=None)


def prioritize(state: ProjectState, threshold) -> ProjectState:
    """Build the specificity matrix and select heuristics with FSI >= threshold."""
    state = _editing(state, 5)
    threshold = Fraction(threshold)
    if not 0 <= threshold <= 4:
        raise WorkflowError(f"threshold must lie in [0, 4], got {threshold}")
    matrix = build_matrix(state.catalog, _live_tables(state), state.profile)
    chosen = select_heuristics(matrix, threshold)
    catalog = norm.mark_selected(state.catalog, chosen)
    return replace(state, matrix=matrix, threshold=threshold, catalog=catalog)


def _live_tables(state: ProjectState) -> list[GsiTable]:
    live = {h.id for h in state.catalog.live()}
    return [t for t in state.gsi_tables if t.heuristic in live]


# Stage 6


def set_template(state: ProjectState, template: HeuristicTemplate) -> ProjectState:
    state = _editing(state, 6)
    if template.heuristic not in state.catalog.selection:
        raise WorkflowError(f"{template.heuristic} is not a selected heuristic")
    kept = tuple(t for t in state.templates if t.heuristic != template.heuristic)
    return replace(state, templates=kept + (template,))


# Stage 7


def add_dataset(state: ProjectState, dataset: EvaluationDataset) -> ProjectState:
    state = _editing(state, 7)
    selected = set(state.catalog.selection)
    stray = [str(h) for h in dataset.domain_heuristics if h not in selected]
    if stray:
        raise WorkflowError("domain heuristics not selected in this project: " + ", ".join(stray))
    if any(d.dataset.case_study == dataset.case_study for _, d in
           ((n, s) for n, s in enumerate(state.datasets) if s.iteration == state.iteration)):
        raise DuplicateId(f"case study {dataset.case_study!r} already imported in this iteration")
    return replace(state, datasets=state.datasets + (StoredDataset(state.iteration, dataset),))


def compute_reports(state: ProjectState) -> list[StoredReport]:
    """Fresh reports and advice for every dataset of the current iteration."""
    out = []
    for n, ds in state.current_datasets():
        report = build_report(ds, state.matrix)
        out.append(StoredReport(n, state.iteration, state.matrix, report, advise(report)))
    return out


# Stage transitions


def _require(cond: bool, stage: int, what: str) -> None:
    if not cond:
        raise PrerequisiteMissing(stage, what)


def advance_stage(state: ProjectState, stage: int, *, exit_early: bool = False) -> ProjectState:
    """Mark ``stage`` complete after checking its inputs; raises without changing state."""
    if stage not in STAGES:
        raise WorkflowError(f"no stage {stage}")
    if state.outcome is not Outcome.ONGOING:
        raise StageLocked(f"project is closed ({state.outcome.value})")
    for s in range(1, stage):
        _require(state.is_complete(s), stage, f"stage {s} is not complete")
    if state.is_complete(stage):
        raise StageLocked(f"stage {stage} is already complete")
    if exit_early and stage != 2:
        raise WorkflowError("early exit is only possible at stage 2")

    if stage == 1:
        missing = state.profile.missing_kinds()
        _require(not missing, 1, "no items for dimension(s) " + ", ".join(k.value for k in missing))
        _require(bool(state.profile.keywords), 1, "no search keywords recorded")
    elif stage == 2:
        _require(bool(state.catalog.heuristics), 2, "no heuristics found yet")
    elif stage == 3:
        _require(bool(state.catalog.heuristics), 3, "no heuristics to score")
    elif stage == 4:
        status = norm.check_normalized(state.catalog)
        _require(status.normalized, 4,
                 "open conflicts: " + ", ".join(c.id for c in status.open_conflicts))
        state = replace(state, catalog=norm.certify(state.catalog))
    elif stage == 5:
        _require(state.matrix is not None, 5, "specificity matrix not built")
        rebuilt = build_matrix(state.catalog, _live_tables(state), state.profile)
        _require(rebuilt == state.matrix, 5, "specificity matrix is stale; rebuild it")
        _require(bool(state.catalog.selection), 5, "no heuristics selected")
    elif stage == 6:
        problems = []
        for hid in state.catalog.selection:
            t = state.template_for(hid)
            if t is None:
                problems.append(f"{hid} has no template")
            elif validate_template(t, state.catalog):
                problems.append(f"{hid} template is invalid")
        _require(not problems, 6, "; ".join(problems))
    elif stage == 7:
        current = state.current_datasets()
        _require(bool(current), 7, "no evaluation dataset imported in this iteration")
        for _, ds in current:
            _require(not validate_dataset(ds), 7, f"dataset {ds.case_study!r} is invalid")
        state = replace(state, reports=state.reports + tuple(compute_reports(state)))
    elif stage == 8:
        _require(bool(state.current_reports()), 8, "no indicator report in this iteration")

    state = _with_status(state, stage, StageStatus.COMPLETE)
    if exit_early:
        state = replace(state, outcome=Outcome.EXITED_AT_STAGE2)
    elif stage == 8:
        state = replace(state, outcome=Outcome.VALIDATED)
    elif stage < 8:
        state = _with_status(state, stage + 1, StageStatus.IN_PROGRESS)
    return state


def latest_advice(state: ProjectState) -> list[RefinementAdvice]:
    return [r.advice for r in state.current_reports()]


def advised_stages(state: ProjectState) -> tuple[int, ...]:
    return tuple(sorted({s for a in latest_advice(state) for s in a.stages()}))


def loop_back(state: ProjectState, target_stage: int, reason: str | None = None) -> ProjectState:
    """Reopen ``target_stage`` and everything after it in a new iteration.

    The target must be one of the stages suggested by the current advice unless
    an explicit reason is given to override it.
    """
    if state.outcome is not Outcome.ONGOING:
        raise StageLocked(f"project is closed ({state.outcome.value})")
    if not state.is_complete(7) or not state.current_reports():
        raise NoAdviceYet("no indicator report and advice in this iteration yet")
    if target_stage not in range(1, 8):
        raise InvalidTarget(f"cannot loop back to stage {target_stage}")
    suggested = advised_stages(state)
    overridden = target_stage not in suggested
    if overridden and not (reason and reason.strip()):
        listing = ", ".join(map(str, suggested)) or "none"
        raise InvalidTarget(
            f"stage {target_stage} is not among the advised stages ({listing}); give a reason to override"
        )
    record = IterationRecord(
        iteration=state.iteration,
        stage_status=state.stage_status,
        target_stage=target_stage,
        reason=(reason or "").strip() or "advised by refinement rules",
        advised_stages=suggested,
        overridden=overridden,
    )
    statuses = [
        StageStatus.COMPLETE if s < target_stage
        else StageStatus.IN_PROGRESS if s == target_stage
        else StageStatus.NOT_STARTED
        for s in STAGES
    ]
    catalog, matrix, threshold = state.catalog, state.matrix, state.threshold
    if target_stage <= 5:
        catalog = norm.replay(catalog, certified=catalog.certified and target_stage > 4, selection=())
        matrix, threshold = None, None
    return replace(
        state,
        stage_status=tuple(statuses),
        iteration=state.iteration + 1,
        catalog=catalog,
        matrix=matrix,
        threshold=threshold,
        history=state.history + (record,),
    )


def rebuild_derived(state: ProjectState) -> ProjectState:
    """Recompute every cached artifact from raw inputs (catalog log, GSI rows, datasets)."""
    catalog = norm.replay(state.catalog)
    matrix = state.matrix
    if matrix is not None:
        matrix = build_matrix(catalog, [t for t in state.gsi_tables
                                        if t.heuristic in {h.id for h in catalog.live()}],
                              state.profile)
    reports = []
    for r in state.reports:
        report = build_report(state.datasets[r.dataset_index].dataset, r.matrix)
        reports.append(replace(r, report=report, advice=advise(report)))
    return replace(state, catalog=catalog, matrix=matrix, reports=tuple(reports))


def heuristic_lookup(state: ProjectState, hid: HeuristicId) -> Heuristic:
    h = state.catalog.get(hid)
    if h is None:
        raise norm.UnknownId(f"unknown heuristic {hid}")
    return h
