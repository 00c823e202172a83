from fractions import Fraction

import pytest

import projects
from heuristic_workbench import project as proj
from heuristic_workbench.model import (
    ConflictKind,
    ConflictNote,
    DimensionItem,
    DimensionKind,
    HeuristicId,
    KeepOneDiscardRest,
    Status,
)
from strategies import heuristic

C, IP, NS = proj.StageStatus.COMPLETE, proj.StageStatus.IN_PROGRESS, proj.StageStatus.NOT_STARTED


def test_new_project_starts_at_stage_one():
    s = proj.new_project("d")
    assert s.stage_status == (IP,) + (NS,) * 7
    assert s.iteration == 1 and s.outcome is proj.Outcome.ONGOING
    assert s.current_stage == 1


def test_stage_order_enforced():
    s = proj.new_project("d", ("k",))
    with pytest.raises(proj.PrerequisiteMissing) as exc:
        proj.advance_stage(s, 3)
    assert exc.value.stage == 3
    with pytest.raises(proj.PrerequisiteMissing, match="no items"):
        proj.advance_stage(s, 1)


def test_stage_one_needs_keywords():
    s = projects.through_stage(0)
    s = proj.advance_stage(proj.add_keywords(s, "extra"), 1)
    assert s.is_complete(1)
    bare = proj.new_project("d")
    for kind in DimensionKind:
        bare = proj.add_dimension_item(bare, DimensionItem(kind, "x", 1))
    with pytest.raises(proj.PrerequisiteMissing, match="keywords"):
        proj.advance_stage(bare, 1)


def test_failed_advance_leaves_state_unchanged():
    s = projects.through_stage(4)
    before = s
    with pytest.raises(proj.PrerequisiteMissing, match="matrix"):
        proj.advance_stage(s, 5)
    assert s == before


def test_completed_stage_is_locked():
    s = projects.through_stage(2)
    with pytest.raises(proj.StageLocked):
        proj.add_dimension_item(s, DimensionItem(DimensionKind.UC, "new", 1))
    with pytest.raises(proj.StageLocked):
        proj.add_heuristics(s, [heuristic("S2", 1)])
    with pytest.raises(proj.StageLocked):
        proj.advance_stage(s, 2)


def test_early_exit_at_stage_two():
    s = projects.through_stage(1)
    s = proj.add_heuristics(s, [heuristic("S9", 1)])
    out = proj.advance_stage(s, 2, exit_early=True)
    assert out.outcome is proj.Outcome.EXITED_AT_STAGE2
    assert out.is_complete(1) and out.is_complete(2) and not out.is_complete(3)
    with pytest.raises(proj.StageLocked):
        proj.advance_stage(out, 3)
    with pytest.raises(proj.WorkflowError):
        proj.advance_stage(projects.through_stage(2), 3, exit_early=True)


def test_duplicate_heuristic_rejected():
    s = projects.through_stage(1)
    s = proj.add_heuristics(s, [heuristic("S2", 1)])
    with pytest.raises(proj.DuplicateId):
        proj.add_heuristics(s, [heuristic("S2", 1)])


def test_normalization_stage_requires_resolution_and_certifies():
    s = projects.through_stage(3)
    h1, h2 = HeuristicId("S1", 1), HeuristicId("S1", 2)
    s = proj.declare_conflict(s, ConflictNote("K1", ConflictKind.DUPLICATION, (h1, h2)))
    with pytest.raises(proj.PrerequisiteMissing, match="open conflicts: K1"):
        proj.advance_stage(s, 4)
    s = proj.apply_normalization(s, KeepOneDiscardRest(h1, (h2,), "same", "K1"))
    s = proj.set_isi(s, h1, 3, "reviewed after merge")
    s = proj.advance_stage(s, 4)
    assert s.catalog.certified
    assert s.catalog.get(h1).isi == 3 and s.catalog.get(h2).status is Status.DISCARDED
    assert all(h.status is not Status.DENORMALIZED for h in s.catalog.heuristics)


def test_isi_in_stage_three_edits_baseline():
    s = projects.through_stage(2)
    s = proj.set_isi(s, HeuristicId("S1", 2), 1)
    assert s.catalog.baseline[1].isi == 1 and not s.catalog.actions


def test_prioritize_selects_by_threshold_and_stale_matrix_blocks_stage_five():
    s = projects.through_stage(4)
    from heuristic_workbench import csvio
    for t in csvio.import_gsi_csv(projects.FIXTURES / "f1_gsi.csv"):
        s = proj.set_gsi(s, t)
    s = proj.prioritize(s, 2)
    assert [str(h) for h in s.catalog.selection] == ["S1.H3", "S1.H5", "S1.H1"]
    assert s.threshold == 2
    with pytest.raises(proj.WorkflowError):
        proj.prioritize(s, 5)
    stale = proj.set_gsi(s, csvio.import_gsi_csv(projects.FIXTURES / "f1_gsi.csv")[0])
    with pytest.raises(proj.PrerequisiteMissing, match="not built"):
        proj.advance_stage(stale, 5)


def test_templates_required_for_every_selected_heuristic():
    s = projects.through_stage(5, threshold=Fraction(5, 2))
    assert len(s.catalog.selection) == 2
    with pytest.raises(proj.PrerequisiteMissing, match="has no template"):
        proj.advance_stage(s, 6)
    with pytest.raises(proj.WorkflowError, match="not a selected heuristic"):
        proj.set_template(s, projects.template_for(HeuristicId("S1", 4)))


def test_stage_seven_stores_report_and_advice():
    s = projects.through_stage(7)
    (stored,) = s.current_reports()
    assert stored.report.phi.value == Fraction(3, 2)
    assert stored.advice.stages() == (4, 5, 6)
    assert s.status(8) is IP


def test_dataset_must_use_selected_heuristics():
    s = projects.through_stage(6, threshold=Fraction(5, 2))
    from heuristic_workbench import csvio
    ds = csvio.import_problems_csv(projects.FIXTURES / "f1_problems.csv", case_study="F1",
                                   domain_heuristics=[HeuristicId("S1", i) for i in range(1, 6)])
    with pytest.raises(proj.WorkflowError, match="not selected"):
        proj.add_dataset(s, ds)


def test_validation_closes_project():
    s = projects.through_stage(8)
    assert s.outcome is proj.Outcome.VALIDATED
    assert all(s.is_complete(n) for n in proj.STAGES)
    with pytest.raises(proj.StageLocked):
        proj.loop_back(s, 4)


def test_loop_back_needs_advice():
    with pytest.raises(proj.NoAdviceYet):
        proj.loop_back(projects.through_stage(5), 4)


def test_loop_back_to_advised_stage():
    s = proj.loop_back(projects.through_stage(7), 4)
    assert s.iteration == 2
    assert s.stage_status == (C, C, C, IP, NS, NS, NS, NS)
    assert not s.catalog.certified and s.catalog.selection == () and s.matrix is None
    (record,) = s.history
    assert record.target_stage == 4 and record.advised_stages == (4, 5, 6) and not record.overridden
    assert record.stage_status == (C,) * 7 + (IP,)
    # old reports retained, none current
    assert len(s.reports) == 1 and s.current_reports() == []


def test_loop_back_override_needs_reason():
    s = projects.through_stage(7)
    with pytest.raises(proj.InvalidTarget):
        proj.loop_back(s, 2)
    out = proj.loop_back(s, 2, "new literature appeared")
    assert out.history[0].overridden and out.history[0].reason == "new literature appeared"
    assert out.stage_status[:2] == (C, IP)
    with pytest.raises(proj.InvalidTarget):
        proj.loop_back(s, 8, "why not")


def test_second_iteration_runs_to_validation():
    s = proj.loop_back(projects.through_stage(7), 6)
    assert s.catalog.certified and s.catalog.selection
    s = proj.advance_stage(s, 6)
    from heuristic_workbench import csvio
    ds = csvio.import_problems_csv(projects.FIXTURES / "f1_problems.csv", case_study="F1",
                                   domain_heuristics=s.catalog.selection)
    s = proj.advance_stage(proj.add_dataset(s, ds), 7)
    s = proj.advance_stage(s, 8)
    assert s.outcome is proj.Outcome.VALIDATED
    assert [r.iteration for r in s.reports] == [1, 2]


def test_rebuild_derived_is_identity_on_consistent_state():
    s = projects.through_stage(7)
    assert proj.rebuild_derived(s) == s
