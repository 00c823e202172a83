"""Acceptance gate: the nine criteria, each at its stated tolerance.

Every test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""

import itertools
import math
from dataclasses import replace
from fractions import Fraction

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import oracle
import projects
import strategies as gen
from acceptance_log import criterion
from strategies import synthetic_report
from heuristic_workbench import csvio
from heuristic_workbench import normalization as norm
from heuristic_workbench import project as proj
from heuristic_workbench import serialize as ser
from heuristic_workbench.advisor import Indicator, Verdict, advise
from heuristic_workbench.indicators import build_report
from heuristic_workbench.model import (
    ConflictKind,
    ConflictNote,
    DimensionKind,
    DomainProfile,
    EvaluationDataset,
    GroupUnderGeneral,
    Heuristic,
    HeuristicCatalog,
    HeuristicId,
    KeepOneDiscardRest,
    MergeReformulate,
    ReviseIsi,
    SplitIntoSeveral,
    validate_catalog,
)
from heuristic_workbench.persistence import dumps, load_project, save_project
from heuristic_workbench.specificity import GsiTable, build_matrix, compute_fsi, compute_gsi

FAST = dict(deadline=None, database=None, derandomize=True,
            suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])


# 1 ------------------------------------------------------------------------


@criterion(1, "FSI reproduces the published specificity matrix exactly")
def test_criterion_1_fsi_table():
    cases = [
        ((3, 4, 2, 1, 3), Fraction(15, 8)),   # 1.875
        ((1, 1, 2, 4, 0), Fraction(7, 16)),   # 0.4375
        ((1, 3, 2, 3, 0), Fraction(1, 2)),    # 0.5
    ]
    for args, expected in cases:
        got = compute_fsi(*args)
        assert isinstance(got, Fraction)
        assert got == expected, (args, got)
    assert compute_fsi(3, 4, 2, 1, 3) == Fraction("1.875")
    return "3 rows exact"


# 2 ------------------------------------------------------------------------


@criterion(2, "GSI row averages reproduce the published per-item table exactly")
def test_criterion_2_gsi_table():
    labels = ("a", "b", "c", "d")
    hid = HeuristicId("S3", 2)
    for scores, expected in [((4, 4, 4, 4), 4), ((4, 0, 0, 0), 1), ((4, 2, 2, 4), 3)]:
        table = GsiTable(hid, DimensionKind.UC, dict(zip(labels, scores)))
        got = compute_gsi(table)
        assert isinstance(got, Fraction) and got == expected, (scores, got)
    return "3 rows exact"


# 3 ------------------------------------------------------------------------


@criterion(3, "fixture F1 end to end from CSV equals the brute-force oracle")
def test_criterion_3_f1_end_to_end(fixtures):
    profile = DomainProfile("F1", ("tourism",), tuple(csvio.import_profile_csv(fixtures / "f1_profile.csv")))
    catalog = HeuristicCatalog.from_heuristics(csvio.import_heuristics_csv(fixtures / "f1_heuristics.csv"))
    matrix = build_matrix(catalog, csvio.import_gsi_csv(fixtures / "f1_gsi.csv"), profile)
    fsi = {str(h): v for h, v in matrix.fsi_map().items()}
    assert fsi == oracle.F1_FSI
    assert [fsi[h] for h in oracle.F1_DOMAIN] == [2, Fraction(3, 2), 3, 1, Fraction(5, 2)]

    dataset = csvio.import_problems_csv(fixtures / "f1_problems.csv", case_study="F1",
                                        domain_heuristics=catalog.ids())
    report = build_report(dataset, matrix)
    expected = oracle.brute_force(oracle.read_rows(fixtures / "f1_problems.csv"),
                                  oracle.F1_DOMAIN, oracle.F1_CONTROL, oracle.F1_FSI)

    assert (report.n_domain_only, report.n_control_only, report.n_common) == (6, 4, 2)
    # oracle and published values agree with each other ...
    assert expected["phi"] == Fraction(3, 2) and expected["phi_star"] == Fraction(4, 3)
    assert expected["lambda"] == Fraction(3, 2) and expected["lambda_star"] == Fraction(9, 7)
    assert expected["epsilon_d"] == Fraction(31, 16) and expected["epsilon_c"] == Fraction(3, 2)
    assert expected["epsilon"] == Fraction(31, 24)
    assert expected["delta_d"] == 0.8 and expected["delta_c"] == math.sqrt(11 / 25)
    # ... and the engine equals both, exactly for rationals
    assert report.phi.value == expected["phi"]
    assert report.phi_star.value == expected["phi_star"]
    assert report.lambda_.value == expected["lambda"]
    assert report.lambda_star.value == expected["lambda_star"]
    assert report.epsilon.numerator == expected["epsilon_d"]
    assert report.epsilon.denominator == expected["epsilon_c"]
    assert report.epsilon.value == expected["epsilon"]
    for r in (report.phi, report.phi_star, report.lambda_, report.lambda_star, report.epsilon):
        assert isinstance(r.value, Fraction)
    assert report.variance_domain == Fraction(16, 25) == expected["var_d"]
    assert report.variance_control == Fraction(11, 25) == expected["var_c"]
    assert abs(report.delta.denominator - 0.8) <= 1e-9
    assert abs(report.delta.numerator - math.sqrt(11 / 25)) <= 1e-9
    assert abs(report.delta.value - expected["delta"]) <= 1e-9
    assert abs(report.delta.value - math.sqrt(11) / 4) <= 1e-9
    return f"delta={report.delta.value:.12f}"


# 4 ------------------------------------------------------------------------

STAGES = {
    Indicator.PHI: (3, 4, 5, 6),
    Indicator.DELTA: (4, 5, 6),
    Indicator.EPSILON: (5, 7),
    Indicator.LAMBDA: (7,),
}
STATES = {"unavailable": None, "below": Fraction(1, 2), "equal": Fraction(1), "above": Fraction(3, 2)}


@criterion(4, "refinement rules trigger exactly the scenarios below 1 with their stage sets")
def test_criterion_4_refinement_rules():
    order = (Indicator.PHI, Indicator.DELTA, Indicator.EPSILON, Indicator.LAMBDA)
    combos = 0
    for states in itertools.product(STATES, repeat=4):
        values = dict(zip(order, (STATES[s] for s in states)))
        advice = advise(synthetic_report(phi=values[Indicator.PHI], delta=values[Indicator.DELTA],
                                         epsilon=values[Indicator.EPSILON], lambda_=values[Indicator.LAMBDA]))
        expected = [i for i in order if values[i] is not None and values[i] < 1]
        assert [t.indicator for t in advice.triggered] == expected, states
        for t in advice.triggered:
            assert t.revisit_stages == STAGES[t.indicator]
            assert t.hypotheses and not t.approximate
        assert advice.verdict is (Verdict.REFINEMENT_SUGGESTED if expected else Verdict.NO_REFINEMENT_SIGNALED)
        assert advice.stages() == tuple(sorted({s for i in expected for s in STAGES[i]}))
        combos += 1
    assert combos == 256

    # each scenario in isolation, others above 1
    for ind in order:
        kw = {"phi": STATES["above"], "delta": STATES["above"], "epsilon": STATES["above"], "lambda_": STATES["above"]}
        kw[{"Phi": "phi", "Delta": "delta", "Epsilon": "epsilon", "Lambda": "lambda_"}[ind.value]] = STATES["below"]
        advice = advise(synthetic_report(**kw))
        assert [(t.indicator, t.revisit_stages) for t in advice.triggered] == [(ind, STAGES[ind])]

    # all rates exactly 1 trigger nothing
    one = Fraction(1)
    advice = advise(synthetic_report(one, one, one, one, one, one))
    assert advice.triggered == () and advice.verdict is Verdict.NO_REFINEMENT_SIGNALED

    # starred rates stand in only when the exact one is unavailable
    advice = advise(synthetic_report(phi=None, phi_star=Fraction(1, 2), lambda_=None, lambda_star=Fraction(1, 2)))
    assert [(t.indicator, t.approximate) for t in advice.triggered] == [
        (Indicator.PHI, True), (Indicator.LAMBDA, True)]
    advice = advise(synthetic_report(phi=Fraction(3, 2), phi_star=Fraction(1, 2)))
    assert advice.triggered == ()
    return f"{combos} combinations"


# 5 ------------------------------------------------------------------------


@criterion(5, "role swap gives exact reciprocals; FSI bound and monotonicity")
def test_criterion_5_uniformity_and_fsi_properties():
    swaps = []

    @settings(max_examples=1000, **FAST)
    @given(gen.datasets(missing_specificity=False))
    def swap(ds):
        swaps.append(1)
        a, b = build_report(ds), build_report(gen.swap_roles(ds))
        for name in ("phi", "phi_star", "lambda", "lambda_star"):
            ra, rb = a.rate(name), b.rate(name)
            assert ra.numerator == rb.denominator and ra.denominator == rb.numerator
            if ra.available and ra.value != 0:
                assert rb.available and rb.value == 1 / ra.value, name
                assert isinstance(rb.value, Fraction)
            elif ra.available:
                assert not rb.available, name
            if rb.available and rb.value != 0:
                assert ra.available and ra.value == 1 / rb.value, name
        if a.delta.available and a.delta.value != 0:
            assert b.delta.available and abs(b.delta.value * a.delta.value - 1) <= 1e-12

    swap()
    assert len(swaps) >= 1000

    tuples = []

    @settings(max_examples=10000, **FAST)
    @given(gen.likert, st.lists(gen.gsi_values(), min_size=4, max_size=4),
           st.integers(min_value=0, max_value=3), gen.gsi_values())
    def fsi(isi, gsi, which, bump):
        tuples.append(1)
        value = compute_fsi(isi, *gsi)
        assert 0 <= value <= 4
        if isi < 4:
            higher = compute_fsi(isi + 1, *gsi)
            assert higher > value if sum(gsi) > 0 else higher == value
        raised = list(gsi)
        raised[which] = max(gsi[which], bump)
        after = compute_fsi(isi, *raised)
        assert after >= value
        if raised[which] > gsi[which] and isi > 0:
            assert after > value

    fsi()
    assert len(tuples) >= 10000
    return f"{len(swaps)} datasets, {len(tuples)} tuples"


# 6 ------------------------------------------------------------------------

EXACT = ("phi", "phi_star", "lambda", "lambda_star", "epsilon")


def assert_matches_oracle(report, ds, matrix, tol=1e-12):
    expected = oracle.brute_force(gen.oracle_rows(ds), [str(h) for h in ds.domain_heuristics],
                                  list(ds.control_heuristics), gen.oracle_fsi(matrix))
    for name in EXACT:
        rate = report.rate(name)
        assert rate.value == expected[name], (name, rate, expected[name])
        if rate.available:
            assert isinstance(rate.value, Fraction)
    assert report.variance_domain == expected["var_d"]
    assert report.variance_control == expected["var_c"]
    if expected["delta"] is None:
        assert not report.delta.available
    else:
        assert abs(report.delta.value - expected["delta"]) <= tol
    assert (report.n_common, report.n_domain_only, report.n_control_only) == (
        expected["n_common"], expected["n_domain_only"], expected["n_control_only"])
    assert [c for _, c in report.domain_counts] == expected["dom_counts"]
    assert [c for _, c in report.control_counts] == expected["ctl_counts"]


@criterion(6, "every available rate equals the brute-force oracle on random datasets")
def test_criterion_6_oracle_equivalence():
    seen = []

    @settings(max_examples=600, **FAST)
    @given(gen.datasets_with_matrix())
    def check(pair):
        ds, matrix = pair
        assert len(ds.problems) <= 20 and len(ds.domain_heuristics) <= 6 and len(ds.control_heuristics) <= 6
        seen.append(1)
        assert_matches_oracle(build_report(ds, matrix), ds, matrix)

    check()
    assert len(seen) >= 500
    return f"{len(seen)} datasets"


# 7 ------------------------------------------------------------------------


def canonical(catalog) -> str:
    return ser.canonical_json(ser.enc_catalog(catalog))


@st.composite
def action_scripts(draw):
    n = draw(st.integers(min_value=2, max_value=7))
    catalog = HeuristicCatalog.from_heuristics(gen.heuristic("S1", i, draw(gen.likert)) for i in range(1, n + 1))
    return catalog, draw(st.lists(st.tuples(st.sampled_from(
        ["declare", "keep", "merge", "group", "split", "revise"]), st.randoms(use_true_random=False)),
        min_size=1, max_size=14))


def random_step(catalog, op, rnd):
    """One operation with arguments that are sometimes invalid on purpose."""
    ids = catalog.ids() + [HeuristicId("S1", 99)]
    conflicts = [c.id for c in catalog.conflicts] + ["K-missing"]

    def pick_ids(k):
        return tuple(rnd.choice(ids) for _ in range(k))

    def fresh(offset=0):
        if rnd.random() < 0.1:
            return Heuristic(rnd.choice(ids), "clash", "Collides with an id.", 1)
        return Heuristic(norm.next_new_id(catalog, offset), "new", "A reformulated heuristic.", rnd.randint(0, 4))

    if op == "declare":
        kind = rnd.choice(list(ConflictKind))
        cid = rnd.choice(conflicts[:-1] + [f"K{len(conflicts)}"]) if rnd.random() < 0.2 else f"K{len(conflicts)}"
        return norm.declare_conflict(catalog, ConflictNote(cid, kind, pick_ids(rnd.randint(1, 3))))
    cid = rnd.choice(conflicts)
    if op == "keep":
        return norm.apply_action(catalog, KeepOneDiscardRest(rnd.choice(ids), pick_ids(rnd.randint(0, 2)), "dup", cid))
    if op in ("merge", "group"):
        cls = MergeReformulate if op == "merge" else GroupUnderGeneral
        return norm.apply_action(catalog, cls(pick_ids(rnd.randint(1, 3)), fresh(), "overlap", cid))
    if op == "split":
        parts = tuple(fresh(k) for k in range(rnd.randint(1, 3)))
        return norm.apply_action(catalog, SplitIntoSeveral(rnd.choice(ids), parts, "too broad", cid))
    return norm.apply_action(catalog, ReviseIsi(rnd.choice(ids), rnd.randint(0, 4), "rescored"))


@criterion(7, "replaying the normalization log reproduces the catalog; errors change nothing")
def test_criterion_7_normalization_replay():
    stats = {"sequences": 0, "applied": 0, "rejected": 0}

    @settings(max_examples=150, **FAST)
    @given(action_scripts())
    def check(script):
        catalog, steps = script
        stats["sequences"] += 1
        for op, rnd in steps:
            before = canonical(catalog)
            try:
                after = random_step(catalog, op, rnd)
            except (norm.NormalizationError, ValueError):
                stats["rejected"] += 1
                assert canonical(catalog) == before
                continue
            stats["applied"] += 1
            catalog = after
            assert canonical(norm.replay(catalog)) == canonical(catalog)
        assert canonical(norm.replay(catalog)) == canonical(catalog)
        assert norm.replay(catalog) == catalog
        assert validate_catalog(catalog) == []
        assert norm.unaccounted_discards(catalog) == []

    check()
    assert stats["sequences"] >= 100
    assert stats["applied"] > 0 and stats["rejected"] > 0
    return ", ".join(f"{k}={v}" for k, v in stats.items())


# 8 ------------------------------------------------------------------------


def _round_trip(state, tmp_path):
    path = tmp_path / "project.json"
    save_project(state, path)
    loaded = load_project(path)
    assert loaded == state
    assert dumps(loaded) == dumps(state)
    rebuilt = proj.rebuild_derived(loaded)
    assert rebuilt.reports == loaded.reports
    assert rebuilt.matrix == loaded.matrix
    assert rebuilt.catalog == loaded.catalog
    return loaded


@criterion(8, "load(save(s)) == s across all stages, early exit and loop-back")
def test_criterion_8_persistence(tmp_path):
    states = []
    validated = projects.through_stage(8, snapshots=states)
    assert validated.outcome is proj.Outcome.VALIDATED

    early = projects.through_stage(1)
    early = proj.add_heuristics(early, [gen.heuristic("S9", 1)])
    early = proj.advance_stage(early, 2, exit_early=True)
    assert early.outcome is proj.Outcome.EXITED_AT_STAGE2
    states.append(early)

    at7 = projects.through_stage(7)
    assert proj.advised_stages(at7) == (4, 5, 6)
    looped = proj.loop_back(at7, 4)
    assert looped.iteration == 2 and looped.history[0].target_stage == 4
    states.append(looped)
    overridden = proj.loop_back(at7, 2, "new literature found")
    states.append(overridden)

    covered = {s for st_ in states for s in proj.STAGES if st_.is_complete(s)}
    assert covered == set(proj.STAGES)
    for state in states:
        _round_trip(state, tmp_path)

    # recomputed F1 report after reload still matches the oracle
    loaded = _round_trip(validated, tmp_path)
    (stored,) = loaded.current_reports()
    fresh = build_report(loaded.datasets[stored.dataset_index].dataset, stored.matrix)
    assert fresh == stored.report
    assert fresh.epsilon.value == Fraction(31, 24)

    generated = []

    @settings(max_examples=25, **FAST)
    @given(gen.datasets(), st.sampled_from([0, 1, Fraction(3, 2), Fraction(5, 2)]))
    def random_projects(ds, threshold):
        base = projects.through_stage(6, threshold=threshold)
        selected = base.catalog.selection[:len(ds.domain_heuristics)]
        mapping = dict(zip(ds.domain_heuristics, selected))
        if len(mapping) < len(ds.domain_heuristics):
            return
        problems = tuple(replace(p, domain_attribution=mapping.get(p.domain_attribution)) for p in ds.problems)
        dataset = EvaluationDataset(ds.case_study, tuple(selected), problems, ds.control_heuristics)
        s = proj.advance_stage(proj.add_dataset(base, dataset), 7)
        generated.append(s)
        _round_trip(s, tmp_path)
        if proj.advised_stages(s):
            _round_trip(proj.loop_back(s, proj.advised_stages(s)[0]), tmp_path)
        _round_trip(proj.advance_stage(s, 8), tmp_path)

    random_projects()
    assert len(generated) >= 10
    return f"{len(states)} scripted states, {len(generated)} generated projects"


# 9 ------------------------------------------------------------------------


@criterion(9, "103 domain-only vs 100 control-only gives phi=1.03 and no refinement signal")
def test_criterion_9_published_scale_anchor(tmp_path):
    lines = ["id,description,classification,domain_heuristic,control_heuristic,severity,control_specificity"]
    for i in range(103):
        lines.append(f"D{i + 1},domain-only problem {i + 1},DomainOnly,{oracle.F1_DOMAIN[i % 5]},,3,")
    for i in range(100):
        # control-side problems cluster on two heuristics: wider dispersion than the domain side
        lines.append(f"C{i + 1},control-only problem {i + 1},ControlOnly,,N{1 + i % 2},3,1")
    path = tmp_path / "anchor.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    dataset = csvio.import_problems_csv(path, case_study="anchor",
                                        domain_heuristics=[HeuristicId.parse(h) for h in oracle.F1_DOMAIN])
    matrix = build_matrix(
        HeuristicCatalog.from_heuristics(csvio.import_heuristics_csv(projects.FIXTURES / "f1_heuristics.csv")),
        csvio.import_gsi_csv(projects.FIXTURES / "f1_gsi.csv"),
        DomainProfile("F1", (), tuple(csvio.import_profile_csv(projects.FIXTURES / "f1_profile.csv"))),
    )
    report = build_report(dataset, matrix)
    advice = advise(report)
    assert report.phi.available and report.phi.value == Fraction(103, 100)
    assert advice.verdict is Verdict.NO_REFINEMENT_SIGNALED and advice.triggered == ()
    phi_check = next(c for c in advice.checks if c.indicator is Indicator.PHI)
    assert phi_check.available and phi_check.value == Fraction(103, 100) and not phi_check.approximate
    counts = dict(advice.counts)
    assert counts["domain_only"] == 103 and counts["control_only"] == 100 and counts["common"] == 0
    return "phi=1.0300 " + " ".join(f"{k}={v}" for k, v in counts.items())
