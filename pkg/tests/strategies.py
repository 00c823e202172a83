"""Hypothesis strategies and small converters shared by the test modules."""

from fractions import Fraction

from hypothesis import strategies as st

from heuristic_workbench.indicators import IndicatorReport, Rate
from heuristic_workbench.model import (
    Classification,
    EvaluationDataset,
    Heuristic,
    HeuristicId,
    ProblemRecord,
)
from heuristic_workbench.specificity import MatrixRow, SpecificityMatrix, compute_fsi

DOMAIN_POOL = [HeuristicId("S1", i) for i in range(1, 7)]
CONTROL_POOL = [f"N{i}" for i in range(1, 7)]

likert = st.integers(min_value=0, max_value=4)


@st.composite
def gsi_values(draw):
    """A GSI as it can arise: the mean of 1..8 Likert scores."""
    n = draw(st.integers(min_value=1, max_value=8))
    return Fraction(draw(st.integers(min_value=0, max_value=4 * n)), n)


@st.composite
def datasets(draw, max_problems=20, missing_specificity=True):
    n_dom = draw(st.integers(min_value=1, max_value=6))
    n_ctl = draw(st.integers(min_value=1, max_value=6))
    dom, ctl = DOMAIN_POOL[:n_dom], CONTROL_POOL[:n_ctl]
    n = draw(st.integers(min_value=0, max_value=max_problems))
    problems = []
    for i in range(n):
        cls = draw(st.sampled_from(list(Classification)))
        domain_side = cls is not Classification.CONTROL_ONLY
        control_side = cls is not Classification.DOMAIN_ONLY
        spec = None
        if control_side:
            absent = missing_specificity and draw(st.integers(min_value=0, max_value=9)) == 0
            spec = None if absent else draw(likert)
        problems.append(ProblemRecord(
            id=f"P{i + 1}",
            description=f"problem {i + 1}",
            classification=cls,
            severity=draw(likert),
            domain_attribution=draw(st.sampled_from(dom)) if domain_side else None,
            control_attribution=draw(st.sampled_from(ctl)) if control_side else None,
            control_specificity=spec,
        ))
    return EvaluationDataset("case", tuple(dom), tuple(problems), tuple(ctl))


@st.composite
def matrices_for(draw, ids):
    rows = []
    for hid in ids:
        isi = draw(likert)
        gsi = [draw(gsi_values()) for _ in range(4)]
        rows.append(MatrixRow(hid, isi, *gsi, compute_fsi(isi, *gsi)))
    return SpecificityMatrix(tuple(rows))


@st.composite
def datasets_with_matrix(draw, **kw):
    ds = draw(datasets(**kw))
    return ds, draw(matrices_for(ds.domain_heuristics))


def oracle_rows(dataset: EvaluationDataset) -> list[dict]:
    """The dataset as the string rows a CSV reader would produce."""
    rows = []
    for p in dataset.problems:
        rows.append({
            "id": p.id,
            "classification": p.classification.value,
            "domain_heuristic": "" if p.domain_attribution is None else str(p.domain_attribution),
            "control_heuristic": p.control_attribution or "",
            "severity": str(int(p.severity)),
            "control_specificity": "" if p.control_specificity is None else str(int(p.control_specificity)),
        })
    return rows


def oracle_fsi(matrix: SpecificityMatrix) -> dict[str, Fraction]:
    return {str(r.heuristic): r.fsi for r in matrix.rows}


_SWAP = {
    Classification.COMMON: Classification.COMMON,
    Classification.DOMAIN_ONLY: Classification.CONTROL_ONLY,
    Classification.CONTROL_ONLY: Classification.DOMAIN_ONLY,
}


def swap_roles(dataset: EvaluationDataset) -> EvaluationDataset:
    """Same problems with the domain and control heuristic sets exchanged."""
    as_domain = {c: HeuristicId("C", n) for n, c in enumerate(dataset.control_heuristics, start=1)}
    problems = []
    for p in dataset.problems:
        cls = _SWAP[p.classification]
        problems.append(ProblemRecord(
            id=p.id,
            description=p.description,
            classification=cls,
            severity=p.severity,
            domain_attribution=as_domain.get(p.control_attribution),
            control_attribution=None if p.domain_attribution is None else str(p.domain_attribution),
            control_specificity=None if cls is Classification.DOMAIN_ONLY else 0,
        ))
    return EvaluationDataset(
        dataset.case_study,
        tuple(as_domain.values()),
        tuple(problems),
        tuple(str(h) for h in dataset.domain_heuristics),
    )


def heuristic(set_id: str, index: int, isi: int = 2) -> Heuristic:
    return Heuristic(HeuristicId(set_id, index), f"{set_id} heuristic {index}",
                     f"Statement of {set_id}.H{index}.", isi)


F1_IDS = [HeuristicId("S1", i) for i in range(1, 6)]
F1_FSI = [Fraction(2), Fraction(3, 2), Fraction(3), Fraction(1), Fraction(5, 2)]


def fsi_matrix(fsis=F1_FSI, ids=F1_IDS) -> SpecificityMatrix:
    """A matrix carrying only the given FSI values (GSI columns are irrelevant to the rates)."""
    return SpecificityMatrix(tuple(MatrixRow(h, 4, 0, 0, 0, 0, f) for h, f in zip(ids, fsis)))


def _rate(name, value):
    if value is None:
        return Rate.missing(name, "no_control_only_problems")
    return Rate(name, value, value, 1)


def synthetic_report(phi=None, delta=None, epsilon=None, lambda_=None, phi_star=None, lambda_star=None):
    return IndicatorReport(
        case_study="synthetic",
        phi=_rate("phi", phi),
        phi_star=_rate("phi_star", phi_star),
        delta=_rate("delta", None if delta is None else float(delta)),
        lambda_=_rate("lambda", lambda_),
        lambda_star=_rate("lambda_star", lambda_star),
        epsilon=_rate("epsilon", epsilon),
        variance_domain=Fraction(1), variance_control=Fraction(1),
        n_common=1, n_domain_only=1, n_control_only=1,
        domain_counts=(), control_counts=(),
    )
