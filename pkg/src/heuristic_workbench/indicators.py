"""Quality indicators comparing domain heuristics against control heuristics.

All rates are oriented so that a value above 1 favours the domain heuristics.
Rates that cannot be computed from the data are returned as unavailable with
a machine-readable reason instead of raising, since real evaluation records
are often incomplete.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .model import EvaluationDataset, HeuristicId, ProblemPartition, partition_problems
from .specificity import SpecificityMatrix

Number = Union[Fraction, float]

# Reason codes for unavailable rates.
NO_CONTROL_ONLY = "no_control_only_problems"
NO_DOMAIN_ONLY = "no_domain_only_problems"
NO_CONTROL_SIDE = "no_control_side_problems"
NO_DOMAIN_SIDE = "no_domain_side_problems"
ZERO_DOMAIN_DISPERSION = "zero_domain_dispersion"
ZERO_CONTROL_SEVERITY = "zero_control_severity"
ZERO_CONTROL_SPECIFICITY = "zero_control_specificity"
MISSING_SPECIFICITY = "missing_specificity"
MISSING_FSI = "missing_fsi"
NO_MATRIX = "no_matrix"

INDICATOR_ORDER = ("phi", "phi_star", "delta", "lambda", "lambda_star", "epsilon")
SYMBOLS = {
    "phi": "Φ", "phi_star": "Φ*", "delta": "δ",
    "lambda": "λ", "lambda_star": "λ*", "epsilon": "ε",
}


class IndicatorError(ValueError):
    pass


class MissingFsi(IndicatorError):
    def __init__(self, heuristic: HeuristicId):
        self.heuristic = heuristic
        super().__init__(f"no FSI for domain heuristic {heuristic}")


class MissingSpecificity(IndicatorError):
    def __init__(self, problem_id: str):
        self.problem_id = problem_id
        super().__init__(f"problem {problem_id} has no control specificity")


@dataclass(frozen=True)
class Rate:
    """A quotient ``numerator / denominator`` or the reason it is undefined.

    Components are kept even when the rate itself is unavailable, so partial
    data (e.g. only the domain-side severity) is still reported.
    """

    name: str
    value: Number | None
    numerator: Number | None = None
    denominator: Number | None = None
    reason: str | None = None

    @property
    def available(self) -> bool:
        return self.value is not None

    @classmethod
    def of(cls, name: str, numerator, denominator, *, zero_reason: str) -> Rate:
        if denominator == 0:
            return cls(name, None, numerator, denominator, zero_reason)
        return cls(name, numerator / denominator, numerator, denominator)

    @classmethod
    def missing(cls, name: str, reason: str, numerator=None, denominator=None) -> Rate:
        return cls(name, None, numerator, denominator, reason)


def rate_unique(partition: ProblemPartition) -> Rate:
    n_d, n_c = len(partition.domain_only), len(partition.control_only)
    if n_c == 0:
        return Rate.missing("phi", NO_CONTROL_ONLY, n_d, n_c)
    return Rate("phi", Fraction(n_d, n_c), n_d, n_c)


def rate_unique_star(partition: ProblemPartition) -> Rate:
    n_d, n_c = len(partition.domain_side), len(partition.control_side)
    if n_c == 0:
        return Rate.missing("phi_star", NO_CONTROL_SIDE, n_d, n_c)
    return Rate("phi_star", Fraction(n_d, n_c), n_d, n_c)


def domain_counts(dataset: EvaluationDataset) -> dict[HeuristicId, int]:
    """Problems per domain heuristic over the domain side, zeros included."""
    counts = {h: 0 for h in dataset.domain_heuristics}
    for p in dataset.problems:
        if p.on_domain_side:
            counts[p.domain_attribution] += 1
    return counts


def control_counts(dataset: EvaluationDataset) -> dict[str, int]:
    counts = {h: 0 for h in dataset.control_heuristics}
    for p in dataset.problems:
        if p.on_control_side:
            counts[p.control_attribution] += 1
    return counts


def population_variance(values) -> Fraction:
    values = [Fraction(v) for v in values]
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / len(values)


@dataclass(frozen=True)
class Dispersion:
    rate: Rate
    variance_domain: Fraction
    variance_control: Fraction


def rate_dispersion(dataset: EvaluationDataset) -> Dispersion:
    """δ_C / δ_D over per-heuristic problem counts (population std. deviations).

    Variances are exact; the standard deviations and their ratio are the only
    floating-point quantities in the report.
    """
    d_counts = domain_counts(dataset)
    c_counts = control_counts(dataset)
    var_d = population_variance(d_counts.values())
    var_c = population_variance(c_counts.values())
    sd_d, sd_c = math.sqrt(var_d), math.sqrt(var_c)
    if sum(d_counts.values()) == 0:
        rate = Rate.missing("delta", NO_DOMAIN_SIDE, sd_c, sd_d)
    elif sum(c_counts.values()) == 0:
        rate = Rate.missing("delta", NO_CONTROL_SIDE, sd_c, sd_d)
    elif var_d == 0:
        rate = Rate.missing("delta", ZERO_DOMAIN_DISPERSION, sd_c, sd_d)
    else:
        rate = Rate("delta", sd_c / sd_d, sd_c, sd_d)
    return Dispersion(rate, var_d, var_c)


def _mean_severity(problems) -> Fraction | None:
    if not problems:
        return None
    return Fraction(sum(int(p.severity) for p in problems), len(problems))


def _severity_rate(name, domain_group, control_group, empty_domain, empty_control) -> Rate:
    lam_d, lam_c = _mean_severity(domain_group), _mean_severity(control_group)
    if lam_c is None:
        return Rate.missing(name, empty_control, lam_d, lam_c)
    if lam_d is None:
        return Rate.missing(name, empty_domain, lam_d, lam_c)
    return Rate.of(name, lam_d, lam_c, zero_reason=ZERO_CONTROL_SEVERITY)


def rate_severity(partition: ProblemPartition) -> Rate:
    """Mean severity of domain-only problems over mean severity of control-only problems."""
    return _severity_rate("lambda", partition.domain_only, partition.control_only,
                          NO_DOMAIN_ONLY, NO_CONTROL_ONLY)


def rate_severity_star(partition: ProblemPartition) -> Rate:
    """Same as :func:`rate_severity` but with common problems counted on both sides."""
    return _severity_rate("lambda_star", partition.domain_side, partition.control_side,
                          NO_DOMAIN_SIDE, NO_CONTROL_SIDE)


def rate_specificity(dataset: EvaluationDataset, matrix: SpecificityMatrix) -> Rate:
    """ε_D / ε_C.

    ε_D weights each domain heuristic's problem count by its FSI and divides by
    the number of domain-side problems; ε_C is the plain mean of the
    evaluator-assigned specificity over control-side problems.
    """
    fsi = matrix.fsi_map()
    counts = domain_counts(dataset)
    for hid, n in counts.items():
        if n and hid not in fsi:
            raise MissingFsi(hid)
    control_side = [p for p in dataset.problems if p.on_control_side]
    for p in control_side:
        if p.control_specificity is None:
            raise MissingSpecificity(p.id)

    n_domain = sum(counts.values())
    eps_d = None
    if n_domain:
        eps_d = sum((n * fsi[h] for h, n in counts.items() if n), Fraction(0)) / n_domain
    eps_c = None
    if control_side:
        eps_c = Fraction(sum(int(p.control_specificity) for p in control_side), len(control_side))
    if eps_d is None:
        return Rate.missing("epsilon", NO_DOMAIN_SIDE, eps_d, eps_c)
    if eps_c is None:
        return Rate.missing("epsilon", NO_CONTROL_SIDE, eps_d, eps_c)
    return Rate.of("epsilon", eps_d, eps_c, zero_reason=ZERO_CONTROL_SPECIFICITY)


@dataclass(frozen=True)
class IndicatorReport:
    case_study: str
    phi: Rate
    phi_star: Rate
    delta: Rate
    lambda_: Rate
    lambda_star: Rate
    epsilon: Rate
    variance_domain: Fraction
    variance_control: Fraction
    n_common: int
    n_domain_only: int
    n_control_only: int
    domain_counts: tuple[tuple[HeuristicId, int], ...]
    control_counts: tuple[tuple[str, int], ...]

    @property
    def n_domain_side(self) -> int:
        return self.n_domain_only + self.n_common

    @property
    def n_control_side(self) -> int:
        return self.n_control_only + self.n_common

    def rates(self) -> list[Rate]:
        """All six rates in reporting order: Φ, Φ*, δ, λ, λ*, ε."""
        return [self.phi, self.phi_star, self.delta, self.lambda_, self.lambda_star, self.epsilon]

    def rate(self, name: str) -> Rate:
        return {r.name: r for r in self.rates()}[name]

    def counts(self) -> dict[str, int]:
        return {
            "common": self.n_common,
            "domain_only": self.n_domain_only,
            "control_only": self.n_control_only,
            "domain_side": self.n_domain_side,
            "control_side": self.n_control_side,
        }


def build_report(dataset: EvaluationDataset, matrix: SpecificityMatrix | None = None) -> IndicatorReport:
    """Compute every indicator the data allows; never raises on partial data."""
    part = partition_problems(dataset)
    dispersion = rate_dispersion(dataset)
    if matrix is None:
        epsilon = Rate.missing("epsilon", NO_MATRIX)
    else:
        try:
            epsilon = rate_specificity(dataset, matrix)
        except MissingFsi:
            epsilon = Rate.missing("epsilon", MISSING_FSI)
        except MissingSpecificity:
            epsilon = Rate.missing("epsilon", MISSING_SPECIFICITY)
    return IndicatorReport(
        case_study=dataset.case_study,
        phi=rate_unique(part),
        phi_star=rate_unique_star(part),
        delta=dispersion.rate,
        lambda_=rate_severity(part),
        lambda_star=rate_severity_star(part),
        epsilon=epsilon,
        variance_domain=dispersion.variance_domain,
        variance_control=dispersion.variance_control,
        n_common=len(part.common),
        n_domain_only=len(part.domain_only),
        n_control_only=len(part.control_only),
        domain_counts=tuple(domain_counts(dataset).items()),
        control_counts=tuple(control_counts(dataset).items()),
    )
