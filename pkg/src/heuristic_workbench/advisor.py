"""Refinement rules: which indicators fell below 1 and which stages to revisit.

Advice is advisory only. The workbench never reverts project state on its own;
the researcher decides whether to loop back.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .indicators import IndicatorReport, Rate, Number


class Indicator(str, Enum):
    PHI = "Phi"
    DELTA = "Delta"
    EPSILON = "Epsilon"
    LAMBDA = "Lambda"


class Verdict(str, Enum):
    NO_REFINEMENT_SIGNALED = "NoRefinementSignaled"
    REFINEMENT_SUGGESTED = "RefinementSuggested"


@dataclass(frozen=True)
class Hypothesis:
    cause: str
    stages: tuple[int, ...]


# Each cause carries the stages it points at; a rule's revisit set is the union.
RULES: dict[Indicator, tuple[Hypothesis, ...]] = {
    Indicator.PHI: (
        Hypothesis("heuristics not well adjusted to the domain", (3, 4, 5)),
        Hypothesis("the application examined has mainly general problems", ()),
        Hypothesis("detailed heuristic descriptions not understood by evaluators", (6,)),
    ),
    Indicator.DELTA: (
        Hypothesis("overlapping heuristics", (4,)),
        Hypothesis("too many problems concentrated in few heuristics", ()),
        Hypothesis("overly specific heuristics", (5,)),
        Hypothesis("heuristics that catch no problems", (5,)),
        Hypothesis("heuristics difficult for evaluators to apply", (6,)),
    ),
    Indicator.EPSILON: (
        Hypothesis("prioritization of domain heuristics", (5,)),
        Hypothesis("experiment design, e.g. selection of evaluator groups", (7,)),
    ),
    Indicator.LAMBDA: (
        Hypothesis("experiment design, in particular selection of evaluator groups", (7,)),
    ),
}


def revisit_stages(indicator: Indicator) -> tuple[int, ...]:
    return tuple(sorted({s for h in RULES[indicator] for s in h.stages}))


@dataclass(frozen=True)
class IndicatorCheck:
    """How one of the four indicators was evaluated, triggered or not."""

    indicator: Indicator
    rate: str  # which report rate was used, e.g. "phi" or the substitute "phi_star"
    value: Number | None
    approximate: bool
    reason: str | None

    @property
    def available(self) -> bool:
        return self.value is not None

    @property
    def below_one(self) -> bool:
        return self.value is not None and self.value < 1


@dataclass(frozen=True)
class TriggeredRule:
    indicator: Indicator
    value: Number
    approximate: bool
    hypotheses: tuple[str, ...]
    revisit_stages: tuple[int, ...]


@dataclass(frozen=True)
class RefinementAdvice:
    case_study: str
    checks: tuple[IndicatorCheck, ...]
    triggered: tuple[TriggeredRule, ...]
    verdict: Verdict
    counts: tuple[tuple[str, int], ...]

    def stages(self) -> tuple[int, ...]:
        return tuple(sorted({s for t in self.triggered for s in t.revisit_stages}))


def _pick(exact: Rate, approx: Rate | None) -> tuple[Rate, bool]:
    if exact.available or approx is None or not approx.available:
        return exact, False
    return approx, True


def advise(report: IndicatorReport) -> RefinementAdvice:
    sources = {
        Indicator.PHI: _pick(report.phi, report.phi_star),
        Indicator.DELTA: _pick(report.delta, None),
        Indicator.EPSILON: _pick(report.epsilon, None),
        Indicator.LAMBDA: _pick(report.lambda_, report.lambda_star),
    }
    checks = []
    triggered = []
    for indicator, (rate, approximate) in sources.items():
        check = IndicatorCheck(indicator, rate.name, rate.value, approximate, rate.reason)
        checks.append(check)
        if check.below_one:
            triggered.append(TriggeredRule(
                indicator=indicator,
                value=rate.value,
                approximate=approximate,
                hypotheses=tuple(h.cause for h in RULES[indicator]),
                revisit_stages=revisit_stages(indicator),
            ))
    verdict = Verdict.REFINEMENT_SUGGESTED if triggered else Verdict.NO_REFINEMENT_SIGNALED
    return RefinementAdvice(
        case_study=report.case_study,
        checks=tuple(checks),
        triggered=tuple(triggered),
        verdict=verdict,
        counts=tuple(report.counts().items()),
    )
