"""Shared domain types: scores, heuristics, catalogs, problems and datasets.

Every type here is an immutable value. Operations elsewhere in the package
produce new values instead of mutating existing ones.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Union


class Likert(int):
    """Integer score on the 0..4 Likert scale."""

    label = "score"

    def __new__(cls, value: object) -> "Likert":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{cls.label} must be an integer in 0..4, got {value!r}")
        if not 0 <= value <= 4:
            raise ValueError(f"{cls.label} must be in 0..4, got {value}")
        return super().__new__(cls, value)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({int(self)})"


class SpecificityScore(Likert):
    label = "specificity score"


class Severity(Likert):
    label = "severity"


class DimensionKind(str, Enum):
    UC = "UC"  # usage context
    LD = "LD"  # interactive logic device
    PD = "PD"  # interactive physical device
    UP = "UP"  # user profile

    @property
    def title(self) -> str:
        return _DIMENSION_TITLES[self]


_DIMENSION_TITLES = {
    DimensionKind.UC: "Usage context",
    DimensionKind.LD: "Interactive logic device",
    DimensionKind.PD: "Interactive physical device",
    DimensionKind.UP: "User profile",
}


@dataclass(frozen=True)
class DimensionItem:
    kind: DimensionKind
    label: str
    initial_specificity: SpecificityScore

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DimensionKind(self.kind))
        object.__setattr__(self, "initial_specificity", SpecificityScore(self.initial_specificity))
        if not self.label.strip():
            raise ValueError("dimension item label must be nonempty")


@dataclass(frozen=True)
class DomainProfile:
    """The domain under study and its characteristic dimensions."""

    domain_name: str
    keywords: tuple[str, ...] = ()
    items: tuple[DimensionItem, ...] = ()

    def __post_init__(self) -> None:
        if not self.domain_name.strip():
            raise ValueError("domain name must be nonempty")
        object.__setattr__(self, "keywords", tuple(self.keywords))
        object.__setattr__(self, "items", tuple(self.items))
        if any(not k.strip() for k in self.keywords):
            raise ValueError("keywords must be nonempty text")
        seen: set[tuple[DimensionKind, str]] = set()
        for item in self.items:
            key = (item.kind, item.label.casefold())
            if key in seen:
                raise ValueError(f"duplicate {item.kind.value} item {item.label!r}")
            seen.add(key)

    def items_of(self, kind: DimensionKind) -> tuple[DimensionItem, ...]:
        return tuple(i for i in self.items if i.kind is kind)

    def missing_kinds(self) -> list[DimensionKind]:
        return [k for k in DimensionKind if not self.items_of(k)]

    def is_complete(self) -> bool:
        """True when Stage 1 can be closed: keywords recorded, every dimension populated."""
        return bool(self.keywords) and not self.missing_kinds()

    def with_item(self, item: DimensionItem) -> DomainProfile:
        return DomainProfile(self.domain_name, self.keywords, self.items + (item,))

    def with_keywords(self, *keywords: str) -> DomainProfile:
        merged = list(self.keywords)
        merged.extend(k for k in keywords if k not in merged)
        return DomainProfile(self.domain_name, tuple(merged), self.items)


_ID_RE = re.compile(r"^(?P<set>[A-Za-z0-9_-]+)\.H(?P<index>[0-9]+)$")

NEW_SET = "NEW"


@dataclass(frozen=True, order=True)
class HeuristicId:
    set_id: str
    index: int

    def __post_init__(self) -> None:
        if not re.fullmatch(r"[A-Za-z0-9_-]+", self.set_id or ""):
            raise ValueError(f"invalid heuristic set id {self.set_id!r}")
        if isinstance(self.index, bool) or not isinstance(self.index, int) or self.index < 1:
            raise ValueError(f"heuristic index must be a positive integer, got {self.index!r}")

    def __str__(self) -> str:
        return f"{self.set_id}.H{self.index}"

    @classmethod
    def parse(cls, text: str) -> HeuristicId:
        m = _ID_RE.match(text.strip())
        if m is None:
            raise ValueError(f"malformed heuristic id {text!r} (expected e.g. S1.H2)")
        return cls(m["set"], int(m["index"]))

    def sort_key(self) -> str:
        return str(self)


class Status(str, Enum):
    DENORMALIZED = "Denormalized"
    NORMALIZED = "Normalized"
    SELECTED = "Selected"
    DISCARDED = "Discarded"


@dataclass(frozen=True)
class Found:
    pass


@dataclass(frozen=True)
class KeptAfterDedup:
    pass


@dataclass(frozen=True)
class MergedFrom:
    sources: tuple[HeuristicId, ...]


@dataclass(frozen=True)
class GeneralizedFrom:
    sources: tuple[HeuristicId, ...]


@dataclass(frozen=True)
class SplitFrom:
    source: HeuristicId


Origin = Union[Found, KeptAfterDedup, MergedFrom, GeneralizedFrom, SplitFrom]


@dataclass(frozen=True)
class Heuristic:
    id: HeuristicId
    name: str
    statement: str
    isi: SpecificityScore
    origin: Origin = field(default_factory=Found)
    status: Status = Status.DENORMALIZED

    def __post_init__(self) -> None:
        object.__setattr__(self, "isi", SpecificityScore(self.isi))
        object.__setattr__(self, "status", Status(self.status))
        if not self.name.strip() or not self.statement.strip():
            raise ValueError(f"heuristic {self.id}: name and statement must be nonempty")

    def replace(self, **changes) -> Heuristic:
        values = dict(id=self.id, name=self.name, statement=self.statement,
                      isi=self.isi, origin=self.origin, status=self.status)
        values.update(changes)
        return Heuristic(**values)


class ConflictKind(str, Enum):
    DUPLICATION = "Duplication"
    OVERLAP = "Overlap"


@dataclass(frozen=True)
class ConflictNote:
    id: str
    kind: ConflictKind
    members: tuple[HeuristicId, ...]
    note: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ConflictKind(self.kind))
        object.__setattr__(self, "members", tuple(self.members))
        if not self.id.strip():
            raise ValueError("conflict id must be nonempty")


# Normalization log entries. Each of the four strategies resolves one declared
# conflict; ReviseIsi records a post-normalization ISI revision.


@dataclass(frozen=True)
class KeepOneDiscardRest:
    kept: HeuristicId
    discarded: tuple[HeuristicId, ...]
    rationale: str
    resolves: str


@dataclass(frozen=True)
class MergeReformulate:
    inputs: tuple[HeuristicId, ...]
    new_heuristic: Heuristic
    rationale: str
    resolves: str


@dataclass(frozen=True)
class GroupUnderGeneral:
    inputs: tuple[HeuristicId, ...]
    new_heuristic: Heuristic
    rationale: str
    resolves: str


@dataclass(frozen=True)
class SplitIntoSeveral:
    input: HeuristicId
    new_heuristics: tuple[Heuristic, ...]
    rationale: str
    resolves: str


@dataclass(frozen=True)
class ReviseIsi:
    heuristic: HeuristicId
    isi: SpecificityScore
    rationale: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "isi", SpecificityScore(self.isi))


NormalizationAction = Union[KeepOneDiscardRest, MergeReformulate, GroupUnderGeneral, SplitIntoSeveral]
LogEntry = Union[NormalizationAction, ReviseIsi]


@dataclass(frozen=True)
class HeuristicCatalog:
    """Heuristics plus their normalization provenance.

    ``baseline`` is the Stage-3 snapshot (denormalized heuristics with their
    ISI). ``heuristics`` is the current view; it always equals the result of
    replaying ``actions`` over ``baseline`` and then applying ``certified``
    and ``selection``.
    """

    heuristics: tuple[Heuristic, ...] = ()
    conflicts: tuple[ConflictNote, ...] = ()
    actions: tuple[LogEntry, ...] = ()
    baseline: tuple[Heuristic, ...] = ()
    certified: bool = False
    selection: tuple[HeuristicId, ...] = ()

    def __post_init__(self) -> None:
        for name in ("heuristics", "conflicts", "actions", "baseline", "selection"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @classmethod
    def from_heuristics(cls, heuristics) -> HeuristicCatalog:
        hs = tuple(heuristics)
        return cls(heuristics=hs, baseline=hs)

    def get(self, hid: HeuristicId) -> Heuristic | None:
        for h in self.heuristics:
            if h.id == hid:
                return h
        return None

    def __contains__(self, hid: object) -> bool:
        return any(h.id == hid for h in self.heuristics)

    def ids(self) -> list[HeuristicId]:
        return [h.id for h in self.heuristics]

    def live(self) -> list[Heuristic]:
        return [h for h in self.heuristics if h.status is not Status.DISCARDED]

    def conflict(self, conflict_id: str) -> ConflictNote | None:
        for c in self.conflicts:
            if c.id == conflict_id:
                return c
        return None

    def resolved_conflicts(self) -> set[str]:
        return {a.resolves for a in self.actions if not isinstance(a, ReviseIsi)}


class Classification(str, Enum):
    COMMON = "Common"
    DOMAIN_ONLY = "DomainOnly"
    CONTROL_ONLY = "ControlOnly"

    @classmethod
    def parse(cls, text: str) -> Classification:
        key = text.strip().casefold().replace("_", "").replace("-", "").replace(" ", "")
        aliases = {
            "common": cls.COMMON, "shared": cls.COMMON,
            "domainonly": cls.DOMAIN_ONLY, "domain": cls.DOMAIN_ONLY,
            "controlonly": cls.CONTROL_ONLY, "control": cls.CONTROL_ONLY,
        }
        if key not in aliases:
            raise ValueError(f"unknown classification {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class ProblemRecord:
    id: str
    description: str
    classification: Classification
    severity: Severity
    domain_attribution: HeuristicId | None = None
    control_attribution: str | None = None
    control_specificity: SpecificityScore | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "classification", Classification(self.classification))
        object.__setattr__(self, "severity", Severity(self.severity))
        if self.control_specificity is not None:
            object.__setattr__(self, "control_specificity", SpecificityScore(self.control_specificity))
        if not self.id.strip() or not self.description.strip():
            raise ValueError("problem id and description must be nonempty")
        problems = shape_violations(self.classification, self.domain_attribution,
                                    self.control_attribution, self.control_specificity)
        if problems:
            raise ValueError(f"problem {self.id}: " + "; ".join(m for _, m in problems))

    @property
    def on_domain_side(self) -> bool:
        return self.classification is not Classification.CONTROL_ONLY

    @property
    def on_control_side(self) -> bool:
        return self.classification is not Classification.DOMAIN_ONLY


def shape_violations(classification: Classification, domain_attribution, control_attribution,
                     control_specificity) -> list[tuple[str, str]]:
    """Classification/attribution coherence, as (field, message) pairs."""
    domain_side = classification is not Classification.CONTROL_ONLY
    control_side = classification is not Classification.DOMAIN_ONLY
    out = []
    if domain_side and domain_attribution is None:
        out.append(("domain_heuristic", f"{classification.value} problem requires a domain heuristic"))
    if not domain_side and domain_attribution is not None:
        out.append(("domain_heuristic", "ControlOnly problem must not name a domain heuristic"))
    if control_side and not control_attribution:
        out.append(("control_heuristic", f"{classification.value} problem requires a control heuristic"))
    if not control_side and control_attribution:
        out.append(("control_heuristic", "DomainOnly problem must not name a control heuristic"))
    if not control_side and control_specificity is not None:
        out.append(("control_specificity", "DomainOnly problem must not carry a control specificity"))
    return out


NIELSEN_HEURISTICS = {
    "N1": "Visibility of system status",
    "N2": "Match between system and the real world",
    "N3": "User control and freedom",
    "N4": "Consistency and standards",
    "N5": "Error prevention",
    "N6": "Recognition rather than recall",
    "N7": "Flexibility and efficiency of use",
    "N8": "Aesthetic and minimalist design",
    "N9": "Help users recognize, diagnose, and recover from errors",
    "N10": "Help and documentation",
}


@dataclass(frozen=True)
class EvaluationDataset:
    case_study: str
    domain_heuristics: tuple[HeuristicId, ...]
    problems: tuple[ProblemRecord, ...] = ()
    control_heuristics: tuple[str, ...] = tuple(NIELSEN_HEURISTICS)

    def __post_init__(self) -> None:
        for name in ("domain_heuristics", "problems", "control_heuristics"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        violations = validate_dataset(self)
        if violations:
            raise ValidationError(violations)


@dataclass(frozen=True)
class Violation:
    subject: str
    rule: str

    def __str__(self) -> str:
        return f"{self.subject}: {self.rule}"


class ValidationError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def validate_dataset(ds: EvaluationDataset) -> list[Violation]:
    out: list[Violation] = []
    if not ds.case_study.strip():
        out.append(Violation("dataset", "case study name must be nonempty"))
    if not ds.domain_heuristics:
        out.append(Violation("dataset", "domain heuristic list must be nonempty"))
    if not ds.control_heuristics:
        out.append(Violation("dataset", "control heuristic list must be nonempty"))
    if len(set(ds.domain_heuristics)) != len(ds.domain_heuristics):
        out.append(Violation("dataset", "duplicate domain heuristic"))
    if len(set(ds.control_heuristics)) != len(ds.control_heuristics):
        out.append(Violation("dataset", "duplicate control heuristic"))
    domain = set(ds.domain_heuristics)
    control = set(ds.control_heuristics)
    seen: set[str] = set()
    for p in ds.problems:
        if p.id in seen:
            out.append(Violation(p.id, f"duplicate problem id {p.id}"))
        seen.add(p.id)
        if p.domain_attribution is not None and p.domain_attribution not in domain:
            out.append(Violation(p.id, f"unknown domain heuristic {p.domain_attribution}"))
        if p.control_attribution and p.control_attribution not in control:
            out.append(Violation(p.id, f"unknown control heuristic {p.control_attribution}"))
    return out


_MULTI_INPUT = (MergedFrom, GeneralizedFrom)


def validate_catalog(catalog: HeuristicCatalog) -> list[Violation]:
    """Check catalog invariants; an empty list means the catalog is well formed."""
    out: list[Violation] = []
    seen: set[HeuristicId] = set()
    for h in catalog.heuristics:
        if h.id in seen:
            out.append(Violation(str(h.id), f"duplicate id {h.id}"))
        seen.add(h.id)
        origin = h.origin
        if isinstance(origin, _MULTI_INPUT):
            label = "merge" if isinstance(origin, MergedFrom) else "generalization"
            if len(set(origin.sources)) < 2:
                out.append(Violation(str(h.id), f"{label} requires ≥2 inputs"))
            for src in origin.sources:
                if src not in catalog:
                    out.append(Violation(str(h.id), f"origin references unknown id {src}"))
        elif isinstance(origin, SplitFrom) and origin.source not in catalog:
            out.append(Violation(str(h.id), f"origin references unknown id {origin.source}"))
        if h.id.set_id == NEW_SET and isinstance(origin, (Found, KeptAfterDedup)):
            out.append(Violation(str(h.id), "NEW heuristics must record what they were derived from"))

    seen_conflicts: set[str] = set()
    for c in catalog.conflicts:
        if c.id in seen_conflicts:
            out.append(Violation(c.id, f"duplicate conflict id {c.id}"))
        seen_conflicts.add(c.id)
        minimum = 2 if c.kind is ConflictKind.DUPLICATION else 1
        if len(set(c.members)) < minimum:
            out.append(Violation(c.id, f"{c.kind.value} requires ≥{minimum} distinct members"))
        for m in c.members:
            if m not in catalog:
                out.append(Violation(c.id, f"conflict references unknown id {m}"))

    for n, a in enumerate(catalog.actions, start=1):
        subject = f"action #{n}"
        for ref in _action_refs(a):
            if ref not in catalog:
                out.append(Violation(subject, f"action references unknown id {ref}"))
        if not isinstance(a, ReviseIsi) and catalog.conflict(a.resolves) is None:
            out.append(Violation(subject, f"action resolves unknown conflict {a.resolves}"))
        if isinstance(a, (MergeReformulate, GroupUnderGeneral)) and len(set(a.inputs)) < 2:
            label = "merge" if isinstance(a, MergeReformulate) else "generalization"
            out.append(Violation(subject, f"{label} requires ≥2 inputs"))

    for hid in catalog.selection:
        h = catalog.get(hid)
        if h is None:
            out.append(Violation(str(hid), "selected heuristic not in catalog"))
        elif h.status is Status.DISCARDED:
            out.append(Violation(str(hid), "discarded heuristic cannot be selected"))
    return out


def _action_refs(a: LogEntry) -> list[HeuristicId]:
    if isinstance(a, KeepOneDiscardRest):
        return [a.kept, *a.discarded]
    if isinstance(a, (MergeReformulate, GroupUnderGeneral)):
        return [*a.inputs, a.new_heuristic.id]
    if isinstance(a, SplitIntoSeveral):
        return [a.input, *(h.id for h in a.new_heuristics)]
    return [a.heuristic]


@dataclass(frozen=True)
class ProblemPartition:
    """The three disjoint problem classes, kept in dataset order."""

    common: tuple[ProblemRecord, ...]
    domain_only: tuple[ProblemRecord, ...]
    control_only: tuple[ProblemRecord, ...]

    @property
    def domain_side(self) -> tuple[ProblemRecord, ...]:
        """Problems found with the domain heuristics (unique plus common)."""
        return self.domain_only + self.common

    @property
    def control_side(self) -> tuple[ProblemRecord, ...]:
        return self.control_only + self.common

    @property
    def total(self) -> tuple[ProblemRecord, ...]:
        return self.domain_only + self.control_only + self.common


def partition_problems(dataset: EvaluationDataset) -> ProblemPartition:
    groups: dict[Classification, list[ProblemRecord]] = {c: [] for c in Classification}
    for p in dataset.problems:
        groups[p.classification].append(p)
    return ProblemPartition(
        common=tuple(groups[Classification.COMMON]),
        domain_only=tuple(groups[Classification.DOMAIN_ONLY]),
        control_only=tuple(groups[Classification.CONTROL_ONLY]),
    )
