"""Standard heuristic description template (Stage 6)."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .model import HeuristicCatalog, HeuristicId, Status, Violation


class ExampleKind(str, Enum):
    COMPLIANCE = "Compliance"
    NON_COMPLIANCE = "NonCompliance"

    @property
    def label(self) -> str:
        return "Compliance" if self is ExampleKind.COMPLIANCE else "Non-compliance"


@dataclass(frozen=True)
class Example:
    kind: ExampleKind
    text: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ExampleKind(self.kind))


@dataclass(frozen=True)
class HeuristicTemplate:
    heuristic: HeuristicId
    name: str = ""
    description: str = ""
    examples: tuple[Example, ...] = ()
    benefits: str = ""
    problems: str = ""
    application_context: str = ""
    related_heuristics: tuple[HeuristicId, ...] = ()
    checklist: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        for name in ("examples", "related_heuristics", "checklist"):
            object.__setattr__(self, name, tuple(getattr(self, name)))


SECTIONS = (
    "Identifier",
    "Name",
    "Description",
    "Examples",
    "Benefits",
    "Problems",
    "Application context",
    "Related heuristics",
    "Checklist",
)

_TEXT_FIELDS = {
    "Name": "name",
    "Description": "description",
    "Benefits": "benefits",
    "Problems": "problems",
    "Application context": "application_context",
}

_NONE = "(none)"


class InvalidTemplate(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def validate_template(t: HeuristicTemplate, catalog: HeuristicCatalog) -> list[Violation]:
    out: list[Violation] = []
    h = catalog.get(t.heuristic)
    if h is None:
        out.append(Violation("heuristic", f"{t.heuristic} is not in the catalog"))
    elif h.status is Status.DISCARDED:
        out.append(Violation("heuristic", f"{t.heuristic} is discarded"))
    out.extend(_shape_violations(t))
    for rel in t.related_heuristics:
        if rel not in catalog:
            out.append(Violation("related_heuristics", f"unresolved related heuristic {rel}"))
    return out


def _shape_violations(t: HeuristicTemplate) -> list[Violation]:
    out = []
    for section, attr in _TEXT_FIELDS.items():
        value = getattr(t, attr)
        if not value.strip():
            out.append(Violation(attr, "must be nonempty"))
        elif _breaks_layout(value):
            out.append(Violation(attr, "must not contain blank lines or section headers"))
    if not t.examples:
        out.append(Violation("examples", "examples requires ≥1 entry"))
    for n, ex in enumerate(t.examples, start=1):
        if not ex.text.strip() or "\n" in ex.text:
            out.append(Violation("examples", f"example {n} must be one nonempty line"))
    if not t.checklist:
        out.append(Violation("checklist", "checklist requires ≥1 step"))
    for n, step in enumerate(t.checklist, start=1):
        if not step.strip() or "\n" in step:
            out.append(Violation("checklist", f"step {n} must be one nonempty line"))
    if t.heuristic in t.related_heuristics:
        out.append(Violation("related_heuristics", "a heuristic cannot relate to itself"))
    return out


def _breaks_layout(text: str) -> bool:
    lines = text.split("\n")
    return any(not line.strip() or _header_of(line) for line in lines) or text != text.strip()


def _header_of(line: str) -> str | None:
    for s in SECTIONS:
        if line == f"{s}:" or line.startswith(f"{s}: "):
            return s
    return None


def lint_template(t: HeuristicTemplate) -> list[str]:
    """Soft warnings that never block rendering."""
    kinds = {ex.kind for ex in t.examples}
    warnings = []
    for kind in ExampleKind:
        if t.examples and kind not in kinds:
            warnings.append(f"no {kind.label.lower()} example")
    return warnings


def render_template(t: HeuristicTemplate, catalog: HeuristicCatalog | None = None) -> str:
    violations = validate_template(t, catalog) if catalog is not None else _shape_violations(t)
    if violations:
        raise InvalidTemplate(violations)
    blocks = [
        f"Identifier: {t.heuristic}",
        f"Name:\n{t.name}",
        f"Description:\n{t.description}",
        "Examples:\n" + "\n".join(f"- [{ex.kind.label}] {ex.text}" for ex in t.examples),
        f"Benefits:\n{t.benefits}",
        f"Problems:\n{t.problems}",
        f"Application context:\n{t.application_context}",
        "Related heuristics:\n" + (", ".join(str(r) for r in t.related_heuristics) or _NONE),
        "Checklist:\n" + "\n".join(f"{n}. {step}" for n, step in enumerate(t.checklist, start=1)),
    ]
    return "\n\n".join(blocks) + "\n"


def parse_template(text: str) -> HeuristicTemplate:
    """Inverse of :func:`render_template`."""
    sections: dict[str, list[str]] = {}
    current = None
    for line in text.split("\n"):
        header = _header_of(line)
        if header is not None:
            if header in sections:
                raise ValueError(f"section {header!r} appears twice")
            current = header
            sections[header] = []
            rest = line[len(header) + 1:].strip()
            if rest:
                sections[header].append(rest)
        elif current is not None:
            sections[current].append(line)
    missing = [s for s in SECTIONS if s not in sections]
    if missing:
        raise ValueError("missing sections: " + ", ".join(missing))
    if list(sections) != list(SECTIONS):
        raise ValueError("sections out of order")

    def body(name: str) -> list[str]:
        lines = sections[name]
        while lines and not lines[-1].strip():
            lines = lines[:-1]
        return lines

    examples = []
    for line in body("Examples"):
        for kind in ExampleKind:
            prefix = f"- [{kind.label}] "
            if line.startswith(prefix):
                examples.append(Example(kind, line[len(prefix):]))
                break
        else:
            raise ValueError(f"malformed example line {line!r}")
    related_text = "\n".join(body("Related heuristics")).strip()
    related = () if related_text == _NONE else tuple(
        HeuristicId.parse(part) for part in related_text.split(",")
    )
    checklist = []
    for n, line in enumerate(body("Checklist"), start=1):
        prefix = f"{n}. "
        if not line.startswith(prefix):
            raise ValueError(f"checklist step {n} malformed: {line!r}")
        checklist.append(line[len(prefix):])
    fields = {attr: "\n".join(body(section)) for section, attr in _TEXT_FIELDS.items()}
    return HeuristicTemplate(
        heuristic=HeuristicId.parse("\n".join(body("Identifier"))),
        examples=tuple(examples),
        related_heuristics=related,
        checklist=tuple(checklist),
        **fields,
    )
