"""GSI/FSI computation and the ranked specificity matrix."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .model import (
    DimensionKind,
    DomainProfile,
    HeuristicCatalog,
    HeuristicId,
    SpecificityScore,
    Status,
)

# Column order used in every matrix listing: UC, PD, LD, UP.
MATRIX_COLUMNS = (DimensionKind.UC, DimensionKind.PD, DimensionKind.LD, DimensionKind.UP)

FSI_MAX = Fraction(4)


class SpecificityError(ValueError):
    pass


class IncompleteRow(SpecificityError):
    def __init__(self, heuristic: HeuristicId, kind: DimensionKind, missing, extra=()):
        self.heuristic = heuristic
        self.kind = kind
        self.missing = tuple(missing)
        self.extra = tuple(extra)
        parts = []
        if self.missing:
            parts.append("missing " + ", ".join(self.missing))
        if self.extra:
            parts.append("unknown " + ", ".join(self.extra))
        super().__init__(f"{heuristic} {kind.value} row incomplete: " + "; ".join(parts or ["no scores"]))


class OutOfRangeGsi(SpecificityError):
    pass


class MissingGsiRow(SpecificityError):
    def __init__(self, gaps: list[tuple[HeuristicId, DimensionKind]]):
        self.gaps = list(gaps)
        listing = ", ".join(f"{h} {k.value}" for h, k in self.gaps)
        super().__init__(f"missing GSI rows: {listing}")


@dataclass(frozen=True)
class GsiTable:
    """One heuristic's scores against every item of one characteristic dimension."""

    heuristic: HeuristicId
    kind: DimensionKind
    scores: Mapping[str, SpecificityScore]

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DimensionKind(self.kind))
        object.__setattr__(
            self, "scores", {label: SpecificityScore(v) for label, v in self.scores.items()}
        )

    def check_against(self, profile: DomainProfile) -> None:
        expected = {i.label.casefold(): i.label for i in profile.items_of(self.kind)}
        given = {label.casefold(): label for label in self.scores}
        missing = [expected[k] for k in expected if k not in given]
        extra = [given[k] for k in given if k not in expected]
        if missing or extra:
            raise IncompleteRow(self.heuristic, self.kind, missing, extra)


def compute_gsi(table: GsiTable, profile: DomainProfile | None = None) -> Fraction:
    """Unweighted mean of the row, as an exact rational.

    With a profile, the row must cover exactly that dimension's items.
    """
    if profile is not None:
        table.check_against(profile)
    if not table.scores:
        raise IncompleteRow(table.heuristic, table.kind, [])
    return Fraction(sum(table.scores.values()), len(table.scores))


def compute_fsi(isi: int, gsi_uc, gsi_pd, gsi_ld, gsi_up) -> Fraction:
    isi = SpecificityScore(isi)
    gsis = [Fraction(g) for g in (gsi_uc, gsi_pd, gsi_ld, gsi_up)]
    for g in gsis:
        if not 0 <= g <= 4:
            raise OutOfRangeGsi(f"GSI must lie in [0, 4], got {g}")
    # 64 = 4 dimensions x max ISI 4 x max GSI 4; the leading 4 rescales to [0, 4].
    return 4 * isi * sum(gsis) / Fraction(64)


@dataclass(frozen=True)
class MatrixRow:
    heuristic: HeuristicId
    isi: SpecificityScore
    gsi_uc: Fraction
    gsi_pd: Fraction
    gsi_ld: Fraction
    gsi_up: Fraction
    fsi: Fraction

    def gsi(self, kind: DimensionKind) -> Fraction:
        return getattr(self, f"gsi_{kind.value.lower()}")

    def sort_key(self):
        return (-self.fsi, -self.isi, str(self.heuristic))


@dataclass(frozen=True)
class SpecificityMatrix:
    rows: tuple[MatrixRow, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(sorted(self.rows, key=MatrixRow.sort_key)))

    def __len__(self) -> int:
        return len(self.rows)

    def row(self, hid: HeuristicId) -> MatrixRow | None:
        for r in self.rows:
            if r.heuristic == hid:
                return r
        return None

    def fsi_map(self) -> dict[HeuristicId, Fraction]:
        return {r.heuristic: r.fsi for r in self.rows}


def index_tables(tables: Iterable[GsiTable]) -> dict[tuple[HeuristicId, DimensionKind], GsiTable]:
    out: dict[tuple[HeuristicId, DimensionKind], GsiTable] = {}
    for t in tables:
        key = (t.heuristic, t.kind)
        if key in out:
            raise SpecificityError(f"duplicate GSI row for {t.heuristic} {t.kind.value}")
        out[key] = t
    return out


def build_matrix(
    catalog: HeuristicCatalog, tables: Iterable[GsiTable], profile: DomainProfile
) -> SpecificityMatrix:
    """One row per live heuristic, sorted by FSI desc, ISI desc, then id."""
    by_key = index_tables(tables)
    live = [h for h in catalog.heuristics if h.status is not Status.DISCARDED]
    gaps = [(h.id, k) for h in live for k in DimensionKind if (h.id, k) not in by_key]
    if gaps:
        raise MissingGsiRow(gaps)
    rows = []
    for h in live:
        gsi = {k: compute_gsi(by_key[(h.id, k)], profile) for k in DimensionKind}
        fsi = compute_fsi(h.isi, gsi[DimensionKind.UC], gsi[DimensionKind.PD],
                          gsi[DimensionKind.LD], gsi[DimensionKind.UP])
        rows.append(MatrixRow(h.id, h.isi, gsi[DimensionKind.UC], gsi[DimensionKind.PD],
                              gsi[DimensionKind.LD], gsi[DimensionKind.UP], fsi))
    return SpecificityMatrix(tuple(rows))


def select_heuristics(matrix: SpecificityMatrix, threshold) -> list[HeuristicId]:
    """Ids of rows with FSI at or above ``threshold``, in matrix order."""
    threshold = Fraction(threshold)
    return [r.heuristic for r in matrix.rows if r.fsi >= threshold]
