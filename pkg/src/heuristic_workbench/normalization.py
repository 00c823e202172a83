"""Stage-4 normalization: resolve declared duplication/overlap conflicts.

Conflicts are declared by the researcher; this module only enforces the
bookkeeping. Every resolution is appended to the catalog's action log, and
:func:`replay` rebuilds the current catalog from the Stage-3 baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import reduce

from .model import (
    NEW_SET,
    ConflictKind,
    ConflictNote,
    GeneralizedFrom,
    GroupUnderGeneral,
    Heuristic,
    HeuristicCatalog,
    HeuristicId,
    KeepOneDiscardRest,
    KeptAfterDedup,
    LogEntry,
    MergedFrom,
    MergeReformulate,
    ReviseIsi,
    SplitFrom,
    SplitIntoSeveral,
    Status,
)


class NormalizationError(ValueError):
    pass


class UnknownId(NormalizationError):
    pass


class AlreadyDiscarded(NormalizationError):
    pass


class StaleConflict(NormalizationError):
    pass


class IdCollision(NormalizationError):
    pass


class InvalidAction(NormalizationError):
    pass


@dataclass(frozen=True)
class NormalizationStatus:
    normalized: bool
    open_conflicts: tuple[ConflictNote, ...]


def declare_conflict(catalog: HeuristicCatalog, note: ConflictNote) -> HeuristicCatalog:
    if catalog.certified:
        raise NormalizationError("catalog is already certified as normalized")
    if catalog.conflict(note.id) is not None:
        raise NormalizationError(f"conflict id {note.id} already declared")
    minimum = 2 if note.kind is ConflictKind.DUPLICATION else 1
    if len(set(note.members)) < minimum:
        raise NormalizationError(f"{note.kind.value} requires at least {minimum} distinct members")
    for hid in note.members:
        _require_live(catalog, hid)
    return replace(catalog, conflicts=catalog.conflicts + (note,))


def _require_live(catalog: HeuristicCatalog, hid: HeuristicId) -> Heuristic:
    h = catalog.get(hid)
    if h is None:
        raise UnknownId(f"unknown heuristic {hid}")
    if h.status is Status.DISCARDED:
        raise AlreadyDiscarded(f"{hid} is already discarded")
    return h


def _check_new(catalog: HeuristicCatalog, new: list[Heuristic]) -> None:
    ids = [h.id for h in new]
    if len(set(ids)) != len(ids):
        raise IdCollision("new heuristics share an id")
    for hid in ids:
        if hid.set_id != NEW_SET:
            raise InvalidAction(f"new heuristic {hid} must use set id {NEW_SET}")
        if hid in catalog:
            raise IdCollision(f"id {hid} already exists")


def _distinct_inputs(inputs, minimum: int, what: str) -> None:
    if len(set(inputs)) != len(inputs):
        raise InvalidAction(f"{what} lists an input twice")
    if len(inputs) < minimum:
        raise InvalidAction(f"{what} requires ≥{minimum} inputs")


def apply_action(catalog: HeuristicCatalog, action: LogEntry) -> HeuristicCatalog:
    """Apply one normalization action and append it to the log.

    Raises before building anything, so a failed call leaves the caller's
    catalog untouched.
    """
    if isinstance(action, ReviseIsi):
        _require_live(catalog, action.heuristic)
        changes = {action.heuristic: {"isi": action.isi}}
        return _rebuild(catalog, changes, (), action)

    conflict = catalog.conflict(action.resolves)
    if conflict is None:
        raise StaleConflict(f"unknown conflict {action.resolves}")
    if conflict.id in catalog.resolved_conflicts():
        raise StaleConflict(f"conflict {conflict.id} is already resolved")
    if catalog.certified:
        raise NormalizationError("catalog is already certified as normalized")

    changes: dict[HeuristicId, dict] = {}
    added: list[Heuristic] = []
    if isinstance(action, KeepOneDiscardRest):
        if not action.discarded:
            raise InvalidAction("keep-one requires at least one discarded heuristic")
        if action.kept in action.discarded:
            raise InvalidAction(f"{action.kept} cannot be both kept and discarded")
        _distinct_inputs(action.discarded, 1, "keep-one")
        for hid in (action.kept, *action.discarded):
            _require_live(catalog, hid)
        kept = catalog.get(action.kept)
        changes[action.kept] = {"status": Status.NORMALIZED, "origin": _kept_origin(kept)}
        for hid in action.discarded:
            changes[hid] = {"status": Status.DISCARDED}
    elif isinstance(action, (MergeReformulate, GroupUnderGeneral)):
        merge = isinstance(action, MergeReformulate)
        what = "merge" if merge else "generalization"
        _distinct_inputs(action.inputs, 2, what)
        for hid in action.inputs:
            _require_live(catalog, hid)
        _check_new(catalog, [action.new_heuristic])
        origin = (MergedFrom if merge else GeneralizedFrom)(tuple(action.inputs))
        added.append(action.new_heuristic.replace(origin=origin, status=Status.NORMALIZED))
        for hid in action.inputs:
            changes[hid] = {"status": Status.DISCARDED}
    elif isinstance(action, SplitIntoSeveral):
        _require_live(catalog, action.input)
        if len(action.new_heuristics) < 2:
            raise InvalidAction("split requires at least two new heuristics")
        _check_new(catalog, list(action.new_heuristics))
        for h in action.new_heuristics:
            added.append(h.replace(origin=SplitFrom(action.input), status=Status.NORMALIZED))
        changes[action.input] = {"status": Status.DISCARDED}
    else:
        raise InvalidAction(f"unsupported action {type(action).__name__}")
    return _rebuild(catalog, changes, added, action)


def _kept_origin(h: Heuristic):
    # A heuristic created by an earlier action keeps that provenance.
    return h.origin if h.id.set_id == NEW_SET else KeptAfterDedup()


def _rebuild(catalog, changes, added, action) -> HeuristicCatalog:
    heuristics = tuple(
        h.replace(**changes[h.id]) if h.id in changes else h for h in catalog.heuristics
    ) + tuple(added)
    return replace(catalog, heuristics=heuristics, actions=catalog.actions + (action,))


def check_normalized(catalog: HeuristicCatalog) -> NormalizationStatus:
    resolved = catalog.resolved_conflicts()
    open_ = tuple(c for c in catalog.conflicts if c.id not in resolved)
    return NormalizationStatus(normalized=not open_, open_conflicts=open_)


def certify(catalog: HeuristicCatalog) -> HeuristicCatalog:
    """Close normalization: every surviving heuristic becomes Normalized."""
    status = check_normalized(catalog)
    if not status.normalized:
        open_ids = ", ".join(c.id for c in status.open_conflicts)
        raise NormalizationError(f"open conflicts remain: {open_ids}")
    heuristics = tuple(
        h.replace(status=Status.NORMALIZED) if h.status is Status.DENORMALIZED else h
        for h in catalog.heuristics
    )
    return replace(catalog, heuristics=heuristics, certified=True)


def mark_selected(catalog: HeuristicCatalog, ids) -> HeuristicCatalog:
    ids = tuple(ids)
    for hid in ids:
        _require_live(catalog, hid)
    chosen = set(ids)
    heuristics = []
    for h in catalog.heuristics:
        if h.id in chosen:
            h = h.replace(status=Status.SELECTED)
        elif h.status is Status.SELECTED:
            h = h.replace(status=Status.NORMALIZED)
        heuristics.append(h)
    return replace(catalog, heuristics=tuple(heuristics), selection=ids)


def replay(catalog: HeuristicCatalog, *, certified: bool | None = None,
           selection=None) -> HeuristicCatalog:
    """Rebuild the catalog by folding its log over the Stage-3 baseline.

    ``certified`` and ``selection`` default to the catalog's own values; passing
    them lets callers reopen normalization or clear a selection.
    """
    certified = catalog.certified if certified is None else certified
    selection = catalog.selection if selection is None else tuple(selection)
    start = HeuristicCatalog(
        heuristics=catalog.baseline, conflicts=catalog.conflicts, baseline=catalog.baseline
    )
    out = reduce(apply_action, catalog.actions, start)
    if certified:
        out = certify(out)
    if selection:
        out = mark_selected(out, selection)
    return out


def set_baseline_isi(catalog: HeuristicCatalog, hid: HeuristicId, isi) -> HeuristicCatalog:
    """Stage-3 ISI assignment; only valid before any normalization action is logged."""
    if catalog.actions:
        raise NormalizationError("normalization has started; record a ReviseIsi action instead")
    if hid not in catalog:
        raise UnknownId(f"unknown heuristic {hid}")
    heuristics = tuple(h.replace(isi=isi) if h.id == hid else h for h in catalog.heuristics)
    baseline = tuple(h.replace(isi=isi) if h.id == hid else h for h in catalog.baseline)
    return replace(catalog, heuristics=heuristics, baseline=baseline)


def unaccounted_discards(catalog: HeuristicCatalog) -> list[HeuristicId]:
    """Discarded heuristics that no logged action explains (should always be empty)."""
    explained: set[HeuristicId] = set()
    for a in catalog.actions:
        if isinstance(a, KeepOneDiscardRest):
            explained.update(a.discarded)
        elif isinstance(a, (MergeReformulate, GroupUnderGeneral)):
            explained.update(a.inputs)
        elif isinstance(a, SplitIntoSeveral):
            explained.add(a.input)
    return [h.id for h in catalog.heuristics
            if h.status is Status.DISCARDED and h.id not in explained]


def next_new_id(catalog: HeuristicCatalog, offset: int = 0) -> HeuristicId:
    used = [h.id.index for h in catalog.heuristics if h.id.set_id == NEW_SET]
    return HeuristicId(NEW_SET, max(used, default=0) + 1 + offset)

