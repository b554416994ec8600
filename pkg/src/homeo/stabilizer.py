#  Copyright (C) 2024 The homeo authors.
#
#  This file is part of homeo.
#
#  homeo is free software: you can redistribute it and/or modify it under the terms
#  of the GNU General Public License as published by the Free Software Foundation,
#  either version 3 of the License, or (at your option) any later version.
#
#  homeo is distributed in the hope that it will be useful, but WITHOUT ANY WARRANTY;
#  without even the implied warranty of MERCHANTABILITY or FITNESS FOR A PARTICULAR
#  PURPOSE. See the GNU General Public License for more details.
#
#  You should have received a copy of the GNU General Public License along with
#  homeo. If not, see <https://www.gnu.org/licenses/>.

"""Registry, change log and stabilization of program abstractions.

Every registered abstraction is told about every elementary transformation and is
brought up to date again according to the run's ``Mode``: eagerly after each
transformation, at relevant points chosen by the optimization, or lazily on first
read. Reads go through ``stable_getter`` which stabilizes on demand and breaks
dependency cycles by answering recursive reads with an initial value.
"""

import logging
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable
from dataclasses import dataclass, fields
from enum import StrEnum
from functools import wraps
from typing import Any, ClassVar, Concatenate, Final, cast, override

from homeo.analysis.phase import PhaseAnalysis
from homeo.analysis.supergraph import SuperGraph
from homeo.errors import HomeoError, RpStrictViolation, StabilizationError
from homeo.ir.cfg import Edge, EdgeKind
from homeo.ir.nodes import Function, Program, ProgramNode
from homeo.ir.transform import ElemChange
from homeo.logging_conf import HiddenOutputFilter
from homeo.util import cls_name

LOG = logging.getLogger('homeo')

MAINTAINED: Final[tuple[str, ...]] = ('supergraph', 'phase')


class Trigger(StrEnum):
    """When stabilization happens."""

    EAGER = 'EG'
    RELEVANT = 'RP'
    LAZY = 'LZ'


class Mode(StrEnum):
    """Stabilization mode: trigger plus invalidate (INV) or update (UPD) family."""

    EGINV = 'EGINV'
    EGUPD = 'EGUPD'
    RPINV = 'RPINV'
    RPUPD = 'RPUPD'
    LZINV = 'LZINV'
    LZUPD = 'LZUPD'

    @override
    def __repr__(self) -> str:
        return f'{cls_name(self)}.{self.name}'

    @property
    def trigger(self) -> Trigger:
        """When stabilization happens in this mode."""
        return Trigger(self.value[:2])

    @property
    def incremental(self) -> bool:
        """Whether stabilization updates instead of recomputing."""
        return self.value.endswith('UPD')


class StableStatus(StrEnum):
    """Stability flag of a registered abstraction."""

    STABLE = 'STABLE'
    UNSTABLE = 'UNSTABLE'
    PROCESSING = 'PROCESSING'


@dataclass(frozen=True)
class NetChanges:
    """Net effect of a window of elementary changes."""

    added_nodes: frozenset[int] = frozenset()
    removed_nodes: frozenset[int] = frozenset()
    added_edges: frozenset[Edge] = frozenset()
    removed_edges: frozenset[Edge] = frozenset()

    @property
    def empty(self) -> bool:
        """Whether nothing changed."""
        return not (
            self.added_nodes or self.removed_nodes or self.added_edges or self.removed_edges
        )


def net_changes(changes: Iterable[ElemChange]) -> NetChanges:
    """Merge changes by presence before and after the window.

    An element counts as added if it was absent before the window and is present
    after it, and as removed in the opposite case. Anything else cancels.
    """
    nodes_before: dict[int, bool] = {}
    nodes_after: dict[int, bool] = {}
    edges_before: dict[Edge, bool] = {}
    edges_after: dict[Edge, bool] = {}
    for c in changes:
        for n in c.removed_nodes:
            nodes_before.setdefault(n, True)
            nodes_after[n] = False
        for n in c.added_nodes:
            nodes_before.setdefault(n, False)
            nodes_after[n] = True
        for e in c.removed_edges:
            edges_before.setdefault(e, True)
            edges_after[e] = False
        for e in c.added_edges:
            edges_before.setdefault(e, False)
            edges_after[e] = True
    return NetChanges(
        frozenset(n for n, p in nodes_after.items() if p and not nodes_before[n]),
        frozenset(n for n, p in nodes_after.items() if not p and nodes_before[n]),
        frozenset(e for e, p in edges_after.items() if p and not edges_before[e]),
        frozenset(e for e, p in edges_after.items() if not p and edges_before[e]),
    )


class ChangeLog:
    """Append-only log of elementary changes with compaction of consumed entries."""

    def __init__(self) -> None:
        """Initialize an empty log."""
        self._entries: list[ElemChange] = []
        self._base = 0

    @property
    def head(self) -> int:
        """Index one past the newest entry."""
        return self._base + len(self._entries)

    def append(self, change: ElemChange) -> None:
        """Append a change."""
        self._entries.append(change)

    def since(self, cursor: int) -> list[ElemChange]:
        """Entries from ``cursor`` up to the head."""
        if not self._base <= cursor <= self.head:
            msg = f'Cursor {cursor} outside log window [{self._base}, {self.head}]'
            raise StabilizationError(msg)
        return self._entries[cursor - self._base :]

    def net_changes(self, cursor: int) -> NetChanges:
        """Net changes from ``cursor`` up to the head."""
        return net_changes(self.since(cursor))

    def compact(self, cursor: int) -> None:
        """Discard entries before ``cursor``."""
        drop = min(cursor, self.head) - self._base
        if drop > 0:
            del self._entries[:drop]
            self._base += drop


@dataclass
class AnalysisMetrics:
    """Work counters of one abstraction."""

    stabilization_triggers: int = 0
    compute_calls: int = 0
    handle_update_calls: int = 0
    nodes_reprocessed: int = 0
    transfer_applications: int = 0

    def as_dict(self) -> dict[str, int]:
        """Counter values by camel-case name."""
        return {_camel(f.name): getattr(self, f.name) for f in fields(self)}


def _camel(s: str) -> str:
    head, *rest = s.split('_')
    return head + ''.join(w.capitalize() for w in rest)


class BaseAnalysis(ABC):
    """An abstraction kept consistent by the stabilizer.

    Subclasses implement ``compute`` and ``handle_update`` and expose their results
    through methods decorated with ``stable_getter``.
    """

    name: ClassVar[str]

    def __init__(self) -> None:
        """Initialize an unregistered analysis."""
        self.homeo: Stabilizer | None = None
        self.status = StableStatus.STABLE
        self.cursor = 0
        self.metrics = AnalysisMetrics()

    @property
    def program(self) -> Program:
        """The analyzed program."""
        return self.stabilizer.program

    @property
    def stabilizer(self) -> 'Stabilizer':
        """The stabilizer this analysis is registered with."""
        if self.homeo is None:
            msg = f'{cls_name(self)} is not registered'
            raise StabilizationError(msg)
        return self.homeo

    @abstractmethod
    def compute(self) -> None:
        """Compute the abstraction from scratch."""

    @abstractmethod
    def handle_update(self, changes: NetChanges) -> None:
        """Bring the abstraction up to date with the given net changes."""

    def init_val(self) -> Any:  # noqa: ANN401
        """Answer for reads during this analysis' own stabilization."""
        return None


def stable_getter[A: BaseAnalysis, **P, R](
    method: Callable[Concatenate[A, P], R],
) -> Callable[Concatenate[A, P], R]:
    """Guard a getter so it only answers from a stable abstraction."""

    @wraps(method)
    def guard(self: A, *args: P.args, **kwargs: P.kwargs) -> R:
        if self.status is StableStatus.PROCESSING:
            return cast(R, self.init_val())
        if self.status is StableStatus.UNSTABLE and self.homeo is not None:
            self.homeo.on_unstable_read(self)
        return method(self, *args, **kwargs)

    return guard


class Stabilizer:
    """The stabilizer of one program.

    Owns the maintained abstractions (super-graph and phase information), the change
    log and the registry of analyses.
    """

    def __init__(
        self, program: Program, mode: Mode = Mode.LZUPD, *, strict: bool = False
    ) -> None:
        """Attach a stabilizer to a program.

        :param program: the program; must not have another stabilizer
        :param mode: stabilization mode for all registered analyses
        :param strict: fault on unstable reads between relevant points (RP modes)
        """
        if program.observer is not None:
            msg = 'Program already has a stabilizer'
            raise StabilizationError(msg)
        self.program = program
        self.mode = mode
        self.strict = strict
        self.graph = SuperGraph(program)
        self.phase = PhaseAnalysis(program, self.graph)
        self.log = ChangeLog()
        self.analyses: dict[str, BaseAnalysis] = {}
        self.transformations = 0
        self._memos: dict[str, Callable[[ElemChange], None]] = {}
        self._stabilizing: list[str] = []
        program.observer = self
        LOG.info('Initialized %s[mode=%s,strict=%s]', cls_name(self), mode, strict)

    def register(self, analysis: BaseAnalysis) -> BaseAnalysis:
        """Register and compute an analysis.

        :raise StabilizationError: on a duplicate name
        """
        if analysis.name in self.analyses or analysis.name in MAINTAINED:
            msg = f'Duplicate analysis name {analysis.name!r}'
            raise StabilizationError(msg)
        analysis.homeo = self
        self.analyses[analysis.name] = analysis
        analysis.status = StableStatus.PROCESSING
        try:
            analysis.compute()
        except BaseException:
            del self.analyses[analysis.name]
            analysis.homeo = None
            raise
        analysis.status = StableStatus.STABLE
        analysis.cursor = self.log.head
        analysis.metrics = AnalysisMetrics()
        LOG.info('Registered %s as %r', cls_name(analysis), analysis.name)
        return analysis

    def get(self, name: str) -> BaseAnalysis:
        """Return a registered analysis by name."""
        try:
            return self.analyses[name]
        except KeyError as e:
            msg = f'Unknown analysis {name!r}'
            raise StabilizationError(msg) from e

    def register_memo(self, name: str, callback: Callable[[ElemChange], None]) -> None:
        """Register memoized data that must see every change."""
        self._memos[name] = callback

    def unregister_memo(self, name: str) -> None:
        """Drop a memo callback."""
        self._memos.pop(name, None)

    def on_elem_change(
        self,
        change: ElemChange,
        fn: Function,
        incoming: list[ProgramNode],
        outgoing: list[ProgramNode],
    ) -> ElemChange:
        """Maintain super-graph and phases for one change, then notify."""
        if self._stabilizing:
            msg = f'Transformation during stabilization of {self._stabilizing[-1]!r}'
            raise StabilizationError(msg)
        dangling = {
            e
            for n in change.removed_nodes
            for e in self.graph.in_edges(n) | self.graph.out_edges(n)
            if e.kind is EdgeKind.INTERTASK
        }
        change = change.extended(set(), dangling)
        self.graph.apply_delta(change)
        added, removed = self.phase.stabilize(incoming, outgoing)
        removed -= dangling
        self.graph.apply_delta(
            ElemChange(
                change.action,
                added_edges=frozenset(added),
                removed_edges=frozenset(removed),
            )
        )
        change = change.extended(added, removed)
        LOG.debug('Elementary change in %s: %s', fn.name, change, extra=HiddenOutputFilter.EXTRA)
        self.notify(change)
        return change

    def notify(self, change: ElemChange) -> None:
        """Record a change and mark every analysis unstable.

        :raise StabilizationError: when called during a stabilization
        """
        if self._stabilizing:
            msg = f'Re-entrant notify during stabilization of {self._stabilizing[-1]!r}'
            raise StabilizationError(msg)
        self.log.append(change)
        self.transformations += 1
        for memo in self._memos.values():
            memo(change)
        for a in self.analyses.values():
            a.status = StableStatus.UNSTABLE
        if self.mode.trigger is Trigger.EAGER:
            for a in self.analyses.values():
                self.stabilize(a)
        self.log.compact(
            min((a.cursor for a in self.analyses.values()), default=self.log.head)
        )

    def stabilize(self, analysis: BaseAnalysis) -> None:
        """Bring one analysis up to date according to the mode's family."""
        if analysis.status is not StableStatus.UNSTABLE:
            return
        m = analysis.metrics
        self._stabilizing.append(analysis.name)
        analysis.status = StableStatus.PROCESSING
        m.stabilization_triggers += 1
        try:
            if self.mode.incremental:
                net = self.log.net_changes(analysis.cursor)
                try:
                    analysis.handle_update(net)
                except HomeoError:
                    LOG.exception(
                        'Update of %r failed; recomputing from scratch', analysis.name
                    )
                    analysis.compute()
                    m.compute_calls += 1
                else:
                    m.handle_update_calls += 1
            else:
                analysis.compute()
                m.compute_calls += 1
        except BaseException:
            analysis.status = StableStatus.UNSTABLE
            raise
        finally:
            self._stabilizing.pop()
        analysis.cursor = self.log.head
        analysis.status = StableStatus.STABLE
        LOG.debug(
            'Stabilized %r (%s)', analysis.name, self.mode, extra=HiddenOutputFilter.EXTRA
        )
        self.log.compact(min(a.cursor for a in self.analyses.values()))

    def on_unstable_read(self, analysis: BaseAnalysis) -> None:
        """Handle a read of an unstable analysis.

        Reads from inside a stabilization always stabilize the dependee. Between
        relevant points of an RP mode, a strict run faults and a lenient run answers
        from the stale abstraction.
        """
        if self._stabilizing or self.mode.trigger is not Trigger.RELEVANT:
            self.stabilize(analysis)
            return
        if self.strict:
            msg = f'Read of unstable {analysis.name!r} outside a relevant change-point'
            raise RpStrictViolation(msg)
        LOG.warning('Read of unstable %r outside a relevant change-point', analysis.name)

    def stabilize_now(self, names: Iterable[str] | None = None) -> None:
        """Stabilize the listed abstractions (all if ``None``) right away.

        :raise StabilizationError: on an unknown name
        """
        selected = list(self.analyses) if names is None else list(names)
        unknown = [n for n in selected if n not in self.analyses and n not in MAINTAINED]
        if unknown:
            msg = f'Unknown analysis {', '.join(map(repr, unknown))}'
            raise StabilizationError(msg)
        for n in selected:
            if n in self.analyses:
                self.stabilize(self.analyses[n])

    def all_stable(self) -> bool:
        """Whether every registered analysis is stable."""
        return all(a.status is StableStatus.STABLE for a in self.analyses.values())

    def metrics(self) -> dict[str, dict[str, int]]:
        """Work counters per analysis."""
        return {n: a.metrics.as_dict() for n, a in self.analyses.items()}

    def detach(self) -> None:
        """Detach from the program."""
        self.program.observer = None
