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

"""Phase analysis: barrier-delimited phases, sync sets and inter-task edges.

A phase starts at a set of barriers that synchronize with each other and contains
everything reachable from them without crossing another barrier. The barriers
reached last form the start set of the next phase. Inter-task edges connect
flush points of a common phase when writes visible at the first may be read after
the second.
"""

import logging
from collections import defaultdict, deque
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Any, Final

from homeo.ir.cfg import Edge, EdgeKind, return_sites
from homeo.ir.nodes import BarrierRole, NodeKind, Program, ProgramNode
from homeo.util import cls_name

from .access import shared_reads, shared_writes
from .supergraph import STRUCTURAL, SuperGraph

LOG = logging.getLogger('homeo')

type PhaseId = tuple[int, ...]

_SYNC_KINDS: Final[frozenset[NodeKind]] = frozenset({NodeKind.BARRIER, NodeKind.FLUSH})
_FLUSH_POINTS: Final[frozenset[NodeKind]] = frozenset({NodeKind.FLUSH})
_REUSE_BLOCKERS: Final[tuple[NodeKind, ...]] = (
    NodeKind.BARRIER,
    NodeKind.CALL,
    NodeKind.RETURN,
    NodeKind.PARALLEL,
)


@dataclass
class Phase:
    """A phase of a parallel region."""

    start: frozenset[int]
    region: int
    members: set[int] = field(default_factory=set)
    ends: frozenset[int] = frozenset()

    @property
    def id(self) -> PhaseId:
        """Sorted start barrier ids."""
        return tuple(sorted(self.start))


@dataclass
class PhaseInfo:
    """Phases, sync sets and inter-task edges of a program."""

    phases: dict[PhaseId, Phase] = field(default_factory=dict)
    node_phases: defaultdict[int, set[PhaseId]] = field(
        default_factory=lambda: defaultdict(set)
    )
    sync_sets: set[frozenset[int]] = field(default_factory=set)
    labels: dict[tuple[int, int], frozenset[str]] = field(default_factory=dict)

    def phases_of(self, n: int) -> frozenset[PhaseId]:
        """Phases containing node ``n``."""
        return frozenset(self.node_phases.get(n, ()))

    def phases_out(self, b: int) -> frozenset[PhaseId]:
        """Phases started by barrier ``b``."""
        return frozenset(p for p in self.node_phases.get(b, ()) if b in self.phases[p].start)

    def phases_in(self, b: int) -> frozenset[PhaseId]:
        """Phases barrier ``b`` terminates."""
        return frozenset(p for p in self.node_phases.get(b, ()) if b in self.phases[p].ends)

    def siblings(self, b: int) -> frozenset[int]:
        """Barriers that synchronize with ``b``, excluding ``b``."""
        return frozenset(x for s in self.sync_sets if b in s for x in s) - {b}

    def intertask_edges(self) -> set[Edge]:
        """Inter-task edges as super-graph edges."""
        return {Edge(a, b, EdgeKind.INTERTASK) for a, b in self.labels}

    def sync_pairs(self) -> frozenset[tuple[int, int]]:
        """Sibling barrier pairs (smaller id first)."""
        return frozenset(
            (a, b) for s in self.sync_sets for a in s for b in s if a < b
        )

    def to_json(self) -> dict[str, Any]:
        """JSON-compatible dump."""
        return {
            'phases': [
                {
                    'id': list(pid),
                    'region': p.region,
                    'members': sorted(p.members),
                }
                for pid, p in sorted(self.phases.items())
            ],
            'syncSets': sorted(sorted(s) for s in self.sync_sets),
            'interTaskEdges': [
                {'src': a, 'dst': b, 'vars': sorted(v)}
                for (a, b), v in sorted(self.labels.items())
            ],
        }


class PhaseAnalysis:
    """Maintains ``PhaseInfo`` across elementary transformations.

    Barrier-free additions and removals are absorbed locally; anything touching
    barriers, calls, returns or regions recomputes from scratch. Inter-task edges are
    always re-derived and reported as a difference.
    """

    def __init__(self, program: Program, graph: SuperGraph) -> None:
        """Compute the phase information of a program.

        :param program: the program
        :param graph: its super-graph (inter-task edges are added to it)
        """
        self.program = program
        self.graph = graph
        self.info = compute_phase_info(program, graph)
        self.reinit_count = 0
        self.reuse_count = 0
        for e in self.info.intertask_edges():
            graph.add_intertask(e)
        LOG.info(
            'Initialized %s[phases=%d,interTaskEdges=%d]',
            cls_name(self),
            len(self.info.phases),
            len(self.info.labels),
        )

    def stabilize(
        self, incoming: list[ProgramNode], outgoing: list[ProgramNode]
    ) -> tuple[set[Edge], set[Edge]]:
        """Absorb one elementary change. Return added and removed inter-task edges.

        :param incoming: nodes of the attached subtree, root first
        :param outgoing: nodes of the detached subtree, root first
        """
        if any(t and t[0].contains(*_REUSE_BLOCKERS) for t in (incoming, outgoing)):
            return self.re_init()
        if outgoing:
            self.stabilize_on_removal(outgoing)
        if incoming and not self.stabilize_on_addition(incoming):
            return self.re_init()
        self.reuse_count += 1
        return self._refresh_intertask()

    def stabilize_on_addition(self, incoming: list[ProgramNode]) -> bool:
        """Give a barrier-free added subtree the phases flowing into it.

        :return: ``False`` if the phases cannot be derived locally
        """
        executable = {n.id for n in incoming if n.kind.executable}
        if not executable:
            return True
        entry = _subtree_entry(incoming[0])
        preds = [p for p in self.graph.preds(entry.id, STRUCTURAL) if p not in executable]
        if any(self.graph.nodes[p].kind is NodeKind.EXIT for p in preds):
            return False
        phases: set[PhaseId] = set()
        for p in preds:
            node = self.graph.nodes[p]
            if node.kind is NodeKind.BARRIER:
                # a region exit ends its phase
                if node.role is not BarrierRole.EXIT:
                    phases |= self.info.phases_out(p)
            else:
                phases |= self.info.phases_of(p)
        if phases:
            for n in executable:
                self.info.node_phases[n] = set(phases)
            for pid in phases:
                self.info.phases[pid].members |= executable
        return True

    def stabilize_on_removal(self, outgoing: list[ProgramNode]) -> None:
        """Drop the phase entries of a barrier-free removed subtree."""
        for n in outgoing:
            for pid in self.info.node_phases.pop(n.id, set()):
                self.info.phases[pid].members.discard(n.id)

    def re_init(self) -> tuple[set[Edge], set[Edge]]:
        """Recompute from scratch. Return added and removed inter-task edges."""
        old = self.info.intertask_edges()
        self.info = compute_phase_info(self.program, self.graph)
        self.reinit_count += 1
        new = self.info.intertask_edges()
        return new - old, old - new

    def _refresh_intertask(self) -> tuple[set[Edge], set[Edge]]:
        old = self.info.intertask_edges()
        self.info.labels = intertask_labels(self.program, self.graph, self.info)
        new = self.info.intertask_edges()
        return new - old, old - new

    def to_dot(self) -> str:
        """Super-graph rendering with labelled inter-task edges."""
        return self.graph.to_dot(
            {k: ','.join(sorted(v)) for k, v in self.info.labels.items()}
        )


def _subtree_entry(root: ProgramNode) -> ProgramNode:
    """First executable node control reaches in a barrier-free subtree."""
    for n in root.walk():
        if n.kind.executable:
            return n
    return root


def regions(program: Program) -> list[ProgramNode]:
    """All parallel regions ordered by id."""
    return [n for n in program.nodes() if n.kind is NodeKind.PARALLEL]


def compute_phase_info(program: Program, graph: SuperGraph) -> PhaseInfo:
    """Compute phases, sync sets and inter-task edges from scratch."""
    info = PhaseInfo()
    sites = return_sites(program)
    for region in regions(program):
        assert region.body is not None
        entry = region.body.stmts[0]
        region_calls: set[int] = set()
        first = frozenset({entry.id})
        info.sync_sets.add(first)
        queue = deque([first])
        seen = {first}
        while queue:
            start = queue.popleft()
            phase = Phase(start, region.id)
            terminators = _expand(graph, sites, phase, region_calls)
            info.phases[phase.id] = phase
            for n in phase.members:
                info.node_phases[n].add(phase.id)
            if not terminators:
                continue
            info.sync_sets.add(terminators)
            if terminators not in seen and not _only_exits(graph, terminators):
                seen.add(terminators)
                queue.append(terminators)
    info.labels = intertask_labels(program, graph, info)
    return info


def _only_exits(graph: SuperGraph, barriers: Iterable[int]) -> bool:
    return all(graph.nodes[b].role is BarrierRole.EXIT for b in barriers)


def _expand(
    graph: SuperGraph, sites: dict[int, int], phase: Phase, region_calls: set[int]
) -> frozenset[int]:
    """Fill ``phase.members``; return the barriers that terminate the phase."""
    terminators: set[int] = set()
    calls: set[int] = set()
    exits: set[int] = set()
    stack = [b for b in sorted(phase.start) if graph.nodes[b].role is not BarrierRole.EXIT]
    phase.members.update(phase.start)

    def visit(n: int) -> None:
        if n in phase.members:
            if n in phase.start:
                terminators.add(n)
            return
        phase.members.add(n)
        node = graph.nodes[n]
        if node.kind is NodeKind.BARRIER:
            terminators.add(n)
            return
        stack.append(n)

    while stack:
        n = stack.pop()
        node = graph.nodes[n]
        if node.kind is NodeKind.CALL:
            calls.add(n)
            region_calls.add(n)
            callee_exit = graph.program.functions[node.name].exit.id
            if callee_exit in exits and n in sites:
                visit(sites[n])
        if node.kind is NodeKind.EXIT:
            exits.add(n)
            callers = calls or region_calls
            for c in sorted(callers):
                if graph.program.functions[graph.nodes[c].name].exit.id == n and c in sites:
                    visit(sites[c])
            continue
        for s in graph.succs(n, STRUCTURAL):
            visit(s)
    phase.ends = frozenset(terminators)
    return phase.ends


def intertask_labels(
    program: Program, graph: SuperGraph, info: PhaseInfo
) -> dict[tuple[int, int], frozenset[str]]:
    """Communicable variables between flush points of common phases."""
    labels: defaultdict[tuple[int, int], set[str]] = defaultdict(set)
    for phase in info.phases.values():
        points = sorted(
            n for n in phase.members if graph.nodes[n].kind in _FLUSH_POINTS
        )
        if not points:
            continue
        written = {f: _collect(program, graph, phase, f, forward=False) for f in points}
        read = {f: _collect(program, graph, phase, f, forward=True) for f in points}
        for f1 in points:
            if not written[f1]:
                continue
            for f2 in points:
                common = written[f1] & read[f2]
                if common:
                    labels[f1, f2] |= common
    return {k: frozenset(v) for k, v in labels.items()}


def _collect(
    program: Program, graph: SuperGraph, phase: Phase, f: int, *, forward: bool
) -> frozenset[str]:
    """Shared reads after (or writes before) ``f`` on flush-free paths in ``phase``."""
    acc: set[str] = set()
    seen: set[int] = set()
    stack = [f]
    while stack:
        n = stack.pop()
        nxt = graph.succs(n, STRUCTURAL) if forward else graph.preds(n, STRUCTURAL)
        for m in nxt:
            if m in seen or m not in phase.members:
                continue
            seen.add(m)
            node = graph.nodes[m]
            if node.kind in _SYNC_KINDS:
                continue
            acc |= shared_reads(node, program) if forward else shared_writes(node, program)
            stack.append(m)
    return frozenset(acc)
