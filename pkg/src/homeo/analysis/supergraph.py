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

"""The super-graph: executable nodes with control-flow, call and inter-task edges."""

import logging
from collections import defaultdict
from collections.abc import Collection, Iterable
from typing import Final

from homeo.errors import GraphConsistencyError
from homeo.ir.cfg import Edge, EdgeKind, program_edges
from homeo.ir.nodes import NodeKind, Program, ProgramNode
from homeo.ir.transform import ElemChange
from homeo.util import cls_name

from .scc import SccIndex, condense

LOG = logging.getLogger('homeo')

ALL_KINDS: Final[frozenset[EdgeKind]] = frozenset(EdgeKind)
STRUCTURAL: Final[frozenset[EdgeKind]] = frozenset({EdgeKind.CFG, EdgeKind.CALL})

type SyncPairs = frozenset[tuple[int, int]]


class SuperGraph:
    """Graph over executable program nodes.

    The graph is kept equal to a from-scratch build by applying the exact delta of
    every elementary transformation. SCC indices are computed lazily and cached until
    the next delta.
    """

    def __init__(self, program: Program, intertask: Iterable[Edge] = ()) -> None:
        """Build the super-graph of a program.

        :param program: the program
        :param intertask: initial inter-task edges
        """
        self.program = program
        self.nodes: dict[int, ProgramNode] = {
            n.id: n for n in program.nodes() if n.kind.executable
        }
        self._succ: defaultdict[int, set[Edge]] = defaultdict(set)
        self._pred: defaultdict[int, set[Edge]] = defaultdict(set)
        self._edges: set[Edge] = set()
        self._scc_cache: dict[tuple[frozenset[EdgeKind], SyncPairs], SccIndex] = {}
        for e in program_edges(program):
            self._add_edge(e)
        for e in intertask:
            self._add_edge(e)
        LOG.info(
            'Initialized %s[nodes=%d,edges=%d]',
            cls_name(self),
            len(self.nodes),
            len(self._edges),
        )

    def edges(self, kinds: Collection[EdgeKind] = ALL_KINDS) -> set[Edge]:
        """Edges of the given kinds."""
        return {e for e in self._edges if e.kind in kinds}

    def has_edge(self, edge: Edge) -> bool:
        """Whether ``edge`` is in the graph."""
        return edge in self._edges

    def succs(self, n: int, kinds: Collection[EdgeKind] = ALL_KINDS) -> list[int]:
        """Successor ids of ``n`` over edges of the given kinds, ascending."""
        return sorted({e.dst for e in self._succ.get(n, ()) if e.kind in kinds})

    def preds(self, n: int, kinds: Collection[EdgeKind] = ALL_KINDS) -> list[int]:
        """Predecessor ids of ``n`` over edges of the given kinds, ascending."""
        return sorted({e.src for e in self._pred.get(n, ()) if e.kind in kinds})

    def out_edges(self, n: int) -> set[Edge]:
        """Edges leaving ``n``."""
        return set(self._succ.get(n, ()))

    def in_edges(self, n: int) -> set[Edge]:
        """Edges entering ``n``."""
        return set(self._pred.get(n, ()))

    def barriers(self) -> list[ProgramNode]:
        """All barrier nodes ordered by id."""
        return [
            self.nodes[i] for i in sorted(self.nodes) if self.nodes[i].kind is NodeKind.BARRIER
        ]

    def add_intertask(self, e: Edge) -> None:
        """Add an inter-task edge outside of a delta (initial phase computation)."""
        if e.kind is not EdgeKind.INTERTASK:
            msg = f'Not an inter-task edge: {e}'
            raise GraphConsistencyError(msg)
        self._add_edge(e)
        self._scc_cache.clear()

    def _add_edge(self, e: Edge) -> None:
        self._edges.add(e)
        self._succ[e.src].add(e)
        self._pred[e.dst].add(e)

    def _remove_edge(self, e: Edge) -> None:
        self._edges.discard(e)
        self._succ[e.src].discard(e)
        self._pred[e.dst].discard(e)

    def apply_delta(self, change: ElemChange) -> None:
        """Apply an exact delta.

        :raise GraphConsistencyError: if edges would dangle or are unknown
        """
        for e in change.removed_edges:
            if e not in self._edges:
                msg = f'Removing unknown edge {e}'
                raise GraphConsistencyError(msg)
            self._remove_edge(e)
        for i in change.removed_nodes:
            if self._succ.get(i) or self._pred.get(i):
                msg = f'Removing node {i} leaves dangling edges'
                raise GraphConsistencyError(msg)
            self.nodes.pop(i, None)
            self._succ.pop(i, None)
            self._pred.pop(i, None)
        for i in change.added_nodes:
            self.nodes[i] = self.program.node(i)
        for e in change.added_edges:
            if e.src not in self.nodes or e.dst not in self.nodes:
                msg = f'Edge {e} has an endpoint outside the graph'
                raise GraphConsistencyError(msg)
            self._add_edge(e)
        self._scc_cache.clear()

    def scc_index(
        self, kinds: Collection[EdgeKind] = ALL_KINDS, sync: SyncPairs = frozenset()
    ) -> SccIndex:
        """SCC index over edges of the given kinds plus symmetric ``sync`` pairs."""
        key = frozenset(kinds), sync
        hit = self._scc_cache.get(key)
        if hit is not None:
            return hit
        extra: defaultdict[int, set[int]] = defaultdict(set)
        for a, b in sync:
            extra[a].add(b)
            extra[b].add(a)

        def succs(n: int) -> list[int]:
            return [*self.succs(n, kinds), *extra.get(n, ())]

        def preds(n: int) -> list[int]:
            return [*self.preds(n, kinds), *extra.get(n, ())]

        index = condense(self.nodes, succs, preds)
        self._scc_cache[key] = index
        return index

    def to_dot(self, labels: dict[tuple[int, int], str] | None = None) -> str:
        """Graphviz rendering; inter-task edges dashed with optional labels."""
        lines = ['digraph supergraph {', '    node [shape=box];']
        for i in sorted(self.nodes):
            label = self.nodes[i].label().replace('"', '\\"')
            lines.append(f'    n{i} [label="{i}: {label}"];')
        for e in sorted(self._edges):
            attrs = ''
            if e.kind is EdgeKind.CALL:
                attrs = ' [style=bold]'
            elif e.kind is EdgeKind.INTERTASK:
                text = (labels or {}).get((e.src, e.dst), '')
                attrs = f' [style=dashed,label="{text}"]'
            lines.append(f'    n{e.src} -> n{e.dst}{attrs};')
        lines.append('}')
        return '\n'.join(lines) + '\n'
