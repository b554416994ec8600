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

"""Incremental inter-thread iterative data-flow engine.

Solves the usual equations over the super-graph::

    IN(n)  = meet of OUT(p) over the predecessors p of n
    OUT(n) = F_n(IN(n))

with two additions for shared memory. Along an inter-task edge only the variables
that may be communicated over it are met into the destination. At a barrier the
shared part of OUT is the meet of the shared IN of all barriers it synchronizes with,
so siblings end up with identical shared facts.

Updates after a program change re-solve only from seed nodes, one SCC at a time. The
first pass over an SCC ignores predecessors of the same SCC that were not processed
yet, so stale facts circulating in loops cannot survive; the second pass runs the
plain fixed point over the under-approximated nodes.
"""

import heapq
import logging
from abc import abstractmethod
from collections.abc import Iterable
from dataclasses import dataclass
from enum import StrEnum
from typing import Any, ClassVar, Final, override

from homeo.errors import IdfaError
from homeo.ir.cfg import Edge, EdgeKind
from homeo.ir.nodes import NodeKind, ProgramNode
from homeo.stabilizer import BaseAnalysis, NetChanges, stable_getter
from homeo.util import cls_name

from .access import has_deref
from .lattice import Lattice, Value, render
from .scc import SccIndex

LOG = logging.getLogger('homeo')

DEFAULT_ITERATION_FACTOR: Final[int] = 10

type Key = tuple[int, int]


class Direction(StrEnum):
    """Direction of propagation."""

    FORWARD = 'forward'
    BACKWARD = 'backward'


class Worklist:
    """Nodes ordered by SCC position without duplicates."""

    def __init__(self, key: dict[int, Key]) -> None:
        """Initialize an empty worklist ordered by ``key``."""
        self._key = key
        self._heap: list[tuple[Key, int]] = []
        self._members: set[int] = set()

    def __bool__(self) -> bool:
        return bool(self._heap)

    def __contains__(self, n: object) -> bool:
        return n in self._members

    def push(self, n: int) -> None:
        """Add a node unless already present."""
        if n not in self._members:
            self._members.add(n)
            heapq.heappush(self._heap, (self._key[n], n))

    def next_scc(self) -> int:
        """SCC of the least node."""
        return self._heap[0][0][0]

    def remove_next(self) -> int:
        """Remove and return the least node."""
        _, n = heapq.heappop(self._heap)
        self._members.discard(n)
        return n

    def remove_next_with_id(self, scc: int) -> int | None:
        """Remove and return the least node of ``scc``, or ``None`` if there is none."""
        if not self._heap or self._heap[0][0][0] != scc:
            return None
        return self.remove_next()


@dataclass(frozen=True)
class Environment:
    """Program properties the equations depend on besides the graph."""

    private: frozenset[str]
    labels: dict[tuple[int, int], frozenset[str]]
    sync_sets: frozenset[frozenset[int]]
    address_taken: frozenset[str]
    boundary: Value


class DataflowAnalysis(BaseAnalysis):
    """Base class of the data-flow analyses.

    Subclasses choose a direction and lattice and implement the transfer function.
    ``inn`` always holds the meet side of a node (after the node for backward
    analyses), ``out`` the transferred side.
    """

    direction: ClassVar[Direction] = Direction.FORWARD
    lattice: ClassVar[Lattice]

    def __init__(self, iteration_factor: int = DEFAULT_ITERATION_FACTOR) -> None:
        """Initialize the analysis.

        :param iteration_factor: node processings allowed per node and location
            before the engine gives up
        """
        super().__init__()
        self.iteration_factor = iteration_factor
        self.inn: dict[int, Value] = {}
        self.out: dict[int, Value] = {}
        self._env: Environment | None = None
        self._index: SccIndex | None = None
        self._key: dict[int, Key] = {}

    @abstractmethod
    def transfer(self, node: ProgramNode, value: Value) -> Value:
        """Transfer function of a node."""

    def boundary(self) -> Value:
        """Value entering the program (leaving it for backward analyses)."""
        return frozenset()

    @override
    def init_val(self) -> Any:
        return self.lattice.top

    # Graph access in propagation direction

    @property
    def _forward(self) -> bool:
        return self.direction is Direction.FORWARD

    def _deps(self, n: int) -> list[int]:
        g = self.stabilizer.graph
        return g.preds(n) if self._forward else g.succs(n)

    def _dependents(self, n: int) -> list[int]:
        g = self.stabilizer.graph
        return g.succs(n) if self._forward else g.preds(n)

    def _edge(self, dep: int, n: int) -> tuple[int, int]:
        return (dep, n) if self._forward else (n, dep)

    def _boundary_node(self) -> int:
        fn = self.program.functions[self.program.entry_function]
        return fn.entry.id if self._forward else fn.exit.id

    def _environment(self) -> Environment:
        info = self.stabilizer.phase.info
        return Environment(
            self.program.private_names(),
            dict(info.labels),
            frozenset(info.sync_sets),
            self.program.address_taken(),
            self.boundary(),
        )

    def _refresh_index(self) -> None:
        homeo = self.stabilizer
        index = homeo.graph.scc_index(sync=homeo.phase.info.sync_pairs())
        if index is not self._index:
            self._index = index
            if self._forward:
                self._key = dict(index.position)
            else:
                self._key = {n: (-i, -j) for n, (i, j) in index.position.items()}

    # Stabilization

    @override
    def compute(self) -> None:
        self.inn.clear()
        self.out.clear()
        self._env = self._environment()
        self.incremental_idfa(self.stabilizer.graph.nodes)

    @override
    def handle_update(self, changes: NetChanges) -> None:
        env = self._environment()
        old = self._env
        if old is None or old.private != env.private:
            LOG.debug('Shared/private partition changed; recomputing %r', self.name)
            self.compute()
            return
        graph = self.stabilizer.graph
        for n in changes.removed_nodes:
            self.inn.pop(n, None)
            self.out.pop(n, None)
        seeds: set[int] = set(changes.added_nodes)
        for n in changes.added_nodes:
            if n in graph.nodes:
                seeds.update(self._dependents(n))
        for e in changes.removed_edges | changes.added_edges:
            seeds.add(self._edge_target(e))
        seeds |= self._environment_seeds(old, env)
        self._env = env
        self.incremental_idfa(seeds & graph.nodes.keys())

    def _edge_target(self, e: Edge) -> int:
        return e.dst if self._forward else e.src

    def _environment_seeds(self, old: Environment, env: Environment) -> set[int]:
        seeds: set[int] = set()
        for k in old.labels.keys() | env.labels.keys():
            if old.labels.get(k) != env.labels.get(k):
                seeds.add(k[1] if self._forward else k[0])
        for s in old.sync_sets ^ env.sync_sets:
            seeds |= s
        if old.address_taken != env.address_taken:
            seeds |= {i for i, n in self.stabilizer.graph.nodes.items() if has_deref(n)}
        if old.boundary != env.boundary:
            seeds.add(self._boundary_node())
        return seeds

    def incremental_idfa(self, seeds: Iterable[int]) -> None:
        """Re-solve the equations starting from ``seeds``, one SCC at a time."""
        self._refresh_index()
        assert self._index is not None
        scc_of = self._index.scc_of
        wl = Worklist(self._key)
        for s in sorted(seeds):
            wl.push(s)
        domain = max(1, len(self.program.variables()))
        cap = self.iteration_factor * max(1, len(self._key)) * domain
        steps = 0
        touched: set[int] = set()
        siblings = self.stabilizer.phase.info.siblings
        while wl:
            scc = wl.next_scc()
            processed: set[int] = set()
            under: set[int] = set()
            while (n := wl.remove_next_with_id(scc)) is not None:
                deps = self._deps(n)
                valid = [p for p in deps if scc_of[p] != scc or p in processed]
                sibs = siblings(n) if self._is_barrier(n) else frozenset()
                valid_sibs = frozenset(s for s in sibs if s in processed)
                if len(valid) < len(deps) or valid_sibs != sibs:
                    under.add(n)
                self.process_node(n, valid, valid_sibs, wl)
                processed.add(n)
                steps += 1
                self._check_cap(steps, cap)
            for n in sorted(under):
                wl.push(n)
            while (n := wl.remove_next_with_id(scc)) is not None:
                sibs = siblings(n) if self._is_barrier(n) else frozenset()
                self.process_node(n, self._deps(n), sibs, wl)
                processed.add(n)
                steps += 1
                self._check_cap(steps, cap)
            touched |= processed
        self.metrics.nodes_reprocessed += len(touched)
        self.metrics.transfer_applications += steps
        LOG.debug(
            '%s processed %d nodes in %d steps',
            self.name,
            len(touched),
            steps,
        )

    def _check_cap(self, steps: int, cap: int) -> None:
        if steps > cap:
            msg = f'{self.name}: no fixed point after {steps} node visits'
            LOG.error(msg)
            raise IdfaError(msg)

    def _is_barrier(self, n: int) -> bool:
        return self.stabilizer.graph.nodes[n].kind is NodeKind.BARRIER

    def process_node(
        self,
        n: int,
        selected: Iterable[int],
        siblings: frozenset[int],
        wl: Worklist,
    ) -> None:
        """Recompute the facts of ``n`` from the selected dependencies.

        :param n: the node
        :param selected: predecessors (successors if backward) to meet over
        :param siblings: sibling barriers whose IN takes part in the barrier meet
        :param wl: worklist receiving the nodes affected by a change
        """
        homeo = self.stabilizer
        graph = homeo.graph
        labels = homeo.phase.info.labels
        fresh = n not in self.inn
        old_in = self.inn.get(n)
        old_out = self.out.get(n)
        lat = self.lattice

        new_in = self.boundary() if n == self._boundary_node() else lat.top
        communicated: list[tuple[int, frozenset[str]]] = []
        for d in selected:
            src, dst = self._edge(d, n)
            if graph.has_edge(Edge(src, dst, EdgeKind.CFG)) or graph.has_edge(
                Edge(src, dst, EdgeKind.CALL)
            ):
                new_in = lat.meet(new_in, self.out.get(d, lat.top))
            else:
                communicated.append((d, labels.get((src, dst), frozenset())))
        for d, locs in communicated:
            new_in = lat.meet_on(new_in, self.out.get(d, lat.top), locs)

        node = graph.nodes[n]
        if node.kind is NodeKind.BARRIER:
            shared = self.program.is_shared
            private, shared_in = lat.split(new_in, shared)
            for s in sorted(siblings):
                shared_in = lat.meet(shared_in, lat.split(self.inn.get(s, lat.top), shared)[1])
            new_out = lat.join_parts(private, shared_in)
        else:
            new_out = self.transfer(node, new_in)

        self.inn[n] = new_in
        self.out[n] = new_out
        if fresh or new_out != old_out:
            for m in self._dependents(n):
                wl.push(m)
        if node.kind is NodeKind.BARRIER and (fresh or new_in != old_in):
            for s in homeo.phase.info.siblings(n):
                wl.push(s)

    # Queries

    @stable_getter
    def before(self, n: int) -> Value:
        """Facts holding right before a node executes."""
        return (self.inn if self._forward else self.out).get(n, self.lattice.top)

    @stable_getter
    def after(self, n: int) -> Value:
        """Facts holding right after a node executes."""
        return (self.out if self._forward else self.inn).get(n, self.lattice.top)

    @stable_getter
    def dump(self) -> dict[str, dict[str, list[str]]]:
        """Canonical rendering of all facts keyed by node id."""
        return {
            str(n): {'in': render(self.inn.get(n)), 'out': render(self.out.get(n))}
            for n in sorted(self.stabilizer.graph.nodes)
        }

    @override
    def __repr__(self) -> str:
        return f'{cls_name(self)}[{self.name},{self.direction}]'
