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

"""Call graph with call-site multiplicities and recursion."""

import logging
from collections import Counter, defaultdict
from typing import override

from homeo.ir.cfg import EdgeKind
from homeo.ir.nodes import NodeKind
from homeo.stabilizer import BaseAnalysis, NetChanges, stable_getter

from .scc import strongly_connected

LOG = logging.getLogger('homeo')


class CallGraph(BaseAnalysis):
    """Which function calls which, through which call sites."""

    name = 'callgraph'

    def __init__(self) -> None:
        """Initialize an empty call graph."""
        super().__init__()
        self.sites: dict[int, tuple[str, str]] = {}
        self.edges: defaultdict[str, Counter[str]] = defaultdict(Counter)
        self._recursive: frozenset[str] = frozenset()

    @override
    def compute(self) -> None:
        self.sites.clear()
        self.edges.clear()
        for n in self.program.nodes():
            if n.kind is NodeKind.CALL:
                self._add_site(n.id)
        self._update_recursion()

    @override
    def handle_update(self, changes: NetChanges) -> None:
        graph = self.stabilizer.graph
        touched = set(changes.removed_nodes) | set(changes.added_nodes)
        for e in changes.added_edges | changes.removed_edges:
            if e.kind is not EdgeKind.CALL:
                continue
            src = graph.nodes.get(e.src)
            if src is not None and src.kind is NodeKind.EXIT:
                touched |= {s for s, (_, callee) in self.sites.items() if callee == src.name}
            else:
                touched.add(e.src)
        for n in touched:
            if n in self.sites:
                self._remove_site(n)
            node = graph.nodes.get(n)
            if node is not None and node.kind is NodeKind.CALL:
                self._add_site(n)
        self._update_recursion()

    def _add_site(self, n: int) -> None:
        node = self.program.node(n)
        caller = self.program.function_of(node).name
        self.sites[n] = caller, node.name
        self.edges[caller][node.name] += 1

    def _remove_site(self, n: int) -> None:
        caller, callee = self.sites.pop(n)
        self.edges[caller][callee] -= 1
        if self.edges[caller][callee] <= 0:
            del self.edges[caller][callee]

    def _update_recursion(self) -> None:
        names = sorted(self.program.functions)
        index = {f: i for i, f in enumerate(names)}
        components = strongly_connected(
            range(len(names)),
            lambda i: [index[c] for c in self.edges.get(names[i], ())],
        )
        self._recursive = frozenset(
            names[i]
            for comp in components
            for i in comp
            if len(comp) > 1 or names[i] in self.edges.get(names[i], ())
        )

    @override
    def init_val(self) -> frozenset[str]:
        return frozenset()

    @stable_getter
    def callees(self, fn: str) -> frozenset[str]:
        """Functions called from ``fn``."""
        return frozenset(self.edges.get(fn, ()))

    @stable_getter
    def callers(self, fn: str) -> frozenset[str]:
        """Functions calling ``fn``."""
        return frozenset(c for c, callees in self.edges.items() if callees.get(fn))

    @stable_getter
    def is_recursive(self, fn: str) -> bool:
        """Whether ``fn`` can reach itself through calls."""
        return fn in self._recursive

    @stable_getter
    def call_sites(self, callee: str | None = None) -> list[int]:
        """Call site ids, ascending, optionally only those of ``callee``."""
        return sorted(s for s, (_, c) in self.sites.items() if callee in {None, c})

    @stable_getter
    def snapshot(self) -> dict[str, dict[str, int]]:
        """Call multiplicities by caller and callee."""
        return {
            caller: dict(sorted(callees.items()))
            for caller, callees in sorted(self.edges.items())
            if callees
        }
