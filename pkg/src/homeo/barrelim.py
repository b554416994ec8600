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

"""Barrier elimination.

Removes barriers that separate no conflicting shared accesses, merges adjacent
parallel regions and inlines non-recursive calls to functions with barriers, until
nothing changes. All facts are read through the analyses' getters; the stabilizer
keeps them fresh. Only in relevant-point modes does the pass say when to stabilize.
"""

import logging
from collections.abc import Callable, Iterable, Mapping
from dataclasses import replace
from typing import Final

from pydantic import BaseModel, ConfigDict, Field
from pydantic.alias_generators import to_camel

from homeo.analysis.access import has_deref, reads, writes
from homeo.analysis.callgraph import CallGraph
from homeo.analysis.instances import PointsTo
from homeo.errors import BarrElimError
from homeo.ir.nodes import (
    TID,
    AddrOf,
    BinOp,
    Deref,
    Expr,
    NodeKind,
    Program,
    ProgramNode,
    Sharing,
    Var,
    expr_derefs,
    expr_reads,
)
from homeo.ir.transform import clone, insert_at, remove_at, replace_at
from homeo.stabilizer import MAINTAINED, BaseAnalysis, Stabilizer, Trigger
from homeo.util import cls_name

LOG = logging.getLogger('homeo')

DEFAULT_MAX_ITERATIONS: Final[int] = 32
ABSTRACTIONS: Final[tuple[str, ...]] = (
    'supergraph',
    'phase',
    'callgraph',
    'pta',
    'rd',
    'lv',
    'cp',
)

type _Access = Callable[[ProgramNode, Program], frozenset[str]]


class OptReport(BaseModel):
    """What barrier elimination did."""

    model_config = ConfigDict(
        alias_generator=to_camel, populate_by_name=True, validate_assignment=True
    )

    barriers_removed: int = Field(default=0, ge=0)
    regions_merged: int = Field(default=0, ge=0)
    calls_inlined: int = Field(default=0, ge=0)
    iterations: int = Field(default=0, ge=0)
    relevant_change_points: list[str] = Field(default_factory=list)


class BarrElim:
    """Barrier elimination on the program of a stabilizer."""

    def __init__(
        self, homeo: Stabilizer, max_iterations: int = DEFAULT_MAX_ITERATIONS
    ) -> None:
        """Initialize the pass.

        :param homeo: stabilizer with the analyses to consult
        :param max_iterations: iterations with changes before giving up
        """
        self.homeo = homeo
        self.program = homeo.program
        self.max_iterations = max_iterations
        self.report = OptReport()
        LOG.info('Initialized %s[maxIterations=%d]', cls_name(self), max_iterations)

    def run(self) -> OptReport:
        """Iterate the three steps to a fixed point.

        :raise BarrElimError: if the last allowed iteration still changed the program
        """
        report = self.report
        for _ in range(self.max_iterations + 1):
            report.iterations += 1
            changed = self.remove_redundant_barriers()
            changed += self.expand_merge_parallel()
            changed += self.inline_calls()
            if not changed:
                LOG.info(
                    'Barrier elimination done after %d iterations: %d barriers removed, '
                    '%d regions merged, %d calls inlined',
                    report.iterations,
                    report.barriers_removed,
                    report.regions_merged,
                    report.calls_inlined,
                )
                return report
        msg = f'No fixed point after {self.max_iterations} iterations'
        raise BarrElimError(msg, report)

    # Relevant change-points

    def _relevant_change_point(self, label: str) -> None:
        if self.homeo.mode.trigger is not Trigger.RELEVANT:
            return
        names = [n for n in ABSTRACTIONS if n in MAINTAINED or n in self.homeo.analyses]
        self.homeo.stabilize_now(names)
        self.report.relevant_change_points.append(label)

    def _analysis[A: BaseAnalysis](self, name: str, cls: type[A]) -> A | None:
        a = self.homeo.analyses.get(name)
        return a if isinstance(a, cls) else None

    # Redundant barriers

    def remove_redundant_barriers(self) -> int:
        """Remove explicit region barriers without conflicts across them."""
        removed = 0
        while (b := self._next_redundant()) is not None:
            block = b.parent
            assert block is not None
            remove_at(self.program, block, block.stmts.index(b))
            LOG.info('Removed redundant barrier %r', b)
            removed += 1
            self._relevant_change_point('remove-barrier')
        self.report.barriers_removed += removed
        return removed

    def _next_redundant(self) -> ProgramNode | None:
        candidates = [
            n
            for n in self.program.nodes()
            if n.kind is NodeKind.BARRIER
            and not n.implicit
            and self.program.region_of(n) is not None
        ]
        # Last barrier in source order first
        for b in sorted(candidates, key=_source_order(self.program), reverse=True):
            if not self.conflicts(b):
                return b
        return None

    def conflicts(self, b: ProgramNode) -> frozenset[str]:
        """Shared locations accessed across ``b`` with at least one write."""
        info = self.homeo.phase.info
        before = {m for p in info.phases_in(b.id) for m in info.phases[p].members}
        after = {m for p in info.phases_out(b.id) for m in info.phases[p].members}
        wb, rb = self._footprint(before)
        wa, ra = self._footprint(after)
        conflict = (wb & (wa | ra)) | (rb & wa)
        if conflict:
            LOG.info(
                'Kept barrier %r: conflicting accesses to %s', b, ', '.join(sorted(conflict))
            )
        return frozenset(conflict)

    def _footprint(self, nodes: Iterable[int]) -> tuple[set[str], set[str]]:
        """Shared locations written and read by nodes."""
        graph = self.homeo.graph
        pta = self._analysis('pta', PointsTo)
        w: set[str] = set()
        r: set[str] = set()
        for n in nodes:
            node = graph.nodes[n]
            nw, nr = writes(node, self.program), reads(node, self.program)
            if pta is not None and has_deref(node):
                via = pta.may_access(n)
                if node.deref:
                    nw = via
                if node.expr is not None and expr_derefs(node.expr):
                    nr = node.reads() | via
            w |= nw
            r |= nr
        shared = self.program.is_shared
        return {v for v in w if shared(v)}, {v for v in r if shared(v)}

    # Region merging

    def expand_merge_parallel(self) -> int:
        """Merge regions separated only by thread-private straight-line code."""
        merged = 0
        while (found := self._next_merge()) is not None:
            self._merge(*found)
            merged += 1
            self._relevant_change_point('merge-regions')
        self.report.regions_merged += merged
        return merged

    def _next_merge(self) -> tuple[ProgramNode, int, int] | None:
        for block in self.program.nodes():
            if block.kind is not NodeKind.BLOCK:
                continue
            stmts = block.stmts
            for i, first in enumerate(stmts):
                if first.kind is not NodeKind.PARALLEL:
                    continue
                j = i + 1
                while j < len(stmts) and self._movable(stmts[j]):
                    j += 1
                if (
                    j < len(stmts)
                    and stmts[j].kind is NodeKind.PARALLEL
                    and self._mergeable(first, stmts[i + 1 : j], stmts[j])
                ):
                    return block, i, j
        return None

    def _movable(self, s: ProgramNode) -> bool:
        """Whether every thread may execute ``s`` redundantly."""
        if s.kind not in {NodeKind.ASSIGN, NodeKind.DECL} or s.deref:
            return False
        if self.program.is_shared(s.name) or s.name in self.program.address_taken():
            return False
        return s.expr is None or not (expr_derefs(s.expr) or TID in expr_reads(s.expr))

    def _mergeable(
        self, first: ProgramNode, between: list[ProgramNode], second: ProgramNode
    ) -> bool:
        assert first.body is not None
        assert second.body is not None
        decls = [
            s.name
            for s in (*first.body.stmts, *between, *second.body.stmts)
            if s.kind is NodeKind.DECL
        ]
        if len(decls) != len(set(decls)):
            return False
        # Private values left by other threads than thread 0 must not be observed
        private = self.program.private_names() - {TID}
        written = self._effects(first, writes) & private
        observed = self._effects(second, reads)
        for s in between:
            observed |= reads(s, self.program)
        return not written & observed

    def _effects(self, root: ProgramNode, access: _Access) -> set[str]:
        """Accesses of a subtree including everything it calls."""
        acc: set[str] = set()
        seen: set[str] = set()
        stack = [root]
        while stack:
            for n in stack.pop().walk():
                acc |= access(n, self.program)
                if n.kind is NodeKind.CALL and n.name not in seen:
                    seen.add(n.name)
                    stack.append(self.program.functions[n.name].body)
        return acc

    def _merge(self, block: ProgramNode, i: int, j: int) -> None:
        first, second = block.stmts[i], block.stmts[j]
        body = first.body
        inner = second.body
        assert body is not None
        assert inner is not None

        def append(stmt: ProgramNode) -> None:
            insert_at(self.program, body, len(body.stmts) - 1, stmt)

        append(self.program.make(NodeKind.BARRIER))
        for _ in range(j - i - 1):
            moved = block.stmts[i + 1]
            remove_at(self.program, block, i + 1)
            append(moved)
        append(self.program.make(NodeKind.BARRIER))
        while len(inner.stmts) > 2:  # noqa: PLR2004
            moved = inner.stmts[1]
            remove_at(self.program, inner, 1)
            append(moved)
        remove_at(self.program, block, block.stmts.index(second))
        LOG.info('Merged region %r into %r', second, first)

    # Inlining

    def inline_calls(self) -> int:
        """Inline non-recursive calls to functions that contain a barrier."""
        cg = self._analysis('callgraph', CallGraph)
        if cg is None:
            return 0
        inlined = 0
        while (site := self._next_inline(cg)) is not None:
            self._inline(site)
            inlined += 1
            self._relevant_change_point('inline-call')
        self.report.calls_inlined += inlined
        return inlined

    def _next_inline(self, cg: CallGraph) -> ProgramNode | None:
        for s in cg.call_sites():
            call = self.program.node(s)
            body = self.program.functions[call.name].body
            if cg.is_recursive(call.name) or not body.contains(NodeKind.BARRIER):
                continue
            if body.contains(NodeKind.RETURN):
                continue
            if self.program.region_of(call) is not None and body.contains(
                NodeKind.PARALLEL
            ):
                continue
            return call
        return None

    def _inline(self, call: ProgramNode) -> None:
        block = call.parent
        assert block is not None
        idx = block.stmts.index(call)
        copy = clone(self.program, self.program.functions[call.name].body)
        locals_ = {
            n.name: f'{n.name}_{call.id}'
            for n in copy.walk()
            if n.kind is NodeKind.DECL and n.sharing is Sharing.PRIVATE
        }
        for n in copy.walk():
            _rename_node(n, locals_)
        stmts = list(copy.stmts)
        for s in stmts:
            s.parent = None
        replace_at(self.program, block, idx, stmts[0])
        for k, s in enumerate(stmts[1:], 1):
            insert_at(self.program, block, idx + k, s)
        LOG.info('Inlined call %r to %s', call, call.name)


def _rename_node(node: ProgramNode, names: Mapping[str, str]) -> None:
    """Rename variables of a detached node in place."""
    if node.kind in {NodeKind.DECL, NodeKind.ASSIGN} and node.name in names:
        node.name = names[node.name]
    if node.expr is not None:
        node.expr = _rename_expr(node.expr, names)


def _rename_expr(e: Expr, names: Mapping[str, str]) -> Expr:
    match e:
        case Var() | AddrOf() | Deref() if e.name in names:
            return replace(e, name=names[e.name])
        case BinOp(op, left, right):
            return BinOp(op, _rename_expr(left, names), _rename_expr(right, names))
    return e


def _source_order(program: Program) -> Callable[[ProgramNode], int]:
    order = {
        n.id: k
        for k, n in enumerate(
            m for fn in program.functions.values() for m in fn.body.walk()
        )
    }
    return lambda n: order[n.id]
